// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/renderer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "eyesynth/errors.hpp"

namespace eyesynth {

namespace {

constexpr double kSpawnOffset = 1e-5;
constexpr std::size_t kExhaustiveEmitterCount = 2;

struct Context {
    const Scene& scene;
    const EyeAssembly& eye;
    const SceneIntersector& isect;
    const RenderConfig& cfg;
    const TextureLibrary& tex;
    bool ir;
};

Color mono(const Color& c, bool ir) { return ir ? Color{c.x, c.x, c.x} : c; }

Color clamp01(const Color& c) {
    return {std::clamp(c.x, 0.0, 1.0), std::clamp(c.y, 0.0, 1.0), std::clamp(c.z, 0.0, 1.0)};
}

Color mul(const Color& a, const Color& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

Color environment(const Context& ctx, const Vec3& dir) { return mono(env_radiance(ctx.scene.environment, dir), ctx.ir); }

Color albedo_at(const Context& ctx, const InterfaceHit& h) {
    const EyeParams& ep = ctx.eye.params();
    const HeadModel& head = ctx.scene.head;
    Color a;
    switch (h.surface) {
        case SurfaceId::Iris: {
            const Vec2 uv = iris_uv(ctx.eye.iris_plane_point(h.point), ep.pupil_radius, ep.iris_rotation_deg,
                                    ep.iris_radius);
            a = sample_bilinear(ctx.tex.iris[static_cast<std::size_t>(ep.iris_texture_id)], uv.y, uv.x);
            break;
        }
        case SurfaceId::Sclera: {
            const Vec2 uv = ctx.eye.sclera_uv(h.point);
            a = sample_bilinear(ctx.tex.sclera, uv.x, uv.y) * 0.95;
            break;
        }
        case SurfaceId::LimbalRing: a = Color{0.25, 0.22, 0.2}; break;
        case SurfaceId::Eyelid:
        case SurfaceId::Head: {
            const double n = value_noise(h.point * 0.4, 0x5E1Dull + static_cast<std::uint64_t>(head.id));
            a = head.skin_tint * (head.skin_albedo * (0.8 + 0.4 * n));
            break;
        }
        case SurfaceId::Caruncle: a = Color{0.85, 0.5, 0.5} * (head.skin_albedo * 1.3); break;
        default: {
            const double k = material_for_surface(h.surface).albedo;
            a = Color{k, k, k};
        }
    }
    return mono(clamp01(a), ctx.ir);
}

double lens_fresnel(const Context& ctx, double cos_i) {
    return fresnel_dielectric(std::clamp(cos_i, 1e-12, 1.0), 1.0, ctx.scene.glasses.coating_ior);
}

double emitter_term(const Context& ctx, const PointEmitter& e, const Vec3& p, const Vec3& n) {
    Vec3 l = e.position - p;
    const double d2 = length_squared(l);
    l = l / std::sqrt(d2);
    const double c = dot(n, l);
    if (c <= 0.0) return 0.0;
    return e.intensity * c / d2 * ctx.isect.transmittance(p, e.position);
}

// Single-scattering emitter light at a diffuse point. Layouts with many
// emitters are estimated from one uniformly chosen emitter per sample.
Color direct_light(const Context& ctx, const Vec3& p, const Vec3& n, const Color& albedo, Rng& rng) {
    const auto& emitters = ctx.scene.emitters.emitters;
    if (emitters.empty()) return {};
    double sum = 0.0;
    if (emitters.size() <= kExhaustiveEmitterCount) {
        for (const PointEmitter& e : emitters) sum += emitter_term(ctx, e, p, n);
    } else {
        const auto k = rng.uniform_int(0, static_cast<std::int64_t>(emitters.size()) - 1);
        sum = emitter_term(ctx, emitters[static_cast<std::size_t>(k)], p, n) * static_cast<double>(emitters.size());
    }
    return albedo * (sum / kPi);
}

// One-step lookup of what a mirror direction sees: an emitter, the
// environment, or the emitter light on the first diffuse surface.
Color reflection_lookup(const Context& ctx, const Vec3& origin, const Vec3& dir, Rng& rng) {
    Ray r(origin, dir);
    double t_acc = 1.0;
    for (int i = 0; i < 8; ++i) {
        const auto sh = ctx.isect.nearest(r);
        if (!sh) return environment(ctx, dir) * t_acc;
        const InterfaceHit& h = sh->hit;
        switch (h.surface) {
            case SurfaceId::Emitter: {
                const double le = emitter_radiance(ctx.scene.emitters.emitters[static_cast<std::size_t>(h.index)]);
                return Color{le, le, le} * t_acc;
            }
            case SurfaceId::GlassesLensFront:
            case SurfaceId::GlassesLensBack:
                t_acc *= 1.0 - lens_fresnel(ctx, std::abs(dot(dir, h.normal)));
                r = Ray(h.point + dir * kSpawnOffset, dir);
                continue;
            case SurfaceId::Cornea:
            case SurfaceId::Retina: return {};
            default: {
                const Vec3 n = h.facing_normal(dir);
                return direct_light(ctx, h.point + n * kSpawnOffset, n, albedo_at(ctx, h), rng) * t_acc;
            }
        }
    }
    return {};
}

// Bright-pupil return for a path that entered the cornea at `entry` while
// travelling opposite to `to_viewer`.
double retina_return(const Context& ctx, const Vec3& entry, const Vec3& to_viewer) {
    const double m = ctx.eye.params().retina_roughness;
    double sum = 0.0;
    for (const PointEmitter& e : ctx.scene.emitters.emitters) {
        const Vec3 l = e.position - entry;
        const double d2 = length_squared(l);
        const double w = retroreflect_weight(angle_between(l, to_viewer), m);
        if (w < 1e-12) continue;
        const Vec3 dir = l / std::sqrt(d2);
        sum += e.intensity / d2 * w * ctx.isect.transmittance(entry + dir * kSpawnOffset, e.position);
    }
    return ctx.cfg.retina_gain * sum;
}

Color trace(const Context& ctx, Ray ray, Rng& rng) {
    Color radiance;
    Color beta{1.0, 1.0, 1.0};
    bool primary = true;
    bool specular = true;
    bool entered = false;
    Vec3 entry, to_viewer;
    for (int bounce = 0; bounce < ctx.cfg.max_bounces; ++bounce) {
        HitFilter filter;
        filter.emitters = !primary;
        const auto sh = ctx.isect.nearest(ray, filter);
        const Vec3 d = ray.direction;
        if (!sh) {
            Color env = environment(ctx, d);
            if (!specular) {
                const double cap = ctx.cfg.indirect_clamp;
                env = {std::min(env.x, cap), std::min(env.y, cap), std::min(env.z, cap)};
            }
            radiance += mul(beta, env);
            break;
        }
        const InterfaceHit& h = sh->hit;
        const Vec3 n = h.facing_normal(d);
        const double cos_i = std::clamp(-dot(d, n), 1e-12, 1.0);
        switch (h.surface) {
            case SurfaceId::Emitter: {
                if (specular) {
                    const double le = emitter_radiance(ctx.scene.emitters.emitters[static_cast<std::size_t>(h.index)]);
                    radiance += beta * le;
                }
                return radiance;
            }
            case SurfaceId::Cornea: {
                const bool entering = h.entering(d);
                const double n1 = entering ? 1.0 : kCorneaIndex;
                const double n2 = entering ? kCorneaIndex : 1.0;
                const double f = fresnel_dielectric(cos_i, n1, n2);
                radiance += mul(beta, reflection_lookup(ctx, h.point + n * kSpawnOffset, reflect(d, n), rng)) * f;
                const auto t = refract(d, n, n1, n2);
                if (!t) return radiance;
                if (entering && specular) {
                    entered = true;
                    entry = h.point;
                    to_viewer = -d;
                }
                beta = beta * (1.0 - f);
                ray = Ray(h.point - n * kSpawnOffset, *t);
                primary = false;
                continue;
            }
            case SurfaceId::GlassesLensFront:
            case SurfaceId::GlassesLensBack: {
                const double f = lens_fresnel(ctx, cos_i);
                radiance += mul(beta, reflection_lookup(ctx, h.point + n * kSpawnOffset, reflect(d, n), rng)) * f;
                beta = beta * (1.0 - f);
                ray = Ray(h.point + d * kSpawnOffset, d);
                continue;
            }
            case SurfaceId::Retina: {
                const Vec3 p = h.point + n * kSpawnOffset;
                radiance += mul(beta, direct_light(ctx, p, n, albedo_at(ctx, h), rng));
                if (entered && specular) radiance += beta * retina_return(ctx, entry, to_viewer);
                return radiance;
            }
            case SurfaceId::Sclera: {
                const double f = fresnel_dielectric(cos_i, 1.0, kCorneaIndex);
                radiance += mul(beta, reflection_lookup(ctx, h.point + n * kSpawnOffset, reflect(d, n), rng)) * f;
                beta = beta * (1.0 - f);
                [[fallthrough]];
            }
            default: {
                const Color albedo = albedo_at(ctx, h);
                const Vec3 p = h.point + n * kSpawnOffset;
                radiance += mul(beta, direct_light(ctx, p, n, albedo, rng));
                beta = mul(beta, albedo);
                ray = Ray(p, sample_hemisphere_cosine(rng, n));
                primary = false;
                specular = false;
            }
        }
        if (std::max({beta.x, beta.y, beta.z}) < 1e-9) break;
    }
    return radiance;
}

void check_assets(const Context& ctx) {
    const int id = ctx.eye.params().iris_texture_id;
    if (id < 0 || id >= static_cast<int>(ctx.tex.iris.size())) {
        throw AssetError("iris texture " + std::to_string(id), "texture not loaded");
    }
    if (ctx.tex.sclera.width == 0) throw AssetError("sclera texture", "texture not loaded");
}

template <typename TileFn>
void run_tiles(int width, int height, int tile, int workers, const TileFn& fn) {
    const int tiles_x = (width + tile - 1) / tile;
    const int tiles_y = (height + tile - 1) / tile;
    const int total = tiles_x * tiles_y;
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= total || failed.load()) return;
            const int x0 = (i % tiles_x) * tile, y0 = (i / tiles_x) * tile;
            try {
                fn(x0, y0, std::min(x0 + tile, width), std::min(y0 + tile, height));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    workers = std::max(1, std::min(workers, total));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

void RenderConfig::validate() const {
    if (samples_per_pixel < 1) throw InvalidParameter("samples_per_pixel must be >= 1");
    if (max_bounces < 1) throw InvalidParameter("max_bounces must be >= 1");
    if (tile_size < 1) throw InvalidParameter("tile_size must be >= 1");
    if (threads < 1) throw InvalidParameter("threads must be >= 1");
    if (!(exposure > 0.0) || !std::isfinite(exposure)) throw InvalidParameter("exposure must be positive");
    if (!(retina_gain >= 0.0)) throw InvalidParameter("retina_gain must be >= 0");
    if (!(indirect_clamp > 0.0)) throw InvalidParameter("indirect_clamp must be > 0");
}

double emitter_radiance(const PointEmitter& e) { return e.intensity / (kPi * e.radius * e.radius); }

std::uint8_t quantize(double linear, double exposure) {
    const double v = std::clamp(linear * exposure * 255.0, 0.0, 255.0);
    return static_cast<std::uint8_t>(std::round(v));
}

ImageF render_linear(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config, int worker_count) {
    config.validate();
    scene.camera.validate();
    if (!config.textures) throw AssetError("<texture library>", "assets not loaded");
    const SceneIntersector isect(scene, eye);
    const Context ctx{scene, eye, isect, config, *config.textures, config.mode == ChannelMode::IR};
    check_assets(ctx);
    const int w = scene.camera.width, h = scene.camera.height;
    const int channels = ctx.ir ? 1 : 3;
    ImageF out(w, h, channels);
    run_tiles(w, h, config.tile_size, worker_count, [&](int x0, int y0, int x1, int y1) {
        for (int py = y0; py < y1; ++py)
            for (int px = x0; px < x1; ++px) {
                Color sum;
                for (int s = 0; s < config.samples_per_pixel; ++s) {
                    Rng rng(config.seed, StreamKey{config.image_index, static_cast<std::uint32_t>(px),
                                                   static_cast<std::uint32_t>(py), static_cast<std::uint32_t>(s), 0});
                    const Vec2 jitter{rng.next(), rng.next()};
                    sum += trace(ctx, generate_camera_ray(scene.camera, px, py, jitter), rng);
                }
                const Color v = sum / static_cast<double>(config.samples_per_pixel);
                if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
                    throw InternalError("non-finite radiance at pixel (" + std::to_string(px) + ", " +
                                        std::to_string(py) + ")");
                }
                for (int c = 0; c < channels; ++c) out.at(px, py, c) = static_cast<float>(v[c]);
            }
    });
    return out;
}

RenderOutput render_tiles_parallel(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config,
                                   int worker_count) {
    if (worker_count < 1) throw InvalidParameter("worker_count must be >= 1");
    RenderOutput out;
    out.linear = render_linear(scene, eye, config, worker_count);
    out.image = Image8(out.linear.width, out.linear.height, out.linear.channels);
    for (std::size_t i = 0; i < out.linear.data.size(); ++i) out.image.data[i] = quantize(out.linear.data[i], config.exposure);
    MaskPair masks = render_masks(scene, eye);
    out.mask_with_skin = std::move(masks.with_skin);
    out.mask_without_skin = std::move(masks.without_skin);
    out.metadata = compute_metadata(scene, eye);
    out.metadata.seed = config.seed;
    out.metadata.exposure = config.exposure;
    out.metadata.channel_mode = config.mode == ChannelMode::IR ? "ir" : "rgb";
    return out;
}

RenderOutput render(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config) {
    return render_tiles_parallel(scene, eye, config, config.threads);
}

namespace {

SemanticClass classify_ray_with(const SceneIntersector& isect, const Ray& ray, bool include_skin) {
    const HitFilter filter{include_skin, include_skin, false};
    Ray r = ray;
    for (int i = 0; i < 32; ++i) {
        const auto sh = isect.nearest(r, filter);
        if (!sh) return SemanticClass::BackgroundSkin;
        if (!sh->transparent) return sh->cls;
        const InterfaceHit& h = sh->hit;
        const Vec3 d = r.direction;
        if (h.surface == SurfaceId::Cornea) {
            const Vec3 n = h.facing_normal(d);
            const bool entering = h.entering(d);
            const auto t = refract(d, n, entering ? 1.0 : kCorneaIndex, entering ? kCorneaIndex : 1.0);
            r = t ? Ray(h.point - n * kSpawnOffset, *t) : Ray(h.point + n * kSpawnOffset, reflect(d, n));
        } else {
            r = Ray(h.point + d * kSpawnOffset, d);
        }
    }
    return SemanticClass::BackgroundSkin;
}

}  // namespace

SemanticClass classify_ray(const Scene& scene, const EyeAssembly& eye, const Ray& ray, bool include_skin) {
    return classify_ray_with(SceneIntersector(scene, eye), ray, include_skin);
}

MaskPair render_masks(const Scene& scene, const EyeAssembly& eye) {
    const SceneIntersector isect(scene, eye);
    const int w = scene.camera.width, h = scene.camera.height;
    MaskPair out{SegMask(w, h), SegMask(w, h)};
    for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px) {
            const Ray ray = generate_camera_ray(scene.camera, px, py, Vec2{0.5, 0.5});
            out.with_skin.set(px, py, classify_ray_with(isect, ray, true));
            out.without_skin.set(px, py, classify_ray_with(isect, ray, false));
        }
    return out;
}

MetadataRecord compute_metadata(const Scene& scene, const EyeAssembly& eye) {
    MetadataRecord m;
    m.eye = eye.params();
    m.head_id = scene.head.id;
    m.pose = scene.pose;
    m.pupil_center_3d = world_to_camera_point(scene.camera, eye.pupil_center());
    m.iris_center_3d = world_to_camera_point(scene.camera, eye.iris_center());
    m.pupil_center_2d = project(scene.camera, eye.pupil_center());
    m.iris_center_2d = project(scene.camera, eye.iris_center());
    m.intrinsics = scene.camera.intrinsics;
    m.width = scene.camera.width;
    m.height = scene.camera.height;
    m.extrinsics = scene.camera.world_to_camera;
    m.emitter_layout = scene.emitters.id;
    m.emitters = scene.emitters.emitters;
    m.environment_id = scene.environment.id;
    m.environment_rotation[0] = scene.environment.rot_y_deg;
    m.environment_rotation[1] = scene.environment.rot_x_deg;
    m.environment_rotation[2] = scene.environment.rot_z_deg;
    m.environment_scale = scene.environment.scale;
    m.glasses = scene.glasses.present;
    return m;
}

double calibrate_exposure(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config, int downscale,
                          int samples) {
    if (downscale < 1 || samples < 1) throw InvalidParameter("calibration downscale and samples must be >= 1");
    Scene small = scene;
    small.camera.width = std::max(1, scene.camera.width / downscale);
    small.camera.height = std::max(1, scene.camera.height / downscale);
    const double sx = static_cast<double>(small.camera.width) / scene.camera.width;
    const double sy = static_cast<double>(small.camera.height) / scene.camera.height;
    small.camera.intrinsics.fx *= sx;
    small.camera.intrinsics.cx *= sx;
    small.camera.intrinsics.fy *= sy;
    small.camera.intrinsics.cy *= sy;
    RenderConfig cfg = config;
    cfg.samples_per_pixel = samples;
    cfg.exposure = 1.0;
    const ImageF lin = render_linear(small, eye, cfg, config.threads);
    std::vector<float> values;
    values.reserve(lin.pixel_count());
    for (int y = 0; y < lin.height; ++y)
        for (int x = 0; x < lin.width; ++x) {
            float v = 0.0f;
            for (int c = 0; c < lin.channels; ++c) v = std::max(v, lin.at(x, y, c));
            values.push_back(v);
        }
    const std::size_t k = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(values.size() - 1)));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    const double p99 = values[k];
    return p99 > 0.0 ? 1.0 / p99 : 1.0;
}

}  // namespace eyesynth
