// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/scene.hpp"

#include <algorithm>
#include <cmath>

#include "eyesynth/errors.hpp"

namespace eyesynth {

namespace {

constexpr double kLidShellOffset = 0.5;
constexpr double kShellMaxAzimuthDeg = 100.0;
constexpr double kShellMaxElevationDeg = 80.0;
const Vec3 kHeadCenter{0.0, 0.0, 20.0};
const Vec3 kHeadAxes{55.0, 65.0, 26.0};

Vec3 div(const Vec3& a, const Vec3& b) { return {a.x / b.x, a.y / b.y, a.z / b.z}; }

// Both roots of an axis-aligned ellipsoid, ascending; non-positive roots are inf.
SphereRoots ellipsoid_roots(const Ray& ray, const Vec3& center, const Vec3& axes) {
    const Vec3 o = div(ray.origin - center, axes);
    const Vec3 d = div(ray.direction, axes);
    const double a = dot(d, d);
    const double b = dot(o, d);
    const double c = dot(o, o) - 1.0;
    const double disc = b * b - a * c;
    SphereRoots r;
    if (disc < 0.0) return r;
    const double s = std::sqrt(disc);
    const double q = -(b + std::copysign(s, b));
    double t0 = q / a;
    double t1 = q != 0.0 ? c / q : t0;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > kIntersectEpsilon) {
        r.near = t0;
        if (t1 > kIntersectEpsilon) r.far = t1;
    } else if (t1 > kIntersectEpsilon) {
        r.near = t1;
    }
    return r;
}

Vec3 ellipsoid_normal(const Vec3& p, const Vec3& center, const Vec3& axes) {
    const Vec3 q = p - center;
    return normalize({q.x / (axes.x * axes.x), q.y / (axes.y * axes.y), q.z / (axes.z * axes.z)});
}

double torus_sdf(const Vec3& p, double major, double tube, double z0) {
    const double rho = std::sqrt(p.x * p.x + p.y * p.y) - major;
    const double dz = p.z - z0;
    return std::sqrt(rho * rho + dz * dz) - tube;
}

std::optional<InterfaceHit> intersect_frame(const Ray& ray, double major, double tube, double z0) {
    const double lo = z0 - tube - 1e-3;
    const double hi = z0 + tube + 1e-3;
    double t0 = 0.0, t1 = 1e4;
    if (std::abs(ray.direction.z) < 1e-12) {
        if (ray.origin.z < lo || ray.origin.z > hi) return std::nullopt;
    } else {
        double a = (lo - ray.origin.z) / ray.direction.z;
        double b = (hi - ray.origin.z) / ray.direction.z;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        if (t0 > t1) return std::nullopt;
    }
    t0 = std::max(t0, kIntersectEpsilon);
    double t = t0;
    for (int i = 0; i < 1024 && t <= t1; ++i) {
        const Vec3 p = ray.at(t);
        const double d = torus_sdf(p, major, tube, z0);
        if (d < 1e-8) {
            if (i == 0 && d < -1e-6) return std::nullopt;  // started inside the frame
            InterfaceHit hit;
            hit.t = t;
            hit.point = p;
            const double rho = std::sqrt(p.x * p.x + p.y * p.y);
            const Vec3 ring = rho > 0.0 ? Vec3{p.x / rho * major, p.y / rho * major, z0} : Vec3{major, 0.0, z0};
            hit.normal = normalize(p - ring);
            hit.surface = SurfaceId::GlassesFrame;
            return hit;
        }
        t += d;
    }
    return std::nullopt;
}

}  // namespace

void CameraModel::validate() const {
    const auto& k = intrinsics;
    if (!(k.fx > 0.0 && k.fy > 0.0)) throw InvalidParameter("camera focal lengths must be > 0");
    if (width <= 0 || height <= 0) throw InvalidParameter("camera resolution must be positive");
    if (!(k.cx >= 0.0 && k.cx < width && k.cy >= 0.0 && k.cy < height)) {
        throw InvalidParameter("principal point must lie inside the image");
    }
    if (std::abs(world_to_camera.rotation.determinant() - 1.0) > 1e-6) {
        throw InvalidParameter("camera rotation must be proper orthonormal");
    }
}

Intrinsics default_intrinsics(int width, int height) {
    const double f = 0.7 * height * 40.0 / 24.0;
    return {f, f, width / 2.0, height / 2.0};
}

RigidTransform look_at(const Vec3& position, const Vec3& target, const Vec3& world_up) {
    const Vec3 f = normalize(target - position);
    Vec3 r = cross(f, world_up);
    if (length(r) < 1e-12) r = cross(f, Vec3{0.0, 0.0, 1.0});
    r = normalize(r);
    const Vec3 d = cross(f, r);
    const Mat3 rot = Mat3::from_rows(r, d, f);
    return {rot, -(rot * position)};
}

Ray generate_camera_ray(const CameraModel& cam, double px, double py, const Vec2& jitter) {
    const auto& k = cam.intrinsics;
    const Vec3 dir_cam{(px + jitter.x - k.cx) / k.fx, (py + jitter.y - k.cy) / k.fy, 1.0};
    const RigidTransform c2w = cam.world_to_camera.inverse();
    return Ray{c2w.translation, c2w.apply_vector(dir_cam)};
}

Vec3 world_to_camera_point(const CameraModel& cam, const Vec3& world_point) {
    return cam.world_to_camera.apply_point(world_point);
}

std::optional<Vec2> project(const CameraModel& cam, const Vec3& world_point) {
    const Vec3 p = world_to_camera_point(cam, world_point);
    if (!(p.z > 0.0)) return std::nullopt;
    const auto& k = cam.intrinsics;
    return Vec2{k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

const char* pose_kind_name(PoseKind k) {
    switch (k) {
        case PoseKind::SNVGaze: return "S-NVGaze";
        case PoseKind::SOpenEDS: return "S-OpenEDS";
        case PoseKind::SGeneral: return "S-General";
    }
    return "unknown";
}

PoseKind pose_kind_from_name(const std::string& name) {
    if (name == "S-NVGaze") return PoseKind::SNVGaze;
    if (name == "S-OpenEDS") return PoseKind::SOpenEDS;
    if (name == "S-General") return PoseKind::SGeneral;
    throw InvalidParameter("unknown pose sampler '" + name + "'");
}

PoseParams sample_pose_s_nvgaze(Rng& rng, const PoseConfig& cfg) {
    PoseParams p;
    p.kind = PoseKind::SNVGaze;
    p.distance = rng.uniform(cfg.distance_min, cfg.distance_max);
    p.offset_h = rng.uniform(-cfg.offset_range, cfg.offset_range);
    p.offset_v = rng.uniform(-cfg.offset_range, cfg.offset_range);
    return p;
}

PoseParams sample_pose_s_openeds(Rng& rng, const PoseConfig& cfg) {
    PoseParams p = sample_pose_s_nvgaze(rng, cfg);
    p.kind = PoseKind::SOpenEDS;
    return p;
}

PoseParams sample_pose_s_general(Rng& rng, const PoseConfig& cfg) {
    PoseParams p;
    p.kind = PoseKind::SGeneral;
    p.azimuth_deg = rng.uniform(cfg.general_azimuth_min, cfg.general_azimuth_max);
    p.elevation_deg = rng.uniform(cfg.general_elevation_min, cfg.general_elevation_max);
    p.distance = rng.uniform(cfg.general_distance_min, cfg.general_distance_max);
    p.offset_h = rng.uniform(-cfg.general_jitter, cfg.general_jitter);
    p.offset_v = rng.uniform(-cfg.general_jitter, cfg.general_jitter);
    return p;
}

PoseParams sample_pose(PoseKind kind, Rng& rng, const PoseConfig& cfg) {
    switch (kind) {
        case PoseKind::SNVGaze: return sample_pose_s_nvgaze(rng, cfg);
        case PoseKind::SOpenEDS: return sample_pose_s_openeds(rng, cfg);
        case PoseKind::SGeneral: return sample_pose_s_general(rng, cfg);
    }
    throw InternalError("sample_pose: unknown pose kind");
}

CameraPose build_pose(const PoseParams& p, double apex_distance, int width, int height, const PoseConfig& cfg) {
    const Vec3 apex{0.0, 0.0, -apex_distance};
    RigidTransform frame;
    switch (p.kind) {
        case PoseKind::SNVGaze: {
            const Vec3 pos = apex - Vec3{0.0, 0.0, p.distance};
            frame = look_at(pos, pos + Vec3{0.0, 0.0, 1.0});
            break;
        }
        case PoseKind::SOpenEDS: {
            const double tilt = deg_to_rad(cfg.tilt_deg);
            const Vec3 f{0.0, std::sin(tilt), std::cos(tilt)};
            frame = look_at(apex - f * p.distance, apex);
            break;
        }
        case PoseKind::SGeneral: {
            const Vec3 dir = gaze_direction(p.azimuth_deg, p.elevation_deg);
            frame = look_at(dir * (apex_distance + p.distance), Vec3{});
            break;
        }
    }
    const Mat3& rot = frame.rotation;
    const Vec3 right = rot.row(0);
    const Vec3 up = -rot.row(1);
    const Vec3 pos = frame.inverse().translation + right * p.offset_h + up * p.offset_v;

    CameraPose out;
    out.camera.width = width;
    out.camera.height = height;
    out.camera.intrinsics = default_intrinsics(width, height);
    out.camera.world_to_camera = {rot, -(rot * pos)};

    if (p.kind == PoseKind::SOpenEDS) {
        out.emitters.id = "ring" + std::to_string(cfg.ring_count);
        for (int k = 0; k < cfg.ring_count; ++k) {
            const double a = 2.0 * kPi * k / cfg.ring_count;
            out.emitters.emitters.push_back(
                {pos + (right * std::cos(a) + up * std::sin(a)) * cfg.ring_radius, cfg.ring_emitter_intensity,
                 cfg.emitter_radius});
        }
    } else {
        out.emitters.id = "single";
        out.emitters.emitters.push_back({pos + right * cfg.emitter_offset, cfg.single_emitter_intensity, cfg.emitter_radius});
    }
    return out;
}

Mat3 EnvironmentState::rotation() const {
    auto wrap = [](double deg) {
        double r = std::fmod(deg, 360.0);
        if (r < 0.0) r += 360.0;
        return deg_to_rad(r);
    };
    return Mat3::rotation_y(wrap(rot_y_deg)) * Mat3::rotation_x(wrap(rot_x_deg)) * Mat3::rotation_z(wrap(rot_z_deg));
}

Color env_radiance(const EnvironmentState& env, const Vec3& direction) {
    if (!env.hdr || env.hdr->width == 0) return {};
    const Vec3 m = env.rotation().transposed() * direction;
    const double u = 0.5 + std::atan2(m.x, -m.z) / (2.0 * kPi);
    const double v = std::acos(std::clamp(m.y, -1.0, 1.0)) / kPi;
    return sample_bilinear(*env.hdr, u, v) * env.scale;
}

double sample_env_intensity_bin(Rng& rng) {
    static constexpr double kEdges[4] = {0.5, 0.83, 1.17, 1.5};
    const auto bin = rng.uniform_int(0, 2);
    return rng.uniform(kEdges[bin], kEdges[bin + 1]);
}

EnvironmentState make_environment(const TextureLibrary& lib, int index, double rot_y, double rot_x, double rot_z,
                                  double scale, std::shared_ptr<const TextureLibrary> owner) {
    if (index < 0 || index >= static_cast<int>(lib.environments.size())) {
        throw InvalidParameter("environment index " + std::to_string(index) + " out of range");
    }
    if (!(scale >= 0.5 && scale <= 1.5)) throw InvalidParameter("environment scale must lie in [0.5, 1.5]");
    if (!(rot_y >= 0.0 && rot_y < 360.0) || std::abs(rot_x) > 60.0 || std::abs(rot_z) > 60.0) {
        throw InvalidParameter("environment rotation out of range");
    }
    EnvironmentState env;
    env.id = lib.environments[index].id;
    env.hdr = std::shared_ptr<const ImageF>(std::move(owner), &lib.environments[index].hdr);
    env.rot_y_deg = rot_y;
    env.rot_x_deg = rot_x;
    env.rot_z_deg = rot_z;
    env.scale = scale;
    return env;
}

HeadModel make_head(int id) {
    if (id < 0) throw InvalidParameter("head id must be >= 0");
    Rng rng(0x4EADull, StreamKey{static_cast<std::uint64_t>(id), 0, 0, 0, 0});
    HeadModel h;
    h.id = id;
    h.skin_albedo = rng.uniform(0.35, 0.7);
    h.skin_tint = Color{1.0, rng.uniform(0.65, 0.85), rng.uniform(0.5, 0.75)};
    h.canthus_half_angle_deg = rng.uniform(50.0, 60.0);
    h.upper_lid_amplitude_deg = rng.uniform(27.0, 34.0);
    h.lower_lid_amplitude_deg = rng.uniform(14.0, 19.0);
    h.lid_midline_deg = rng.uniform(-10.0, -6.0);
    h.caruncle_size = rng.uniform(0.8, 1.2);
    return h;
}

double eyelid_shell_radius(const EyeAssembly& eye) { return eye.apex_distance() + kLidShellOffset; }

bool inside_lid_opening(const HeadModel& head, double closure, const Vec3& p) {
    const double phi = rad_to_deg(std::atan2(-p.x, -p.z));
    const double theta = rad_to_deg(std::asin(std::clamp(p.y / length(p), -1.0, 1.0)));
    const double u = phi / head.canthus_half_angle_deg;
    const double shape = std::max(0.0, 1.0 - u * u);
    const double open = 1.0 - closure;
    const double upper = head.lid_midline_deg + head.upper_lid_amplitude_deg * open * shape;
    const double lower = head.lid_midline_deg - head.lower_lid_amplitude_deg * open * shape;
    return theta > lower && theta < upper;
}

SceneIntersector::SceneIntersector(const Scene& scene, const EyeAssembly& eye) : scene_(&scene), eye_(&eye) {
    lid_radius_ = eyelid_shell_radius(eye);
    const HeadModel& h = scene.head;
    const double phi_c = deg_to_rad(0.9 * h.canthus_half_angle_deg);
    const double th_c = deg_to_rad(h.lid_midline_deg);
    const double rc = lid_radius_ - 0.6;
    caruncle_center_ = {-rc * std::cos(th_c) * std::sin(phi_c), rc * std::sin(th_c),
                        -rc * std::cos(th_c) * std::cos(phi_c)};
    caruncle_axes_ = Vec3{1.6, 2.0, 1.6} * h.caruncle_size;

    const EyeglassesConfig& g = scene.glasses;
    const double vertex_z = -eye.apex_distance() - g.vertex_distance;
    lens_front_center_ = {0.0, 0.0, vertex_z + g.front_radius};
    lens_back_center_ = lens_front_center_ + Vec3{0.0, 0.0, g.thickness};
    frame_major_ = g.aperture_radius + g.frame_tube_radius;
    const double r = g.front_radius;
    const double sag = r - std::sqrt(std::max(0.0, r * r - g.aperture_radius * g.aperture_radius));
    frame_z_ = vertex_z + sag + 0.5 * g.thickness;
}

template <typename Fn>
void SceneIntersector::visit(const Ray& ray, const HitFilter& filter, Fn&& fn) const {
    const Scene& scene = *scene_;
    eye_->visit_hits(ray, fn);

    if (filter.skin) {
        const double lid_r = lid_radius_;
        const SphereRoots lid = sphere_roots(ray, Vec3{}, lid_r);
        for (double t : {lid.near, lid.far}) {
            if (std::isinf(t)) continue;
            const Vec3 p = ray.at(t);
            const double phi = rad_to_deg(std::atan2(-p.x, -p.z));
            if (std::abs(phi) > kShellMaxAzimuthDeg) continue;
            const double theta = rad_to_deg(std::asin(std::clamp(p.y / lid_r, -1.0, 1.0)));
            if (std::abs(theta) > kShellMaxElevationDeg) continue;
            if (inside_lid_opening(scene.head, eye_->params().eyelid_closure, p)) continue;
            InterfaceHit hit;
            hit.t = t;
            hit.point = p;
            hit.normal = p / lid_r;
            hit.surface = SurfaceId::Eyelid;
            fn(hit);
        }

        // Caruncle nodule at the inner corner, partly sunk into the lid shell.
        const SphereRoots car = ellipsoid_roots(ray, caruncle_center_, caruncle_axes_);
        for (double t : {car.near, car.far}) {
            if (std::isinf(t)) continue;
            InterfaceHit hit;
            hit.t = t;
            hit.point = ray.at(t);
            hit.normal = ellipsoid_normal(hit.point, caruncle_center_, caruncle_axes_);
            hit.surface = SurfaceId::Caruncle;
            fn(hit);
        }

        const SphereRoots head = ellipsoid_roots(ray, kHeadCenter, kHeadAxes);
        for (double t : {head.near, head.far}) {
            if (std::isinf(t)) continue;
            const Vec3 p = ray.at(t);
            if (length_squared(p) < lid_r * lid_r) continue;
            InterfaceHit hit;
            hit.t = t;
            hit.point = p;
            hit.normal = ellipsoid_normal(p, kHeadCenter, kHeadAxes);
            hit.surface = SurfaceId::Head;
            fn(hit);
        }
    }

    if (filter.glasses && scene.glasses.present) {
        const EyeglassesConfig& g = scene.glasses;
        for (int side = 0; side < 2; ++side) {
            const Vec3 center = side == 0 ? lens_front_center_ : lens_back_center_;
            const SphereRoots roots = sphere_roots(ray, center, g.front_radius);
            for (double t : {roots.near, roots.far}) {
                if (std::isinf(t)) continue;
                const Vec3 p = ray.at(t);
                if (p.z >= center.z || p.x * p.x + p.y * p.y > g.aperture_radius * g.aperture_radius) continue;
                InterfaceHit hit;
                hit.t = t;
                hit.point = p;
                hit.normal = (p - center) / g.front_radius;
                hit.surface = side == 0 ? SurfaceId::GlassesLensFront : SurfaceId::GlassesLensBack;
                fn(hit);
            }
        }
        if (auto frame = intersect_frame(ray, frame_major_, g.frame_tube_radius, frame_z_)) fn(*frame);
    }

    if (filter.emitters) {
        for (std::size_t i = 0; i < scene.emitters.emitters.size(); ++i) {
            const PointEmitter& e = scene.emitters.emitters[i];
            if (length_squared(ray.origin - e.position) <= e.radius * e.radius) continue;  // one-sided
            const SphereRoots roots = sphere_roots(ray, e.position, e.radius);
            if (std::isinf(roots.near)) continue;
            InterfaceHit hit;
            hit.t = roots.near;
            hit.point = ray.at(roots.near);
            hit.normal = normalize(hit.point - e.position);
            hit.surface = SurfaceId::Emitter;
            hit.index = static_cast<int>(i);
            fn(hit);
        }
    }
}

void SceneIntersector::for_each_hit(const Ray& ray, const HitFilter& filter,
                                    const std::function<void(const InterfaceHit&)>& fn) const {
    visit(ray, filter, fn);
}

std::optional<SceneHit> SceneIntersector::nearest(const Ray& ray, const HitFilter& filter) const {
    InterfaceHit best;
    bool found = false;
    visit(ray, filter, [&](const InterfaceHit& h) {
        if (h.t < best.t) {
            best = h;
            found = true;
        }
    });
    if (!found) return std::nullopt;
    SceneHit out;
    out.hit = best;
    out.material = material_for_surface(best.surface);
    const SurfaceClassification c = classify_surface(best.surface);
    out.cls = c.cls;
    out.transparent = c.transparent;
    return out;
}

double SceneIntersector::transmittance(const Vec3& from, const Vec3& to) const {
    Vec3 d = to - from;
    const double dist = length(d);
    d = d / dist;
    double t_acc = 1.0;
    bool blocked = false;
    visit(Ray(from, d), HitFilter{true, true, false}, [&](const InterfaceHit& h) {
        if (blocked || h.t >= dist) return;
        const double c = std::max(std::abs(dot(d, h.normal)), 1e-12);
        switch (h.surface) {
            case SurfaceId::Cornea: {
                const bool entering = h.entering(d);
                t_acc *= 1.0 - fresnel_dielectric(c, entering ? 1.0 : kCorneaIndex, entering ? kCorneaIndex : 1.0);
                break;
            }
            case SurfaceId::GlassesLensFront:
            case SurfaceId::GlassesLensBack:
                t_acc *= 1.0 - fresnel_dielectric(c, 1.0, scene_->glasses.coating_ior);
                break;
            default: blocked = true;
        }
    });
    return blocked ? 0.0 : t_acc;
}

void for_each_scene_hit(const Scene& scene, const EyeAssembly& eye, const Ray& ray, const HitFilter& filter,
                        const std::function<void(const InterfaceHit&)>& fn) {
    SceneIntersector(scene, eye).for_each_hit(ray, filter, fn);
}

std::optional<SceneHit> intersect_scene(const Scene& scene, const EyeAssembly& eye, const Ray& ray,
                                        const HitFilter& filter) {
    return SceneIntersector(scene, eye).nearest(ray, filter);
}

}  // namespace eyesynth
