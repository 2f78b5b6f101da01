// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/textures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "eyesynth/errors.hpp"
#include "eyesynth/io.hpp"
#include "eyesynth/rng.hpp"

namespace eyesynth {

namespace {

double lattice(std::int64_t x, std::int64_t y, std::int64_t z, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed ^ static_cast<std::uint64_t>(x) * 0x8CB92BA72F3D8DD7ull);
    h = splitmix64(h ^ static_cast<std::uint64_t>(y) * 0xD6E8FEB86659FD93ull);
    h = splitmix64(h ^ static_cast<std::uint64_t>(z) * 0xA0761D6478BD642Full);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double smoothstep(double e0, double e1, double x) {
    return smooth(std::clamp((x - e0) / (e1 - e0), 0.0, 1.0));
}

Vec3 equirect_direction(double u, double v) {
    const double phi = (u - 0.5) * 2.0 * kPi;
    const double theta = v * kPi;
    return {std::sin(theta) * std::sin(phi), std::cos(theta), -std::sin(theta) * std::cos(phi)};
}

void put(ImageF& img, int x, int y, const Color& c) {
    img.at(x, y, 0) = static_cast<float>(c.x);
    img.at(x, y, 1) = static_cast<float>(c.y);
    img.at(x, y, 2) = static_cast<float>(c.z);
}

ImageF image8_to_texture(const Image8& img) {
    ImageF out(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = img.at(x, y, img.channels == 3 ? c : 0) / 255.0f;
    return out;
}

}  // namespace

double value_noise(const Vec3& p, std::uint64_t seed) {
    const double fx = std::floor(p.x), fy = std::floor(p.y), fz = std::floor(p.z);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy),
               iz = static_cast<std::int64_t>(fz);
    const double tx = smooth(p.x - fx), ty = smooth(p.y - fy), tz = smooth(p.z - fz);
    double acc = 0.0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) * (dz ? tz : 1.0 - tz);
                acc += w * lattice(ix + dx, iy + dy, iz + dz, seed);
            }
    return acc;
}

Color sample_bilinear(const ImageF& img, double u, double v) {
    const double fx = u * img.width - 0.5;
    const double fy = std::clamp(v * img.height - 0.5, 0.0, static_cast<double>(img.height - 1));
    const double x0f = std::floor(fx), y0f = std::floor(fy);
    const double ax = fx - x0f, ay = fy - y0f;
    auto wrap_x = [&](std::int64_t x) {
        const std::int64_t w = img.width;
        return static_cast<int>(((x % w) + w) % w);
    };
    const int x0 = wrap_x(static_cast<std::int64_t>(x0f));
    const int x1 = wrap_x(static_cast<std::int64_t>(x0f) + 1);
    const int y0 = static_cast<int>(y0f);
    const int y1 = std::min(y0 + 1, img.height - 1);
    Color out;
    const int nc = img.channels;
    for (int c = 0; c < 3; ++c) {
        const int cc = nc == 3 ? c : 0;
        const double top = (1.0 - ax) * img.at(x0, y0, cc) + ax * img.at(x1, y0, cc);
        const double bottom = (1.0 - ax) * img.at(x0, y1, cc) + ax * img.at(x1, y1, cc);
        const double value = (1.0 - ay) * top + ay * bottom;
        if (c == 0) out.x = value;
        else if (c == 1) out.y = value;
        else out.z = value;
    }
    return out;
}

ImageF procedural_iris_texture(int id) {
    static const Color kTints[kIrisTextureCount] = {
        {0.55, 0.35, 0.20}, {0.35, 0.22, 0.12}, {0.30, 0.45, 0.65}, {0.40, 0.50, 0.35}, {0.60, 0.45, 0.25},
        {0.45, 0.50, 0.55}, {0.25, 0.16, 0.10}, {0.35, 0.55, 0.70}, {0.50, 0.40, 0.30}};
    const Color tint = kTints[((id % kIrisTextureCount) + kIrisTextureCount) % kIrisTextureCount];
    const std::uint64_t seed = 0x1215ull + static_cast<std::uint64_t>(id) * 7919ull;
    const int w = 256, h = 64;
    ImageF img(w, h, 3);
    for (int y = 0; y < h; ++y) {
        const double r = (y + 0.5) / h;
        for (int x = 0; x < w; ++x) {
            const double a = 2.0 * kPi * (x + 0.5) / w;
            const double streak = value_noise({std::cos(a) * 14.0, std::sin(a) * 14.0, r * 2.5}, seed);
            const double fine = value_noise({std::cos(a) * 45.0, std::sin(a) * 45.0, r * 9.0}, seed + 1);
            double k = 0.55 + 0.45 * streak + 0.2 * (fine - 0.5);
            k += 0.35 * std::exp(-std::pow((r - 0.33) / 0.07, 2.0));
            k *= 1.0 - 0.55 * smoothstep(0.82, 1.0, r);
            k *= 0.6 + 0.4 * smoothstep(0.0, 0.08, r);
            put(img, x, y, tint * std::clamp(k, 0.0, 1.6));
        }
    }
    for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

ImageF procedural_sclera_texture() {
    const int w = 256, h = 128;
    ImageF img(w, h, 3);
    for (int y = 0; y < h; ++y) {
        const double polar = (y + 0.5) / h;
        for (int x = 0; x < w; ++x) {
            const double a = 2.0 * kPi * (x + 0.5) / w;
            const Vec3 p{std::cos(a) * 6.0, std::sin(a) * 6.0, polar * 20.0};
            const double ridge = std::abs(value_noise(p, 0x5C1E) - 0.5);
            const double vein = (1.0 - smoothstep(0.0, 0.03, ridge)) * smoothstep(0.12, 0.3, polar);
            const double mottle = 0.9 + 0.1 * value_noise(p * 3.0, 0x5C1F);
            const Color base = Color{0.86, 0.82, 0.78} * mottle;
            const Color red{0.78, 0.32, 0.30};
            put(img, x, y, base * (1.0 - 0.7 * vein) + red * (0.7 * vein));
        }
    }
    return img;
}

EnvironmentMap procedural_environment(int index) {
    const int w = 128, h = 64;
    EnvironmentMap env;
    const bool indoor = index < kIndoorEnvironmentCount;
    env.tag = indoor ? "indoor" : "outdoor";
    env.id = (indoor ? "indoor_" : "outdoor_") + std::to_string(index);
    env.hdr = ImageF(w, h, 3);
    Rng rng(0xE17ull, StreamKey{static_cast<std::uint64_t>(index), 0, 0, 0, 0});
    const std::uint64_t seed = 0xE170ull + static_cast<std::uint64_t>(index);

    if (indoor) {
        const Color wall = Color{0.7, 0.65, 0.6} * rng.uniform(0.15, 0.45);
        const Color floor_c = Color{0.5, 0.4, 0.3} * rng.uniform(0.1, 0.3);
        struct Light {
            Vec3 dir;
            double cos_size;
            Color power;
        };
        std::vector<Light> lights;
        const int lamps = static_cast<int>(rng.uniform_int(1, 3));
        for (int i = 0; i < lamps; ++i) {
            const double az = rng.uniform(-kPi, kPi);
            const double el = rng.uniform(0.6, 1.4);
            lights.push_back({{std::cos(el) * std::sin(az), std::sin(el), -std::cos(el) * std::cos(az)},
                              std::cos(deg_to_rad(rng.uniform(6.0, 12.0))), Color{1.0, 0.92, 0.8} * rng.uniform(8.0, 20.0)});
        }
        const double win_az = rng.uniform(-kPi, kPi);
        const Color window = Color{0.8, 0.9, 1.0} * rng.uniform(3.0, 8.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = (x + 0.5) / w, v = (y + 0.5) / h;
                const Vec3 d = equirect_direction(u, v);
                Color c = d.y > -0.2 ? wall : floor_c;
                c *= 0.85 + 0.3 * value_noise(d * 4.0, seed);
                const double az = std::atan2(d.x, -d.z);
                double daz = std::abs(az - win_az);
                daz = std::min(daz, 2.0 * kPi - daz);
                if (daz < 0.45 && d.y > -0.05 && d.y < 0.45) c = window;
                for (const auto& l : lights)
                    if (dot(d, l.dir) > l.cos_size) c = l.power;
                put(env.hdr, x, y, c);
            }
    } else {
        const double sun_az = rng.uniform(-kPi, kPi);
        const double sun_el = rng.uniform(0.1, 1.2);
        const Vec3 sun{std::cos(sun_el) * std::sin(sun_az), std::sin(sun_el), -std::cos(sun_el) * std::cos(sun_az)};
        const double sun_power = rng.uniform(30.0, 80.0);
        const double sky_gain = rng.uniform(0.6, 1.6);
        const double cloudiness = rng.uniform(0.0, 0.8);
        const Color ground = Color{0.35, 0.3, 0.22} * rng.uniform(0.2, 0.5);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = (x + 0.5) / w, v = (y + 0.5) / h;
                const Vec3 d = equirect_direction(u, v);
                Color c;
                if (d.y >= 0.0) {
                    const double t = std::pow(1.0 - d.y, 3.0);
                    c = (Color{0.25, 0.45, 0.9} * (1.0 - t) + Color{0.85, 0.9, 1.0} * t) * sky_gain;
                    const double cloud = smoothstep(0.45, 0.75, value_noise(d * 5.0, seed));
                    c = c * (1.0 - cloudiness * cloud) + Color{1.0, 1.0, 1.0} * (sky_gain * 1.2 * cloudiness * cloud);
                } else {
                    c = ground * (0.8 + 0.4 * value_noise(d * 8.0, seed + 3));
                }
                if (dot(d, sun) > std::cos(deg_to_rad(2.5))) c = Color{1.0, 0.95, 0.85} * sun_power;
                put(env.hdr, x, y, c);
            }
    }
    return env;
}

std::shared_ptr<const TextureLibrary> procedural_library() {
    static const std::shared_ptr<const TextureLibrary> lib = [] {
        auto l = std::make_shared<TextureLibrary>();
        for (int i = 0; i < kIrisTextureCount; ++i) l->iris.push_back(procedural_iris_texture(i));
        l->sclera = procedural_sclera_texture();
        for (int i = 0; i < kEnvironmentCount; ++i) l->environments.push_back(procedural_environment(i));
        return l;
    }();
    return lib;
}

std::shared_ptr<const TextureLibrary> load_asset_manifest(const std::string& path, const std::string& asset_root) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw AssetError(path, "asset manifest not found");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("asset manifest '" + path + "' is not valid JSON: " + e.what());
    }
    const fs::path base = asset_root.empty() ? fs::path(path).parent_path() : fs::path(asset_root);
    auto resolve = [&](const std::string& p) {
        const fs::path fp(p);
        const std::string full = fp.is_absolute() ? p : (base / fp).string();
        if (!fs::exists(full)) throw AssetError(full, "asset file not found");
        return full;
    };

    auto lib = std::make_shared<TextureLibrary>(*procedural_library());
    if (doc.contains("iris")) {
        lib->iris.clear();
        for (const auto& entry : doc.at("iris")) lib->iris.push_back(image8_to_texture(read_png(resolve(entry.get<std::string>()))));
        if (lib->iris.empty()) throw FormatError("asset manifest lists no iris textures");
    }
    if (doc.contains("sclera")) lib->sclera = image8_to_texture(read_png(resolve(doc.at("sclera").get<std::string>())));
    if (doc.contains("environments")) {
        lib->environments.clear();
        for (const auto& entry : doc.at("environments")) {
            EnvironmentMap env;
            env.id = entry.at("id").get<std::string>();
            env.tag = entry.value("tag", "outdoor");
            env.hdr = read_hdr(resolve(entry.at("path").get<std::string>()));
            for (float v : env.hdr.data)
                if (!(v >= 0.0f)) throw FormatError("environment '" + env.id + "' has negative or NaN radiance");
            lib->environments.push_back(std::move(env));
        }
        if (lib->environments.empty()) throw FormatError("asset manifest lists no environments");
    }
    return lib;
}

}  // namespace eyesynth
