// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>

#include "eyesynth/errors.hpp"
#include "eyesynth/io.hpp"
#include "eyesynth/parallel.hpp"
#include "eyesynth/serialize.hpp"

namespace eyesynth {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kPurposeAugment = 4;

constexpr std::array<const char*, kAugmentSchemeCount> kSchemeNames = {
    "flip", "gaussian_blur", "thin_lines", "gamma", "intensity_offset", "down_up_noise", "identity"};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); }

void set_pixel(Image8& img, int x, int y, int value) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    for (int c = 0; c < img.channels; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(value);
}

}  // namespace

const char* scheme_name(AugmentScheme s) { return kSchemeNames[static_cast<std::size_t>(s)]; }

AugmentScheme scheme_from_name(const std::string& name) {
    for (int i = 0; i < kAugmentSchemeCount; ++i)
        if (name == kSchemeNames[static_cast<std::size_t>(i)]) return static_cast<AugmentScheme>(i);
    throw InvalidParameter("unknown augmentation scheme '" + name + "'");
}

void AugmentConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw InvalidParameter(std::string("augment: ") + what);
    };
    require(blur_kernel_width >= 1 && blur_kernel_width % 2 == 1, "blur kernel width must be odd and positive");
    require(blur_sigma_min > 0.0 && blur_sigma_min <= blur_sigma_max, "blur sigma range must be positive and ordered");
    require(line_box_x_min <= line_box_x_max && line_box_y_min <= line_box_y_max, "line box must be ordered");
    require(line_box_ref_width > 0.0 && line_box_ref_height > 0.0, "line box reference size must be positive");
    require(line_count_min >= 0 && line_count_min <= line_count_max, "line count range must be ordered");
    require(line_length_min >= 0.0 && line_length_min <= line_length_max, "line length range must be ordered");
    require(line_intensity >= 0 && line_intensity <= 255, "line intensity must lie in [0, 255]");
    require(!gammas.empty(), "gamma set must be non-empty");
    for (double g : gammas) require(g > 0.0, "gamma factors must be > 0");
    require(offset_max >= 0 && offset_max <= 255, "offset_max must lie in [0, 255]");
    require(noise_sigma_min >= 0.0 && noise_sigma_min <= noise_sigma_max, "noise sigma range must be ordered");
    require(factor_min >= 1 && factor_min <= factor_max, "down/up factor range must be ordered and >= 1");
}

nlohmann::json AugmentParams::to_json() const {
    nlohmann::json j = {{"scheme", scheme_name(scheme)}};
    switch (scheme) {
        case AugmentScheme::GaussianBlur:
            j["sigma"] = blur_sigma;
            j["kernel_width"] = blur_kernel_width;
            break;
        case AugmentScheme::ThinLines: {
            j["center"] = {line_center_x, line_center_y};
            j["intensity"] = line_intensity;
            nlohmann::json segs = nlohmann::json::array();
            for (const auto& l : lines) segs.push_back({l.x0, l.y0, l.x1, l.y1});
            j["segments"] = segs;
            break;
        }
        case AugmentScheme::Gamma: j["gamma"] = gamma; break;
        case AugmentScheme::IntensityOffset: j["offset"] = offset; break;
        case AugmentScheme::DownUpNoise:
            j["factor"] = factor;
            j["noise_sigma"] = noise_sigma;
            j["noise_seed"] = noise_seed;
            break;
        case AugmentScheme::Flip:
        case AugmentScheme::Identity: break;
    }
    return j;
}

AugmentScheme select_scheme(Rng& rng) { return static_cast<AugmentScheme>(rng.uniform_int(0, kAugmentSchemeCount - 1)); }

AugmentParams sample_params(AugmentScheme scheme, int width, int height, Rng& rng, const AugmentConfig& cfg) {
    cfg.validate();
    AugmentParams p;
    p.scheme = scheme;
    switch (scheme) {
        case AugmentScheme::GaussianBlur:
            p.blur_kernel_width = cfg.blur_kernel_width;
            p.blur_sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
            break;
        case AugmentScheme::ThinLines: {
            const double sx = width / cfg.line_box_ref_width;
            const double sy = height / cfg.line_box_ref_height;
            p.line_center_x = rng.uniform(cfg.line_box_x_min * sx, cfg.line_box_x_max * sx);
            p.line_center_y = rng.uniform(cfg.line_box_y_min * sy, cfg.line_box_y_max * sy);
            p.line_intensity = cfg.line_intensity;
            const auto n = rng.uniform_int(cfg.line_count_min, cfg.line_count_max);
            for (std::int64_t i = 0; i < n; ++i) {
                const double angle = rng.uniform(0.0, kPi);
                const double half = 0.5 * rng.uniform(cfg.line_length_min, cfg.line_length_max);
                const double dx = std::cos(angle) * half, dy = std::sin(angle) * half;
                p.lines.push_back({static_cast<int>(std::lround(p.line_center_x - dx)),
                                   static_cast<int>(std::lround(p.line_center_y - dy)),
                                   static_cast<int>(std::lround(p.line_center_x + dx)),
                                   static_cast<int>(std::lround(p.line_center_y + dy))});
            }
            break;
        }
        case AugmentScheme::Gamma:
            p.gamma = cfg.gammas[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cfg.gammas.size()) - 1))];
            break;
        case AugmentScheme::IntensityOffset:
            p.offset = static_cast<int>(rng.uniform_int(-cfg.offset_max, cfg.offset_max));
            break;
        case AugmentScheme::DownUpNoise:
            p.factor = static_cast<int>(rng.uniform_int(cfg.factor_min, cfg.factor_max));
            p.noise_sigma = rng.uniform(cfg.noise_sigma_min, cfg.noise_sigma_max);
            p.noise_seed = rng.next_u64();
            break;
        case AugmentScheme::Flip:
        case AugmentScheme::Identity: break;
    }
    return p;
}

Image8 flip_horizontal(const Image8& image) {
    Image8 out(image.width, image.height, image.channels);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < image.channels; ++c) out.at(image.width - 1 - x, y, c) = image.at(x, y, c);
    return out;
}

SegMask flip_horizontal(const SegMask& mask) {
    SegMask out;
    out.labels = flip_horizontal(mask.labels);
    return out;
}

std::vector<double> gaussian_kernel(int width, double sigma) {
    if (width < 1 || width % 2 == 0) throw InvalidParameter("kernel width must be odd and positive");
    if (!(sigma > 0.0)) throw InvalidParameter("kernel sigma must be > 0");
    const int r = width / 2;
    std::vector<double> k(static_cast<std::size_t>(width));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[static_cast<std::size_t>(i + r)];
    }
    for (double& v : k) v /= sum;
    return k;
}

Image8 gaussian_blur(const Image8& image, int width, double sigma) {
    const auto k = gaussian_kernel(width, sigma);
    const int r = width / 2;
    const int w = image.width, h = image.height, ch = image.channels;
    std::vector<double> tmp(image.data.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * image.at(std::clamp(x + i, 0, w - 1), y, c);
                tmp[image.index(x, y, c)] = s;
            }
    Image8 out(w, h, ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * tmp[image.index(x, std::clamp(y + i, 0, h - 1), c)];
                out.at(x, y, c) = to_byte(s);
            }
    return out;
}

Image8 apply_gamma(const Image8& image, double gamma) {
    if (!(gamma > 0.0)) throw InvalidParameter("gamma must be > 0");
    std::array<std::uint8_t, 256> lut{};
    for (int i = 0; i < 256; ++i) lut[static_cast<std::size_t>(i)] = to_byte(255.0 * std::pow(i / 255.0, gamma));
    Image8 out = image;
    for (auto& v : out.data) v = lut[v];
    return out;
}

Image8 apply_offset(const Image8& image, int delta) {
    Image8 out = image;
    for (auto& v : out.data) v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + delta, 0, 255));
    return out;
}

Image8 down_up_noise(const Image8& image, int factor, double sigma, std::uint64_t noise_seed) {
    if (factor < 1) throw InvalidParameter("down/up factor must be >= 1");
    if (!(sigma >= 0.0)) throw InvalidParameter("noise sigma must be >= 0");
    const int w = image.width, h = image.height, ch = image.channels;
    const int lw = (w + factor - 1) / factor, lh = (h + factor - 1) / factor;
    Image8 low(lw, lh, ch);
    Rng rng(noise_seed, StreamKey{});
    for (int ly = 0; ly < lh; ++ly)
        for (int lx = 0; lx < lw; ++lx)
            for (int c = 0; c < ch; ++c) {
                double sum = 0.0;
                int n = 0;
                for (int y = ly * factor; y < std::min(h, (ly + 1) * factor); ++y)
                    for (int x = lx * factor; x < std::min(w, (lx + 1) * factor); ++x, ++n) sum += image.at(x, y, c);
                low.at(lx, ly, c) = to_byte(sum / n + sigma * rng.gaussian());
            }
    Image8 out(w, h, ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) out.at(x, y, c) = low.at(x / factor, y / factor, c);
    return out;
}

Image8 draw_lines(const Image8& image, const std::vector<LineSegment>& lines, int intensity) {
    Image8 out = image;
    for (const auto& l : lines) {
        // Bresenham, clipped per pixel.
        int x = l.x0, y = l.y0;
        const int dx = std::abs(l.x1 - l.x0), dy = -std::abs(l.y1 - l.y0);
        const int sx = l.x0 < l.x1 ? 1 : -1, sy = l.y0 < l.y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set_pixel(out, x, y, intensity);
            if (x == l.x1 && y == l.y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y += sy;
            }
        }
    }
    return out;
}

Augmented apply_params(const AugmentParams& p, const Image8& image, const SegMask& mask) {
    if (image.width != mask.width() || image.height != mask.height()) {
        throw InvalidParameter("image and mask sizes differ (" + std::to_string(image.width) + "x" +
                               std::to_string(image.height) + " vs " + std::to_string(mask.width()) + "x" +
                               std::to_string(mask.height()) + ")");
    }
    Augmented out{Image8{}, mask, p};
    switch (p.scheme) {
        case AugmentScheme::Flip:
            out.image = flip_horizontal(image);
            out.mask = flip_horizontal(mask);
            break;
        case AugmentScheme::GaussianBlur: out.image = gaussian_blur(image, p.blur_kernel_width, p.blur_sigma); break;
        case AugmentScheme::ThinLines: out.image = draw_lines(image, p.lines, p.line_intensity); break;
        case AugmentScheme::Gamma: out.image = apply_gamma(image, p.gamma); break;
        case AugmentScheme::IntensityOffset: out.image = apply_offset(image, p.offset); break;
        case AugmentScheme::DownUpNoise: out.image = down_up_noise(image, p.factor, p.noise_sigma, p.noise_seed); break;
        case AugmentScheme::Identity: out.image = image; break;
    }
    return out;
}

Augmented apply(AugmentScheme scheme, const Image8& image, const SegMask& mask, Rng& rng, const AugmentConfig& cfg) {
    return apply_params(sample_params(scheme, image.width, image.height, rng, cfg), image, mask);
}

AugmentSummary augment_dataset(const std::string& input_dir, const std::string& output_dir,
                               const AugmentDatasetOptions& options) {
    options.config.validate();
    const fs::path in(input_dir), out(output_dir);
    if (fs::weakly_canonical(in) == fs::weakly_canonical(out)) throw InvalidParameter("augment output must differ from input");
    const Manifest src = read_manifest_file((in / "manifest.json").string());
    for (const char* sub : {"images", "masks", "masks_noskin", "meta"}) fs::create_directories(out / sub);

    struct Result {
        ManifestEntry entry;
        std::string provenance;
        std::string jsonl;
        AugmentScheme scheme = AugmentScheme::Identity;
    };
    std::vector<const ManifestEntry*> entries;
    for (const auto& e : src.entries)
        if (e.ok) entries.push_back(&e);
    std::vector<Result> results(entries.size());

    parallel_for(entries.size(), options.threads, [&](std::size_t i) {
        const ManifestEntry& e = *entries[i];
        const Image8 image = read_png((in / e.image).string());
        const SegMask mask = read_mask_png((in / e.mask).string());
        const SegMask mask_noskin = read_mask_png((in / e.mask_noskin).string());
        MetadataRecord meta = read_metadata_file((in / e.meta).string());

        Rng rng(options.seed, StreamKey{static_cast<std::uint64_t>(i), 0, 0, 0, kPurposeAugment});
        const AugmentScheme scheme = select_scheme(rng);
        const AugmentParams params = sample_params(scheme, image.width, image.height, rng, options.config);
        const Augmented a = apply_params(params, image, mask);
        SegMask noskin = mask_noskin;
        if (scheme == AugmentScheme::Flip) {
            noskin = flip_horizontal(mask_noskin);
            // Only the image-space annotations can follow a mirror.
            for (auto* c : {&meta.pupil_center_2d, &meta.iris_center_2d})
                if (*c) (*c)->x = meta.width - (*c)->x;
        }

        Result& r = results[i];
        r.scheme = scheme;
        r.entry = e;
        write_png((out / e.image).string(), a.image);
        write_mask_png((out / e.mask).string(), a.mask);
        write_mask_png((out / e.mask_noskin).string(), noskin);
        const Json mj = metadata_to_json(meta);
        write_text_file((out / e.meta).string(), mj.dump(2) + "\n");
        r.jsonl = mj.dump();
        r.entry.image_sha256 = sha256_file((out / e.image).string());
        r.entry.mask_sha256 = sha256_file((out / e.mask).string());
        r.entry.mask_noskin_sha256 = sha256_file((out / e.mask_noskin).string());
        r.entry.meta_sha256 = sha256_file((out / e.meta).string());
        Json prov = {{"id", e.id}, {"scheme", scheme_name(scheme)}, {"params", params.to_json()}};
        r.provenance = prov.dump();
    });

    Manifest m;
    m.recipe = src.recipe;
    m.master_seed = src.master_seed;
    m.generated_at = generation_timestamp();
    m.exposure = src.exposure;
    AugmentSummary summary;
    std::string provenance, jsonl;
    for (auto& r : results) {
        provenance += r.provenance + "\n";
        jsonl += r.jsonl + "\n";
        ++summary.per_scheme[static_cast<std::size_t>(r.scheme)];
        ++summary.images;
        m.entries.push_back(std::move(r.entry));
    }
    write_text_file((out / "provenance.jsonl").string(), provenance);
    write_text_file((out / "meta.jsonl").string(), jsonl);
    write_text_file((out / "manifest.json").string(), manifest_to_json(m).dump(2) + "\n");
    return summary;
}

}  // namespace eyesynth
