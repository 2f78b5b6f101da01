// SPDX-License-Identifier: Apache-2.0
//
// Offline image augmentation. Each image receives exactly one of seven
// schemes, chosen uniformly. Only Flip touches the mask.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eyesynth/raster.hpp"
#include "eyesynth/rng.hpp"
#include "eyesynth/segmask.hpp"

namespace eyesynth {

enum class AugmentScheme { Flip, GaussianBlur, ThinLines, Gamma, IntensityOffset, DownUpNoise, Identity };

inline constexpr int kAugmentSchemeCount = 7;

const char* scheme_name(AugmentScheme s);
/// Throws InvalidParameter for unknown names.
AugmentScheme scheme_from_name(const std::string& name);

struct AugmentConfig {
    int blur_kernel_width = 7;
    double blur_sigma_min = 2.0;
    double blur_sigma_max = 7.0;
    // Line centers are drawn inside this box, given for a 400x640 image and
    // scaled to the actual resolution.
    double line_box_x_min = 120.0;
    double line_box_x_max = 280.0;
    double line_box_y_min = 192.0;
    double line_box_y_max = 448.0;
    double line_box_ref_width = 400.0;
    double line_box_ref_height = 640.0;
    int line_count_min = 1;
    int line_count_max = 3;
    double line_length_min = 30.0;
    double line_length_max = 100.0;
    int line_intensity = 255;
    std::vector<double> gammas{0.6, 0.8, 1.2, 1.4};
    int offset_max = 25;
    double noise_sigma_min = 2.0;
    double noise_sigma_max = 16.0;
    int factor_min = 2;
    int factor_max = 5;

    void validate() const;
};

struct LineSegment {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// Fully resolved parameters; applying them is deterministic.
struct AugmentParams {
    AugmentScheme scheme = AugmentScheme::Identity;
    double blur_sigma = 0.0;
    int blur_kernel_width = 7;
    double line_center_x = 0.0;
    double line_center_y = 0.0;
    std::vector<LineSegment> lines;
    int line_intensity = 255;
    double gamma = 1.0;
    int offset = 0;
    int factor = 1;
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;

    nlohmann::json to_json() const;
};

struct Augmented {
    Image8 image;
    SegMask mask;
    AugmentParams params;
};

/// Uniform over the seven schemes.
AugmentScheme select_scheme(Rng& rng);

AugmentParams sample_params(AugmentScheme scheme, int width, int height, Rng& rng, const AugmentConfig& cfg = {});
/// Throws InvalidParameter when image and mask sizes differ.
Augmented apply_params(const AugmentParams& params, const Image8& image, const SegMask& mask);
/// sample_params followed by apply_params.
Augmented apply(AugmentScheme scheme, const Image8& image, const SegMask& mask, Rng& rng,
                const AugmentConfig& cfg = {});

// Individual transforms.
Image8 flip_horizontal(const Image8& image);
SegMask flip_horizontal(const SegMask& mask);
/// Normalized 1-D Gaussian taps of odd width.
std::vector<double> gaussian_kernel(int width, double sigma);
/// Separable blur with edge clamping.
Image8 gaussian_blur(const Image8& image, int width, double sigma);
Image8 apply_gamma(const Image8& image, double gamma);
Image8 apply_offset(const Image8& image, int delta);
/// Box downsample by `factor`, Gaussian noise, clamp, nearest upsample.
Image8 down_up_noise(const Image8& image, int factor, double sigma, std::uint64_t noise_seed);
Image8 draw_lines(const Image8& image, const std::vector<LineSegment>& lines, int intensity);

struct AugmentDatasetOptions {
    std::uint64_t seed = 0;
    int threads = 1;
    AugmentConfig config;
};

struct AugmentSummary {
    std::size_t images = 0;
    std::array<std::size_t, kAugmentSchemeCount> per_scheme{};
};

/// Reads a generated dataset, writes an augmented copy with the same layout
/// plus provenance.jsonl (one line per image: id, scheme, parameters).
AugmentSummary augment_dataset(const std::string& input_dir, const std::string& output_dir,
                               const AugmentDatasetOptions& options);

}  // namespace eyesynth
