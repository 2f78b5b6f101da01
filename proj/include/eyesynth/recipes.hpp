// SPDX-License-Identifier: Apache-2.0
//
// Dataset recipes: per-image parameter planning with exact quotas, dataset
// generation to disk, and the stratified train/validation split.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eyesynth/renderer.hpp"

namespace eyesynth {

inline constexpr const char* kSchemaVersion = "1.0";

struct Composition {
    int open = 0;
    int partial = 0;  // closure in [partial_min, 1)
    int closed = 0;   // closure = 1
    int total() const { return open + partial + closed; }
};

struct DatasetRecipe {
    std::string name = "S-NVGaze";  // S-NVGaze, S-OpenEDS, S-General or custom
    PoseKind pose_sampler = PoseKind::SNVGaze;
    double scale = 0.01;  // fraction of the full-size counts
    int total_images = 396;  // training pool
    Composition composition{360, 18, 18};
    int test_images = 120;   // drawn from the held-out heads
    int width = 640;
    int height = 480;
    double glasses_fraction = 0.5;
    double gaze_range_deg = 30.0;
    double pupil_min = 1.0;
    double pupil_max = 4.0;
    std::vector<double> asphericities{-0.13, -0.25, -0.37};
    double partial_min = 0.8;
    double closure_c0 = 0.15;
    double closure_c1 = 0.005;
    int train_heads = 18;
    int test_heads = 6;
    std::uint64_t master_seed = 1;
    PoseConfig pose;
    int samples_per_pixel = 200;
    int max_bounces = 6;
    ChannelMode mode = ChannelMode::IR;
    int tile_size = 32;
    double exposure = 0.0;  // 0 selects automatic calibration

    /// Throws InvalidParameter naming the first violated invariant.
    void validate() const;
};

/// Full-size counts: 36000 open, 1800 partial, 1800 closed training images and
/// 12000 test images, multiplied by `scale` (0.01 gives the desk-scale plan).
DatasetRecipe make_recipe(const std::string& name, double scale = 0.01);

enum class ClosureKind { Open, Partial, Closed };
const char* closure_kind_name(ClosureKind k);

struct SampledImageSpec {
    int index = 0;
    std::string id;
    bool test = false;  // held-out head pool
    ClosureKind closure_kind = ClosureKind::Open;
    EyeParams eye;
    int head_id = 0;
    PoseParams pose;
    int environment_index = 0;
    double env_rot_y = 0.0;
    double env_rot_x = 0.0;
    double env_rot_z = 0.0;
    double env_scale = 1.0;
    bool glasses = false;
    std::uint64_t seed = 0;
};

/// Pure function of the recipe: training specs first, then test specs.
std::vector<SampledImageSpec> plan_dataset(const DatasetRecipe& recipe);

/// Zero-padded decimal id.
std::string format_image_id(int index, int total);

struct BuiltScene {
    Scene scene;
    EyeAssembly eye;
};
BuiltScene build_scene_for_spec(const DatasetRecipe& recipe, const SampledImageSpec& spec,
                                const std::shared_ptr<const TextureLibrary>& textures);
RenderConfig render_config_for_spec(const DatasetRecipe& recipe, const SampledImageSpec& spec,
                                    const std::shared_ptr<const TextureLibrary>& textures, int threads);

/// Exposure for a recipe: calibration render of the first planned image with
/// eyeglasses removed.
double calibrate_recipe_exposure(const DatasetRecipe& recipe, const std::vector<SampledImageSpec>& plan,
                                 const std::shared_ptr<const TextureLibrary>& textures, int threads);

struct ManifestEntry {
    std::string id;
    bool test = false;
    bool ok = true;
    std::string error;
    std::string image;  // paths relative to the dataset root
    std::string mask;
    std::string mask_noskin;
    std::string meta;
    std::string image_sha256;
    std::string mask_sha256;
    std::string mask_noskin_sha256;
    std::string meta_sha256;
};

struct Manifest {
    std::string schema_version = kSchemaVersion;
    DatasetRecipe recipe;
    std::uint64_t master_seed = 0;
    std::string generated_at;
    double exposure = 1.0;
    std::vector<ManifestEntry> entries;

    std::size_t failed_count() const;
};

struct GenerateOptions {
    int threads = 1;
    std::shared_ptr<const TextureLibrary> textures;
    bool include_test = true;
    std::function<void(const SampledImageSpec&)> on_image;  // progress hook
};

/// UTC ISO-8601 time, taken from SOURCE_DATE_EPOCH when that is set.
std::string generation_timestamp();

/// Renders every planned image into `output_dir` and writes manifest.json.
/// Per-image failures are recorded in the manifest rather than thrown.
Manifest generate_dataset(const DatasetRecipe& recipe, const std::string& output_dir, const GenerateOptions& options);

/// Recomputes every digest; returns the ids whose files do not match.
std::vector<std::string> verify_manifest(const Manifest& manifest, const std::string& dataset_dir);

struct SplitResult {
    std::vector<std::string> train;
    std::vector<std::string> validation;
};

/// Bins pupil centers on a grid over the image extent and sends
/// round-half-away(train_fraction * n) images of each bin to training.
SplitResult stratified_split(const std::vector<MetadataRecord>& records, double train_fraction = 0.8, int bins_x = 8,
                             int bins_y = 8, std::uint64_t seed = 0);

/// Deterministic Fisher-Yates shuffle driven by a counter-based stream.
template <typename T>
void shuffle_with(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(items[i - 1], items[j]);
    }
}

/// Largest-remainder split of `total` in proportion to `weights`.
std::vector<int> apportion(int total, const std::vector<double>& weights);

/// Round half away from zero.
long long round_half_away(double v);

}  // namespace eyesynth
