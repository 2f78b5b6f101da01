// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/recipes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>

#include "eyesynth/errors.hpp"
#include "eyesynth/io.hpp"
#include "eyesynth/parallel.hpp"
#include "eyesynth/serialize.hpp"

namespace eyesynth {

namespace fs = std::filesystem;

namespace {

// Stream purposes under the master seed.
constexpr std::uint32_t kPurposeImage = 1;
constexpr std::uint32_t kPurposeQuota = 2;
constexpr std::uint32_t kPurposeSplit = 3;

constexpr double kFullOpen = 36000.0;
constexpr double kFullPartial = 1800.0;
constexpr double kFullClosed = 1800.0;
constexpr double kFullTest = 12000.0;

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter("recipe: " + what);
}

bool ordered(double lo, double hi) { return std::isfinite(lo) && std::isfinite(hi) && lo < hi; }

// Assignment list with exact per-value counts, shuffled.
template <typename T>
std::vector<T> quota_list(const std::vector<std::pair<T, int>>& counts, Rng& rng) {
    std::vector<T> out;
    for (const auto& [value, n] : counts) out.insert(out.end(), static_cast<std::size_t>(n), value);
    shuffle_with(out, rng);
    return out;
}

// n entries cycling through `values`, shuffled: counts differ by at most one.
template <typename T>
std::vector<T> balanced_list(const std::vector<T>& values, int n, Rng& rng) {
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(values[static_cast<std::size_t>(i) % values.size()]);
    shuffle_with(out, rng);
    return out;
}

}  // namespace

std::string generation_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
        char* end = nullptr;
        const long long v = std::strtoll(sde, &end, 10);
        if (end != sde && *end == '\0') t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

long long round_half_away(double v) { return static_cast<long long>(std::llround(v)); }

std::vector<int> apportion(int total, const std::vector<double>& weights) {
    if (total < 0) throw InvalidParameter("apportion: total must be >= 0");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidParameter("apportion: weights must be >= 0");
        sum += w;
    }
    std::vector<int> out(weights.size(), 0);
    if (weights.empty() || total == 0) return out;
    if (!(sum > 0.0)) throw InvalidParameter("apportion: weights sum to zero");
    std::vector<std::pair<double, std::size_t>> rem;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = total * weights[i] / sum;
        out[i] = static_cast<int>(std::floor(exact));
        assigned += out[i];
        rem.emplace_back(exact - out[i], i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[rem[k % rem.size()].second];
    return out;
}

void DatasetRecipe::validate() const {
    static const std::set<std::string> names{"S-NVGaze", "S-OpenEDS", "S-General", "custom"};
    require(names.count(name) == 1, "unknown name '" + name + "'");
    require(scale > 0.0 && std::isfinite(scale), "scale must be > 0");
    require(composition.open >= 0 && composition.partial >= 0 && composition.closed >= 0,
            "composition counts must be >= 0");
    require(composition.total() == total_images, "composition counts must sum to total_images");
    require(test_images >= 0, "test_images must be >= 0");
    require(total_images + test_images >= 1, "the plan must contain at least one image");
    require(width >= 1 && height >= 1, "resolution must be positive");
    require(glasses_fraction >= 0.0 && glasses_fraction <= 1.0, "glasses_fraction must lie in [0, 1]");
    require(gaze_range_deg > 0.0 && gaze_range_deg < 90.0, "gaze_range_deg must lie in (0, 90)");
    require(ordered(pupil_min, pupil_max), "pupil radius range must be non-empty");
    require(pupil_min >= 1.0 && pupil_max <= 4.0, "pupil radius range must lie within [1, 4] mm");
    require(!asphericities.empty(), "asphericity set must be non-empty");
    for (double q : asphericities) require(q >= -1.0 && q <= 1.0, "asphericities must lie in [-1, 1]");
    require(partial_min >= 0.0 && partial_min < 1.0, "partial_closure_min must lie in [0, 1)");
    require(std::isfinite(closure_c0) && std::isfinite(closure_c1), "closure coefficients must be finite");
    require(train_heads >= 1 || total_images == 0, "train head pool must be non-empty");
    require(test_heads >= 1 || test_images == 0, "test head pool must be non-empty");
    require(train_heads >= 0 && test_heads >= 0, "head pools must be >= 0");
    require(ordered(pose.distance_min, pose.distance_max) && pose.distance_min > 0.0, "pose distance range must be non-empty");
    require(pose.offset_range >= 0.0, "pose offset_range must be >= 0");
    require(pose.ring_count >= 1 && pose.ring_radius > 0.0, "emitter ring must have >= 1 emitter and positive radius");
    require(ordered(pose.general_azimuth_min, pose.general_azimuth_max), "general azimuth range must be non-empty");
    require(ordered(pose.general_elevation_min, pose.general_elevation_max), "general elevation range must be non-empty");
    require(ordered(pose.general_distance_min, pose.general_distance_max) && pose.general_distance_min > 0.0,
            "general distance range must be non-empty");
    require(pose.general_jitter >= 0.0, "general jitter must be >= 0");
    require(pose.single_emitter_intensity >= 0.0 && pose.ring_emitter_intensity >= 0.0, "emitter intensity must be >= 0");
    require(pose.emitter_radius > 0.0, "emitter radius must be > 0");
    require(samples_per_pixel >= 1, "samples_per_pixel must be >= 1");
    require(max_bounces >= 1, "max_bounces must be >= 1");
    require(tile_size >= 1, "tile_size must be >= 1");
    require(exposure >= 0.0 && std::isfinite(exposure), "exposure must be >= 0 (0 = automatic)");
}

DatasetRecipe make_recipe(const std::string& name, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidParameter("recipe: scale must be > 0");
    DatasetRecipe r;
    r.name = name;
    r.scale = scale;
    if (name == "S-NVGaze" || name == "custom") {
        r.pose_sampler = PoseKind::SNVGaze;
        r.width = 640;
        r.height = 480;
    } else if (name == "S-OpenEDS") {
        r.pose_sampler = PoseKind::SOpenEDS;
        r.width = 400;
        r.height = 640;
    } else if (name == "S-General") {
        r.pose_sampler = PoseKind::SGeneral;
        r.width = 640;
        r.height = 480;
    } else {
        throw InvalidParameter("recipe: unknown name '" + name + "'");
    }
    r.composition = {static_cast<int>(round_half_away(kFullOpen * scale)),
                     static_cast<int>(round_half_away(kFullPartial * scale)),
                     static_cast<int>(round_half_away(kFullClosed * scale))};
    r.total_images = r.composition.total();
    r.test_images = static_cast<int>(round_half_away(kFullTest * scale));
    return r;
}

const char* closure_kind_name(ClosureKind k) {
    switch (k) {
        case ClosureKind::Open: return "open";
        case ClosureKind::Partial: return "partial";
        case ClosureKind::Closed: return "closed";
    }
    return "open";
}

std::string format_image_id(int index, int total) {
    int digits = 1;
    for (int v = std::max(total - 1, 0); v >= 10; v /= 10) ++digits;
    std::string s = std::to_string(index);
    const int width = std::max(6, digits);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return s;
}

std::vector<SampledImageSpec> plan_dataset(const DatasetRecipe& recipe) {
    recipe.validate();
    const int n_train = recipe.total_images;
    const int n_test = recipe.test_images;
    const int n_all = n_train + n_test;
    std::vector<SampledImageSpec> plan;
    plan.reserve(static_cast<std::size_t>(n_all));

    auto pool = [&](bool test, int first_index, int n, const Composition& comp, int head_first, int head_count,
                    std::uint32_t pool_id) {
        if (n == 0) return;
        Rng qrng(recipe.master_seed, StreamKey{pool_id, 0, 0, 0, kPurposeQuota});
        const auto closure = quota_list<ClosureKind>(
            {{ClosureKind::Open, comp.open}, {ClosureKind::Partial, comp.partial}, {ClosureKind::Closed, comp.closed}},
            qrng);
        const int n_glasses = static_cast<int>(round_half_away(recipe.glasses_fraction * n));
        const auto glasses = quota_list<bool>({{true, n_glasses}, {false, n - n_glasses}}, qrng);
        const auto q = balanced_list(recipe.asphericities, n, qrng);
        std::vector<int> head_ids;
        for (int h = 0; h < head_count; ++h) head_ids.push_back(head_first + h);
        const auto heads = balanced_list(head_ids, n, qrng);

        for (int k = 0; k < n; ++k) {
            SampledImageSpec s;
            s.index = first_index + k;
            s.id = format_image_id(s.index, n_all);
            s.test = test;
            s.closure_kind = closure[k];
            s.glasses = glasses[k];
            s.head_id = heads[k];
            s.eye.cornea_asphericity = q[k];

            Rng rng(recipe.master_seed, StreamKey{static_cast<std::uint64_t>(s.index), 0, 0, 0, kPurposeImage});
            const double g = recipe.gaze_range_deg;
            s.eye.gaze_azimuth_deg = rng.uniform(-g, g);
            s.eye.gaze_elevation_deg = rng.uniform(-g, g);
            s.eye.pupil_radius = rng.uniform(recipe.pupil_min, recipe.pupil_max);
            s.eye.iris_texture_id = static_cast<int>(rng.uniform_int(0, kIrisTextureCount - 1));
            s.eye.iris_rotation_deg = rng.uniform(0.0, 360.0);
            s.eye.sclera_rotation_deg = rng.uniform(0.0, 360.0);
            const double partial = rng.uniform(recipe.partial_min, 1.0);
            switch (s.closure_kind) {
                case ClosureKind::Open:
                    s.eye.eyelid_closure =
                        eyelid_closure_for_gaze(s.eye.gaze_elevation_deg, recipe.closure_c0, recipe.closure_c1);
                    break;
                case ClosureKind::Partial: s.eye.eyelid_closure = partial; break;
                case ClosureKind::Closed: s.eye.eyelid_closure = 1.0; break;
            }
            s.environment_index = static_cast<int>(rng.uniform_int(0, kEnvironmentCount - 1));
            s.env_rot_y = rng.uniform(0.0, 360.0);
            s.env_rot_x = rng.uniform(-60.0, 60.0);
            s.env_rot_z = rng.uniform(-60.0, 60.0);
            s.env_scale = sample_env_intensity_bin(rng);
            s.pose = sample_pose(recipe.pose_sampler, rng, recipe.pose);
            s.seed = rng.next_u64();
            plan.push_back(std::move(s));
        }
    };

    pool(false, 0, n_train, recipe.composition, 0, recipe.train_heads, 0);
    const auto test_counts = apportion(n_test, {static_cast<double>(recipe.composition.open),
                                                static_cast<double>(recipe.composition.partial),
                                                static_cast<double>(recipe.composition.closed)});
    const Composition test_comp = n_train > 0 ? Composition{test_counts[0], test_counts[1], test_counts[2]}
                                              : Composition{n_test, 0, 0};
    pool(true, n_train, n_test, test_comp, recipe.train_heads, recipe.test_heads, 1);
    return plan;
}

BuiltScene build_scene_for_spec(const DatasetRecipe& recipe, const SampledImageSpec& spec,
                                const std::shared_ptr<const TextureLibrary>& textures) {
    if (!textures) throw AssetError("<texture library>", "assets not loaded");
    BuiltScene b;
    b.eye = build_eye(spec.eye);
    const CameraPose pose = build_pose(spec.pose, b.eye.apex_distance(), recipe.width, recipe.height, recipe.pose);
    b.scene.camera = pose.camera;
    b.scene.emitters = pose.emitters;
    b.scene.environment = make_environment(*textures, spec.environment_index, spec.env_rot_y, spec.env_rot_x,
                                           spec.env_rot_z, spec.env_scale, textures);
    b.scene.glasses.present = spec.glasses;
    b.scene.head = make_head(spec.head_id);
    b.scene.pose = spec.pose;
    return b;
}

RenderConfig render_config_for_spec(const DatasetRecipe& recipe, const SampledImageSpec& spec,
                                    const std::shared_ptr<const TextureLibrary>& textures, int threads) {
    RenderConfig cfg;
    cfg.samples_per_pixel = recipe.samples_per_pixel;
    cfg.max_bounces = recipe.max_bounces;
    cfg.mode = recipe.mode;
    cfg.tile_size = recipe.tile_size;
    cfg.seed = spec.seed;
    cfg.image_index = static_cast<std::uint64_t>(spec.index);
    cfg.threads = threads;
    cfg.textures = textures;
    if (recipe.exposure > 0.0) cfg.exposure = recipe.exposure;
    return cfg;
}

double calibrate_recipe_exposure(const DatasetRecipe& recipe, const std::vector<SampledImageSpec>& plan,
                                 const std::shared_ptr<const TextureLibrary>& textures, int threads) {
    if (plan.empty()) throw InvalidParameter("cannot calibrate exposure on an empty plan");
    SampledImageSpec ref = plan.front();
    ref.glasses = false;
    const BuiltScene b = build_scene_for_spec(recipe, ref, textures);
    return calibrate_exposure(b.scene, b.eye, render_config_for_spec(recipe, ref, textures, threads));
}

std::size_t Manifest::failed_count() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.ok; }));
}

Manifest generate_dataset(const DatasetRecipe& recipe, const std::string& output_dir, const GenerateOptions& options) {
    if (options.threads < 1) throw InvalidParameter("threads must be >= 1");
    if (!options.textures) throw AssetError("<texture library>", "assets not loaded");
    std::vector<SampledImageSpec> plan = plan_dataset(recipe);
    if (!options.include_test) {
        plan.erase(std::remove_if(plan.begin(), plan.end(), [](const auto& s) { return s.test; }), plan.end());
    }

    const fs::path root(output_dir);
    for (const char* sub : {"images", "masks", "masks_noskin", "meta"}) fs::create_directories(root / sub);

    const double exposure =
        recipe.exposure > 0.0 ? recipe.exposure : calibrate_recipe_exposure(recipe, plan, options.textures, options.threads);

    struct Result {
        ManifestEntry entry;
        std::string jsonl;
    };
    std::vector<Result> results(plan.size());

    auto work = [&](std::size_t i) {
        const SampledImageSpec& s = plan[i];
        Result& res = results[i];
        res.entry.id = s.id;
        res.entry.test = s.test;
        try {
            const BuiltScene b = build_scene_for_spec(recipe, s, options.textures);
            RenderConfig cfg = render_config_for_spec(recipe, s, options.textures, 1);
            cfg.exposure = exposure;
            RenderOutput out = render(b.scene, b.eye, cfg);
            out.metadata.id = s.id;
            ManifestEntry& e = res.entry;
            e.image = "images/" + s.id + ".png";
            e.mask = "masks/" + s.id + ".png";
            e.mask_noskin = "masks_noskin/" + s.id + ".png";
            e.meta = "meta/" + s.id + ".json";
            write_png((root / e.image).string(), out.image);
            write_mask_png((root / e.mask).string(), out.mask_with_skin);
            write_mask_png((root / e.mask_noskin).string(), out.mask_without_skin);
            const Json meta = metadata_to_json(out.metadata);
            write_text_file((root / e.meta).string(), meta.dump(2) + "\n");
            res.jsonl = meta.dump();
            e.image_sha256 = sha256_file((root / e.image).string());
            e.mask_sha256 = sha256_file((root / e.mask).string());
            e.mask_noskin_sha256 = sha256_file((root / e.mask_noskin).string());
            e.meta_sha256 = sha256_file((root / e.meta).string());
        } catch (const std::exception& ex) {
            res.entry.ok = false;
            res.entry.error = ex.what();
        }
    };

    // Workers each render whole images single-threaded; results are collected by index.
    std::mutex progress_mutex;
    parallel_for(plan.size(), options.threads, [&](std::size_t i) {
        work(i);
        if (options.on_image) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            options.on_image(plan[i]);
        }
    });

    Manifest m;
    m.recipe = recipe;
    m.master_seed = recipe.master_seed;
    m.generated_at = generation_timestamp();
    m.exposure = exposure;
    std::string jsonl;
    for (auto& r : results) {
        if (r.entry.ok) jsonl += r.jsonl + "\n";
        m.entries.push_back(std::move(r.entry));
    }
    write_text_file((root / "meta.jsonl").string(), jsonl);
    write_text_file((root / "manifest.json").string(), manifest_to_json(m).dump(2) + "\n");
    return m;
}

std::vector<std::string> verify_manifest(const Manifest& manifest, const std::string& dataset_dir) {
    const fs::path root(dataset_dir);
    std::vector<std::string> bad;
    for (const auto& e : manifest.entries) {
        if (!e.ok) continue;
        const std::pair<const std::string*, const std::string*> files[] = {
            {&e.image, &e.image_sha256}, {&e.mask, &e.mask_sha256},
            {&e.mask_noskin, &e.mask_noskin_sha256}, {&e.meta, &e.meta_sha256}};
        for (const auto& [path, digest] : files) {
            const fs::path p = root / *path;
            if (!fs::exists(p) || sha256_file(p.string()) != *digest) {
                bad.push_back(e.id);
                break;
            }
        }
    }
    return bad;
}

SplitResult stratified_split(const std::vector<MetadataRecord>& records, double train_fraction, int bins_x, int bins_y,
                             std::uint64_t seed) {
    if (records.empty()) throw InvalidParameter("stratified_split: empty input");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InvalidParameter("train_fraction must lie in [0, 1]");
    if (bins_x < 1 || bins_y < 1) throw InvalidParameter("bin grid must be at least 1x1");
    std::map<int, std::vector<std::string>> bins;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (!r.pupil_center_2d) throw InvalidParameter("record " + r.id + " has no pupil_center_2d");
        if (r.width < 1 || r.height < 1) throw InvalidParameter("record " + r.id + " has no image size");
        if (!seen.insert(r.id).second) throw InvalidParameter("duplicate id " + r.id);
        const Vec2 c = *r.pupil_center_2d;
        // Centers outside the frame fall into the nearest edge bin.
        const int bx = std::clamp(static_cast<int>(std::floor(c.x / r.width * bins_x)), 0, bins_x - 1);
        const int by = std::clamp(static_cast<int>(std::floor(c.y / r.height * bins_y)), 0, bins_y - 1);
        bins[by * bins_x + bx].push_back(r.id);
    }
    SplitResult out;
    for (auto& [bin, ids] : bins) {
        std::sort(ids.begin(), ids.end());
        Rng rng(seed, StreamKey{static_cast<std::uint64_t>(bin), 0, 0, 0, kPurposeSplit});
        shuffle_with(ids, rng);
        const auto k = static_cast<std::size_t>(round_half_away(train_fraction * static_cast<double>(ids.size())));
        out.train.insert(out.train.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
        out.validation.insert(out.validation.end(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    return out;
}

}  // namespace eyesynth
