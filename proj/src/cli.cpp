// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <thread>

#include "eyesynth/augment.hpp"
#include "eyesynth/errors.hpp"
#include "eyesynth/evaluate.hpp"
#include "eyesynth/io.hpp"
#include "eyesynth/serialize.hpp"

namespace eyesynth {

namespace fs = std::filesystem;

namespace {

int default_threads() {
    if (const char* env = std::getenv("EYESYNTH_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw InvalidParameter(std::string("EYESYNTH_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<int>(v);
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Json read_json_file(const std::string& path) {
    if (!fs::exists(path)) throw AssetError(path, "file not found");
    return parse_json(read_text_file(path), path);
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

AugmentConfig augment_config_from_json(const Json& j) {
    AugmentConfig c;
    read_opt(j, "blur_kernel_width", c.blur_kernel_width);
    read_opt(j, "blur_sigma_min", c.blur_sigma_min);
    read_opt(j, "blur_sigma_max", c.blur_sigma_max);
    read_opt(j, "line_box_x_min", c.line_box_x_min);
    read_opt(j, "line_box_x_max", c.line_box_x_max);
    read_opt(j, "line_box_y_min", c.line_box_y_min);
    read_opt(j, "line_box_y_max", c.line_box_y_max);
    read_opt(j, "line_count_min", c.line_count_min);
    read_opt(j, "line_count_max", c.line_count_max);
    read_opt(j, "line_length_min", c.line_length_min);
    read_opt(j, "line_length_max", c.line_length_max);
    read_opt(j, "line_intensity", c.line_intensity);
    read_opt(j, "gammas", c.gammas);
    read_opt(j, "offset_max", c.offset_max);
    read_opt(j, "noise_sigma_min", c.noise_sigma_min);
    read_opt(j, "noise_sigma_max", c.noise_sigma_max);
    read_opt(j, "factor_min", c.factor_min);
    read_opt(j, "factor_max", c.factor_max);
    c.validate();
    return c;
}

void write_render_outputs(const fs::path& dir, const RenderOutput& r) {
    fs::create_directories(dir);
    write_png((dir / "image.png").string(), r.image);
    write_mask_png((dir / "mask.png").string(), r.mask_with_skin);
    write_mask_png((dir / "mask_noskin.png").string(), r.mask_without_skin);
    write_text_file((dir / "meta.json").string(), metadata_to_json(r.metadata).dump(2) + "\n");
}

// Exposure for a one-off render: calibrated on the same scene without eyeglasses.
double single_exposure(const BuiltScene& b, const RenderConfig& cfg) {
    Scene ref = b.scene;
    ref.glasses.present = false;
    return calibrate_exposure(ref, b.eye, cfg);
}

std::vector<MetadataRecord> load_dataset_metadata(const fs::path& root) {
    std::vector<MetadataRecord> records;
    if (fs::exists(root / "manifest.json")) {
        const Manifest m = read_manifest_file((root / "manifest.json").string());
        for (const auto& e : m.entries)
            if (e.ok && !e.test) records.push_back(read_metadata_file((root / e.meta).string()));
        return records;
    }
    if (!fs::is_directory(root / "meta")) throw AssetError((root / "meta").string(), "metadata directory not found");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / "meta"))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) records.push_back(read_metadata_file(f.string()));
    return records;
}

void print_manifest_summary(std::ostream& out, const Manifest& m) {
    std::size_t train = 0, test = 0;
    for (const auto& e : m.entries) (e.test ? test : train) += e.ok ? 1 : 0;
    out << "recipe: " << m.recipe.name << " (" << pose_kind_name(m.recipe.pose_sampler) << ", " << m.recipe.width << "x"
        << m.recipe.height << ")\n"
        << "master seed: " << m.master_seed << "\n"
        << "generated at: " << m.generated_at << "\n"
        << "exposure: " << m.exposure << "\n"
        << "images: " << m.entries.size() << " (train " << train << ", test " << test << ", failed " << m.failed_count()
        << ")\n";
}

}  // namespace

std::shared_ptr<const TextureLibrary> load_textures(const std::string& manifest_path) {
    if (manifest_path.empty()) return procedural_library();
    const char* root = std::getenv("EYESYNTH_ASSET_ROOT");
    return load_asset_manifest(manifest_path, root ? root : "");
}

SceneSpec scene_spec_from_json(const Json& j) {
    check_schema_version(j, "scene");
    SceneSpec s;
    Json rj = {{"schema_version", kSchemaVersion},
               {"name", "custom"},
               {"total_images", 1},
               {"composition", {{"open", 1}, {"partial", 0}, {"closed", 0}}},
               {"test_images", 0}};
    if (auto it = j.find("resolution"); it != j.end()) rj["resolution"] = *it;
    if (auto it = j.find("render"); it != j.end()) rj["render"] = *it;
    if (auto it = j.find("pose_config"); it != j.end()) rj["pose"] = *it;
    try {
        s.image.eye = eye_params_from_json(j.value("eye", Json::object()));
        s.image.pose = pose_params_from_json(j.value("camera", Json::object()));
        rj["pose_sampler"] = pose_kind_name(s.image.pose.kind);
        s.recipe = recipe_from_json(rj);
        s.image.id = j.value("id", std::string("render"));
        s.image.head_id = j.value("head_id", 0);
        s.image.glasses = j.value("glasses", false);
        s.image.seed = j.value("seed", std::uint64_t{0});
        if (auto it = j.find("environment"); it != j.end()) {
            s.image.environment_index = it->value("index", 0);
            if (auto r = it->find("rotation_deg"); r != it->end()) {
                if (!r->is_array() || r->size() != 3) throw FormatError("scene: environment rotation_deg needs 3 angles");
                s.image.env_rot_y = (*r)[0].get<double>();
                s.image.env_rot_x = (*r)[1].get<double>();
                s.image.env_rot_z = (*r)[2].get<double>();
            }
            s.image.env_scale = it->value("scale", 1.0);
        }
        s.assets = j.value("assets", std::string());
    } catch (const Json::exception& e) {
        throw FormatError(std::string("scene: ") + e.what());
    }
    s.image.eye.validate();
    return s;
}

Image8 contact_sheet(const std::vector<std::pair<Image8, SegMask>>& cells, int columns, int padding) {
    if (cells.empty()) throw InvalidParameter("contact sheet needs at least one cell");
    if (columns < 1 || padding < 0) throw InvalidParameter("contact sheet needs >= 1 column and padding >= 0");
    int cw = 0, ch = 0;
    for (const auto& [img, mask] : cells) {
        cw = std::max(cw, img.width + padding + mask.width());
        ch = std::max(ch, std::max(img.height, mask.height()));
    }
    const int cols = std::min<int>(columns, static_cast<int>(cells.size()));
    const int rows = (static_cast<int>(cells.size()) + cols - 1) / cols;
    Image8 sheet(cols * cw + (cols + 1) * padding, rows * ch + (rows + 1) * padding, 3, 32);
    auto blit = [&](const Image8& src, int ox, int oy) {
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x)
                for (int c = 0; c < 3; ++c) sheet.at(ox + x, oy + y, c) = src.at(x, y, src.channels == 1 ? 0 : c);
    };
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const int ox = padding + static_cast<int>(i % static_cast<std::size_t>(cols)) * (cw + padding);
        const int oy = padding + static_cast<int>(i / static_cast<std::size_t>(cols)) * (ch + padding);
        blit(cells[i].first, ox, oy);
        blit(mask_to_rgb(cells[i].second), ox + cells[i].first.width + padding, oy);
    }
    return sheet;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic near-eye image generator", "eyesynth"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::uint64_t seed = 0;
    int threads = 0;
    std::string config;
    CLI::Option* seed_opt = app.add_option("--seed", seed, "Master seed (render, dataset, preview) or stream seed");
    CLI::Option* threads_opt = app.add_option("--threads", threads, "Worker threads (default: EYESYNTH_THREADS or all cores)")
                                   ->check(CLI::PositiveNumber);
    app.add_option("--config", config, "JSON configuration for the subcommand");

    // render
    auto* render_cmd = app.add_subcommand("render", "Render one image with masks and metadata");
    std::string render_out, render_recipe = "S-NVGaze", render_assets, render_mode;
    int render_index = 0, render_spp = 0;
    double render_exposure = 0.0;
    render_cmd->add_option("--out", render_out, "Output directory")->required();
    render_cmd->add_option("--recipe", render_recipe, "Preset recipe when --config is not given");
    render_cmd->add_option("--index", render_index, "Planned image index within the recipe")->check(CLI::NonNegativeNumber);
    render_cmd->add_option("--spp", render_spp, "Samples per pixel")->check(CLI::PositiveNumber);
    render_cmd->add_option("--exposure", render_exposure, "Fixed exposure (default: calibrated)")->check(CLI::PositiveNumber);
    render_cmd->add_option("--mode", render_mode, "ir or rgb")->check(CLI::IsMember({"ir", "rgb"}));
    render_cmd->add_option("--assets", render_assets, "Asset manifest (JSON)");

    // dataset
    auto* dataset_cmd = app.add_subcommand("dataset", "Generate a dataset from a recipe");
    std::string ds_out, ds_recipe = "S-NVGaze", ds_assets;
    double ds_scale = 0.01;
    int ds_spp = 0;
    bool ds_train_only = false;
    dataset_cmd->add_option("--out", ds_out, "Output directory")->required();
    dataset_cmd->add_option("--recipe", ds_recipe, "Preset recipe when --config is not given");
    dataset_cmd->add_option("--scale", ds_scale, "Fraction of the full-size counts for a preset")->check(CLI::PositiveNumber);
    dataset_cmd->add_option("--spp", ds_spp, "Override samples per pixel")->check(CLI::PositiveNumber);
    dataset_cmd->add_flag("--train-only", ds_train_only, "Skip the held-out test pool");
    dataset_cmd->add_option("--assets", ds_assets, "Asset manifest (JSON)");

    // augment
    auto* augment_cmd = app.add_subcommand("augment", "Write an augmented copy of a dataset");
    std::string aug_in, aug_out;
    augment_cmd->add_option("--in", aug_in, "Input dataset directory")->required();
    augment_cmd->add_option("--out", aug_out, "Output dataset directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Compare predicted masks against ground truth");
    std::string eval_pred, eval_gt, eval_report;
    bool eval_count_one = false;
    eval_cmd->add_option("--pred", eval_pred, "Predicted masks (directory or dataset root)")->required();
    eval_cmd->add_option("--gt", eval_gt, "Ground-truth masks (directory or dataset root)")->required();
    eval_cmd->add_option("--report", eval_report, "Write the report as JSON");
    eval_cmd->add_flag("--count-undefined-as-one", eval_count_one, "Score classes absent from both masks as 1");

    // split
    auto* split_cmd = app.add_subcommand("split", "Stratified train/validation split on pupil-center bins");
    std::string split_dataset, split_out;
    double split_fraction = 0.8;
    int split_bx = 8, split_by = 8;
    split_cmd->add_option("--dataset", split_dataset, "Dataset directory")->required();
    split_cmd->add_option("--out", split_out, "Write the split as JSON");
    split_cmd->add_option("--train-fraction", split_fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));
    split_cmd->add_option("--bins-x", split_bx, "Horizontal bins")->check(CLI::PositiveNumber);
    split_cmd->add_option("--bins-y", split_by, "Vertical bins")->check(CLI::PositiveNumber);

    // inspect
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a dataset, manifest, metadata or recipe file");
    std::string inspect_path;
    bool inspect_verify = false;
    inspect_cmd->add_option("path", inspect_path, "Dataset directory or JSON file")->required();
    inspect_cmd->add_flag("--verify", inspect_verify, "Recompute manifest digests");

    // preview
    auto* preview_cmd = app.add_subcommand("preview", "Contact sheet of sampled images and masks");
    std::string pv_out, pv_recipe = "S-NVGaze", pv_assets;
    int pv_count = 8, pv_width = 160, pv_spp = 16, pv_columns = 2;
    preview_cmd->add_option("--out", pv_out, "Output PNG")->required();
    preview_cmd->add_option("--recipe", pv_recipe, "Preset recipe when --config is not given");
    preview_cmd->add_option("--count", pv_count, "Number of sampled images")->check(CLI::PositiveNumber);
    preview_cmd->add_option("--thumb-width", pv_width, "Thumbnail width in pixels")->check(CLI::PositiveNumber);
    preview_cmd->add_option("--spp", pv_spp, "Samples per pixel")->check(CLI::PositiveNumber);
    preview_cmd->add_option("--columns", pv_columns, "Image/mask pairs per row")->check(CLI::PositiveNumber);
    preview_cmd->add_option("--assets", pv_assets, "Asset manifest (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        out << sub->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    try {
        if (threads_opt->count() == 0) threads = default_threads();
        const bool have_seed = seed_opt->count() > 0;

        auto recipe_for = [&](const std::string& preset, double scale) {
            DatasetRecipe r = config.empty() ? make_recipe(preset, scale) : recipe_from_json(read_json_file(config));
            if (have_seed) r.master_seed = seed;
            r.validate();
            return r;
        };

        if (render_cmd->parsed()) {
            SceneSpec spec;
            if (!config.empty() && read_json_file(config).contains("eye")) {
                spec = scene_spec_from_json(read_json_file(config));
                if (have_seed) spec.image.seed = seed;
            } else {
                spec.recipe = recipe_for(render_recipe, 0.01);
                const auto plan = plan_dataset(spec.recipe);
                if (render_index >= static_cast<int>(plan.size())) {
                    throw InvalidParameter("--index " + std::to_string(render_index) + " outside the plan of " +
                                           std::to_string(plan.size()) + " images");
                }
                spec.image = plan[static_cast<std::size_t>(render_index)];
            }
            if (render_spp > 0) spec.recipe.samples_per_pixel = render_spp;
            if (!render_mode.empty()) spec.recipe.mode = render_mode == "rgb" ? ChannelMode::RGB : ChannelMode::IR;
            const auto textures = load_textures(render_assets.empty() ? spec.assets : render_assets);
            const BuiltScene b = build_scene_for_spec(spec.recipe, spec.image, textures);
            RenderConfig cfg = render_config_for_spec(spec.recipe, spec.image, textures, threads);
            if (render_exposure > 0.0) cfg.exposure = render_exposure;
            else if (spec.recipe.exposure <= 0.0) cfg.exposure = single_exposure(b, cfg);
            RenderOutput r = render(b.scene, b.eye, cfg);
            r.metadata.id = spec.image.id;
            write_render_outputs(render_out, r);
            out << "rendered " << r.image.width << "x" << r.image.height << " at " << cfg.samples_per_pixel
                << " spp, exposure " << cfg.exposure << " -> " << render_out << "\n";
            return 0;
        }

        if (dataset_cmd->parsed()) {
            DatasetRecipe r = recipe_for(ds_recipe, ds_scale);
            if (ds_spp > 0) r.samples_per_pixel = ds_spp;
            GenerateOptions opt;
            opt.threads = threads;
            opt.textures = load_textures(ds_assets);
            opt.include_test = !ds_train_only;
            const Manifest m = generate_dataset(r, ds_out, opt);
            print_manifest_summary(out, m);
            if (m.failed_count() > 0) {
                for (const auto& e : m.entries)
                    if (!e.ok) err << "failed " << e.id << ": " << e.error << "\n";
                return 2;
            }
            return 0;
        }

        if (augment_cmd->parsed()) {
            AugmentDatasetOptions opt;
            opt.seed = seed;
            opt.threads = threads;
            if (!config.empty()) opt.config = augment_config_from_json(read_json_file(config));
            const AugmentSummary s = augment_dataset(aug_in, aug_out, opt);
            out << "augmented " << s.images << " images\n";
            for (int i = 0; i < kAugmentSchemeCount; ++i)
                out << "  " << scheme_name(static_cast<AugmentScheme>(i)) << ": " << s.per_scheme[static_cast<std::size_t>(i)] << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            const auto policy = eval_count_one ? UndefinedClassPolicy::CountAsOne : UndefinedClassPolicy::Exclude;
            const DirectoryEvaluation ev = evaluate_directories(eval_pred, eval_gt, policy, threads);
            const IoUReport& rep = ev.report;
            out << "images: " << ev.ids.size() << "\n";
            out << "mIoU: " << format_percent(rep.miou.mean) << " +/- " << format_percent(rep.miou.std) << "\n";
            for (int c = 0; c < kClassCount; ++c) {
                const Stat& s = rep.per_class[static_cast<std::size_t>(c)];
                out << "  " << class_name(static_cast<SemanticClass>(c)) << ": ";
                if (s.count == 0) out << "undefined\n";
                else out << format_percent(s.mean) << " +/- " << format_percent(s.std) << "\n";
            }
            if (!eval_report.empty()) {
                Json j = rep.to_json();
                j["schema_version"] = kSchemaVersion;
                j["ids"] = ev.ids;
                j["undefined_class_policy"] = eval_count_one ? "count_as_one" : "exclude";
                write_text_file(eval_report, j.dump(2) + "\n");
            }
            return 0;
        }

        if (split_cmd->parsed()) {
            const auto records = load_dataset_metadata(split_dataset);
            const SplitResult s = stratified_split(records, split_fraction, split_bx, split_by, seed);
            out << "train: " << s.train.size() << "\nvalidation: " << s.validation.size() << "\n";
            if (!split_out.empty()) {
                const Json j = {{"schema_version", kSchemaVersion}, {"seed", seed}, {"train_fraction", split_fraction},
                                {"bins", {split_bx, split_by}},        {"train", s.train}, {"validation", s.validation}};
                write_text_file(split_out, j.dump(2) + "\n");
            }
            return 0;
        }

        if (inspect_cmd->parsed()) {
            const fs::path p(inspect_path);
            if (fs::is_directory(p)) {
                const Manifest m = read_manifest_file((p / "manifest.json").string());
                print_manifest_summary(out, m);
                if (inspect_verify) {
                    const auto bad = verify_manifest(m, p.string());
                    for (const auto& id : bad) err << "digest mismatch: " << id << "\n";
                    out << "verified: " << (bad.empty() ? "ok" : std::to_string(bad.size()) + " mismatched") << "\n";
                    return bad.empty() ? 0 : 1;
                }
                return 0;
            }
            const Json j = read_json_file(p.string());
            if (j.contains("entries")) {
                const Manifest m = manifest_from_json(j);
                print_manifest_summary(out, m);
                if (inspect_verify) {
                    const auto bad = verify_manifest(m, p.parent_path().string());
                    for (const auto& id : bad) err << "digest mismatch: " << id << "\n";
                    out << "verified: " << (bad.empty() ? "ok" : std::to_string(bad.size()) + " mismatched") << "\n";
                    return bad.empty() ? 0 : 1;
                }
            } else if (j.contains("pupil_center_3d")) {
                out << metadata_to_json(metadata_from_json(j)).dump(2) << "\n";
            } else if (j.contains("eye")) {
                const SceneSpec s = scene_spec_from_json(j);
                out << "scene " << s.image.id << ": " << s.recipe.width << "x" << s.recipe.height << ", "
                    << pose_kind_name(s.image.pose.kind) << "\n"
                    << eye_params_to_json(s.image.eye).dump(2) << "\n";
            } else {
                const DatasetRecipe r = recipe_from_json(j);
                out << recipe_to_json(r).dump(2) << "\n";
                out << "planned images: " << r.total_images + r.test_images << " (train " << r.total_images << ", test "
                    << r.test_images << ")\n";
            }
            return 0;
        }

        if (preview_cmd->parsed()) {
            DatasetRecipe r = recipe_for(pv_recipe, 0.01);
            const int th = std::max(1, static_cast<int>(std::lround(static_cast<double>(pv_width) * r.height / r.width)));
            r.width = pv_width;
            r.height = th;
            r.samples_per_pixel = pv_spp;
            const auto plan = plan_dataset(r);
            const auto textures = load_textures(pv_assets);
            const int n = std::min<int>(pv_count, static_cast<int>(plan.size()));
            std::vector<SampledImageSpec> picks;
            for (int k = 0; k < n; ++k) picks.push_back(plan[static_cast<std::size_t>(k) * plan.size() / static_cast<std::size_t>(n)]);
            const double exposure = r.exposure > 0.0 ? r.exposure : calibrate_recipe_exposure(r, picks, textures, threads);
            std::vector<std::pair<Image8, SegMask>> cells;
            for (const auto& s : picks) {
                const BuiltScene b = build_scene_for_spec(r, s, textures);
                RenderConfig cfg = render_config_for_spec(r, s, textures, threads);
                cfg.exposure = exposure;
                RenderOutput o = render(b.scene, b.eye, cfg);
                cells.emplace_back(std::move(o.image), std::move(o.mask_with_skin));
            }
            write_png(pv_out, contact_sheet(cells, pv_columns));
            out << "preview of " << n << " images -> " << pv_out << "\n";
            return 0;
        }
    } catch (const InvalidParameter& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const AssetError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace eyesynth
