// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>

#include "eyesynth/errors.hpp"
#include "eyesynth/io.hpp"
#include "eyesynth/recipes.hpp"
#include "eyesynth/serialize.hpp"
#include "support.hpp"

using namespace eyesynth;
namespace fs = std::filesystem;

namespace {

struct Counts {
    int open = 0, partial = 0, closed = 0, glasses = 0;
    std::map<double, int> asphericity;
    std::map<int, int> heads;
};

Counts count_train(const std::vector<SampledImageSpec>& plan) {
    Counts c;
    for (const auto& s : plan) {
        if (s.test) continue;
        (s.closure_kind == ClosureKind::Open ? c.open : s.closure_kind == ClosureKind::Partial ? c.partial : c.closed)++;
        c.glasses += s.glasses;
        c.asphericity[s.eye.cornea_asphericity]++;
        c.heads[s.head_id]++;
    }
    return c;
}

MetadataRecord record_at(const std::string& id, double x, double y, int w = 640, int h = 480) {
    MetadataRecord r;
    r.id = id;
    r.width = w;
    r.height = h;
    r.pupil_center_2d = Vec2{x, y};
    return r;
}

DatasetRecipe tiny_recipe(int n) {
    DatasetRecipe r = make_recipe("S-NVGaze");
    r.total_images = n;
    r.composition = {n, 0, 0};
    r.test_images = 0;
    r.width = 40;
    r.height = 30;
    r.samples_per_pixel = 2;
    return r;
}

std::map<std::string, std::string> digest_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = sha256_file(e.path().string());
    return out;
}

}  // namespace

TEST_CASE("desk-scale recipes have the scaled counts") {
    for (const char* name : {"S-NVGaze", "S-OpenEDS", "S-General"}) {
        const DatasetRecipe r = make_recipe(name);
        CHECK(r.composition.open == 360);
        CHECK(r.composition.partial == 18);
        CHECK(r.composition.closed == 18);
        CHECK(r.total_images == 396);
        CHECK(r.test_images == 120);
        CHECK_NOTHROW(r.validate());
    }
    CHECK(make_recipe("S-OpenEDS").width == 400);
    CHECK(make_recipe("S-OpenEDS").height == 640);
    CHECK(make_recipe("S-NVGaze", 1.0).total_images == 39600);
    CHECK_THROWS_AS(make_recipe("S-Unknown"), InvalidParameter);
    CHECK_THROWS_AS(make_recipe("S-NVGaze", 0.0), InvalidParameter);
}

TEST_CASE("recipe validation names the violated field") {
    DatasetRecipe r = make_recipe("S-NVGaze");
    r.composition.open += 1;
    CHECK_THROWS_WITH_AS(r.validate(), doctest::Contains("composition"), InvalidParameter);
    r = make_recipe("S-NVGaze");
    r.pupil_max = 5.0;
    CHECK_THROWS_WITH_AS(r.validate(), doctest::Contains("pupil"), InvalidParameter);
    r = make_recipe("S-NVGaze");
    r.partial_min = 1.0;
    CHECK_THROWS_AS(r.validate(), InvalidParameter);
}

TEST_CASE("training quotas are exact for every seed") {
    for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
        DatasetRecipe r = make_recipe("S-NVGaze");
        r.master_seed = seed;
        const auto plan = plan_dataset(r);
        REQUIRE(plan.size() == 516);
        const Counts c = count_train(plan);
        CHECK(c.open == 360);
        CHECK(c.partial == 18);
        CHECK(c.closed == 18);
        CHECK(c.glasses == 198);
        REQUIRE(c.asphericity.size() == 3);
        for (const auto& [q, n] : c.asphericity) CHECK(n == 132);
        CHECK(c.heads.size() == 18);
        for (const auto& [h, n] : c.heads) CHECK(n == 22);
    }
}

TEST_CASE("plans are a pure function of the recipe") {
    const DatasetRecipe r = make_recipe("S-General");
    const auto a = plan_dataset(r), b = plan_dataset(r);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].seed == b[i].seed);
        CHECK(a[i].eye.gaze_azimuth_deg == b[i].eye.gaze_azimuth_deg);
        CHECK(a[i].pose.distance == b[i].pose.distance);
    }
    DatasetRecipe other = r;
    other.master_seed = 2;
    const auto c = plan_dataset(other);
    int differing = 0;
    for (std::size_t i = 0; i < a.size(); ++i) differing += a[i].seed != c[i].seed;
    CHECK(differing > 500);
}

TEST_CASE("every planned draw lies in its support") {
    for (const char* name : {"S-NVGaze", "S-OpenEDS", "S-General"}) {
        const DatasetRecipe r = make_recipe(name);
        for (const auto& s : plan_dataset(r)) {
            CHECK(std::abs(s.eye.gaze_azimuth_deg) <= 30.0);
            CHECK(std::abs(s.eye.gaze_elevation_deg) <= 30.0);
            CHECK(s.eye.pupil_radius >= 1.0);
            CHECK(s.eye.pupil_radius <= 4.0);
            CHECK(s.eye.iris_texture_id >= 0);
            CHECK(s.eye.iris_texture_id < kIrisTextureCount);
            CHECK(s.environment_index >= 0);
            CHECK(s.environment_index < kEnvironmentCount);
            CHECK(s.env_rot_y >= 0.0);
            CHECK(s.env_rot_y < 360.0);
            CHECK(std::abs(s.env_rot_x) <= 60.0);
            CHECK(std::abs(s.env_rot_z) <= 60.0);
            CHECK(s.env_scale >= 0.5);
            CHECK(s.env_scale <= 1.5);
            switch (s.closure_kind) {
                case ClosureKind::Open:
                    CHECK(s.eye.eyelid_closure ==
                          doctest::Approx(eyelid_closure_for_gaze(s.eye.gaze_elevation_deg, r.closure_c0, r.closure_c1)));
                    break;
                case ClosureKind::Partial:
                    CHECK(s.eye.eyelid_closure >= 0.8);
                    CHECK(s.eye.eyelid_closure < 1.0);
                    break;
                case ClosureKind::Closed: CHECK(s.eye.eyelid_closure == 1.0); break;
            }
            CHECK(s.pose.kind == r.pose_sampler);
            CHECK_NOTHROW(s.eye.validate());
        }
    }
}

TEST_CASE("train and test head pools are disjoint") {
    const auto plan = plan_dataset(make_recipe("S-NVGaze"));
    std::set<int> train, test;
    int n_test = 0;
    for (const auto& s : plan) {
        (s.test ? test : train).insert(s.head_id);
        n_test += s.test;
    }
    CHECK(n_test == 120);
    CHECK(train.size() == 18);
    CHECK(test.size() == 6);
    for (int h : test) CHECK(train.count(h) == 0);
    CHECK(plan.front().id == "000000");
    CHECK(plan.back().id == "000515");
}

TEST_CASE("three open images with half-glasses") {
    DatasetRecipe r = make_recipe("S-NVGaze");
    r.total_images = 3;
    r.composition = {3, 0, 0};
    r.test_images = 0;
    const auto plan = plan_dataset(r);
    REQUIRE(plan.size() == 3);
    const Counts c = count_train(plan);
    CHECK(c.open == 3);
    CHECK(c.glasses == 2);  // 1.5 rounds away from zero
    CHECK(c.asphericity.size() == 3);
}

TEST_CASE("largest-remainder apportionment") {
    CHECK(apportion(120, {360, 18, 18}) == std::vector<int>{109, 6, 5});
    CHECK(apportion(10, {1, 1, 1}) == std::vector<int>{4, 3, 3});
    CHECK(apportion(0, {1, 2}) == std::vector<int>{0, 0});
    for (int total : {1, 7, 99, 120}) {
        const auto a = apportion(total, {0.3, 0.5, 0.2});
        CHECK(a[0] + a[1] + a[2] == total);
    }
    CHECK(round_half_away(2.5) == 3);
    CHECK(round_half_away(-2.5) == -3);
    CHECK(round_half_away(0.8) == 1);
}

TEST_CASE("image ids are zero padded") {
    CHECK(format_image_id(5, 516) == "000005");
    CHECK(format_image_id(5, 10000000) == "0000005");
    CHECK(format_image_id(5, 10000001) == "00000005");
}

TEST_CASE("split: one bin of ten images") {
    std::vector<MetadataRecord> rs;
    for (int i = 0; i < 10; ++i) rs.push_back(record_at("img" + std::to_string(i), 10.0 + i, 10.0));
    const SplitResult s = stratified_split(rs, 0.8, 8, 8, 3);
    CHECK(s.train.size() == 8);
    CHECK(s.validation.size() == 2);
}

TEST_CASE("split: singleton bins go to training") {
    std::vector<MetadataRecord> rs;
    for (int i = 0; i < 8; ++i) rs.push_back(record_at("s" + std::to_string(i), 40.0 + 80.0 * i, 30.0 + 60.0 * i));
    const SplitResult s = stratified_split(rs);
    CHECK(s.train.size() == 8);
    CHECK(s.validation.empty());
}

TEST_CASE("split: uniform centers give the requested fraction per bin") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> ux(0.0, 640.0), uy(0.0, 480.0);
    std::vector<MetadataRecord> rs;
    for (int i = 0; i < 6400; ++i) rs.push_back(record_at(format_image_id(i, 6400), ux(gen), uy(gen)));
    const SplitResult s = stratified_split(rs, 0.8, 8, 8, 4);
    CHECK(std::abs(static_cast<double>(s.train.size()) / 6400.0 - 0.8) <= 0.005);

    // Per-bin exactness, disjointness and coverage.
    std::map<std::string, int> bin_of;
    std::map<int, int> bin_n, bin_train;
    for (const auto& r : rs) {
        const int bx = std::min(7, static_cast<int>(r.pupil_center_2d->x / 80.0));
        const int by = std::min(7, static_cast<int>(r.pupil_center_2d->y / 60.0));
        bin_of[r.id] = by * 8 + bx;
        bin_n[by * 8 + bx]++;
    }
    std::set<std::string> train(s.train.begin(), s.train.end());
    for (const auto& id : s.train) bin_train[bin_of.at(id)]++;
    for (const auto& id : s.validation) CHECK(train.count(id) == 0);
    CHECK(s.train.size() + s.validation.size() == rs.size());
    for (const auto& [b, n] : bin_n) CHECK(bin_train[b] == round_half_away(0.8 * n));

    // Input order does not matter.
    std::vector<MetadataRecord> reversed(rs.rbegin(), rs.rend());
    const SplitResult t = stratified_split(reversed, 0.8, 8, 8, 4);
    CHECK(t.train == s.train);
}

TEST_CASE("split rejects unusable input") {
    CHECK_THROWS_AS(stratified_split({}), InvalidParameter);
    MetadataRecord r = record_at("a", 1, 1);
    r.pupil_center_2d.reset();
    CHECK_THROWS_AS(stratified_split({r}), InvalidParameter);
    CHECK_THROWS_AS(stratified_split({record_at("a", 1, 1), record_at("a", 2, 2)}), InvalidParameter);
    CHECK_THROWS_AS(stratified_split({record_at("a", 1, 1)}, 1.5), InvalidParameter);
}

TEST_CASE("generating a small dataset writes every file and regenerates identically") {
    ::setenv("SOURCE_DATE_EPOCH", "0", 1);
    oracle::TempDir dir("gen");
    const DatasetRecipe r = tiny_recipe(4);
    GenerateOptions opt;
    opt.textures = procedural_library();
    const Manifest m = generate_dataset(r, dir.str("a"), opt);
    CHECK(m.entries.size() == 4);
    CHECK(m.failed_count() == 0);
    CHECK(m.generated_at == "1970-01-01T00:00:00Z");
    for (const char* sub : {"images", "masks", "masks_noskin", "meta"}) {
        int files = 0;
        for (const auto& e : fs::directory_iterator(dir.path() / "a" / sub)) files += e.is_regular_file();
        CHECK(files == 4);
    }
    CHECK(fs::exists(dir.path() / "a" / "manifest.json"));
    CHECK(fs::exists(dir.path() / "a" / "meta.jsonl"));
    CHECK(verify_manifest(m, dir.str("a")).empty());

    const MetadataRecord meta = read_metadata_file((dir.path() / "a" / m.entries[0].meta).string());
    CHECK(meta.width == 40);
    CHECK(meta.seed == plan_dataset(r)[0].seed);

    opt.threads = 2;
    generate_dataset(r, dir.str("b"), opt);
    CHECK(digest_tree(dir.path() / "a") == digest_tree(dir.path() / "b"));

    // A corrupted file is reported.
    auto bytes = read_file_bytes((dir.path() / "a" / m.entries[1].image).string());
    bytes[bytes.size() / 2] ^= 0x01;
    write_file_bytes((dir.path() / "a" / m.entries[1].image).string(), bytes);
    CHECK(verify_manifest(m, dir.str("a")) == std::vector<std::string>{m.entries[1].id});
}

TEST_CASE("a full-resolution S-OpenEDS frame renders in portrait") {
    DatasetRecipe r = make_recipe("S-OpenEDS");
    r.samples_per_pixel = 1;
    const auto plan = plan_dataset(r);
    const auto textures = procedural_library();
    const BuiltScene b = build_scene_for_spec(r, plan[0], textures);
    CHECK(b.scene.emitters.emitters.size() == 16);
    RenderConfig cfg = render_config_for_spec(r, plan[0], textures, 1);
    cfg.exposure = 1.0;
    const RenderOutput out = render(b.scene, b.eye, cfg);
    CHECK(out.image.width == 400);
    CHECK(out.image.height == 640);
    CHECK(out.mask_with_skin.width() == 400);
}
