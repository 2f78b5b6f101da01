// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "eyesynth/augment.hpp"
#include "eyesynth/errors.hpp"
#include "eyesynth/io.hpp"
#include "eyesynth/recipes.hpp"
#include "eyesynth/serialize.hpp"
#include "support.hpp"

using namespace eyesynth;
namespace fs = std::filesystem;

namespace {

Image8 random_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Image8 img(w, h, 1);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(gen() & 0xFF);
    return img;
}

SegMask random_mask(int w, int h, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    SegMask m(w, h);
    for (auto& v : m.labels.data) v = static_cast<std::uint8_t>(gen() % 4);
    return m;
}

// Direct 2-D convolution with the normalized Gaussian and edge clamping.
double blur_reference(const Image8& img, int x, int y, int width, double sigma) {
    const int r = width / 2;
    double norm = 0.0, acc = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            const int sx = std::clamp(x + dx, 0, img.width - 1), sy = std::clamp(y + dy, 0, img.height - 1);
            acc += w * img.at(sx, sy);
            norm += w;
        }
    }
    return acc / norm;
}

}  // namespace

TEST_CASE("gamma maps mid-gray through the power law and keeps the end points") {
    Image8 img(3, 1, 1);
    img.data = {0, 128, 255};
    const Image8 out = apply_gamma(img, 0.6);
    CHECK(out.data[0] == 0);
    CHECK(out.data[1] == 169);
    CHECK(out.data[2] == 255);
    for (double g : {0.6, 0.8, 1.2, 1.4}) {
        Image8 ramp(256, 1, 1);
        for (int i = 0; i < 256; ++i) ramp.data[i] = static_cast<std::uint8_t>(i);
        const Image8 r = apply_gamma(ramp, g);
        for (int i = 0; i < 256; ++i) CHECK(r.data[i] == std::lround(255.0 * std::pow(i / 255.0, g)));
    }
}

TEST_CASE("intensity offset clamps to the 8-bit range") {
    Image8 img(4, 1, 1);
    img.data = {0, 10, 240, 255};
    CHECK(apply_offset(img, 25).data == std::vector<std::uint8_t>{25, 35, 255, 255});
    CHECK(apply_offset(img, -25).data == std::vector<std::uint8_t>{0, 0, 215, 230});
    CHECK(apply_offset(img, 0) == img);
}

TEST_CASE("flip is an involution on images and masks") {
    const Image8 img = random_image(17, 9, 1);
    const SegMask m = random_mask(17, 9, 2);
    CHECK(flip_horizontal(flip_horizontal(img)) == img);
    CHECK(flip_horizontal(flip_horizontal(m)) == m);
    const Image8 f = flip_horizontal(img);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 17; ++x) CHECK(f.at(x, y) == img.at(16 - x, y));
}

TEST_CASE("gaussian kernel is normalized and symmetric") {
    const auto k = gaussian_kernel(7, 3.0);
    REQUIRE(k.size() == 7);
    double sum = 0.0;
    for (double v : k) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    for (int i = 0; i < 3; ++i) CHECK(k[i] == doctest::Approx(k[6 - i]));
    CHECK(k[2] / k[3] == doctest::Approx(std::exp(-1.0 / 18.0)));
    CHECK_THROWS_AS(gaussian_kernel(6, 2.0), InvalidParameter);
    CHECK_THROWS_AS(gaussian_kernel(7, 0.0), InvalidParameter);
}

TEST_CASE("blur leaves constant images unchanged and matches direct convolution") {
    const Image8 flat(20, 12, 1, 77);
    CHECK(gaussian_blur(flat, 7, 4.5) == flat);
    const Image8 img = random_image(20, 12, 3);
    for (double sigma : {2.0, 7.0}) {
        const Image8 out = gaussian_blur(img, 7, sigma);
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 20; ++x) CHECK(std::abs(out.at(x, y) - blur_reference(img, x, y, 7, sigma)) <= 0.5 + 1e-9);
    }
}

TEST_CASE("down-up noise: block means without noise, deterministic with it") {
    Image8 img(5, 4, 1, 0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) img.at(x, y) = static_cast<std::uint8_t>((x % 2) * 100);
    const Image8 out = down_up_noise(img, 2, 0.0, 1);
    CHECK(out.width == 5);
    CHECK(out.height == 4);
    CHECK(out.at(0, 0) == 50);
    CHECK(out.at(3, 3) == 50);
    CHECK(out.at(4, 0) == 0);  // partial edge block holds a single column
    const Image8 noisy = random_image(32, 32, 4);
    CHECK(down_up_noise(noisy, 3, 8.0, 9) == down_up_noise(noisy, 3, 8.0, 9));
    CHECK_FALSE(down_up_noise(noisy, 3, 8.0, 9) == down_up_noise(noisy, 3, 8.0, 10));
    const Image8 up = down_up_noise(noisy, 4, 8.0, 9);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) CHECK(up.at(x, y) == up.at(x - x % 4, y - y % 4));
}

TEST_CASE("lines only write the line intensity") {
    const Image8 img(50, 40, 1, 10);
    const Image8 out = draw_lines(img, {{-10, 5, 60, 5}, {3, 0, 3, 39}}, 255);
    std::size_t lit = 0;
    for (auto v : out.data) {
        CHECK((v == 10 || v == 255));
        lit += v == 255;
    }
    CHECK(lit == 50 + 40 - 1);
}

TEST_CASE("sampled parameters stay inside their ranges") {
    Rng rng(6, {});
    const AugmentConfig cfg;
    for (int i = 0; i < 500; ++i) {
        const AugmentParams b = sample_params(AugmentScheme::GaussianBlur, 400, 640, rng, cfg);
        CHECK(b.blur_sigma >= 2.0);
        CHECK(b.blur_sigma <= 7.0);
        const AugmentParams l = sample_params(AugmentScheme::ThinLines, 200, 320, rng, cfg);
        CHECK(l.line_center_x >= 60.0);
        CHECK(l.line_center_x <= 140.0);
        CHECK(l.line_center_y >= 96.0);
        CHECK(l.line_center_y <= 224.0);
        CHECK(l.lines.size() >= 1);
        CHECK(l.lines.size() <= 3);
        const AugmentParams g = sample_params(AugmentScheme::Gamma, 400, 640, rng, cfg);
        CHECK(std::find(cfg.gammas.begin(), cfg.gammas.end(), g.gamma) != cfg.gammas.end());
        const AugmentParams o = sample_params(AugmentScheme::IntensityOffset, 400, 640, rng, cfg);
        CHECK(std::abs(o.offset) <= 25);
        const AugmentParams d = sample_params(AugmentScheme::DownUpNoise, 400, 640, rng, cfg);
        CHECK(d.factor >= 2);
        CHECK(d.factor <= 5);
        CHECK(d.noise_sigma >= 2.0);
        CHECK(d.noise_sigma <= 16.0);
    }
}

TEST_CASE("only flip changes the mask") {
    const Image8 img = random_image(40, 64, 7);
    const SegMask m = random_mask(40, 64, 8);
    Rng rng(9, {});
    for (int s = 0; s < kAugmentSchemeCount; ++s) {
        const auto scheme = static_cast<AugmentScheme>(s);
        const Augmented a = apply(scheme, img, m, rng);
        CHECK(a.params.scheme == scheme);
        if (scheme == AugmentScheme::Flip) CHECK(a.mask == flip_horizontal(m));
        else CHECK(a.mask == m);
        CHECK(a.image.same_shape(img));
    }
    CHECK(apply(AugmentScheme::Identity, img, m, rng).image == img);
    CHECK_THROWS_AS(apply_params({}, img, random_mask(41, 64, 1)), InvalidParameter);
}

TEST_CASE("schemes are chosen uniformly") {
    Rng rng(10, {});
    std::array<int, kAugmentSchemeCount> n{};
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) n[static_cast<int>(select_scheme(rng))]++;
    double chi2 = 0.0;
    for (int c : n) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    CHECK(chi2 < 16.81);  // chi-square, 6 dof, alpha 0.01
    for (int c : n) CHECK(std::abs(c / 70000.0 - 1.0 / 7.0) < 0.01);
    for (int s = 0; s < kAugmentSchemeCount; ++s)
        CHECK(scheme_from_name(scheme_name(static_cast<AugmentScheme>(s))) == static_cast<AugmentScheme>(s));
    CHECK_THROWS_AS(scheme_from_name("rotate"), InvalidParameter);
}

TEST_CASE("augmenting a dataset writes provenance and mirrors flipped centers") {
    ::setenv("SOURCE_DATE_EPOCH", "0", 1);
    oracle::TempDir dir("aug");
    DatasetRecipe r = make_recipe("S-NVGaze");
    r.total_images = 8;
    r.composition = {8, 0, 0};
    r.test_images = 0;
    r.width = 32;
    r.height = 24;
    r.samples_per_pixel = 1;
    GenerateOptions g;
    g.textures = procedural_library();
    generate_dataset(r, dir.str("in"), g);
    AugmentDatasetOptions opt;
    opt.seed = 3;
    const AugmentSummary s = augment_dataset(dir.str("in"), dir.str("out"), opt);
    CHECK(s.images == 8);
    std::size_t total = 0;
    for (auto c : s.per_scheme) total += c;
    CHECK(total == 8);

    std::ifstream prov(dir.str("out/provenance.jsonl"));
    std::string line;
    int lines = 0;
    while (std::getline(prov, line)) {
        const Json j = Json::parse(line);
        const std::string id = j.at("id");
        const auto in_meta = read_metadata_file(dir.str("in/meta/" + id + ".json"));
        const auto out_meta = read_metadata_file(dir.str("out/meta/" + id + ".json"));
        const SegMask in_mask = read_mask_png(dir.str("in/masks/" + id + ".png"));
        const SegMask out_mask = read_mask_png(dir.str("out/masks/" + id + ".png"));
        if (j.at("scheme") == "flip") {
            CHECK(out_mask == flip_horizontal(in_mask));
            REQUIRE(in_meta.pupil_center_2d);
            CHECK(out_meta.pupil_center_2d->x == doctest::Approx(32.0 - in_meta.pupil_center_2d->x));
            CHECK(out_meta.pupil_center_2d->y == doctest::Approx(in_meta.pupil_center_2d->y));
        } else {
            CHECK(out_mask == in_mask);
        }
        ++lines;
    }
    CHECK(lines == 8);
    const Manifest m = read_manifest_file(dir.str("out/manifest.json"));
    CHECK(verify_manifest(m, dir.str("out")).empty());

    AugmentDatasetOptions again = opt;
    again.threads = 2;
    augment_dataset(dir.str("in"), dir.str("out2"), again);
    CHECK(read_text_file(dir.str("out/provenance.jsonl")) == read_text_file(dir.str("out2/provenance.jsonl")));
}
