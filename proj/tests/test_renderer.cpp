// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "eyesynth/errors.hpp"
#include "eyesynth/renderer.hpp"

using namespace eyesynth;

namespace {

struct Fixture {
    Scene scene;
    EyeAssembly eye;
    RenderConfig config;

    explicit Fixture(double closure = 0.0, int w = 48, int h = 36) : eye(make_eye(closure)) {
        PoseParams p;
        p.kind = PoseKind::SNVGaze;
        p.distance = 40.0;
        const CameraPose pose = build_pose(p, eye.apex_distance(), w, h);
        scene.camera = pose.camera;
        scene.emitters = pose.emitters;
        scene.pose = p;
        config.samples_per_pixel = 4;
        config.seed = 11;
        config.textures = procedural_library();
        scene.environment = make_environment(*config.textures, 3, 0, 0, 0, 1.0, config.textures);
    }

    static EyeAssembly make_eye(double closure) {
        EyeParams e;
        e.eyelid_closure = closure;
        e.pupil_radius = 2.0;
        return build_eye(e);
    }
};

}  // namespace

TEST_CASE("quantization clamps and rounds") {
    CHECK(quantize(0.0, 1.0) == 0);
    CHECK(quantize(1.0, 1.0) == 255);
    CHECK(quantize(7.0, 1.0) == 255);
    CHECK(quantize(-1.0, 1.0) == 0);
    CHECK(quantize(0.5, 1.0) == 128);  // 127.5 rounds away from zero
    CHECK(quantize(0.25, 2.0) == 128);
    CHECK(quantize(10.0 / 255.0, 1.0) == 10);
}

TEST_CASE("emitter radiance is intensity over the projected disc") {
    PointEmitter e;
    e.intensity = 100.0;
    e.radius = 2.0;
    CHECK(emitter_radiance(e) == doctest::Approx(100.0 / (4.0 * kPi)));
}

TEST_CASE("render config validation") {
    RenderConfig c;
    CHECK_NOTHROW(c.validate());
    c.samples_per_pixel = 0;
    CHECK_THROWS_AS(c.validate(), InvalidParameter);
    c = {};
    c.exposure = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidParameter);
    c = {};
    c.max_bounces = 0;
    CHECK_THROWS_AS(c.validate(), InvalidParameter);
}

TEST_CASE("rendering without textures is an asset error") {
    Fixture f;
    f.config.textures = nullptr;
    CHECK_THROWS_AS(render(f.scene, f.eye, f.config), AssetError);
}

TEST_CASE("output does not depend on the worker count or the run") {
    Fixture f;
    f.config.tile_size = 8;
    const ImageF a = render_linear(f.scene, f.eye, f.config, 1);
    const ImageF b = render_linear(f.scene, f.eye, f.config, 3);
    const ImageF c = render_linear(f.scene, f.eye, f.config, 1);
    CHECK(a == b);
    CHECK(a == c);
    f.config.seed = 12;
    CHECK_FALSE(render_linear(f.scene, f.eye, f.config, 1) == a);
}

TEST_CASE("rendered radiance is finite and non-negative; IR output has one channel") {
    Fixture f;
    const RenderOutput out = render(f.scene, f.eye, f.config);
    CHECK(out.image.channels == 1);
    CHECK(out.image.width == 48);
    double total = 0.0;
    for (float v : out.linear.data) {
        REQUIRE(std::isfinite(v));
        REQUIRE(v >= 0.0f);
        total += v;
    }
    CHECK(total > 0.0);
    f.config.mode = ChannelMode::RGB;
    CHECK(render(f.scene, f.eye, f.config).image.channels == 3);
}

TEST_CASE("frontal open eye: pupil at the image center, masks nest") {
    Fixture f(0.0, 64, 48);
    const MaskPair m = render_masks(f.scene, f.eye);
    CHECK(m.with_skin.at(32, 24) == SemanticClass::Pupil);
    CHECK(m.without_skin.at(32, 24) == SemanticClass::Pupil);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x)
            if (m.with_skin.at(x, y) == SemanticClass::Pupil) REQUIRE(m.without_skin.at(x, y) == SemanticClass::Pupil);
    CHECK(m.without_skin.count(SemanticClass::Iris) > 0);
    CHECK(m.without_skin.count(SemanticClass::Sclera) > 0);
    CHECK(m.with_skin.count(SemanticClass::BackgroundSkin) > m.without_skin.count(SemanticClass::BackgroundSkin));

    const MetadataRecord meta = compute_metadata(f.scene, f.eye);
    REQUIRE(meta.pupil_center_2d);
    CHECK(meta.pupil_center_2d->x == doctest::Approx(32.0));
    CHECK(meta.pupil_center_2d->y == doctest::Approx(24.0));
    CHECK(meta.pupil_center_3d.z > 40.0);
    CHECK(meta.emitter_layout == f.scene.emitters.id);
}

TEST_CASE("closed eye: the with-skin mask is all background") {
    Fixture f(1.0);
    const MaskPair m = render_masks(f.scene, f.eye);
    CHECK(m.with_skin.count(SemanticClass::BackgroundSkin) == m.with_skin.labels.pixel_count());
    CHECK(m.without_skin.count(SemanticClass::Pupil) > 0);
}

TEST_CASE("masks ignore lighting, glasses do not hide the eye") {
    Fixture f;
    const MaskPair base = render_masks(f.scene, f.eye);
    f.scene.environment.scale = 1.5;
    f.scene.environment.rot_y_deg = 90.0;
    f.scene.emitters.emitters.clear();
    const MaskPair relit = render_masks(f.scene, f.eye);
    CHECK(base.with_skin == relit.with_skin);
    CHECK(base.without_skin == relit.without_skin);
    f.scene.glasses.present = true;
    CHECK(render_masks(f.scene, f.eye).without_skin.count(SemanticClass::Pupil) > 0);
}

TEST_CASE("exposure calibration maps a bright percentile to full scale") {
    Fixture f;
    const double e = calibrate_exposure(f.scene, f.eye, f.config, 2, 4);
    CHECK(e > 0.0);
    CHECK(std::isfinite(e));
    f.scene.emitters.emitters.clear();
    f.scene.environment.hdr = nullptr;
    CHECK(calibrate_exposure(f.scene, f.eye, f.config, 2, 4) == 1.0);
}
