// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "eyesynth/errors.hpp"
#include "eyesynth/scene.hpp"
#include "support.hpp"

using namespace eyesynth;

namespace {

CameraModel frontal_camera(double distance, int w = 64, int h = 48) {
    CameraModel cam;
    cam.width = w;
    cam.height = h;
    cam.intrinsics = default_intrinsics(w, h);
    const Vec3 pos{0, 0, -distance};
    cam.world_to_camera = look_at(pos, pos + Vec3{0, 0, 1});
    return cam;
}

}  // namespace

TEST_CASE("look_at builds a right-handed camera frame") {
    const RigidTransform t = look_at({3, 4, -30}, {0, 0, 0});
    const Mat3& r = t.rotation;
    CHECK(r.determinant() == doctest::Approx(1.0));
    for (int i = 0; i < 3; ++i) CHECK(length(r.row(i)) == doctest::Approx(1.0));
    CHECK(length(r.row(2) - normalize(Vec3{-3, -4, 30})) < 1e-12);
    // Camera y points down in the world for an upright camera.
    CHECK(r.row(1).y < 0.0);
    CHECK(length(t.apply_point({3, 4, -30})) < 1e-12);
}

TEST_CASE("camera rays and projection are inverse") {
    const CameraModel cam = frontal_camera(50.0, 640, 480);
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double px = u(gen) * 640, py = u(gen) * 480;
        const Ray ray = generate_camera_ray(cam, std::floor(px), std::floor(py), {px - std::floor(px), py - std::floor(py)});
        const auto p = project(cam, ray.at(37.0));
        REQUIRE(p);
        CHECK(p->x == doctest::Approx(px).epsilon(1e-9));
        CHECK(p->y == doctest::Approx(py).epsilon(1e-9));
    }
    CHECK_FALSE(project(cam, {0, 0, -60}).has_value());
    // Image up is world +y for the frontal camera.
    CHECK(project(cam, {0, 1, 0})->y < 240.0);
    CHECK(project(cam, {0, 0, 0})->x == doctest::Approx(320.0));
}

TEST_CASE("default intrinsics frame a 24 mm eye at 40 mm over 70% of the height") {
    const Intrinsics k = default_intrinsics(640, 480);
    CHECK(k.fy * 24.0 / 40.0 == doctest::Approx(0.7 * 480));
    CHECK(k.cx == 320.0);
    CHECK(k.cy == 240.0);
}

TEST_CASE("camera validation") {
    CameraModel cam = frontal_camera(40);
    CHECK_NOTHROW(cam.validate());
    cam.width = 0;
    CHECK_THROWS_AS(cam.validate(), InvalidParameter);
    cam = frontal_camera(40);
    cam.intrinsics.fx = -1;
    CHECK_THROWS_AS(cam.validate(), InvalidParameter);
}

TEST_CASE("S-NVGaze pose: camera on the axis offset in its own plane, emitter beside it") {
    PoseParams p;
    p.kind = PoseKind::SNVGaze;
    p.distance = 40.0;
    p.offset_h = 2.0;
    p.offset_v = -3.0;
    const CameraPose pose = build_pose(p, 13.0, 640, 480);
    const Vec3 pos = pose.camera.position();
    CHECK(pos.z == doctest::Approx(-53.0));
    CHECK(length(pose.camera.forward() - Vec3{0, 0, 1}) < 1e-12);
    CHECK(dot(pos, pose.camera.right()) == doctest::Approx(2.0));
    CHECK(dot(pos, -pose.camera.down()) == doctest::Approx(-3.0));
    REQUIRE(pose.emitters.emitters.size() == 1);
    CHECK(length(pose.emitters.emitters[0].position - pos - pose.camera.right() * 10.0) < 1e-12);
}

TEST_CASE("S-OpenEDS pose: tilted camera with a 16-emitter ring") {
    PoseParams p;
    p.kind = PoseKind::SOpenEDS;
    p.distance = 40.0;
    const CameraPose pose = build_pose(p, 13.0, 400, 640);
    CHECK(rad_to_deg(std::asin(pose.camera.forward().y)) == doctest::Approx(-10.0));
    const Vec3 apex{0, 0, -13};
    CHECK(length(pose.camera.position() - apex) == doctest::Approx(40.0));
    REQUIRE(pose.emitters.emitters.size() == 16);
    const Vec3 c = pose.camera.position();
    for (std::size_t k = 0; k < 16; ++k) {
        const Vec3 a = pose.emitters.emitters[k].position - c;
        const Vec3 b = pose.emitters.emitters[(k + 1) % 16].position - c;
        CHECK(length(a) == doctest::Approx(12.0));
        CHECK(std::abs(dot(a, pose.camera.forward())) < 1e-9);
        CHECK(rad_to_deg(angle_between(a, b)) == doctest::Approx(22.5));
    }
}

TEST_CASE("S-General pose lies on the viewing sphere around the eye") {
    PoseParams p;
    p.kind = PoseKind::SGeneral;
    p.azimuth_deg = 40;
    p.elevation_deg = 15;
    p.distance = 30;
    const CameraPose pose = build_pose(p, 13.0, 640, 480);
    CHECK(length(pose.camera.position()) == doctest::Approx(43.0));
    CHECK(length(pose.camera.forward() + gaze_direction(40, 15)) < 1e-12);
}

TEST_CASE("pose samplers stay within their supports") {
    Rng rng(5, {});
    const PoseConfig cfg;
    for (int i = 0; i < 2000; ++i) {
        const PoseParams a = sample_pose(PoseKind::SNVGaze, rng, cfg);
        CHECK(a.distance >= 35.0);
        CHECK(a.distance < 45.0);
        CHECK(std::abs(a.offset_h) <= 5.0);
        const PoseParams g = sample_pose(PoseKind::SGeneral, rng, cfg);
        CHECK(g.azimuth_deg >= -20.0);
        CHECK(g.azimuth_deg < 60.0);
        CHECK(g.elevation_deg >= -20.0);
        CHECK(g.elevation_deg < 40.0);
        CHECK(std::abs(g.offset_v) <= 1.0);
    }
    CHECK(pose_kind_from_name("S-OpenEDS") == PoseKind::SOpenEDS);
    CHECK_THROWS_AS(pose_kind_from_name("S-Other"), InvalidParameter);
}

TEST_CASE("environment lookup follows the map rotation") {
    ImageF hdr(8, 4, 3, 0.0f);
    // Mark the texel looking along -z at the horizon (u = 0.5, v = 0.5).
    for (int c = 0; c < 3; ++c) {
        hdr.at(3, 1, c) = hdr.at(4, 1, c) = hdr.at(3, 2, c) = hdr.at(4, 2, c) = 1.0f;
    }
    EnvironmentState env;
    env.hdr = std::make_shared<ImageF>(hdr);
    CHECK(env_radiance(env, {0, 0, -1}).x == doctest::Approx(1.0));
    CHECK(env_radiance(env, {0, 0, 1}).x == doctest::Approx(0.0));
    env.rot_y_deg = 180.0;
    CHECK(env_radiance(env, {0, 0, 1}).x == doctest::Approx(1.0));
    env.scale = 0.5;
    CHECK(env_radiance(env, {0, 0, 1}).x == doctest::Approx(0.5));
    // Angles wrap.
    env.rot_y_deg = 540.0;
    CHECK(env_radiance(env, {0, 0, 1}).x == doctest::Approx(0.5));
    EnvironmentState black;
    CHECK(env_radiance(black, {0, 1, 0}).x == 0.0);
}

TEST_CASE("environment intensity bins are equally likely") {
    Rng rng(2, {});
    int bins[3] = {0, 0, 0};
    for (int i = 0; i < 30000; ++i) {
        const double s = sample_env_intensity_bin(rng);
        REQUIRE(s >= 0.5);
        REQUIRE(s <= 1.5);
        ++bins[s < 0.83 ? 0 : (s < 1.17 ? 1 : 2)];
    }
    for (int b : bins) CHECK(std::abs(b - 10000) < 400);
}

TEST_CASE("make_environment validates its ranges") {
    const auto lib = procedural_library();
    CHECK_NOTHROW(make_environment(*lib, 0, 10, 20, -20, 1.0, lib));
    CHECK_THROWS_AS(make_environment(*lib, 25, 0, 0, 0, 1.0, lib), InvalidParameter);
    CHECK_THROWS_AS(make_environment(*lib, 0, 0, 70, 0, 1.0, lib), InvalidParameter);
    CHECK_THROWS_AS(make_environment(*lib, 0, 0, 0, 0, 1.6, lib), InvalidParameter);
}

TEST_CASE("lid opening shrinks to nothing at full closure") {
    const HeadModel head = make_head(3);
    CHECK(inside_lid_opening(head, 0.0, {0, deg_to_rad(head.lid_midline_deg) * 12, -12}));
    std::mt19937_64 gen(4);
    for (int i = 0; i < 5000; ++i) CHECK_FALSE(inside_lid_opening(head, 1.0, oracle::random_unit(gen)));
    // Opening is monotone in closure.
    for (int i = 0; i < 5000; ++i) {
        const Vec3 p = oracle::random_unit(gen);
        if (inside_lid_opening(head, 0.6, p)) CHECK(inside_lid_opening(head, 0.2, p));
    }
}

TEST_CASE("head variation is deterministic per id") {
    const HeadModel a = make_head(7), b = make_head(7), c = make_head(8);
    CHECK(a.skin_albedo == b.skin_albedo);
    CHECK(a.caruncle_size == b.caruncle_size);
    CHECK(a.skin_albedo != c.skin_albedo);
    CHECK_THROWS_AS(make_head(-1), InvalidParameter);
}

TEST_CASE("scene intersection: closed lids hide the eye, glasses are transparent") {
    EyeParams p;
    p.eyelid_closure = 1.0;
    const EyeAssembly eye = build_eye(p);
    Scene scene;
    scene.camera = frontal_camera(60.0);
    const Ray axis({0, 0, -60}, {0, 0, 1});
    const auto hit = intersect_scene(scene, eye, axis);
    REQUIRE(hit);
    CHECK(hit->hit.surface == SurfaceId::Eyelid);
    CHECK(hit->hit.t == doctest::Approx(60.0 - eyelid_shell_radius(eye)));
    CHECK_FALSE(hit->transparent);

    EyeParams open;
    open.eyelid_closure = 0.0;
    const EyeAssembly eye2 = build_eye(open);
    scene.glasses.present = true;
    const auto first = intersect_scene(scene, eye2, axis);
    REQUIRE(first);
    CHECK(first->hit.surface == SurfaceId::GlassesLensFront);
    CHECK(first->transparent);
    const auto no_glasses = intersect_scene(scene, eye2, axis, HitFilter{true, false, true});
    REQUIRE(no_glasses);
    CHECK(no_glasses->hit.surface == SurfaceId::Cornea);

    const SceneIntersector isect(scene, eye2);
    // Through two lens faces and the cornea: product of Fresnel transmissions.
    const double tr = isect.transmittance({0, 0, -60}, {0, 0, -eye2.apex_distance() + 1.0});
    CHECK(tr < 1.0);
    CHECK(tr > 0.85);
    // Through the closed lid nothing passes.
    const SceneIntersector closed(scene, eye);
    CHECK(closed.transmittance({0, 0, -60}, {0, 0, 0}) == 0.0);
}
