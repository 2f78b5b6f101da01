// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "eyesynth/errors.hpp"
#include "eyesynth/eye_model.hpp"
#include "support.hpp"

using namespace eyesynth;

TEST_CASE("apex placement puts the limbus on the eyeball sphere at the iris radius") {
    for (double q : {-0.13, -0.25, -0.37, 0.0}) {
        const double r = 7.8, rb = 12.0, rl = 6.0;
        // Cap depth from the larger-root-free form, then the sphere chord.
        const double k = 1.0 + q;
        const double z_cap = (r - std::sqrt(r * r - k * rl * rl)) / k;
        const double expected = z_cap + std::sqrt(rb * rb - rl * rl);
        CHECK(apex_distance_for_limbus(r, q, rb, rl) == doctest::Approx(expected).epsilon(1e-12));

        EyeParams p;
        p.cornea_asphericity = q;
        const EyeAssembly eye = build_eye(p);
        CHECK(eye.cornea().radius_at_depth(eye.limbus_depth()) == doctest::Approx(rl).epsilon(1e-9));
        const double lz = eye.limbus_z();
        CHECK(std::sqrt(lz * lz + rl * rl) == doctest::Approx(rb).epsilon(1e-12));
        CHECK(eye.iris_plane_z() == doctest::Approx(-eye.apex_distance() + 3.6));
    }
}

TEST_CASE("gaze rotates the optical axis") {
    CHECK(length(gaze_direction(0, 0) - Vec3{0, 0, -1}) < 1e-15);
    const Vec3 up = gaze_direction(0, 30);
    CHECK(up.y == doctest::Approx(std::sin(deg_to_rad(30))));
    const Vec3 side = gaze_direction(30, 0);
    CHECK(side.x == doctest::Approx(-std::sin(deg_to_rad(30))));
    EyeParams p;
    p.gaze_azimuth_deg = 20;
    p.gaze_elevation_deg = -10;
    const EyeAssembly eye = build_eye(p);
    CHECK(length(eye.optical_axis() - gaze_direction(20, -10)) < 1e-12);
    CHECK(length(eye.apex() - gaze_direction(20, -10) * eye.apex_distance()) < 1e-12);
}

TEST_CASE("a ray down the optical axis meets cornea, iris plane aperture and retina") {
    EyeParams p;
    const EyeAssembly eye = build_eye(p);
    std::vector<InterfaceHit> hits;
    eye.for_each_hit(Ray({0, 0, -40}, {0, 0, 1}), [&](const InterfaceHit& h) { hits.push_back(h); });
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].surface == SurfaceId::Cornea);
    CHECK(hits[0].t == doctest::Approx(40 - eye.apex_distance()));
    CHECK(hits[1].surface == SurfaceId::Retina);
    CHECK(hits[1].t == doctest::Approx(52.0));

    // Off axis inside the iris annulus the iris plane is hit.
    const auto h = eye.intersect(Ray({4.0, 0, -40}, {0, 0, 1}));
    REQUIRE(h);
    CHECK(h->surface == SurfaceId::Cornea);
    bool iris = false;
    eye.for_each_hit(Ray({4.0, 0, -40}, {0, 0, 1}), [&](const InterfaceHit& x) { iris |= x.surface == SurfaceId::Iris; });
    CHECK(iris);
}

TEST_CASE("hit normals are unit and outward") {
    EyeParams p;
    p.gaze_azimuth_deg = 12;
    const EyeAssembly eye = build_eye(p);
    std::mt19937_64 gen(8);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 o = oracle::random_unit(gen) * 40.0;
        const Vec3 target = oracle::random_unit(gen) * 8.0;
        eye.for_each_hit(Ray(o, target - o), [&](const InterfaceHit& h) {
            CHECK(std::abs(length(h.normal) - 1.0) < 1e-9);
            if (h.surface == SurfaceId::Sclera || h.surface == SurfaceId::Retina) {
                CHECK(length(h.point) == doctest::Approx(12.0).epsilon(1e-9));
                CHECK(dot(h.normal, h.point) > 0.0);
            }
        });
    }
}

TEST_CASE("iris rubber-sheet coordinates") {
    CHECK(iris_uv({2.0, 0.0}, 2.0, 0.0).x == doctest::Approx(0.0));
    CHECK(iris_uv({6.0, 0.0}, 2.0, 0.0).x == doctest::Approx(1.0));
    CHECK(iris_uv({4.0, 0.0}, 2.0, 0.0).x == doctest::Approx(0.5));
    CHECK(iris_uv({0.0, 4.0}, 2.0, 0.0).y == doctest::Approx(0.25));
    CHECK(iris_uv({0.0, 4.0}, 2.0, 90.0).y == doctest::Approx(0.5));
    // Dilation keeps the limbus at u = 1.
    CHECK(iris_uv({6.0, 0.0}, 3.5, 0.0).x == doctest::Approx(1.0));
}

TEST_CASE("eyelid closure follows gaze elevation and clamps") {
    CHECK(eyelid_closure_for_gaze(0.0) == doctest::Approx(0.15));
    CHECK(eyelid_closure_for_gaze(30.0) == doctest::Approx(0.0));
    CHECK(eyelid_closure_for_gaze(-30.0) == doctest::Approx(0.30));
    CHECK(eyelid_closure_for_gaze(-1000.0) == 1.0);
}

TEST_CASE("retroreflective lobe") {
    CHECK(retroreflect_weight(0.0, 0.025) == 1.0);
    CHECK(retroreflect_weight(0.01, 0.025) > retroreflect_weight(0.02, 0.025));
    const double a = deg_to_rad(2.25);
    CHECK(retroreflect_weight(a, 0.025) == doctest::Approx(std::exp(-std::pow(std::tan(a) / 0.025, 2))));
}

TEST_CASE("surface classes") {
    CHECK(classify_surface(SurfaceId::Cornea).transparent);
    CHECK(classify_surface(SurfaceId::Retina).cls == SemanticClass::Pupil);
    CHECK(classify_surface(SurfaceId::Iris).cls == SemanticClass::Iris);
    CHECK(classify_surface(SurfaceId::LimbalRing).cls == SemanticClass::Sclera);
    CHECK(classify_surface(SurfaceId::Caruncle).cls == SemanticClass::BackgroundSkin);
    CHECK(material_for_surface(SurfaceId::Cornea).ior == kCorneaIndex);
}

TEST_CASE("eye parameter validation names the violated field") {
    EyeParams p;
    p.pupil_radius = 4.5;
    CHECK_THROWS_WITH_AS(build_eye(p), doctest::Contains("pupil_radius"), InvalidParameter);
    p = {};
    p.cornea_asphericity = -1.2;
    CHECK_THROWS_AS(build_eye(p), InvalidParameter);
    p = {};
    p.iris_rotation_deg = 360.0;
    CHECK_THROWS_AS(build_eye(p), InvalidParameter);
    p = {};
    p.anterior_chamber_depth = 0.1;
    CHECK_THROWS_AS(build_eye(p), InvalidParameter);
}

TEST_CASE("infrared proxy keeps the red channel") {
    ImageF rgb(2, 1, 3);
    rgb.at(0, 0, 0) = 0.25f;
    rgb.at(0, 0, 1) = 0.5f;
    rgb.at(1, 0, 0) = 0.75f;
    const ImageF ir = ir_from_rgb(rgb);
    CHECK(ir.channels == 1);
    CHECK(ir.at(0, 0) == 0.25f);
    CHECK(ir.at(1, 0) == 0.75f);
}
