// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/eye_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eyesynth/errors.hpp"

namespace eyesynth {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter("invalid eye parameter: " + what);
}

double wrap_unit(double v) {
    v -= std::floor(v);
    return v >= 1.0 ? 0.0 : v;
}

}  // namespace

void EyeParams::validate() const {
    require(cornea_radius > 0.0, "cornea_radius must be > 0");
    require(cornea_asphericity >= -1.0 && cornea_asphericity <= 1.0, "cornea_asphericity must lie in [-1, 1]");
    require(eyeball_radius > 0.0, "eyeball_radius must be > 0");
    require(iris_radius > 0.0 && iris_radius < eyeball_radius, "iris_radius must lie in (0, eyeball_radius)");
    require(pupil_radius >= 1.0 && pupil_radius <= 4.0, "pupil_radius must lie in [1, 4] mm");
    require(pupil_radius < iris_radius, "pupil_radius must be smaller than iris_radius");
    require(anterior_chamber_depth > 0.0, "anterior_chamber_depth must be > 0");
    require(eyelid_closure >= 0.0 && eyelid_closure <= 1.0, "eyelid_closure must lie in [0, 1]");
    require(iris_rotation_deg >= 0.0 && iris_rotation_deg < 360.0, "iris_rotation_deg must lie in [0, 360)");
    require(sclera_rotation_deg >= 0.0 && sclera_rotation_deg < 360.0, "sclera_rotation_deg must lie in [0, 360)");
    require(retina_roughness > 0.0, "retina_roughness must be > 0");
    require(std::abs(gaze_azimuth_deg) < 90.0 && std::abs(gaze_elevation_deg) < 90.0, "gaze must lie within (-90, 90) degrees");
    require(iris_texture_id >= 0, "iris_texture_id must be >= 0");
    // The corneal cap must be able to reach the limbus radius.
    const double disc = cornea_radius * cornea_radius - (1.0 + cornea_asphericity) * iris_radius * iris_radius;
    require(disc >= 0.0, "cornea cannot reach the limbus radius for this R/Q");
}

Vec3 gaze_direction(double azimuth_deg, double elevation_deg) {
    return gaze_rotation(azimuth_deg, elevation_deg) * Vec3{0.0, 0.0, -1.0};
}

Mat3 gaze_rotation(double azimuth_deg, double elevation_deg) {
    return Mat3::rotation_y(deg_to_rad(azimuth_deg)) * Mat3::rotation_x(deg_to_rad(elevation_deg));
}

double apex_distance_for_limbus(double cornea_radius, double asphericity, double eyeball_radius,
                                double limbus_radius) {
    // Smaller root of (1+Q) z^2 - 2 R z + r^2 = 0, written without cancellation.
    const double k = 1.0 + asphericity;
    const double disc = cornea_radius * cornea_radius - k * limbus_radius * limbus_radius;
    if (disc < 0.0) throw InvalidParameter("cornea cannot reach the limbus radius");
    const double z_limbus = limbus_radius * limbus_radius / (cornea_radius + std::sqrt(disc));
    return z_limbus + std::sqrt(eyeball_radius * eyeball_radius - limbus_radius * limbus_radius);
}

EyeAssembly build_eye(const EyeParams& params) {
    params.validate();
    EyeAssembly eye;
    eye.params_ = params;
    eye.limbus_radius_ = params.iris_radius;
    eye.apex_distance_ = apex_distance_for_limbus(params.cornea_radius, params.cornea_asphericity,
                                                  params.eyeball_radius, params.iris_radius);
    const double k = 1.0 + params.cornea_asphericity;
    const double r2 = eye.limbus_radius_ * eye.limbus_radius_;
    const double disc = params.cornea_radius * params.cornea_radius - k * r2;
    const double cap_depth = r2 / (params.cornea_radius + std::sqrt(disc));
    eye.cornea_ = SpheroidSurface(params.cornea_asphericity, params.cornea_radius, cap_depth);

    eye.iris_plane_z_ = -eye.apex_distance_ + params.anterior_chamber_depth;
    if (eye.iris_plane_z_ <= eye.limbus_z()) {
        throw InvalidParameter("invalid eye parameter: iris plane must lie behind the limbus");
    }
    const double rb = params.eyeball_radius;
    if (std::abs(eye.iris_plane_z_) >= rb) {
        throw InvalidParameter("invalid eye parameter: iris plane lies outside the eyeball");
    }
    eye.wall_radius_ = std::sqrt(rb * rb - eye.iris_plane_z_ * eye.iris_plane_z_);
    if (eye.wall_radius_ < params.iris_radius) {
        throw InvalidParameter("invalid eye parameter: iris disc does not fit inside the eyeball");
    }
    eye.eye_to_head_ = gaze_rotation(params.gaze_azimuth_deg, params.gaze_elevation_deg);
    eye.head_to_eye_ = eye.eye_to_head_.transposed();
    return eye;
}

void EyeAssembly::for_each_hit(const Ray& head_ray, const std::function<void(const InterfaceHit&)>& fn) const {
    visit_hits(head_ray, fn);
}

std::optional<InterfaceHit> EyeAssembly::intersect(const Ray& head_ray) const {
    std::optional<InterfaceHit> best;
    visit_hits(head_ray, [&](const InterfaceHit& h) {
        if (!best || h.t < best->t) best = h;
    });
    return best;
}

Vec2 EyeAssembly::sclera_uv(const Vec3& head_point) const {
    const Vec3 p = to_local_point(head_point);
    const double around = std::atan2(p.y, p.x) / (2.0 * kPi) + params_.sclera_rotation_deg / 360.0;
    const double polar = angle_between(p, Vec3{0.0, 0.0, -1.0}) / kPi;
    return {wrap_unit(around), std::clamp(polar, 0.0, 1.0 - 1e-12)};
}

Vec2 EyeAssembly::iris_plane_point(const Vec3& head_point) const {
    const Vec3 p = to_local_point(head_point);
    return {p.x, p.y};
}

Vec2 iris_uv(const Vec2& point, double pupil_radius, double iris_rotation_deg, double iris_radius) {
    const double r = point.length();
    const double u = std::clamp((r - pupil_radius) / (iris_radius - pupil_radius), 0.0, 1.0);
    double angle = std::atan2(point.y, point.x);
    if (angle < 0.0) angle += 2.0 * kPi;
    const double v = wrap_unit(angle / (2.0 * kPi) + iris_rotation_deg / 360.0);
    return {u, v};
}

double eyelid_closure_for_gaze(double elevation_deg, double c0, double c1) {
    return std::clamp(c0 - c1 * elevation_deg, 0.0, 1.0);
}

double retroreflect_weight(double angle_sep, double retina_roughness) {
    const double t = std::tan(angle_sep);
    return std::exp(-(t * t) / (retina_roughness * retina_roughness));
}

SurfaceClassification classify_surface(SurfaceId id) {
    switch (id) {
        case SurfaceId::Cornea:
        case SurfaceId::GlassesLensFront:
        case SurfaceId::GlassesLensBack:
            return {true, SemanticClass::BackgroundSkin};
        case SurfaceId::Sclera:
        case SurfaceId::LimbalRing:
            return {false, SemanticClass::Sclera};
        case SurfaceId::Iris:
            return {false, SemanticClass::Iris};
        case SurfaceId::Retina:
            return {false, SemanticClass::Pupil};
        case SurfaceId::Eyelid:
        case SurfaceId::Caruncle:
        case SurfaceId::Head:
        case SurfaceId::GlassesFrame:
        case SurfaceId::Emitter:
            return {false, SemanticClass::BackgroundSkin};
    }
    throw InternalError("classify_surface: unknown surface id");
}

Material material_for_surface(SurfaceId id) {
    switch (id) {
        case SurfaceId::Cornea: return {MaterialKind::TearFilmDielectric, kCorneaIndex, 0.0};
        case SurfaceId::Sclera: return {MaterialKind::TearFilmDielectric, kCorneaIndex, 0.8};
        case SurfaceId::Iris: return {MaterialKind::DiffuseTextured, 1.0, 0.4};
        case SurfaceId::LimbalRing: return {MaterialKind::DiffuseTextured, 1.0, 0.6};
        case SurfaceId::Retina: return {MaterialKind::Retroreflective, 1.0, 0.02};
        case SurfaceId::Eyelid:
        case SurfaceId::Caruncle:
        case SurfaceId::Head: return {MaterialKind::SkinDiffuse, 1.0, 0.55};
        case SurfaceId::GlassesLensFront:
        case SurfaceId::GlassesLensBack: return {MaterialKind::GlassReflective, 1.5, 0.0};
        case SurfaceId::GlassesFrame: return {MaterialKind::SkinDiffuse, 1.0, 0.02};
        case SurfaceId::Emitter: return {MaterialKind::Emissive, 1.0, 0.0};
    }
    throw InternalError("material_for_surface: unknown surface id");
}

}  // namespace eyesynth
