// SPDX-License-Identifier: Apache-2.0
//
// Parametric optical eye. The eye-local frame has the eyeball center at the
// origin and the optical axis along -z; the corneal apex sits at
// (0, 0, -apex_distance). Gaze rotates the assembly about the eyeball center.
#pragma once

#include <cmath>
#include <functional>
#include <optional>

#include "eyesynth/optics.hpp"
#include "eyesynth/raster.hpp"
#include "eyesynth/segmask.hpp"

namespace eyesynth {

constexpr double kCorneaIndex = 1.3375;

struct EyeParams {
    double cornea_radius = 7.8;      // R, apical radius of curvature
    double cornea_asphericity = -0.25;  // Q
    double eyeball_radius = 12.0;
    double iris_radius = 6.0;
    double pupil_radius = 2.5;
    double anterior_chamber_depth = 3.6;  // iris plane behind the corneal apex
    double eyelid_closure = 0.15;
    int iris_texture_id = 0;
    double iris_rotation_deg = 0.0;
    double sclera_rotation_deg = 0.0;
    double retina_roughness = 0.025;
    double gaze_azimuth_deg = 0.0;
    double gaze_elevation_deg = 0.0;

    /// Throws InvalidParameter naming the first violated invariant.
    void validate() const;
};

/// Unit optical-axis direction for a gaze. Azimuth positive turns the eye
/// toward -x (image right for a frontal camera), elevation positive toward +y.
Vec3 gaze_direction(double azimuth_deg, double elevation_deg);
/// Rotation taking the eye-local frame to the head frame for a gaze.
Mat3 gaze_rotation(double azimuth_deg, double elevation_deg);

/// Corneal apex distance from the eyeball center that places the limbus (the
/// spheroid/sphere junction) at `limbus_radius`.
double apex_distance_for_limbus(double cornea_radius, double asphericity, double eyeball_radius,
                                double limbus_radius);

class EyeAssembly {
public:
    const EyeParams& params() const { return params_; }

    double apex_distance() const { return apex_distance_; }
    double limbus_radius() const { return limbus_radius_; }
    /// Limbus depth measured from the apex along the optical axis.
    double limbus_depth() const { return cornea_.cap_depth; }
    double limbus_z() const { return -apex_distance_ + cornea_.cap_depth; }
    double iris_plane_z() const { return iris_plane_z_; }
    /// Outer radius of the opaque iris-plane disc (eyeball wall at the iris plane).
    double iris_plane_wall_radius() const { return wall_radius_; }
    const SpheroidSurface& cornea() const { return cornea_; }
    const Mat3& eye_to_head() const { return eye_to_head_; }

    Vec3 to_local_point(const Vec3& p) const { return head_to_eye_ * p; }
    Vec3 to_local_vector(const Vec3& v) const { return head_to_eye_ * v; }
    Vec3 to_head(const Vec3& p) const { return eye_to_head_ * p; }

    Vec3 apex() const { return to_head({0.0, 0.0, -apex_distance_}); }
    Vec3 pupil_center() const { return to_head({0.0, 0.0, iris_plane_z_}); }
    /// The iris disc is concentric with the aperture.
    Vec3 iris_center() const { return pupil_center(); }
    Vec3 optical_axis() const { return eye_to_head_ * Vec3{0.0, 0.0, -1.0}; }

    /// Nearest hit among the cornea, sclera/retina sphere and iris plane.
    std::optional<InterfaceHit> intersect(const Ray& head_ray) const;
    /// Every valid hit of each eye surface along the ray, in no particular order.
    void for_each_hit(const Ray& head_ray, const std::function<void(const InterfaceHit&)>& fn) const;
    template <typename Fn>
    void visit_hits(const Ray& head_ray, Fn&& fn) const;

    /// Texture coordinates on the sclera: (angle about the optical axis plus
    /// sclera rotation, polar angle from the axis / pi), both in [0, 1).
    Vec2 sclera_uv(const Vec3& head_point) const;
    /// Point expressed in the iris plane (eye-local x, y).
    Vec2 iris_plane_point(const Vec3& head_point) const;

private:
    friend EyeAssembly build_eye(const EyeParams& params);

    EyeParams params_;
    double apex_distance_ = 0.0;
    double limbus_radius_ = 0.0;
    double iris_plane_z_ = 0.0;
    double wall_radius_ = 0.0;
    SpheroidSurface cornea_;
    Mat3 eye_to_head_;
    Mat3 head_to_eye_;
};

/// Throws InvalidParameter when `params` violates an invariant.
EyeAssembly build_eye(const EyeParams& params);

template <typename Fn>
void EyeAssembly::visit_hits(const Ray& head_ray, Fn&& fn) const {
    const Ray ray{to_local_point(head_ray.origin), to_local_vector(head_ray.direction)};
    auto emit = [&](InterfaceHit hit) {
        hit.point = to_head(hit.point);
        hit.normal = to_head(hit.normal);
        fn(hit);
    };

    // Corneal cap, evaluated in the spheroid frame (apex at the origin).
    {
        const Vec3 shift{0.0, 0.0, apex_distance_};
        Ray local{ray.origin + shift, ray.direction};
        if (auto hit = intersect_spheroid(local, cornea_, SurfaceId::Cornea)) {
            hit->point = hit->point - shift;
            emit(*hit);
            // A second cap crossing is possible for rays that graze the cap edge.
            Ray rest{local.at(hit->t), local.direction};
            if (auto again = intersect_spheroid(rest, cornea_, SurfaceId::Cornea)) {
                again->t += hit->t;
                again->point = again->point - shift;
                emit(*again);
            }
        }
    }

    // Eyeball sphere: sclera from outside, retina / anterior-chamber wall from inside.
    {
        const SphereRoots roots = sphere_roots(ray, Vec3{}, params_.eyeball_radius);
        for (double t : {roots.near, roots.far}) {
            if (std::isinf(t)) continue;
            InterfaceHit hit;
            hit.t = t;
            hit.point = ray.at(t);
            hit.normal = normalize(hit.point);
            const bool from_outside = dot(ray.direction, hit.normal) < 0.0;
            if (from_outside) {
                if (hit.point.z < limbus_z()) continue;
                hit.surface = SurfaceId::Sclera;
            } else {
                if (hit.point.z < limbus_z()) continue;
                hit.surface = hit.point.z > iris_plane_z_ ? SurfaceId::Retina : SurfaceId::LimbalRing;
            }
            emit(hit);
        }
    }

    // Iris plane: annulus with the pupil aperture cut out.
    if (std::abs(ray.direction.z) > 1e-15) {
        const double t = (iris_plane_z_ - ray.origin.z) / ray.direction.z;
        if (t > kIntersectEpsilon) {
            const Vec3 p = ray.at(t);
            const double r = std::sqrt(p.x * p.x + p.y * p.y);
            if (r >= params_.pupil_radius && r <= wall_radius_) {
                InterfaceHit hit;
                hit.t = t;
                hit.point = p;
                hit.normal = {0.0, 0.0, -1.0};
                hit.surface = r <= params_.iris_radius ? SurfaceId::Iris : SurfaceId::LimbalRing;
                emit(hit);
            }
        }
    }
}

/// Rubber-sheet texture coordinates of a point in the iris plane: u stretches
/// linearly from the live pupil edge (0) to the limbus (1).
Vec2 iris_uv(const Vec2& point, double pupil_radius, double iris_rotation_deg, double iris_radius = 6.0);

double eyelid_closure_for_gaze(double elevation_deg, double c0 = 0.15, double c1 = 0.005);

/// Retroreflective lobe normalized to 1 at zero separation.
double retroreflect_weight(double angle_sep, double retina_roughness);

struct SurfaceClassification {
    bool transparent = false;
    SemanticClass cls = SemanticClass::BackgroundSkin;
};
SurfaceClassification classify_surface(SurfaceId id);

enum class MaterialKind {
    TearFilmDielectric,
    DiffuseTextured,
    Retroreflective,
    SkinDiffuse,
    GlassReflective,
    Emissive,
};

struct Material {
    MaterialKind kind = MaterialKind::SkinDiffuse;
    double ior = 1.0;
    double albedo = 0.5;
};

Material material_for_surface(SurfaceId id);

/// Infrared proxy of a color texture: its red channel.
template <typename T>
Raster<T> ir_from_rgb(const Raster<T>& rgb) {
    if (rgb.channels < 3) throw std::invalid_argument("ir_from_rgb expects a 3-channel texture");
    Raster<T> out(rgb.width, rgb.height, 1);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x) out.at(x, y) = rgb.at(x, y, 0);
    return out;
}

}  // namespace eyesynth
