// SPDX-License-Identifier: Apache-2.0
//
// Numeric kernel: rays, analytic quadric intersections, Snell refraction,
// Fresnel reflectance and the Beckmann microfacet density. All lengths are
// millimeters, all math is double precision.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "eyesynth/vec.hpp"

namespace eyesynth {

/// Minimum accepted ray parameter; rejects self-intersections on mm-scale scenes.
constexpr double kIntersectEpsilon = 1e-6;

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length

    Ray() = default;
    /// Normalizes `dir`.
    Ray(const Vec3& o, const Vec3& dir) : origin(o), direction(normalize(dir)) {}

    Vec3 at(double t) const { return origin + direction * t; }
};

/// Tags every surface the scene can emit. The semantic meaning lives in
/// eye_model's classify_surface.
enum class SurfaceId : std::uint8_t {
    Cornea,            // tear film over the corneal cap (dielectric)
    Sclera,            // tear film over the sclera (glossy over diffuse)
    Iris,              // iris annulus, pupil_radius..iris_radius
    LimbalRing,        // iris-plane ring outside the iris and the anterior chamber wall
    Retina,            // eyeball interior behind the iris plane
    Eyelid,
    Caruncle,
    Head,
    GlassesLensFront,
    GlassesLensBack,
    GlassesFrame,
    Emitter,
};

inline constexpr int kSurfaceIdCount = 12;

const char* surface_name(SurfaceId id);

struct InterfaceHit {
    double t = std::numeric_limits<double>::infinity();
    Vec3 point;
    Vec3 normal;  // unit, geometric outward
    SurfaceId surface = SurfaceId::Head;
    int index = 0;  // emitter index for SurfaceId::Emitter

    bool entering(const Vec3& dir) const { return dot(dir, normal) < 0.0; }
    /// Normal flipped to face the incident side of `dir`.
    Vec3 facing_normal(const Vec3& dir) const { return entering(dir) ? normal : -normal; }
};

/// Spheroidal cap x^2 + y^2 + (1+Q) z^2 - 2 R z = 0 in its local frame: apex at
/// the origin, axis along +z, cap restricted to 0 <= z <= cap_depth.
struct SpheroidSurface {
    double asphericity = 0.0;     // Q in [-1, 1]
    double apical_radius = 1.0;   // R > 0
    double cap_depth = std::numeric_limits<double>::infinity();

    SpheroidSurface() = default;
    /// Throws InvalidParameter when R <= 0 or Q outside [-1, 1]. A non-finite
    /// cap depth selects the whole closed spheroid.
    SpheroidSurface(double q, double r, double cap = std::numeric_limits<double>::infinity());

    /// Implicit function; zero on the surface, negative inside.
    double implicit(const Vec3& p) const;
    Vec3 outward_normal(const Vec3& p) const;
    /// Radial distance of the surface at depth z (0 <= z <= max depth).
    double radius_at_depth(double z) const;
};

struct SphereSurface {
    Vec3 center;
    double radius = 1.0;

    SphereSurface() = default;
    SphereSurface(const Vec3& c, double r);

    double implicit(const Vec3& p) const { return length_squared(p - center) - radius * radius; }
};

/// Ray must already be expressed in the spheroid's local frame.
std::optional<InterfaceHit> intersect_spheroid(const Ray& ray, const SpheroidSurface& s,
                                               SurfaceId id = SurfaceId::Cornea);
std::optional<InterfaceHit> intersect_sphere(const Ray& ray, const SphereSurface& s,
                                             SurfaceId id = SurfaceId::Sclera);

/// Both positive roots of the ray/sphere quadratic in ascending order; roots at
/// or below epsilon are reported as infinity.
struct SphereRoots {
    double near = std::numeric_limits<double>::infinity();
    double far = std::numeric_limits<double>::infinity();
};
SphereRoots sphere_roots(const Ray& ray, const Vec3& center, double radius);

/// Snell refraction. `normal` faces the incident side (dot(dir, normal) < 0).
/// Returns nothing on total internal reflection.
std::optional<Vec3> refract(const Vec3& dir, const Vec3& normal, double n1, double n2);

/// Unpolarized Fresnel reflectance for a dielectric interface; 1 under TIR.
double fresnel_dielectric(double cos_i, double n1, double n2);

/// Beckmann microfacet density exp(-tan^2 t / m^2) / (pi m^2 cos^4 t).
double beckmann_density(double theta_h, double roughness);

}  // namespace eyesynth
