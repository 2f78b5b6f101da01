// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/optics.hpp"

#include <algorithm>
#include <cmath>

#include "eyesynth/errors.hpp"

namespace eyesynth {

const char* surface_name(SurfaceId id) {
    switch (id) {
        case SurfaceId::Cornea: return "cornea";
        case SurfaceId::Sclera: return "sclera";
        case SurfaceId::Iris: return "iris";
        case SurfaceId::LimbalRing: return "limbal_ring";
        case SurfaceId::Retina: return "retina";
        case SurfaceId::Eyelid: return "eyelid";
        case SurfaceId::Caruncle: return "caruncle";
        case SurfaceId::Head: return "head";
        case SurfaceId::GlassesLensFront: return "glasses_lens_front";
        case SurfaceId::GlassesLensBack: return "glasses_lens_back";
        case SurfaceId::GlassesFrame: return "glasses_frame";
        case SurfaceId::Emitter: return "emitter";
    }
    return "unknown";
}

SpheroidSurface::SpheroidSurface(double q, double r, double cap)
    : asphericity(q), apical_radius(r), cap_depth(cap) {
    if (!(r > 0.0)) throw InvalidParameter("spheroid apical radius must be > 0");
    if (!(q >= -1.0 && q <= 1.0)) throw InvalidParameter("spheroid asphericity must lie in [-1, 1]");
    if (!std::isfinite(cap_depth)) {
        cap_depth = q > -1.0 ? 2.0 * r / (1.0 + q) : std::numeric_limits<double>::infinity();
    }
}

double SpheroidSurface::implicit(const Vec3& p) const {
    return p.x * p.x + p.y * p.y + (1.0 + asphericity) * p.z * p.z - 2.0 * apical_radius * p.z;
}

Vec3 SpheroidSurface::outward_normal(const Vec3& p) const {
    return normalize(Vec3{2.0 * p.x, 2.0 * p.y, 2.0 * (1.0 + asphericity) * p.z - 2.0 * apical_radius});
}

double SpheroidSurface::radius_at_depth(double z) const {
    return std::sqrt(std::max(0.0, 2.0 * apical_radius * z - (1.0 + asphericity) * z * z));
}

SphereSurface::SphereSurface(const Vec3& c, double r) : center(c), radius(r) {
    if (!(r > 0.0)) throw InvalidParameter("sphere radius must be > 0");
}

namespace {

// Roots of a t^2 + b t + c = 0 using the cancellation-free form. Returns the
// number of real roots written to t0 <= t1.
int solve_quadratic(double a, double b, double c, double& t0, double& t1) {
    if (std::abs(a) < 1e-14) {
        if (std::abs(b) < 1e-300) return 0;
        t0 = t1 = -c / b;
        return 1;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return 0;
    const double root = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(root, b));
    if (q == 0.0) {
        t0 = t1 = 0.0;
        return 2;
    }
    t0 = q / a;
    t1 = c / q;
    if (t0 > t1) std::swap(t0, t1);
    return 2;
}

}  // namespace

std::optional<InterfaceHit> intersect_spheroid(const Ray& ray, const SpheroidSurface& s, SurfaceId id) {
    const Vec3& o = ray.origin;
    const Vec3& d = ray.direction;
    const double k = 1.0 + s.asphericity;
    const double a = d.x * d.x + d.y * d.y + k * d.z * d.z;
    const double b = 2.0 * (o.x * d.x + o.y * d.y + k * o.z * d.z - s.apical_radius * d.z);
    const double c = o.x * o.x + o.y * o.y + k * o.z * o.z - 2.0 * s.apical_radius * o.z;

    double roots[2];
    const int n = solve_quadratic(a, b, c, roots[0], roots[1]);
    for (int i = 0; i < n; ++i) {
        const double t = roots[i];
        if (t <= kIntersectEpsilon) continue;
        const Vec3 p = ray.at(t);
        if (p.z < -1e-12 || p.z > s.cap_depth) continue;
        InterfaceHit hit;
        hit.t = t;
        hit.point = p;
        hit.normal = s.outward_normal(p);
        hit.surface = id;
        return hit;
    }
    return std::nullopt;
}

SphereRoots sphere_roots(const Ray& ray, const Vec3& center, double radius) {
    const Vec3 oc = ray.origin - center;
    const double b = 2.0 * dot(oc, ray.direction);
    const double c = dot(oc, oc) - radius * radius;
    double t0, t1;
    SphereRoots out;
    if (solve_quadratic(1.0, b, c, t0, t1) == 0) return out;
    if (t0 > kIntersectEpsilon) out.near = t0;
    if (t1 > kIntersectEpsilon) {
        if (std::isinf(out.near)) out.near = t1;
        else out.far = t1;
    }
    return out;
}

std::optional<InterfaceHit> intersect_sphere(const Ray& ray, const SphereSurface& s, SurfaceId id) {
    const SphereRoots roots = sphere_roots(ray, s.center, s.radius);
    if (std::isinf(roots.near)) return std::nullopt;
    InterfaceHit hit;
    hit.t = roots.near;
    hit.point = ray.at(roots.near);
    hit.normal = normalize(hit.point - s.center);
    hit.surface = id;
    return hit;
}

std::optional<Vec3> refract(const Vec3& dir, const Vec3& normal, double n1, double n2) {
    const double eta = n1 / n2;
    const double cos_i = -dot(dir, normal);
    const double sin2_t = eta * eta * std::max(0.0, 1.0 - cos_i * cos_i);
    if (sin2_t > 1.0) return std::nullopt;
    const double cos_t = std::sqrt(1.0 - sin2_t);
    return normalize(dir * eta + normal * (eta * cos_i - cos_t));
}

double fresnel_dielectric(double cos_i, double n1, double n2) {
    cos_i = std::clamp(cos_i, 0.0, 1.0);
    const double sin2_t = (n1 / n2) * (n1 / n2) * (1.0 - cos_i * cos_i);
    if (sin2_t >= 1.0) return 1.0;
    const double cos_t = std::sqrt(1.0 - sin2_t);
    const double rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t);
    const double rp = (n2 * cos_i - n1 * cos_t) / (n2 * cos_i + n1 * cos_t);
    return std::clamp(0.5 * (rs * rs + rp * rp), 0.0, 1.0);
}

double beckmann_density(double theta_h, double roughness) {
    if (!(roughness > 0.0)) throw InvalidParameter("Beckmann roughness must be > 0");
    const double c = std::cos(theta_h);
    const double t = std::tan(theta_h);
    const double m2 = roughness * roughness;
    return std::exp(-(t * t) / m2) / (kPi * m2 * c * c * c * c);
}

}  // namespace eyesynth
