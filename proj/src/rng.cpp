// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/rng.hpp"

#include <algorithm>
#include <cmath>

namespace eyesynth {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, const StreamKey& key) {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ key.image);
    k = splitmix64(k ^ ((static_cast<std::uint64_t>(key.px) << 32) | key.py));
    k = splitmix64(k ^ ((static_cast<std::uint64_t>(key.sample) << 32) | key.purpose));
    key_ = k;
}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return splitmix64(key_ + counter_ * 0xD1B54A32D192ED03ull);
}

double Rng::next() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
}

double Rng::gaussian() {
    double u1 = next();
    while (u1 <= 0.0) u1 = next();
    const double u2 = next();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Vec2 sample_disc(Rng& rng, double radius) {
    const double a = 2.0 * rng.next() - 1.0;
    const double b = 2.0 * rng.next() - 1.0;
    if (a == 0.0 && b == 0.0) return {0.0, 0.0};
    double r, phi;
    if (std::abs(a) > std::abs(b)) {
        r = a;
        phi = (kPi / 4.0) * (b / a);
    } else {
        r = b;
        phi = kPi / 2.0 - (kPi / 4.0) * (a / b);
    }
    // cos/sin can push |p| one ulp past r; clamp keeps the disc contract exact.
    Vec2 p{r * std::cos(phi), r * std::sin(phi)};
    const double len = p.length();
    if (len > std::abs(r)) p = p * (std::abs(r) / len);
    return p * radius;
}

void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b) {
    const double sign = std::copysign(1.0, n.z);
    const double a = -1.0 / (sign + n.z);
    const double c = n.x * n.y * a;
    t = {1.0 + sign * n.x * n.x * a, sign * c, -sign * n.x};
    b = {c, sign + n.y * n.y * a, -n.y};
}

Vec3 sample_cone(Rng& rng, const Vec3& axis, double half_angle) {
    const double cos_max = std::cos(half_angle);
    const double cos_t = 1.0 - rng.next() * (1.0 - cos_max);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = 2.0 * kPi * rng.next();
    Vec3 t, b;
    orthonormal_basis(axis, t, b);
    return normalize(t * (sin_t * std::cos(phi)) + b * (sin_t * std::sin(phi)) + axis * cos_t);
}

Vec3 sample_hemisphere_cosine(Rng& rng, const Vec3& normal) {
    const Vec2 d = sample_disc(rng, 1.0);
    const double z = std::sqrt(std::max(0.0, 1.0 - d.x * d.x - d.y * d.y));
    Vec3 t, b;
    orthonormal_basis(normal, t, b);
    return normalize(t * d.x + b * d.y + normal * z);
}

}  // namespace eyesynth
