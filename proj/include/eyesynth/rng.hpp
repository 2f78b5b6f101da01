// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams. A stream is identified by (seed, key); the
// n-th value depends only on those and n, so pixels can be rendered in any
// order on any number of threads and still draw identical numbers.
#pragma once

#include <cstdint>

#include "eyesynth/vec.hpp"

namespace eyesynth {

/// Identifies one independent stream, e.g. (image, pixel x, pixel y, sample).
/// `purpose` separates streams used for unrelated decisions on the same item.
struct StreamKey {
    std::uint64_t image = 0;
    std::uint32_t px = 0;
    std::uint32_t py = 0;
    std::uint32_t sample = 0;
    std::uint32_t purpose = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
    Rng(std::uint64_t seed, const StreamKey& key);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double next();
    double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }
    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Standard normal via Box-Muller (platform independent, unlike std::normal_distribution).
    double gaussian();

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Concentric mapping onto the disc of the given radius.
Vec2 sample_disc(Rng& rng, double radius = 1.0);
/// Uniform direction inside the cone of half-angle `half_angle` around `axis`.
Vec3 sample_cone(Rng& rng, const Vec3& axis, double half_angle);
/// Cosine-weighted direction on the hemisphere around `normal`.
Vec3 sample_hemisphere_cosine(Rng& rng, const Vec3& normal);
/// Any orthonormal pair (t, b) completing `n` to a right-handed basis.
void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b);

}  // namespace eyesynth
