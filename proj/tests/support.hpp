// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations for the tests. Nothing here calls the
// library's numeric kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "eyesynth/vec.hpp"

namespace oracle {

using eyesynth::Vec3;

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() /
                ("eyesynth_" + tag + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& child = "") const { return child.empty() ? path_.string() : (path_ / child).string(); }

private:
    std::filesystem::path path_;
};

/// First root of f along origin + t*dir in (t_min, t_max], found by uniform
/// marching for a sign change followed by bisection. `accept` filters roots
/// (e.g. a cap depth restriction).
inline std::optional<double> march_root(const std::function<double(const Vec3&)>& f, const Vec3& origin, const Vec3& dir,
                                        double t_min, double t_max, double step,
                                        const std::function<bool(const Vec3&)>& accept = nullptr) {
    double t0 = t_min;
    double f0 = f(origin + dir * t0);
    for (double t1 = t_min + step; t0 < t_max; t1 += step) {
        t1 = std::min(t1, t_max);
        const double f1 = f(origin + dir * t1);
        if ((f0 < 0.0) != (f1 < 0.0)) {
            double a = t0, b = t1, fa = f0;
            for (int i = 0; i < 200 && b - a > 1e-13; ++i) {
                const double m = 0.5 * (a + b);
                const double fm = f(origin + dir * m);
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            const double root = 0.5 * (a + b);
            if (!accept || accept(origin + dir * root)) return root;
        }
        t0 = t1;
        f0 = f1;
    }
    return std::nullopt;
}

/// Conic x^2 + y^2 + (1+Q) z^2 - 2 R z written out directly.
inline double conic(const Vec3& p, double q, double r) { return p.x * p.x + p.y * p.y + (1.0 + q) * p.z * p.z - 2.0 * r * p.z; }

/// Unpolarized Fresnel reflectance from the s and p amplitude coefficients.
inline double fresnel_reference(double theta_i, double n1, double n2) {
    const double s = n1 / n2 * std::sin(theta_i);
    if (s >= 1.0) return 1.0;
    const double theta_t = std::asin(s);
    const double ci = std::cos(theta_i), ct = std::cos(theta_t);
    const double rs = (n1 * ci - n2 * ct) / (n1 * ci + n2 * ct);
    const double rp = (n2 * ci - n1 * ct) / (n2 * ci + n1 * ct);
    return 0.5 * (rs * rs + rp * rp);
}

/// One-sample Kolmogorov-Smirnov statistic against U[lo, hi].
inline double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = std::clamp((xs[i] - lo) / (hi - lo), 0.0, 1.0);
        d = std::max({d, (i + 1) / n - cdf, cdf - i / n});
    }
    return d;
}

/// Asymptotic KS critical value c(alpha) / sqrt(n).
inline double ks_critical(std::size_t n, double alpha) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// Unit vector uniformly distributed on the sphere (test-side RNG).
inline Vec3 random_unit(std::mt19937_64& gen) {
    std::normal_distribution<double> n(0.0, 1.0);
    const Vec3 v{n(gen), n(gen), n(gen)};
    return v / std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

}  // namespace oracle
