#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "foulscan/errors.hpp"

namespace foulscan {

inline bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// Four accumulators break the dependence chain; the summation order is still
// fixed, so results stay bit-deterministic.
inline double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

inline double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// Unit-normalizes a raw embedding: v / ||v||.
// Throws ZeroVector when the norm is indistinguishable from zero and
// NonFinite when any component is NaN/Inf.
inline std::vector<double> normalize_embedding(std::span<const double> v) {
    if (!all_finite(v)) raise(Errc::NonFinite, "embedding has NaN/Inf components");
    const double n = l2_norm(v);
    if (n <= 1e-12) raise(Errc::ZeroVector, "embedding norm below 1e-12");
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

inline void normalize_in_place(std::span<double> v) {
    if (!all_finite(v)) raise(Errc::NonFinite, "embedding has NaN/Inf components");
    const double n = l2_norm(v);
    if (n <= 1e-12) raise(Errc::ZeroVector, "embedding norm below 1e-12");
    for (double& x : v) x /= n;
}

}  // namespace foulscan
