#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "foulscan/errors.hpp"

namespace foulscan {

// Nadaraya-Watson Gaussian kernel smoothing evaluated at the input timestamps:
//   y_hat(t_i) = sum_j w_ij y_j / sum_j w_ij,  w_ij = exp(-(t_i-t_j)^2 / 2h^2)
// restricted to |t_i - t_j| <= truncation * h. The window always contains the
// point itself, so the estimate is a convex combination of nearby values.
inline std::vector<double> gaussian_smooth(std::span<const double> timestamps,
                                           std::span<const double> values, double bandwidth,
                                           double truncation = 4.0) {
    if (timestamps.size() != values.size()) {
        raise(Errc::LengthMismatch, "timestamps and values differ in length");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        raise(Errc::OutOfRange, "bandwidth must be positive and finite");
    }
    if (!(truncation > 0.0) || !std::isfinite(truncation)) {
        raise(Errc::OutOfRange, "truncation must be positive and finite");
    }
    const std::size_t n = timestamps.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(timestamps[i] > timestamps[i - 1])) {
            raise(Errc::NonMonotoneTime, "timestamps must be strictly increasing");
        }
    }
    const double radius = truncation * bandwidth;
    const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    std::vector<double> out(n);
    std::size_t lo = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = timestamps[i];
        while (t - timestamps[lo] > radius) lo++;
        double wsum = 0.0, vsum = 0.0;
        for (std::size_t j = lo; j < n && timestamps[j] - t <= radius; ++j) {
            const double d = t - timestamps[j];
            const double w = std::exp(-d * d * inv_two_h2);
            wsum += w;
            vsum += w * values[j];
        }
        out[i] = vsum / wsum;
    }
    return out;
}

}  // namespace foulscan
