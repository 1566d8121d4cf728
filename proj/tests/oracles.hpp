#pragma once

// Independent brute-force oracles used to pin expected values. These must
// stay naive and must not share code with the library implementations they
// check.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

// Average precision straight from the definition, O(n^2), no sorting: an
// item's rank is 1 + the number of items strictly above it + the number of
// equal-scored items earlier in input order.
inline double average_precision_bruteforce(const std::vector<double>& scores,
                                           const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (int l : labels) {
        if (l != 0) positives++;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 0) continue;
        std::size_t rank = 1;
        std::size_t positives_at_or_above = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const bool above =
                scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
            if (above) {
                rank++;
                if (labels[j] != 0) positives_at_or_above++;
            }
        }
        positives_at_or_above++;  // the item itself
        sum += static_cast<double>(positives_at_or_above) / static_cast<double>(rank);
    }
    return sum / static_cast<double>(positives);
}

// Gaussian kernel regression by direct double loop with the same truncation
// rule as the implementation contract.
inline std::vector<double> gaussian_smooth_bruteforce(const std::vector<double>& t,
                                                      const std::vector<double>& y, double h,
                                                      double truncation) {
    const std::size_t n = t.size();
    std::vector<double> out(n);
    const double radius = truncation * h;
    for (std::size_t i = 0; i < n; ++i) {
        double wsum = 0.0, vsum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::abs(t[i] - t[j]);
            if (d > radius) continue;
            const double w = std::exp(-(d * d) / (2.0 * h * h));
            wsum += w;
            vsum += w * y[j];
        }
        out[i] = vsum / wsum;
    }
    return out;
}

// Minimum spherical k-means inertia over every assignment of n points to k
// non-empty clusters. Centroids are the normalized member means. Exponential;
// callers keep n <= 8, k <= 3.
inline double kmeans_inertia_bruteforce(const std::vector<std::vector<double>>& pts,
                                        std::size_t k) {
    const std::size_t n = pts.size();
    const std::size_t dim = pts.front().size();
    std::vector<std::size_t> labels(n, 0);
    double best = std::numeric_limits<double>::infinity();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= k;
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = c % k;
            c /= k;
        }
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t l : labels) counts[l]++;
        bool ok = true;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) ok = false;
        }
        if (!ok) continue;
        double inertia = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<double> mean(dim, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != j) continue;
                for (std::size_t d = 0; d < dim; ++d) mean[d] += pts[i][d];
            }
            double norm = 0.0;
            for (double m : mean) norm += m * m;
            norm = std::sqrt(norm);
            if (norm <= 1e-15) {
                inertia += static_cast<double>(counts[j]);  // all cosines treated as 0
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != j) continue;
                double cs = 0.0;
                for (std::size_t d = 0; d < dim; ++d) cs += pts[i][d] * mean[d] / norm;
                inertia += 1.0 - cs;
            }
        }
        best = std::min(best, inertia);
    }
    return best;
}

// Best 2-cluster partition of points by brute force, returned as a bitmask of
// membership in cluster 1 for the assignment minimizing inertia.
inline std::size_t best_bipartition(const std::vector<std::vector<double>>& pts) {
    const std::size_t n = pts.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_mask = 0;
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
        std::vector<std::vector<double>> groups[2];
        for (std::size_t i = 0; i < n; ++i) groups[(mask >> i) & 1].push_back(pts[i]);
        double inertia = 0.0;
        for (const auto& g : groups) {
            const std::size_t dim = g.front().size();
            std::vector<double> mean(dim, 0.0);
            for (const auto& p : g) {
                for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
            }
            double norm = 0.0;
            for (double m : mean) norm += m * m;
            norm = std::sqrt(norm);
            for (const auto& p : g) {
                double cs = 0.0;
                for (std::size_t d = 0; d < dim; ++d) cs += p[d] * mean[d] / norm;
                inertia += 1.0 - cs;
            }
        }
        if (inertia < best) {
            best = inertia;
            best_mask = mask;
        }
    }
    return best_mask;
}

}  // namespace oracle
