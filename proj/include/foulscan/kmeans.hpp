#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "foulscan/errors.hpp"
#include "foulscan/rng.hpp"
#include "foulscan/vec_math.hpp"

namespace foulscan {

// Result of spherical (cosine) k-means over unit vectors. Centroids are unit
// rows, labels map every point to a cluster and no cluster is empty. The
// inertia history records sum(1 - cos) after every assignment pass and is
// non-increasing.
struct KMeansResult {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;    // k * dim, row-major
    std::vector<std::size_t> labels;  // one entry per point
    std::size_t iterations = 0;
    double inertia = 0.0;
    std::vector<double> inertia_history;
};

namespace detail {

inline std::span<const double> row(std::span<const double> flat, std::size_t i, std::size_t dim) {
    return flat.subspan(i * dim, dim);
}

// Max-cosine assignment, ties to the lowest cluster index.
inline void assign_labels(std::span<const double> pts, std::size_t n, std::size_t dim,
                          std::span<const double> cents, std::size_t k,
                          std::vector<std::size_t>& labels) {
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = row(pts, i, dim);
        std::size_t best = 0;
        double best_cos = dot(p, row(cents, 0, dim));
        for (std::size_t j = 1; j < k; ++j) {
            const double c = dot(p, row(cents, j, dim));
            if (c > best_cos) {
                best_cos = c;
                best = j;
            }
        }
        labels[i] = best;
    }
}

// An empty cluster steals the globally worst-fit point: the one with the
// lowest cosine to its own centroid among clusters that can spare a member,
// ties by lowest point index. The stolen point is relabelled and becomes the
// cluster centroid, so every cluster is non-empty afterwards.
inline void repair_empty_clusters(std::span<const double> pts, std::size_t n, std::size_t dim,
                                  std::vector<double>& cents, std::size_t k,
                                  std::vector<std::size_t>& labels) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) counts[labels[i]]++;
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] != 0) continue;
        std::size_t worst = n;
        double worst_cos = 2.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (counts[labels[i]] < 2) continue;
            const double c =
                dot(row(pts, i, dim), row(std::span<const double>(cents), labels[i], dim));
            if (c < worst_cos) {
                worst_cos = c;
                worst = i;
            }
        }
        if (worst == n) continue;  // fewer points than clusters; caller prevents this
        counts[labels[worst]]--;
        labels[worst] = j;
        counts[j] = 1;
        std::copy_n(row(pts, worst, dim).begin(), dim, cents.begin() + j * dim);
    }
}

// Centroid <- mean of members scaled back to the unit sphere. A cluster whose
// member sum cancels exactly keeps its previous centroid.
inline void update_centroids(std::span<const double> pts, std::size_t n, std::size_t dim,
                             const std::vector<std::size_t>& labels, std::size_t k,
                             std::vector<double>& cents) {
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = labels[i];
        const auto p = row(pts, i, dim);
        double* s = sums.data() + j * dim;
        for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
        counts[j]++;
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0) continue;
        const auto sj = row(std::span<const double>(sums), j, dim);
        const double nm = l2_norm(sj);
        if (nm <= 1e-12) continue;
        for (std::size_t d = 0; d < dim; ++d) cents[j * dim + d] = sj[d] / nm;
    }
}

inline double inertia_of(std::span<const double> pts, std::size_t n, std::size_t dim,
                         std::span<const double> cents, const std::vector<std::size_t>& labels) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += 1.0 - dot(row(pts, i, dim), row(cents, labels[i], dim));
    }
    return s;
}

// Lloyd iterations from seeded centroids. Stops when labels stop changing or
// after max_iter passes. Centroids are recomputed from the final labels so the
// centroid/member-mean invariant holds on every exit path.
inline KMeansResult lloyd(std::span<const double> pts, std::size_t n, std::size_t dim,
                          std::vector<double> cents, std::size_t k, std::size_t max_iter) {
    KMeansResult r;
    r.k = k;
    r.dim = dim;
    assign_labels(pts, n, dim, cents, k, r.labels);
    repair_empty_clusters(pts, n, dim, cents, k, r.labels);
    r.inertia_history.push_back(inertia_of(pts, n, dim, cents, r.labels));

    std::vector<std::size_t> next;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        r.iterations = it;
        update_centroids(pts, n, dim, r.labels, k, cents);
        assign_labels(pts, n, dim, cents, k, next);
        repair_empty_clusters(pts, n, dim, cents, k, next);
        r.inertia_history.push_back(inertia_of(pts, n, dim, cents, next));
        const bool converged = (next == r.labels);
        r.labels = next;
        if (converged) break;
    }
    update_centroids(pts, n, dim, r.labels, k, cents);
    r.centroids = std::move(cents);
    r.inertia = inertia_of(pts, n, dim, r.centroids, r.labels);
    r.inertia_history.push_back(r.inertia);
    return r;
}

// Farthest-first traversal seeded at point 0: the next seed is the point whose
// best cosine to the chosen seeds is smallest, ties by lowest index.
inline std::vector<double> farthest_first_seeds(std::span<const double> pts, std::size_t n,
                                                std::size_t dim, std::size_t k) {
    std::vector<double> cents(k * dim);
    std::vector<char> chosen(n, 0);
    std::vector<double> max_cos(n);
    std::copy_n(pts.begin(), dim, cents.begin());
    chosen[0] = 1;
    for (std::size_t i = 0; i < n; ++i) max_cos[i] = dot(row(pts, i, dim), row(pts, 0, dim));
    for (std::size_t j = 1; j < k; ++j) {
        std::size_t next = n;
        double next_val = 3.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!chosen[i] && max_cos[i] < next_val) {
                next_val = max_cos[i];
                next = i;
            }
        }
        chosen[next] = 1;
        std::copy_n(pts.begin() + static_cast<std::ptrdiff_t>(next * dim), dim,
                    cents.begin() + static_cast<std::ptrdiff_t>(j * dim));
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            max_cos[i] = std::max(max_cos[i], dot(row(pts, i, dim), row(pts, next, dim)));
        }
    }
    return cents;
}

// k-means++ seeding on cosine distance (1 - cos) with squared weighting,
// driven by the portable mt19937_64 mapping so a seed value pins the fit.
inline std::vector<double> kmeanspp_seeds(std::span<const double> pts, std::size_t n,
                                          std::size_t dim, std::size_t k, std::mt19937_64& rng) {
    std::vector<double> cents(k * dim);
    std::vector<char> chosen(n, 0);
    const std::size_t first = pick_index(rng, n);
    chosen[first] = 1;
    std::copy_n(pts.begin() + static_cast<std::ptrdiff_t>(first * dim), dim, cents.begin());
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::max(0.0, 1.0 - dot(row(pts, i, dim), row(pts, first, dim)));
    }
    for (std::size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!chosen[i]) total += dist[i] * dist[i];
        }
        std::size_t next = n;
        if (total > 0.0) {
            const double u = unit_double(rng) * total;
            double acc = 0.0;
            std::size_t last_unchosen = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                last_unchosen = i;
                acc += dist[i] * dist[i];
                if (u < acc) {
                    next = i;
                    break;
                }
            }
            if (next == n) next = last_unchosen;  // rounding pushed u to the total
        } else {
            // all remaining points coincide with chosen seeds; take the lowest index
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) {
                    next = i;
                    break;
                }
            }
        }
        chosen[next] = 1;
        std::copy_n(pts.begin() + static_cast<std::ptrdiff_t>(next * dim), dim,
                    cents.begin() + static_cast<std::ptrdiff_t>(j * dim));
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            dist[i] = std::min(dist[i], std::max(0.0, 1.0 - dot(row(pts, i, dim), row(pts, next, dim))));
        }
    }
    return cents;
}

}  // namespace detail

// Seeded spherical k-means (k-means++ init, Lloyd updates, cosine assignment).
// Deterministic for a fixed seed.
inline KMeansResult spherical_kmeans(std::span<const double> points, std::size_t n,
                                     std::size_t dim, std::size_t m, std::uint64_t seed,
                                     std::size_t max_iter = 100) {
    if (n == 0) raise(Errc::EmptySet, "no points to cluster");
    if (m < 1 || m > n) {
        raise(Errc::InvalidK, "cluster count m=" + std::to_string(m) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
    if (max_iter < 1) raise(Errc::InvalidArgument, "max_iter must be >= 1");
    std::mt19937_64 rng(seed);
    auto cents = detail::kmeanspp_seeds(points, n, dim, m, rng);
    return detail::lloyd(points, n, dim, std::move(cents), m, max_iter);
}

inline KMeansResult spherical_kmeans(const std::vector<std::vector<double>>& points, std::size_t m,
                                     std::uint64_t seed, std::size_t max_iter = 100) {
    if (points.empty()) raise(Errc::EmptySet, "no points to cluster");
    const std::size_t dim = points.front().size();
    std::vector<double> flat;
    flat.reserve(points.size() * dim);
    for (const auto& p : points) {
        if (p.size() != dim) raise(Errc::DimMismatch, "points have mixed dimensions");
        flat.insert(flat.end(), p.begin(), p.end());
    }
    return spherical_kmeans(flat, points.size(), dim, m, seed, max_iter);
}

}  // namespace foulscan
