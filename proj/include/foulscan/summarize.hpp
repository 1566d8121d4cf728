#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "foulscan/errors.hpp"
#include "foulscan/kmeans.hpp"
#include "foulscan/vec_math.hpp"

namespace foulscan {

struct SummaryEntry {
    std::string frame_id;
    double timestamp_s = 0.0;
    std::size_t cluster = 0;
};

struct SummaryGroup {
    bool fouling_present = false;
    std::vector<SummaryEntry> entries;  // ordered by timestamp
};

struct SummarySelection {
    SummaryGroup fouling;
    SummaryGroup no_fouling;
    std::size_t per_group = 8;
};

struct FrameKey {
    std::string frame_id;
    double timestamp_s = 0.0;
};

// SKMPS: clusters the normalized global embeddings with seeded spherical
// k-means and picks the member frame closest to each cluster centre (ties by
// earliest timestamp). Selections are real frames, never synthetic centroids.
inline std::vector<SummaryEntry> skmps(const std::vector<std::vector<double>>& globals,
                                       const std::vector<FrameKey>& keys, std::size_t c,
                                       std::uint64_t seed, std::size_t max_iter = 100) {
    if (globals.empty()) raise(Errc::EmptySet, "no frames to summarize");
    if (globals.size() != keys.size()) {
        raise(Errc::LengthMismatch, "globals and frame keys differ in length");
    }
    if (c < 1 || c > globals.size()) {
        raise(Errc::InvalidK, "cluster count c=" + std::to_string(c) + " outside [1, " +
                                  std::to_string(globals.size()) + "]");
    }
    std::vector<std::vector<double>> normalized;
    normalized.reserve(globals.size());
    for (const auto& g : globals) normalized.push_back(normalize_embedding(g));
    const auto km = spherical_kmeans(normalized, c, seed, max_iter);

    // medoid per cluster: max cosine to the centroid, ties by earliest timestamp
    std::vector<std::size_t> medoid(km.k, globals.size());
    std::vector<double> best(km.k, -2.0);
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        const std::size_t j = km.labels[i];
        const double cs = dot(normalized[i], detail::row(km.centroids, j, km.dim));
        const bool better = cs > best[j] ||
                            (cs == best[j] && medoid[j] != globals.size() &&
                             keys[i].timestamp_s < keys[medoid[j]].timestamp_s);
        if (medoid[j] == globals.size() || better) {
            best[j] = cs;
            medoid[j] = i;
        }
    }
    std::vector<SummaryEntry> out;
    out.reserve(km.k);
    for (std::size_t j = 0; j < km.k; ++j) {
        out.push_back({keys[medoid[j]].frame_id, keys[medoid[j]].timestamp_s, j});
    }
    std::stable_sort(out.begin(), out.end(), [](const SummaryEntry& a, const SummaryEntry& b) {
        return a.timestamp_s < b.timestamp_s;
    });
    return out;
}

}  // namespace foulscan
