#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "foulscan/errors.hpp"
#include "foulscan/kmeans.hpp"
#include "foulscan/metrics.hpp"
#include "foulscan/model.hpp"
#include "foulscan/version.hpp"

namespace foulscan {

enum class Split { train, validation, test };

inline std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "val";
        case Split::test: return "test";
    }
    return "train";
}

struct FrameLabel {
    bool fouling_present = false;
    std::optional<int> slof;  // 0, 1 or 2 when known
    Split split = Split::train;
};

struct LabeledEmbeddingSet {
    std::vector<EmbeddedFrame> frames;
    std::vector<FrameLabel> labels;

    void validate() const {
        if (frames.size() != labels.size()) {
            raise(Errc::LengthMismatch, "frames and labels differ in length");
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto& l = labels[i];
            if (!l.slof) continue;
            if (*l.slof < 0 || *l.slof > 2) {
                raise(Errc::OutOfRange, "slof rank outside 0..2 for frame " + frames[i].frame_id());
            }
            // rank 0 means absent; ranks 1 and 2 mean present
            if ((*l.slof == 0) == l.fouling_present) {
                raise(Errc::LabelInconsistent,
                      "slof rank contradicts presence flag for frame " + frames[i].frame_id());
            }
        }
    }
};

struct FitConfig {
    std::size_t prototypes_per_class = 10;
    std::size_t components_per_image = 5;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t refine_rounds = 3;
    std::size_t retain_min = 1;  // components per positive image reserved as negative
    double temperature = 0.1;
    std::size_t max_iter = 100;
    std::string positive_class = "fouling";
    std::string negative_class = "no_fouling";

    void validate() const {
        if (prototypes_per_class < 1) raise(Errc::InvalidArgument, "prototypes_per_class must be >= 1");
        if (components_per_image < 1) raise(Errc::InvalidK, "components_per_image must be >= 1");
        if (seeds.empty()) raise(Errc::InvalidArgument, "seed list must be non-empty");
        if (retain_min < 1 || retain_min >= components_per_image) {
            raise(Errc::InvalidArgument, "retain_min must be >= 1 and < components_per_image");
        }
        if (!(temperature > 0.0)) raise(Errc::OutOfRange, "temperature must be positive");
        if (max_iter < 1) raise(Errc::InvalidArgument, "max_iter must be >= 1");
    }
};

struct SeedScore {
    std::uint64_t seed = 0;
    double validation_ap = 0.0;
};

struct FitReport {
    std::vector<SeedScore> per_seed;
    std::uint64_t chosen_seed = 0;
    std::size_t negative_pool_size = 0;  // of the chosen fit, final round
    std::size_t fouling_pool_size = 0;
    std::size_t rounds = 0;
};

// One clustered component lifted out of a frame, with enough provenance to
// trace it back for exemplar visualisation.
struct PooledComponent {
    std::vector<double> embedding;  // unit centroid
    std::string frame_id;
    std::size_t frame_index = 0;
    std::size_t component_index = 0;
    bool fouling_present = false;
};

// Clusters every frame in the set and flattens the components into one pool,
// ordered by frame then component index.
inline std::vector<PooledComponent> collect_components(const LabeledEmbeddingSet& set,
                                                       std::size_t k, std::size_t max_iter = 100) {
    set.validate();
    if (set.frames.empty()) raise(Errc::EmptyDataset, "no frames to collect components from");
    std::vector<PooledComponent> pool;
    pool.reserve(set.frames.size() * k);
    for (std::size_t f = 0; f < set.frames.size(); ++f) {
        const auto& frame = set.frames[f];
        if (k > frame.patch_count()) {
            raise(Errc::InvalidK, "k=" + std::to_string(k) + " exceeds patch count " +
                                      std::to_string(frame.patch_count()) + " of frame " +
                                      frame.frame_id());
        }
        const auto assignment = cluster_components(frame, k, max_iter);
        for (std::size_t c = 0; c < assignment.k; ++c) {
            PooledComponent pc;
            pc.embedding.assign(assignment.centroids.begin() + static_cast<std::ptrdiff_t>(c * assignment.dim),
                                assignment.centroids.begin() + static_cast<std::ptrdiff_t>((c + 1) * assignment.dim));
            pc.frame_id = frame.frame_id();
            pc.frame_index = f;
            pc.component_index = c;
            pc.fouling_present = set.labels[f].fouling_present;
            pool.push_back(std::move(pc));
        }
    }
    return pool;
}

// Splits the components of positive images: per image, the retain_min
// components most similar to any negative prototype stay in the negative
// pool (every image is assumed to contain some clean content); the rest join
// the fouling pool. Ranking ties resolve by component index.
inline std::pair<std::vector<PooledComponent>, std::vector<PooledComponent>>
partition_positive_components(const std::vector<PooledComponent>& positive_pool,
                              const std::vector<std::vector<double>>& negative_prototypes,
                              std::size_t retain_min) {
    if (negative_prototypes.empty()) {
        raise(Errc::InvalidArgument, "negative prototypes must be fitted first");
    }
    std::vector<PooledComponent> fouling, retained;
    std::size_t begin = 0;
    while (begin < positive_pool.size()) {
        std::size_t end = begin + 1;
        while (end < positive_pool.size() &&
               positive_pool[end].frame_index == positive_pool[begin].frame_index) {
            end++;
        }
        const std::size_t count = end - begin;
        if (count <= retain_min) {
            raise(Errc::InsufficientComponents,
                  "image " + positive_pool[begin].frame_id + " has " + std::to_string(count) +
                      " components, need more than retain_min=" + std::to_string(retain_min));
        }
        std::vector<std::size_t> order(count);
        std::iota(order.begin(), order.end(), begin);
        std::vector<double> neg_sim(count);
        for (std::size_t i = 0; i < count; ++i) {
            double best = -2.0;
            for (const auto& p : negative_prototypes) {
                best = std::max(best, dot(positive_pool[begin + i].embedding, p));
            }
            neg_sim[i] = best;
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return neg_sim[a - begin] > neg_sim[b - begin];
        });
        for (std::size_t r = 0; r < count; ++r) {
            if (r < retain_min) {
                retained.push_back(positive_pool[order[r]]);
            } else {
                fouling.push_back(positive_pool[order[r]]);
            }
        }
        begin = end;
    }
    return {std::move(fouling), std::move(retained)};
}

namespace detail {

inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

inline std::string fit_config_digest(const FitConfig& cfg) {
    std::string s = "M=" + std::to_string(cfg.prototypes_per_class) +
                    ";k=" + std::to_string(cfg.components_per_image) + ";seeds=";
    for (auto sd : cfg.seeds) s += std::to_string(sd) + ",";
    s += ";rounds=" + std::to_string(cfg.refine_rounds) +
         ";retain=" + std::to_string(cfg.retain_min) + ";tau=" + std::to_string(cfg.temperature) +
         ";max_iter=" + std::to_string(cfg.max_iter) + ";pos=" + cfg.positive_class +
         ";neg=" + cfg.negative_class;
    return fnv1a_hex(s);
}

inline std::vector<std::vector<double>> unflatten(const KMeansResult& km) {
    std::vector<std::vector<double>> out(km.k);
    for (std::size_t c = 0; c < km.k; ++c) {
        out[c].assign(km.centroids.begin() + static_cast<std::ptrdiff_t>(c * km.dim),
                      km.centroids.begin() + static_cast<std::ptrdiff_t>((c + 1) * km.dim));
    }
    return out;
}

inline std::vector<std::vector<double>> cluster_pool(const std::vector<PooledComponent>& pool,
                                                     std::size_t m, std::uint64_t seed,
                                                     std::size_t max_iter) {
    std::vector<std::vector<double>> pts;
    pts.reserve(pool.size());
    for (const auto& pc : pool) pts.push_back(pc.embedding);
    const std::size_t m_eff = std::min(m, pts.size());
    return unflatten(spherical_kmeans(pts, m_eff, seed, max_iter));
}

struct SingleFit {
    PrototypeBank bank;
    std::size_t negative_pool_size = 0;
    std::size_t fouling_pool_size = 0;
};

// One seed's fit: negative prototypes from negative-image components, then an
// EM-like loop that partitions positive-image components against the current
// negative prototypes and refits both classes.
inline SingleFit fit_one_seed(const std::vector<PooledComponent>& negative_pool,
                              const std::vector<PooledComponent>& positive_pool,
                              const FitConfig& cfg, std::uint64_t seed) {
    auto negative_protos =
        cluster_pool(negative_pool, cfg.prototypes_per_class, seed, cfg.max_iter);
    std::vector<std::vector<double>> fouling_protos;
    std::size_t neg_size = negative_pool.size();
    std::size_t foul_size = 0;
    for (std::size_t round = 0; round <= cfg.refine_rounds; ++round) {
        auto [fouling, retained] =
            partition_positive_components(positive_pool, negative_protos, cfg.retain_min);
        if (round > 0) {
            std::vector<PooledComponent> combined = negative_pool;
            combined.insert(combined.end(), retained.begin(), retained.end());
            negative_protos = cluster_pool(combined, cfg.prototypes_per_class, seed, cfg.max_iter);
            neg_size = combined.size();
        } else {
            neg_size = negative_pool.size() + retained.size();
        }
        fouling_protos = cluster_pool(fouling, cfg.prototypes_per_class, seed, cfg.max_iter);
        foul_size = fouling.size();
    }
    BankMetadata meta;
    meta.fit_seed = seed;
    meta.config_digest = fit_config_digest(cfg);
    meta.created_by = std::string(kToolName) + "/" + kVersion;
    meta.components_per_image = cfg.components_per_image;
    std::vector<PrototypeClass> classes;
    classes.push_back({cfg.positive_class, false, std::move(fouling_protos)});
    classes.push_back({cfg.negative_class, true, std::move(negative_protos)});
    return {PrototypeBank(std::move(classes), cfg.temperature, std::move(meta)), neg_size,
            foul_size};
}

}  // namespace detail

// Fits a prototype bank per seed, scores each candidate by validation-split
// average precision of the frame-level confidence, and returns the best bank
// (ties to the lowest seed). When no frame is tagged validation, the last 20%
// of the train split (by frame order) is held out.
inline std::pair<PrototypeBank, FitReport> fit_bank(const LabeledEmbeddingSet& set,
                                                    const FitConfig& cfg) {
    cfg.validate();
    set.validate();
    if (set.frames.empty()) raise(Errc::EmptyDataset, "no frames to fit from");

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < set.frames.size(); ++i) {
        if (set.labels[i].split == Split::train) train_idx.push_back(i);
        if (set.labels[i].split == Split::validation) val_idx.push_back(i);
    }
    if (val_idx.empty()) {
        const std::size_t n_val = train_idx.size() / 5;
        if (n_val == 0) {
            raise(Errc::MissingClassData,
                  "validation split is empty and the train split is too small to hold out 20%");
        }
        val_idx.assign(train_idx.end() - static_cast<std::ptrdiff_t>(n_val), train_idx.end());
        train_idx.resize(train_idx.size() - n_val);
    }

    LabeledEmbeddingSet train_set;
    bool has_pos = false, has_neg = false;
    for (std::size_t i : train_idx) {
        train_set.frames.push_back(set.frames[i]);
        train_set.labels.push_back(set.labels[i]);
        (set.labels[i].fouling_present ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
        raise(Errc::MissingClassData, "train split needs at least one positive and one negative");
    }

    const auto pool = collect_components(train_set, cfg.components_per_image, cfg.max_iter);
    std::vector<PooledComponent> negative_pool, positive_pool;
    for (const auto& pc : pool) {
        (pc.fouling_present ? positive_pool : negative_pool).push_back(pc);
    }

    std::vector<double> val_scores(val_idx.size());
    std::vector<int> val_labels(val_idx.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
        val_labels[i] = set.labels[val_idx[i]].fouling_present ? 1 : 0;
    }

    FitReport report;
    report.rounds = 1 + cfg.refine_rounds;
    std::optional<detail::SingleFit> best;
    double best_ap = -1.0;
    std::uint64_t best_seed = 0;
    const InferenceConfig eval_cfg{cfg.components_per_image, cfg.max_iter, 0.5};
    for (std::uint64_t seed : cfg.seeds) {
        auto fit = detail::fit_one_seed(negative_pool, positive_pool, cfg, seed);
        for (std::size_t i = 0; i < val_idx.size(); ++i) {
            val_scores[i] =
                predict_frame(set.frames[val_idx[i]], fit.bank, eval_cfg).target_confidence;
        }
        const double ap = average_precision(val_scores, val_labels);
        report.per_seed.push_back({seed, ap});
        if (ap > best_ap || (ap == best_ap && seed < best_seed)) {
            best_ap = ap;
            best_seed = seed;
            best = std::move(fit);
        }
    }
    report.chosen_seed = best_seed;
    report.negative_pool_size = best->negative_pool_size;
    report.fouling_pool_size = best->fouling_pool_size;
    return {std::move(best->bank), std::move(report)};
}

struct ExemplarRef {
    std::string frame_id;
    std::size_t component_index = 0;
    double cosine = 0.0;
};

// [class][prototype][rank], cosine descending.
using ExemplarTable = std::vector<std::vector<std::vector<ExemplarRef>>>;

// For every prototype, the n training-split components with the highest
// cosine to it, ties by pool order (frame order, then component index).
inline ExemplarTable exemplars(const PrototypeBank& bank, const LabeledEmbeddingSet& set,
                               std::size_t n = 5) {
    if (n < 1) raise(Errc::InvalidArgument, "exemplar count must be >= 1");
    set.validate();
    LabeledEmbeddingSet train;
    for (std::size_t i = 0; i < set.frames.size(); ++i) {
        if (set.labels[i].split == Split::train) {
            train.frames.push_back(set.frames[i]);
            train.labels.push_back(set.labels[i]);
        }
    }
    if (train.frames.empty()) raise(Errc::EmptyDataset, "no training frames for exemplars");
    const auto pool =
        collect_components(train, bank.metadata().components_per_image, 100);

    ExemplarTable table(bank.n_classes());
    std::vector<std::size_t> order(pool.size());
    std::vector<double> sims(pool.size());
    for (std::size_t y = 0; y < bank.n_classes(); ++y) {
        const auto& cls = bank.classes()[y];
        table[y].resize(cls.prototypes.size());
        for (std::size_t p = 0; p < cls.prototypes.size(); ++p) {
            for (std::size_t i = 0; i < pool.size(); ++i) {
                sims[i] = dot(pool[i].embedding, cls.prototypes[p]);
            }
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
            const std::size_t take = std::min(n, pool.size());
            auto& out = table[y][p];
            out.reserve(take);
            for (std::size_t r = 0; r < take; ++r) {
                out.push_back({pool[order[r]].frame_id, pool[order[r]].component_index,
                               sims[order[r]]});
            }
        }
    }
    return table;
}

}  // namespace foulscan
