#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "foulscan/errors.hpp"
#include "foulscan/kmeans.hpp"
#include "foulscan/vec_math.hpp"

namespace foulscan {

// One frame of backbone output: a grid of per-patch embeddings plus the
// whole-image embedding, all unit-normalized on construction. Immutable after
// construction and safe to share across threads.
class EmbeddedFrame {
  public:
    EmbeddedFrame(std::string frame_id, double timestamp_s, std::size_t grid_h,
                  std::size_t grid_w, std::size_t dim, std::vector<double> patch_embeddings,
                  std::vector<double> global_embedding)
        : frame_id_(std::move(frame_id)),
          timestamp_s_(timestamp_s),
          grid_h_(grid_h),
          grid_w_(grid_w),
          dim_(dim),
          patches_(std::move(patch_embeddings)),
          global_(std::move(global_embedding)) {
        if (grid_h_ < 1 || grid_w_ < 1) raise(Errc::InvalidArgument, "grid dimensions must be >= 1");
        if (dim_ < 2) raise(Errc::InvalidArgument, "embedding dimension must be >= 2");
        if (!std::isfinite(timestamp_s_) || timestamp_s_ < 0.0) {
            raise(Errc::OutOfRange, "timestamp must be finite and >= 0, frame " + frame_id_);
        }
        if (patches_.size() != grid_h_ * grid_w_ * dim_) {
            raise(Errc::LengthMismatch, "patch payload size does not match grid*dim, frame " +
                                            frame_id_);
        }
        if (global_.size() != dim_) {
            raise(Errc::LengthMismatch, "global embedding size does not match dim, frame " +
                                            frame_id_);
        }
        for (std::size_t i = 0; i < patch_count(); ++i) {
            normalize_in_place(std::span<double>(patches_).subspan(i * dim_, dim_));
        }
        normalize_in_place(global_);
    }

    const std::string& frame_id() const { return frame_id_; }
    double timestamp_s() const { return timestamp_s_; }
    std::size_t grid_h() const { return grid_h_; }
    std::size_t grid_w() const { return grid_w_; }
    std::size_t dim() const { return dim_; }
    std::size_t patch_count() const { return grid_h_ * grid_w_; }
    std::span<const double> patches() const { return patches_; }
    std::span<const double> patch(std::size_t i) const {
        return std::span<const double>(patches_).subspan(i * dim_, dim_);
    }
    std::span<const double> global() const { return global_; }

  private:
    std::string frame_id_;
    double timestamp_s_ = 0.0;
    std::size_t grid_h_ = 0, grid_w_ = 0, dim_ = 0;
    std::vector<double> patches_;
    std::vector<double> global_;
};

struct PrototypeClass {
    std::string name;
    bool is_background = false;
    std::vector<std::vector<double>> prototypes;  // unit vectors, shared dim
};

struct BankMetadata {
    std::uint64_t fit_seed = 0;
    std::string config_digest;
    std::string created_by;
    std::size_t components_per_image = 5;  // clustering width used when fitting
};

// Named classes with unit-norm prototype vectors; exactly one class is the
// background ("no finding") class. Prototypes are validated, not altered, so
// serialized banks round-trip bit-exactly.
class PrototypeBank {
  public:
    PrototypeBank(std::vector<PrototypeClass> classes, double temperature,
                  BankMetadata metadata = {})
        : classes_(std::move(classes)), temperature_(temperature), metadata_(std::move(metadata)) {
        if (classes_.empty()) raise(Errc::InvalidArgument, "bank needs at least one class");
        if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
            raise(Errc::OutOfRange, "temperature must be positive and finite");
        }
        std::size_t background_count = 0;
        dim_ = 0;
        for (const auto& cls : classes_) {
            if (cls.is_background) background_count++;
            if (cls.prototypes.empty()) {
                raise(Errc::InvalidArgument, "class '" + cls.name + "' has no prototypes");
            }
            for (const auto& p : cls.prototypes) {
                if (dim_ == 0) dim_ = p.size();
                if (p.size() != dim_) {
                    raise(Errc::DimMismatch, "prototype dimension mismatch in class '" + cls.name +
                                                 "'");
                }
                if (!all_finite(p)) {
                    raise(Errc::NonFinite, "prototype has NaN/Inf in class '" + cls.name + "'");
                }
                if (std::abs(l2_norm(p) - 1.0) > 1e-6) {
                    raise(Errc::InvalidArgument, "prototype in class '" + cls.name +
                                                     "' is not unit norm within 1e-6");
                }
            }
        }
        if (background_count != 1) {
            raise(Errc::InvalidArgument, "bank must have exactly one background class");
        }
        if (dim_ < 2) raise(Errc::InvalidArgument, "bank dimension must be >= 2");
    }

    const std::vector<PrototypeClass>& classes() const { return classes_; }
    std::size_t n_classes() const { return classes_.size(); }
    double temperature() const { return temperature_; }
    std::size_t dim() const { return dim_; }
    const BankMetadata& metadata() const { return metadata_; }

    std::size_t background_index() const {
        for (std::size_t i = 0; i < classes_.size(); ++i) {
            if (classes_[i].is_background) return i;
        }
        return 0;  // unreachable, ctor guarantees one background
    }

    // The designated target class: the first non-background class in bank
    // order. Image-level confidence and coverage reported downstream refer to
    // this class.
    std::size_t target_index() const {
        for (std::size_t i = 0; i < classes_.size(); ++i) {
            if (!classes_[i].is_background) return i;
        }
        raise(Errc::InvalidArgument, "bank has no foreground class");
    }

    std::size_t total_prototypes() const {
        std::size_t t = 0;
        for (const auto& c : classes_) t += c.prototypes.size();
        return t;
    }

  private:
    std::vector<PrototypeClass> classes_;
    double temperature_ = 0.1;
    BankMetadata metadata_;
    std::size_t dim_ = 0;
};

// Per-patch and per-component class distributions for one frame, plus the
// image-level confidences and coverage fractions derived from them.
struct ClassConfidenceMap {
    std::size_t n_classes = 0;
    std::size_t components = 0;
    std::size_t patches = 0;
    std::vector<double> component_scores;  // components x n_classes, rows sum to 1
    std::vector<double> patch_scores;      // patches x n_classes, inherited from components
    std::vector<double> image_confidence;  // per class: max over patch scores
    std::vector<double> coverage;          // per class: fraction of patches >= threshold

    std::span<const double> component_row(std::size_t c) const {
        return std::span<const double>(component_scores).subspan(c * n_classes, n_classes);
    }
    std::span<const double> patch_row(std::size_t i) const {
        return std::span<const double>(patch_scores).subspan(i * n_classes, n_classes);
    }
};

using ComponentAssignment = KMeansResult;

// Clusters a frame's patches into component features. Fully deterministic:
// farthest-first seeds starting at patch 0, max-cosine assignment with
// lowest-index tie-breaks, empty clusters reseeded from the worst-fit patch.
inline ComponentAssignment cluster_components(const EmbeddedFrame& frame, std::size_t k,
                                              std::size_t max_iter) {
    const std::size_t n = frame.patch_count();
    if (k < 1 || k > n) {
        raise(Errc::InvalidK, "component count k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(n) + "] for frame " + frame.frame_id());
    }
    if (max_iter < 1) raise(Errc::InvalidArgument, "max_iter must be >= 1");
    auto cents = detail::farthest_first_seeds(frame.patches(), n, frame.dim(), k);
    return detail::lloyd(frame.patches(), n, frame.dim(), std::move(cents), k, max_iter);
}

// Scores each component centroid against every prototype: softmax over
// exp(cos/tau) across all prototypes, summed per class. The per-class sums
// accumulate in sorted order so the result is bit-identical under any
// permutation of a class's prototypes.
inline std::vector<double> score_components(const ComponentAssignment& assignment,
                                            const PrototypeBank& bank) {
    if (assignment.dim != bank.dim()) {
        raise(Errc::DimMismatch, "component dim " + std::to_string(assignment.dim) +
                                     " does not match bank dim " + std::to_string(bank.dim()));
    }
    const std::size_t k = assignment.k;
    const std::size_t nc = bank.n_classes();
    const double tau = bank.temperature();
    std::vector<double> out(k * nc);
    std::vector<double> sims(bank.total_prototypes());
    std::vector<double> terms;
    std::vector<double> class_sums(nc);
    for (std::size_t c = 0; c < k; ++c) {
        const auto cent = detail::row(assignment.centroids, c, assignment.dim);
        double smax = -2.0;
        std::size_t s_idx = 0;
        for (const auto& cls : bank.classes()) {
            for (const auto& p : cls.prototypes) {
                const double s = dot(cent, p);
                sims[s_idx++] = s;
                smax = std::max(smax, s);
            }
        }
        double denom = 0.0;
        s_idx = 0;
        for (std::size_t y = 0; y < nc; ++y) {
            terms.clear();
            for (std::size_t p = 0; p < bank.classes()[y].prototypes.size(); ++p) {
                terms.push_back(std::exp((sims[s_idx++] - smax) / tau));
            }
            std::sort(terms.begin(), terms.end());
            double sum = 0.0;
            for (double t : terms) sum += t;
            class_sums[y] = sum;
            denom += sum;
        }
        for (std::size_t y = 0; y < nc; ++y) out[c * nc + y] = class_sums[y] / denom;
    }
    return out;
}

// Expands component scores to the patch grid and derives image confidence
// (max over patches, exact by construction) and coverage (fraction of patches
// at or above the threshold).
inline ClassConfidenceMap confidence_map(const EmbeddedFrame& frame,
                                         const ComponentAssignment& assignment,
                                         const PrototypeBank& bank, double coverage_threshold) {
    if (!(coverage_threshold >= 0.0 && coverage_threshold <= 1.0)) {
        raise(Errc::OutOfRange, "coverage threshold must be in [0,1]");
    }
    ClassConfidenceMap map;
    map.n_classes = bank.n_classes();
    map.components = assignment.k;
    map.patches = frame.patch_count();
    map.component_scores = score_components(assignment, bank);
    map.patch_scores.resize(map.patches * map.n_classes);
    for (std::size_t i = 0; i < map.patches; ++i) {
        const std::size_t c = assignment.labels[i];
        std::copy_n(map.component_scores.begin() + static_cast<std::ptrdiff_t>(c * map.n_classes),
                    map.n_classes,
                    map.patch_scores.begin() + static_cast<std::ptrdiff_t>(i * map.n_classes));
    }
    map.image_confidence.assign(map.n_classes, 0.0);
    map.coverage.assign(map.n_classes, 0.0);
    for (std::size_t y = 0; y < map.n_classes; ++y) {
        double best = map.patch_scores[y];
        std::size_t covered = 0;
        for (std::size_t i = 0; i < map.patches; ++i) {
            const double s = map.patch_scores[i * map.n_classes + y];
            best = std::max(best, s);
            if (s >= coverage_threshold) covered++;
        }
        map.image_confidence[y] = best;
        map.coverage[y] = static_cast<double>(covered) / static_cast<double>(map.patches);
    }
    return map;
}

struct InferenceConfig {
    std::size_t components = 5;  // component features per image
    std::size_t max_iter = 50;
    double coverage_threshold = 0.5;

    void validate() const {
        if (components < 1) raise(Errc::InvalidK, "components must be >= 1");
        if (max_iter < 1) raise(Errc::InvalidArgument, "max_iter must be >= 1");
        if (!(coverage_threshold >= 0.0 && coverage_threshold <= 1.0)) {
            raise(Errc::OutOfRange, "coverage threshold must be in [0,1]");
        }
    }
};

struct FramePrediction {
    ComponentAssignment assignment;
    ClassConfidenceMap map;
    double target_confidence = 0.0;  // image confidence of the bank's target class
    double target_coverage = 0.0;    // coverage of the bank's target class
};

inline FramePrediction predict_frame(const EmbeddedFrame& frame, const PrototypeBank& bank,
                                     const InferenceConfig& cfg) {
    cfg.validate();
    FramePrediction pred;
    pred.assignment = cluster_components(frame, cfg.components, cfg.max_iter);
    pred.map = confidence_map(frame, pred.assignment, bank, cfg.coverage_threshold);
    const std::size_t t = bank.target_index();
    pred.target_confidence = pred.map.image_confidence[t];
    pred.target_coverage = pred.map.coverage[t];
    return pred;
}

}  // namespace foulscan
