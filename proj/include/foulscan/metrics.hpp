#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foulscan/errors.hpp"

namespace foulscan {

// Threshold-indexed precision/recall arrays. Thresholds are the distinct
// score values in descending order; an item is predicted positive when its
// score >= threshold. Recall is non-decreasing down the arrays and ends at 1.
struct PRCurve {
    std::vector<double> thresholds;
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct EvalReport {
    double average_precision = 0.0;
    double selected_threshold = 0.0;
    double precision_at = 0.0;
    double recall_at = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double target_recall = 0.9;
};

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> precision;  // absent when nothing is predicted positive
    std::optional<double> recall;     // absent when there are no positives
};

namespace detail {

inline void check_scored_input(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        raise(Errc::LengthMismatch, "scores and labels differ in length");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) raise(Errc::NonFinite, "scores must be finite");
    }
}

// Indices sorted by descending score; equal scores keep input order.
inline std::vector<std::size_t> rank_order(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace detail

// Non-interpolated average precision: the mean over positives of the
// precision at each positive's rank, ranking by descending score with ties
// broken by input order.
inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
    detail::check_scored_input(scores, labels);
    std::size_t positives = 0;
    for (int l : labels) {
        if (l != 0) positives++;
    }
    if (positives == 0) raise(Errc::NoPositives, "average precision needs at least one positive");
    const auto order = detail::rank_order(scores);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (labels[order[r]] != 0) {
            hits++;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(positives);
}

inline PRCurve pr_curve(std::span<const double> scores, std::span<const int> labels) {
    detail::check_scored_input(scores, labels);
    PRCurve curve;
    for (int l : labels) {
        if (l != 0) {
            curve.positives++;
        } else {
            curve.negatives++;
        }
    }
    if (curve.positives == 0) raise(Errc::NoPositives, "PR curve needs at least one positive");
    const auto order = detail::rank_order(scores);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    const std::size_t n = order.size();
    while (i < n) {
        const double t = scores[order[i]];
        // consume the whole tie group so each distinct value yields one point
        while (i < n && scores[order[i]] == t) {
            if (labels[order[i]] != 0) {
                tp++;
            } else {
                fp++;
            }
            i++;
        }
        curve.thresholds.push_back(t);
        curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        curve.recall.push_back(static_cast<double>(tp) / static_cast<double>(curve.positives));
    }
    return curve;
}

struct ThresholdChoice {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// The largest threshold whose recall meets the target. Recall 1 is always
// reachable at the minimum score, so only targets above 1 are unreachable.
inline ThresholdChoice select_threshold(const PRCurve& curve, double target_recall) {
    if (!(target_recall > 0.0)) raise(Errc::OutOfRange, "target recall must be in (0, 1]");
    if (target_recall > 1.0) raise(Errc::UnreachableRecall, "target recall above 1");
    if (curve.thresholds.empty()) raise(Errc::InvalidArgument, "empty PR curve");
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        if (curve.recall[i] >= target_recall) {
            return {curve.thresholds[i], curve.precision[i], curve.recall[i]};
        }
    }
    raise(Errc::UnreachableRecall, "no threshold reaches the target recall");
}

// Coverage fraction -> SLoF rank. Band edges sit at the 1% and 16% lower
// bounds, half-open so the mapping is total and monotone on [0,1].
inline int slof_from_coverage(double coverage) {
    if (!std::isfinite(coverage) || coverage < 0.0 || coverage > 1.0) {
        raise(Errc::OutOfRange, "coverage must be in [0,1]");
    }
    if (coverage < 0.01) return 0;
    if (coverage < 0.16) return 1;
    return 2;
}

inline Confusion confusion_at(std::span<const double> scores, std::span<const int> labels,
                              double threshold) {
    if (scores.size() != labels.size()) {
        raise(Errc::LengthMismatch, "scores and labels differ in length");
    }
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] != 0;
        if (pred && truth) {
            c.tp++;
        } else if (pred && !truth) {
            c.fp++;
        } else if (!pred && truth) {
            c.fn++;
        } else {
            c.tn++;
        }
    }
    if (c.tp + c.fp > 0) {
        c.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn > 0) {
        c.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    }
    return c;
}

}  // namespace foulscan
