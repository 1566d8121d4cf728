#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "foulscan/errors.hpp"
#include "foulscan/frame_provider.hpp"
#include "foulscan/model.hpp"
#include "foulscan/parallel.hpp"
#include "foulscan/smoothing.hpp"
#include "foulscan/summarize.hpp"

namespace foulscan {

struct TimelineConfig {
    double sample_fps = 10.0;
    double bandwidth_s = 1.0;      // Gaussian kernel bandwidth
    double truncation = 4.0;       // kernel support radius, in bandwidths
    double hull_threshold = 0.75;
    double fouling_threshold = 0.25;
    double coverage_threshold = 0.5;
    double gap_s = 2.0;            // max gap inside one hull segment
    std::size_t max_iter = 50;     // Lloyd cap for per-frame clustering

    void validate() const {
        if (!(sample_fps > 0.0)) raise(Errc::InvalidRate, "sample_fps must be positive");
        if (!(bandwidth_s > 0.0)) raise(Errc::OutOfRange, "bandwidth must be positive");
        if (!(truncation > 0.0)) raise(Errc::OutOfRange, "truncation must be positive");
        if (!(gap_s > 0.0)) raise(Errc::OutOfRange, "gap must be positive");
        if (max_iter < 1) raise(Errc::InvalidArgument, "max_iter must be >= 1");
        for (double t : {hull_threshold, fouling_threshold, coverage_threshold}) {
            if (!(t >= 0.0 && t <= 1.0)) raise(Errc::OutOfRange, "thresholds must be in [0,1]");
        }
    }
};

// One evaluated frame on the transect timeline. Fouling fields are populated
// only when the hull detector fired; smoothed fields are filled by
// finalize_timeline.
struct TimelinePoint {
    double timestamp_s = 0.0;
    double hull_confidence = 0.0;
    bool hull_present = false;
    std::optional<double> fouling_confidence_raw;
    std::optional<double> coverage_raw;
    std::optional<double> fouling_confidence_smoothed;
    std::optional<double> coverage_smoothed;
    std::optional<bool> fouling_present;
};

// Sampling stride for reducing a native-rate stream to the evaluation rate.
inline std::size_t sample_stride(double native_fps, double sample_fps) {
    if (!(native_fps > 0.0) || !(sample_fps > 0.0) || !std::isfinite(native_fps) ||
        !std::isfinite(sample_fps)) {
        raise(Errc::InvalidRate, "frame rates must be positive and finite");
    }
    if (sample_fps > native_fps) {
        raise(Errc::InvalidRate, "sample rate exceeds native rate");
    }
    const auto stride = static_cast<std::size_t>(std::llround(native_fps / sample_fps));
    return std::max<std::size_t>(stride, 1);
}

inline SampledFrameProvider sample_frames(const FrameProvider& source, double native_fps,
                                          double sample_fps) {
    return SampledFrameProvider(source, sample_stride(native_fps, sample_fps));
}

// Raw scoring output plus the sidecar needed later for frame summaries.
// frame_ids is parallel to points; globals holds the normalized global
// embedding for hull-present points and stays empty otherwise.
struct ScoredTimeline {
    std::vector<TimelinePoint> points;
    std::vector<std::string> frame_ids;
    std::vector<std::vector<double>> globals;
};

// Scores every frame with the hull bank and, where the hull is present, with
// the fouling bank. Frames are processed concurrently; outputs land in input
// order, which must be strictly increasing in time.
inline ScoredTimeline score_timeline(const FrameProvider& frames, const PrototypeBank& hull_bank,
                                     const PrototypeBank& fouling_bank,
                                     const TimelineConfig& cfg) {
    cfg.validate();
    const std::size_t n = frames.size();
    if (n == 0) raise(Errc::EmptyStream, "no frames in stream");
    ScoredTimeline out;
    out.points.resize(n);
    out.frame_ids.resize(n);
    out.globals.resize(n);
    const std::size_t hull_k = hull_bank.metadata().components_per_image;
    const std::size_t fouling_k = fouling_bank.metadata().components_per_image;
    const std::size_t hull_target = hull_bank.target_index();
    const std::size_t fouling_target = fouling_bank.target_index();
    detail::parallel_for(n, [&](std::size_t i) {
        const EmbeddedFrame frame = frames.frame(i);
        TimelinePoint& p = out.points[i];
        p.timestamp_s = frame.timestamp_s();
        out.frame_ids[i] = frame.frame_id();
        // clustering is bank-independent; both heads share the assignment
        // when their component widths agree
        const auto assignment = cluster_components(frame, hull_k, cfg.max_iter);
        const auto hull_map = confidence_map(frame, assignment, hull_bank, cfg.coverage_threshold);
        p.hull_confidence = hull_map.image_confidence[hull_target];
        p.hull_present = p.hull_confidence >= cfg.hull_threshold;
        if (p.hull_present) {
            ComponentAssignment separate;
            const ComponentAssignment* fouling_assignment = &assignment;
            if (fouling_k != hull_k) {
                separate = cluster_components(frame, fouling_k, cfg.max_iter);
                fouling_assignment = &separate;
            }
            const auto fouling_map =
                confidence_map(frame, *fouling_assignment, fouling_bank, cfg.coverage_threshold);
            p.fouling_confidence_raw = fouling_map.image_confidence[fouling_target];
            p.coverage_raw = fouling_map.coverage[fouling_target];
            out.globals[i].assign(frame.global().begin(), frame.global().end());
        }
    });
    for (std::size_t i = 1; i < n; ++i) {
        if (!(out.points[i].timestamp_s > out.points[i - 1].timestamp_s)) {
            raise(Errc::NonMonotoneTime, "frame timestamps must be strictly increasing");
        }
    }
    return out;
}

// Maximal runs of hull-present points whose consecutive timestamps are at
// most gap_s apart. Returned as index lists into the point array.
inline std::vector<std::vector<std::size_t>> segment_by_hull(
    const std::vector<TimelinePoint>& points, double gap_s) {
    std::vector<std::vector<std::size_t>> segments;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].hull_present) continue;
        if (segments.empty() ||
            points[i].timestamp_s - points[segments.back().back()].timestamp_s > gap_s) {
            segments.emplace_back();
        }
        segments.back().push_back(i);
    }
    return segments;
}

// Smooths confidence and coverage inside each hull segment independently (no
// bleeding across gaps) and derives the fouling flag from the smoothed
// confidence.
inline void finalize_timeline(std::vector<TimelinePoint>& points, const TimelineConfig& cfg) {
    cfg.validate();
    const auto segments = segment_by_hull(points, cfg.gap_s);
    std::vector<double> times, conf, cov;
    for (const auto& seg : segments) {
        times.clear();
        conf.clear();
        cov.clear();
        for (std::size_t i : seg) {
            times.push_back(points[i].timestamp_s);
            conf.push_back(*points[i].fouling_confidence_raw);
            cov.push_back(*points[i].coverage_raw);
        }
        const auto sconf = gaussian_smooth(times, conf, cfg.bandwidth_s, cfg.truncation);
        const auto scov = gaussian_smooth(times, cov, cfg.bandwidth_s, cfg.truncation);
        for (std::size_t j = 0; j < seg.size(); ++j) {
            points[seg[j]].fouling_confidence_smoothed = sconf[j];
            points[seg[j]].coverage_smoothed = scov[j];
            points[seg[j]].fouling_present = sconf[j] >= cfg.fouling_threshold;
        }
    }
}

struct SegmentStat {
    double start_s = 0.0;
    double end_s = 0.0;
    std::size_t points = 0;
    double fouled_fraction = 0.0;
    double peak_coverage_smoothed = 0.0;
};

struct TransectSummary {
    std::size_t total_points = 0;
    std::size_t hull_points = 0;
    std::size_t fouled_points = 0;
    double fouled_fraction = 0.0;  // of hull-present points flagged fouled
    double peak_coverage_smoothed = 0.0;
};

struct SummarizeConfig {
    std::size_t per_group = 8;
    std::uint64_t seed = 0;
};

struct TransectReport {
    std::vector<TimelinePoint> timeline;
    std::vector<SegmentStat> segments;
    TransectSummary summary;
    SummarySelection selected_frames;
    TimelineConfig config;
    SummarizeConfig summarize;
};

// Partitions the hull-present frames by the smoothed fouling flag and picks
// up to per_group representative frames from each side via SKMPS.
inline SummarySelection summarize_by_class(const std::vector<TimelinePoint>& points,
                                           const std::vector<std::string>& frame_ids,
                                           const std::vector<std::vector<double>>& globals,
                                           std::size_t per_group, std::uint64_t seed) {
    if (per_group < 1) raise(Errc::InvalidArgument, "per_group must be >= 1");
    if (points.size() != frame_ids.size() || points.size() != globals.size()) {
        raise(Errc::LengthMismatch, "points, frame ids and globals differ in length");
    }
    SummarySelection sel;
    sel.per_group = per_group;
    sel.fouling.fouling_present = true;
    sel.no_fouling.fouling_present = false;
    for (bool want_fouled : {true, false}) {
        std::vector<std::vector<double>> group_globals;
        std::vector<FrameKey> keys;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!points[i].hull_present || !points[i].fouling_present) continue;
            if (*points[i].fouling_present != want_fouled) continue;
            group_globals.push_back(globals[i]);
            keys.push_back({frame_ids[i], points[i].timestamp_s});
        }
        auto& group = want_fouled ? sel.fouling : sel.no_fouling;
        if (group_globals.empty()) continue;
        const std::size_t c = std::min(per_group, group_globals.size());
        group.entries = skmps(group_globals, keys, c, seed);
    }
    return sel;
}

// End-to-end transect analysis: score, segment, smooth, summarize.
inline TransectReport build_report(const FrameProvider& frames, const PrototypeBank& hull_bank,
                                   const PrototypeBank& fouling_bank, const TimelineConfig& cfg,
                                   const SummarizeConfig& sum_cfg = {}) {
    auto scored = score_timeline(frames, hull_bank, fouling_bank, cfg);
    finalize_timeline(scored.points, cfg);

    TransectReport report;
    report.config = cfg;
    report.summarize = sum_cfg;
    report.summary.total_points = scored.points.size();
    const auto segments = segment_by_hull(scored.points, cfg.gap_s);
    for (const auto& seg : segments) {
        SegmentStat stat;
        stat.start_s = scored.points[seg.front()].timestamp_s;
        stat.end_s = scored.points[seg.back()].timestamp_s;
        stat.points = seg.size();
        std::size_t fouled = 0;
        for (std::size_t i : seg) {
            if (*scored.points[i].fouling_present) fouled++;
            stat.peak_coverage_smoothed =
                std::max(stat.peak_coverage_smoothed, *scored.points[i].coverage_smoothed);
        }
        stat.fouled_fraction = static_cast<double>(fouled) / static_cast<double>(seg.size());
        report.summary.hull_points += seg.size();
        report.summary.fouled_points += fouled;
        report.summary.peak_coverage_smoothed =
            std::max(report.summary.peak_coverage_smoothed, stat.peak_coverage_smoothed);
        report.segments.push_back(stat);
    }
    report.summary.fouled_fraction =
        report.summary.hull_points == 0
            ? 0.0
            : static_cast<double>(report.summary.fouled_points) /
                  static_cast<double>(report.summary.hull_points);
    report.selected_frames = summarize_by_class(scored.points, scored.frame_ids, scored.globals,
                                                sum_cfg.per_group, sum_cfg.seed);
    report.timeline = std::move(scored.points);
    return report;
}

}  // namespace foulscan
