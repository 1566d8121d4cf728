#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "foulscan/pipeline.hpp"
#include "test_helpers.hpp"

using namespace foulscan;

namespace {

// Fixture banks and frames over an 8-dim space with disjoint axes:
//   e0 hull, e1 open water, e2 fouling, e3 clean surface.
// Frames are uniform (all patches equal), so the frame-level confidence can
// be dialled in exactly through the softmax.
PrototypeBank hull_bank() {
    BankMetadata meta;
    meta.components_per_image = 2;
    std::vector<PrototypeClass> classes;
    classes.push_back({"hull", false, {testutil::axis(8, 0)}});
    classes.push_back({"background", true, {testutil::axis(8, 1)}});
    return PrototypeBank(std::move(classes), 0.1, meta);
}

PrototypeBank fouling_bank() {
    BankMetadata meta;
    meta.components_per_image = 2;
    std::vector<PrototypeClass> classes;
    classes.push_back({"fouling", false, {testutil::axis(8, 2)}});
    classes.push_back({"no_fouling", true, {testutil::axis(8, 3)}});
    return PrototypeBank(std::move(classes), 0.1, meta);
}

// Patch with hull component 0.8 and fouling/clean components chosen so the
// fouling softmax lands exactly at q: gamma - beta = tau * ln(1/q - 1).
std::vector<double> fouled_patch(double q) {
    const double delta = 0.1 * std::log(1.0 / q - 1.0);
    const double beta = (-delta + std::sqrt(0.72 - delta * delta)) / 2.0;
    const double gamma = beta + delta;
    std::vector<double> v(8, 0.0);
    v[0] = 0.8;
    v[2] = beta;
    v[3] = gamma;
    return normalize_embedding(v);
}

std::vector<double> clean_patch() {
    std::vector<double> v(8, 0.0);
    v[0] = 0.8;
    v[3] = 0.6;
    return v;  // already unit
}

std::vector<double> nohull_patch() { return testutil::axis(8, 1); }

EmbeddedFrame transect_frame(std::size_t index, double t, const std::vector<double>& patch,
                             std::mt19937_64& g) {
    const auto unit = normalize_embedding(patch);
    auto global = unit;
    global[5] += 0.02 * testutil::uniform01(g);
    global[6] += 0.02 * testutil::uniform01(g);
    return testutil::make_frame("t" + std::to_string(index), t, 2, 2,
                                std::vector<std::vector<double>>(4, unit),
                                normalize_embedding(global));
}

}  // namespace

TEST_CASE("sample_stride: published ten-per-second operating point and edge cases") {
    CHECK(sample_stride(30.0, 10.0) == 3);
    CHECK(sample_stride(25.0, 25.0) == 1);  // identity
    CHECK_THROWS_MATCHES(sample_stride(30.0, 31.0), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::InvalidRate; }));
    CHECK_THROWS_AS(sample_stride(0.0, 1.0), Error);
}

TEST_CASE("sample_frames: 100 frames at native 30 sampled at 10 keeps 34") {
    std::vector<EmbeddedFrame> frames;
    for (int i = 0; i < 100; ++i) {
        frames.push_back(
            testutil::uniform_frame("s" + std::to_string(i), i / 30.0, 2, 2, testutil::axis(4, 0)));
    }
    const VectorFrameProvider base(frames);
    const auto sampled = sample_frames(base, 30.0, 10.0);
    REQUIRE(sampled.size() == 34);
    CHECK(sampled.frame(0).frame_id() == "s0");
    CHECK(sampled.frame(1).frame_id() == "s3");
    CHECK(sampled.frame(33).frame_id() == "s99");
    // timestamps preserved
    CHECK(sampled.frame(2).timestamp_s() == frames[6].timestamp_s());
}

TEST_CASE("score_timeline: hull filtering carries fouling fields exactly where hull fires") {
    std::mt19937_64 g(10);
    std::vector<EmbeddedFrame> frames;
    // 6 frames: indices 2 and 4 have no hull
    for (int i = 0; i < 6; ++i) {
        const auto patch = (i == 2 || i == 4) ? nohull_patch() : clean_patch();
        frames.push_back(transect_frame(i, 0.1 * i, patch, g));
    }
    const VectorFrameProvider provider(frames);
    TimelineConfig cfg;
    const auto scored = score_timeline(provider, hull_bank(), fouling_bank(), cfg);
    REQUIRE(scored.points.size() == 6);
    std::size_t with_fouling = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& p = scored.points[i];
        CHECK(p.hull_present == (p.hull_confidence >= cfg.hull_threshold));
        CHECK(p.fouling_confidence_raw.has_value() == p.hull_present);
        if (p.fouling_confidence_raw) with_fouling++;
    }
    CHECK(with_fouling == 4);
    CHECK_FALSE(scored.points[2].hull_present);
    CHECK_FALSE(scored.points[4].hull_present);
}

TEST_CASE("score_timeline: all frames below the hull threshold") {
    std::mt19937_64 g(11);
    std::vector<EmbeddedFrame> frames;
    for (int i = 0; i < 5; ++i) frames.push_back(transect_frame(i, 0.1 * i, nohull_patch(), g));
    const VectorFrameProvider provider(frames);
    const auto scored = score_timeline(provider, hull_bank(), fouling_bank(), {});
    for (const auto& p : scored.points) {
        CHECK_FALSE(p.hull_present);
        CHECK_FALSE(p.fouling_confidence_raw.has_value());
    }
}

TEST_CASE("score_timeline: single frame above both thresholds smooths to itself") {
    std::mt19937_64 g(12);
    std::vector<EmbeddedFrame> frames{transect_frame(0, 0.0, fouled_patch(0.9), g)};
    const VectorFrameProvider provider(frames);
    TimelineConfig cfg;
    auto scored = score_timeline(provider, hull_bank(), fouling_bank(), cfg);
    finalize_timeline(scored.points, cfg);
    REQUIRE(scored.points.size() == 1);
    const auto& p = scored.points[0];
    CHECK(p.hull_present);
    REQUIRE(p.fouling_present.has_value());
    CHECK(*p.fouling_present);
    CHECK(*p.fouling_confidence_smoothed == Catch::Approx(*p.fouling_confidence_raw).margin(1e-12));
}

TEST_CASE("score_timeline: error paths") {
    std::mt19937_64 g(13);
    const std::vector<EmbeddedFrame> empty;
    const VectorFrameProvider none(empty);
    CHECK_THROWS_MATCHES(score_timeline(none, hull_bank(), fouling_bank(), {}), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::EmptyStream; }));

    std::vector<EmbeddedFrame> unordered;
    unordered.push_back(transect_frame(0, 1.0, clean_patch(), g));
    unordered.push_back(transect_frame(1, 0.5, clean_patch(), g));
    const VectorFrameProvider bad(unordered);
    CHECK_THROWS_MATCHES(score_timeline(bad, hull_bank(), fouling_bank(), {}), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::NonMonotoneTime; }));

    std::vector<EmbeddedFrame> small_dim{
        testutil::uniform_frame("d", 0.0, 2, 2, testutil::axis(4, 0))};
    const VectorFrameProvider mismatched(small_dim);
    CHECK_THROWS_MATCHES(score_timeline(mismatched, hull_bank(), fouling_bank(), {}), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::DimMismatch; }));
}

TEST_CASE("segment_by_hull: contiguous points form one segment, bursts split") {
    auto make_points = [](const std::vector<double>& times, const std::vector<bool>& hull) {
        std::vector<TimelinePoint> pts;
        for (std::size_t i = 0; i < times.size(); ++i) {
            TimelinePoint p;
            p.timestamp_s = times[i];
            p.hull_present = hull[i];
            if (hull[i]) {
                p.fouling_confidence_raw = 0.0;
                p.coverage_raw = 0.0;
            }
            pts.push_back(p);
        }
        return pts;
    };

    std::vector<double> uniform_times;
    std::vector<bool> all_hull;
    for (int i = 0; i < 30; ++i) {
        uniform_times.push_back(0.1 * i);
        all_hull.push_back(true);
    }
    CHECK(segment_by_hull(make_points(uniform_times, all_hull), 2.0).size() == 1);

    // two bursts separated by five seconds
    std::vector<double> burst_times{0.0, 0.1, 0.2, 5.2, 5.3};
    std::vector<bool> burst_hull{true, true, true, true, true};
    const auto segs = segment_by_hull(make_points(burst_times, burst_hull), 2.0);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].size() == 3);
    CHECK(segs[1].size() == 2);

    // randomized masks match a direct linear scan
    std::mt19937_64 g(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> times;
        std::vector<bool> hull;
        double clock = 0.0;
        for (int i = 0; i < 40; ++i) {
            clock += 0.05 + testutil::uniform01(g) * 1.5;
            times.push_back(clock);
            hull.push_back(testutil::uniform01(g) < 0.6);
        }
        const auto points = make_points(times, hull);
        const auto got = segment_by_hull(points, 1.0);

        // oracle: walk hull-present indices, split when the gap exceeds 1.0
        std::vector<std::vector<std::size_t>> want;
        double last = -1e300;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!points[i].hull_present) continue;
            if (want.empty() || points[i].timestamp_s - last > 1.0) want.emplace_back();
            want.back().push_back(i);
            last = points[i].timestamp_s;
        }
        CHECK(got == want);
    }
}

TEST_CASE("finalize_timeline: saturated raw confidence keeps every flag set") {
    std::vector<TimelinePoint> points;
    for (int i = 0; i < 25; ++i) {
        TimelinePoint p;
        p.timestamp_s = 0.1 * i;
        p.hull_present = true;
        p.hull_confidence = 1.0;
        p.fouling_confidence_raw = 1.0;
        p.coverage_raw = 1.0;
        points.push_back(p);
    }
    finalize_timeline(points, {});
    for (const auto& p : points) {
        REQUIRE(p.fouling_present.has_value());
        CHECK(*p.fouling_present);
        CHECK(*p.fouling_confidence_smoothed == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("finalize_timeline: isolated spike is attenuated below the flag threshold") {
    // spike of 1.0 amid zeros at 0.1 s spacing with h = 1: the kernel window
    // holds ~80 zero frames, so the smoothed peak is ~1/25 and never flags
    std::vector<TimelinePoint> points;
    for (int i = 0; i < 101; ++i) {
        TimelinePoint p;
        p.timestamp_s = 0.1 * i;
        p.hull_present = true;
        p.hull_confidence = 1.0;
        p.fouling_confidence_raw = (i == 50) ? 1.0 : 0.0;
        p.coverage_raw = 0.0;
        points.push_back(p);
    }
    finalize_timeline(points, {});
    for (const auto& p : points) {
        CHECK(*p.fouling_confidence_smoothed < 0.25);
        CHECK_FALSE(*p.fouling_present);
    }
    CHECK(*points[50].fouling_confidence_smoothed < 0.05);
    CHECK(*points[50].fouling_confidence_smoothed > 0.0);
}

TEST_CASE("finalize_timeline: smoothing strictly reduces flag flicker") {
    // noisy plateau: raw confidence dips below the threshold every 10th frame
    std::vector<TimelinePoint> points;
    for (int i = 0; i < 300; ++i) {
        TimelinePoint p;
        p.timestamp_s = 0.1 * i;
        p.hull_present = true;
        p.hull_confidence = 1.0;
        double v = 0.02;
        if (i >= 100 && i < 200) v = (i % 10 == 5) ? 0.1 : 0.6;
        p.fouling_confidence_raw = v;
        p.coverage_raw = v;
        points.push_back(p);
    }
    TimelineConfig cfg;
    finalize_timeline(points, cfg);
    auto transitions = [](const std::vector<bool>& flags) {
        std::size_t t = 0;
        for (std::size_t i = 1; i < flags.size(); ++i) {
            if (flags[i] != flags[i - 1]) t++;
        }
        return t;
    };
    std::vector<bool> raw_flags, smooth_flags;
    for (const auto& p : points) {
        raw_flags.push_back(*p.fouling_confidence_raw >= cfg.fouling_threshold);
        smooth_flags.push_back(*p.fouling_present);
    }
    CHECK(transitions(smooth_flags) < transitions(raw_flags));
    CHECK(transitions(smooth_flags) == 2);
}

TEST_CASE("build_report: planted fouled interval is recovered within one sample period") {
    // 12 s transect at 10 fps: [0,4) clean hull, [4,6) open water,
    // [6,10) fouled at confidence 0.5, [10,12) clean hull
    std::mt19937_64 g(20);
    std::vector<EmbeddedFrame> frames;
    for (int i = 0; i < 120; ++i) {
        const double t = 0.1 * i;
        std::vector<double> patch;
        if (t < 4.0) {
            patch = clean_patch();
        } else if (t < 6.0) {
            patch = nohull_patch();
        } else if (t < 10.0) {
            patch = fouled_patch(0.5);
        } else {
            patch = clean_patch();
        }
        frames.push_back(transect_frame(i, t, patch, g));
    }
    const VectorFrameProvider provider(frames);
    TimelineConfig cfg;
    const auto report = build_report(provider, hull_bank(), fouling_bank(), cfg, {8, 0});

    CHECK(report.summary.total_points == 120);
    CHECK(report.summary.hull_points == 100);
    REQUIRE(report.segments.size() == 2);
    CHECK(report.segments[0].points == 40);
    CHECK(report.segments[1].points == 60);

    const double planted = 40.0 / 100.0;
    CHECK(std::abs(report.summary.fouled_fraction - planted) <= 0.01 + 1e-12);

    // config echo
    CHECK(report.config.hull_threshold == cfg.hull_threshold);
    CHECK(report.config.fouling_threshold == cfg.fouling_threshold);
    CHECK(report.summarize.per_group == 8);

    // summaries: both groups non-empty, medoids drawn from the right side
    CHECK(report.selected_frames.fouling.entries.size() == 8);
    CHECK(report.selected_frames.no_fouling.entries.size() == 8);
    for (const auto& e : report.selected_frames.fouling.entries) {
        CHECK(e.timestamp_s >= 6.0 - 0.2);
        CHECK(e.timestamp_s < 10.0 + 0.2);
    }

    // timestamps strictly increasing, segments ordered and disjoint
    for (std::size_t i = 1; i < report.timeline.size(); ++i) {
        CHECK(report.timeline[i].timestamp_s > report.timeline[i - 1].timestamp_s);
    }
    for (std::size_t s = 1; s < report.segments.size(); ++s) {
        CHECK(report.segments[s].start_s > report.segments[s - 1].end_s);
    }
}

TEST_CASE("build_report: deterministic regardless of scheduling") {
    std::mt19937_64 g(21);
    std::vector<EmbeddedFrame> frames;
    for (int i = 0; i < 40; ++i) {
        frames.push_back(transect_frame(i, 0.1 * i, i % 3 == 0 ? fouled_patch(0.7) : clean_patch(), g));
    }
    const VectorFrameProvider provider(frames);
    const auto a = build_report(provider, hull_bank(), fouling_bank(), {}, {4, 1});
    const auto b = build_report(provider, hull_bank(), fouling_bank(), {}, {4, 1});
    REQUIRE(a.timeline.size() == b.timeline.size());
    for (std::size_t i = 0; i < a.timeline.size(); ++i) {
        CHECK(a.timeline[i].hull_confidence == b.timeline[i].hull_confidence);
        if (a.timeline[i].fouling_confidence_smoothed) {
            CHECK(*a.timeline[i].fouling_confidence_smoothed ==
                  *b.timeline[i].fouling_confidence_smoothed);
        }
    }
}
