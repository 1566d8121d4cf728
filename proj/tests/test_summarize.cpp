#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "foulscan/pipeline.hpp"
#include "foulscan/summarize.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace foulscan;

namespace {

std::vector<FrameKey> keys_for(std::size_t n) {
    std::vector<FrameKey> keys;
    for (std::size_t i = 0; i < n; ++i) {
        keys.push_back({"f" + std::to_string(i), 0.5 * static_cast<double>(i)});
    }
    return keys;
}

}  // namespace

TEST_CASE("skmps: c equal to frame count selects every frame") {
    std::mt19937_64 g(2);
    std::vector<std::vector<double>> globals;
    for (int i = 0; i < 6; ++i) globals.push_back(testutil::random_unit(g, 5));
    const auto sel = skmps(globals, keys_for(6), 6, 0);
    REQUIRE(sel.size() == 6);
    std::set<std::string> ids;
    for (const auto& e : sel) ids.insert(e.frame_id);
    CHECK(ids.size() == 6);
    // ordered by timestamp
    for (std::size_t i = 1; i < sel.size(); ++i) CHECK(sel[i].timestamp_s > sel[i - 1].timestamp_s);
}

TEST_CASE("skmps: c=1 picks the frame nearest the normalized mean") {
    std::mt19937_64 g(8);
    std::vector<std::vector<double>> globals;
    for (int i = 0; i < 9; ++i) globals.push_back(testutil::random_unit(g, 6));
    const auto sel = skmps(globals, keys_for(9), 1, 0);
    REQUIRE(sel.size() == 1);

    // exhaustive oracle
    std::vector<double> mean(6, 0.0);
    for (const auto& v : globals) {
        for (std::size_t d = 0; d < 6; ++d) mean[d] += v[d];
    }
    const auto nm = normalize_embedding(mean);
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t i = 0; i < globals.size(); ++i) {
        const double c = dot(globals[i], nm);
        if (c > best_cos) {
            best_cos = c;
            best = i;
        }
    }
    CHECK(sel[0].frame_id == "f" + std::to_string(best));
}

TEST_CASE("skmps: two orthogonal groups yield one frame per group") {
    std::mt19937_64 g(15);
    const auto dir_a = testutil::axis(7, 0);
    const auto dir_b = testutil::axis(7, 3);
    std::vector<std::vector<double>> globals;
    for (int i = 0; i < 5; ++i) globals.push_back(testutil::near_direction(g, dir_a, 0.05));
    for (int i = 0; i < 5; ++i) globals.push_back(testutil::near_direction(g, dir_b, 0.05));
    const auto sel = skmps(globals, keys_for(10), 2, 0);
    REQUIRE(sel.size() == 2);
    std::set<bool> sides;
    for (const auto& e : sel) {
        const std::size_t idx = std::stoul(e.frame_id.substr(1));
        sides.insert(idx < 5);
    }
    CHECK(sides.size() == 2);
}

TEST_CASE("skmps: medoid property and determinism") {
    std::mt19937_64 g(44);
    std::vector<std::vector<double>> globals;
    for (int i = 0; i < 20; ++i) globals.push_back(testutil::random_unit(g, 8));
    const auto keys = keys_for(20);
    const auto a = skmps(globals, keys, 5, 3);
    const auto b = skmps(globals, keys, 5, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].frame_id == b[i].frame_id);
        CHECK(a[i].cluster == b[i].cluster);
        // every selection is a real input frame
        bool member = false;
        for (const auto& k : keys) member |= k.frame_id == a[i].frame_id;
        CHECK(member);
    }
}

TEST_CASE("skmps: invariant under positive rescaling before normalization") {
    std::mt19937_64 g(91);
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < 12; ++i) {
        auto v = testutil::random_unit(g, 6);
        for (auto& x : v) x *= 1.0 + i;  // mixed magnitudes
        raw.push_back(v);
    }
    auto doubled = raw;
    for (auto& v : doubled) {
        for (auto& x : v) x *= 4.0;  // exact scaling
    }
    const auto keys = keys_for(12);
    const auto a = skmps(raw, keys, 3, 1);
    const auto b = skmps(doubled, keys, 3, 1);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].frame_id == b[i].frame_id);
}

TEST_CASE("skmps: micro instances achieve the brute-force optimum inertia") {
    std::mt19937_64 g(1234);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t c = 2 + trial % 2;
        std::vector<std::vector<double>> dirs;
        dirs.push_back({1.0, 0.0, 0.0});
        dirs.push_back({-0.5, std::sqrt(3.0) / 2.0, 0.0});
        dirs.push_back({-0.5, -std::sqrt(3.0) / 2.0, 0.0});
        const std::size_t n = c + static_cast<std::size_t>(testutil::uniform01(g) * (8 - c));
        std::vector<std::vector<double>> globals;
        for (std::size_t i = 0; i < n; ++i) {
            globals.push_back(testutil::near_direction(g, dirs[i % c], 0.02));
        }
        const auto km = spherical_kmeans(globals, c, static_cast<std::uint64_t>(trial));
        CHECK(std::abs(km.inertia - oracle::kmeans_inertia_bruteforce(globals, c)) <= 1e-12);
    }
}

TEST_CASE("skmps: errors") {
    std::vector<std::vector<double>> globals{{1.0, 0.0}};
    CHECK_THROWS_MATCHES(skmps({}, {}, 1, 0), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::EmptySet; }));
    CHECK_THROWS_MATCHES(skmps(globals, keys_for(1), 2, 0), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::InvalidK; }));
}

TEST_CASE("summarize_by_class: partitions by the smoothed flag") {
    // build points directly: 10 fouled, 6 clean, 4 no-hull
    std::mt19937_64 g(5);
    std::vector<TimelinePoint> points;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> globals;
    for (int i = 0; i < 20; ++i) {
        TimelinePoint p;
        p.timestamp_s = 0.1 * i;
        p.hull_present = i < 16;
        p.hull_confidence = p.hull_present ? 0.9 : 0.1;
        if (p.hull_present) {
            const bool fouled = i < 10;
            p.fouling_confidence_raw = fouled ? 0.8 : 0.05;
            p.coverage_raw = fouled ? 0.5 : 0.0;
            p.fouling_confidence_smoothed = p.fouling_confidence_raw;
            p.coverage_smoothed = p.coverage_raw;
            p.fouling_present = fouled;
            globals.push_back(testutil::random_unit(g, 4));
        } else {
            globals.push_back({});
        }
        points.push_back(p);
        ids.push_back("p" + std::to_string(i));
    }
    const auto sel = summarize_by_class(points, ids, globals, 4, 0);
    CHECK(sel.per_group == 4);
    CHECK(sel.fouling.entries.size() == 4);
    CHECK(sel.no_fouling.entries.size() == 4);
    for (const auto& e : sel.fouling.entries) {
        const std::size_t idx = std::stoul(e.frame_id.substr(1));
        CHECK(idx < 10);
    }
    for (const auto& e : sel.no_fouling.entries) {
        const std::size_t idx = std::stoul(e.frame_id.substr(1));
        CHECK(idx >= 10);
        CHECK(idx < 16);
    }
}

TEST_CASE("summarize_by_class: group smaller than per_group returns the whole group") {
    std::mt19937_64 g(6);
    std::vector<TimelinePoint> points;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> globals;
    for (int i = 0; i < 3; ++i) {
        TimelinePoint p;
        p.timestamp_s = i;
        p.hull_present = true;
        p.hull_confidence = 1.0;
        p.fouling_confidence_raw = 0.9;
        p.coverage_raw = 0.4;
        p.fouling_confidence_smoothed = 0.9;
        p.coverage_smoothed = 0.4;
        p.fouling_present = true;
        points.push_back(p);
        ids.push_back("x" + std::to_string(i));
        globals.push_back(testutil::random_unit(g, 4));
    }
    const auto sel = summarize_by_class(points, ids, globals, 8, 0);
    CHECK(sel.fouling.entries.size() == 3);   // whole group
    CHECK(sel.no_fouling.entries.size() == 0);  // empty partition allowed
}
