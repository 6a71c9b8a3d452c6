#include <qdrt/metrics.hpp>
#include <qdrt/scenes.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace qdrt;

namespace {

TimeSeries grid(std::vector<double> v, double dt = 0.005) {
    TimeSeries s;
    for (std::size_t i = 0; i < v.size(); ++i) s.t.push_back(static_cast<double>(i) * dt);
    s.v = std::move(v);
    return s;
}

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

} // namespace

TEST(Nrmse, IdenticalIsZero) {
    const auto x = grid({1, 5, -2, 7});
    EXPECT_EQ(nrmse(x, x), 0.0);
}

TEST(Nrmse, ConstantOffset) {
    const auto base = grid({1, 5, -2, 7});
    auto shifted = base;
    for (auto& v : shifted.v) v += 3.0;
    const double sigma = population_std(base.v);
    EXPECT_NEAR(nrmse(shifted, base), 3.0 / sigma, 1e-12);
}

TEST(Nrmse, TwoPointHandValue) { EXPECT_DOUBLE_EQ(nrmse(grid({1, 1}), grid({0, 2})), 1.0); }

TEST(Nrmse, Errors) {
    EXPECT_THROW(nrmse(grid({1, 2}), grid({3, 3})), MetricError);             // zero spread
    EXPECT_THROW(nrmse(grid({1, 2}), grid({1, 2, 3})), MetricError);          // lengths
    EXPECT_THROW(nrmse(grid({1, 2}, 0.01), grid({1, 3}, 0.005)), MetricError); // grids
}

TEST(Nrmse, OutageFloor) {
    const auto floored = with_outage_floor(grid({kNan, 3.0}));
    EXPECT_EQ(floored.v[0], -40.0);
    EXPECT_EQ(floored.v[1], 3.0);
}

TEST(Speedup, Examples) {
    EXPECT_EQ(speedup(2.0, 0.1, 2.0, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(speedup(2.0, 0.1, 1.0, 0.05), 2.0);
    EXPECT_NEAR(speedup(2.0, 1.0, 1.0, 1.0), 1002.0 / 1001.0, 1e-15);
    EXPECT_THROW(speedup(0.0, 0.0, 1.0, 1.0), MetricError);
}

TEST(Windows, ConstantSeriesHasZeroSpread) {
    const auto s = grid(std::vector<double>(100, 4.0));
    const auto w = windowed_stats(s);
    ASSERT_EQ(w.size(), 5u);
    for (const auto& x : w) {
        EXPECT_EQ(x.mean, 4.0);
        EXPECT_EQ(x.std, 0.0);
        EXPECT_FALSE(x.outage);
    }
}

TEST(Windows, AlternatingSubWindows) {
    const double a = 6.0;
    std::vector<double> v;
    for (int i = 0; i < 40; ++i) v.push_back(i % 2 ? a : 0.0);
    const auto w = windowed_stats(grid(v));
    ASSERT_EQ(w.size(), 2u);
    for (const auto& x : w) {
        EXPECT_DOUBLE_EQ(x.mean, a / 2);
        EXPECT_DOUBLE_EQ(x.std, a / 2);
    }
}

TEST(Windows, SubWindowAveraging) {
    // samples every 1 ms: each 5 ms sub-window averages five samples
    std::vector<double> v;
    for (int i = 0; i < 200; ++i) v.push_back((i / 5) % 2 ? 10.0 : 0.0);
    const auto w = windowed_stats(grid(v, 0.001), 0.1, 0.005);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(w[0].mean, 5.0, 1e-12);
    EXPECT_NEAR(w[0].std, 5.0, 1e-12);
}

TEST(Windows, OutageAndShortSeries) {
    std::vector<double> v(20, 1.0);
    v[7] = kNan;
    const auto w = windowed_stats(grid(v));
    ASSERT_EQ(w.size(), 1u);
    EXPECT_TRUE(w[0].outage);
    EXPECT_TRUE(std::isnan(w[0].mean));
    EXPECT_TRUE(windowed_stats(grid(std::vector<double>(19, 1.0))).empty());
    EXPECT_THROW(windowed_stats(grid({1, 2}), 0.1, 0.03), MetricError);
}

TEST(Ecdf, Examples) {
    const auto one = ecdf({1.0});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].value, 1.0);
    EXPECT_EQ(one[0].fraction, 1.0);
    const auto two = ecdf({2.0, 1.0});
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].fraction, 0.5);
    EXPECT_EQ(two[1].value, 2.0);
    const auto ties = ecdf({3.0, 1.0, 3.0, 2.0});
    ASSERT_EQ(ties.size(), 3u);
    EXPECT_EQ(ties[2].value, 3.0);
    EXPECT_EQ(ties[2].fraction, 1.0);
    EXPECT_EQ(ties[1].fraction, 0.5);
    EXPECT_TRUE(ecdf({}).empty());
    EXPECT_THROW(ecdf({kNan}), MetricError);
}

TEST(Complexity, InstrumentedRunsMatchFormulas) {
    const auto mats = scenes::placeholder_materials();
    std::vector<ComplexitySample> samples;
    for (const std::size_t T : {12u, 16u, 24u, 32u, 40u}) {
        TriangleMesh mesh(scenes::facet_shell(T));
        for (int r = 0; r <= 3; ++r) {
            TraceConfig cfg;
            cfg.max_reflection_order = r;
            cfg.abs_threshold_db = -1000.0;
            cfg.obstruction_early_exit = false;
            const auto res = trace_pair({0.3, -0.2, 0.1}, {-0.4, 0.5, -0.3}, mesh, mats, cfg);
            samples.push_back({T, r, res.counter, false});
        }
    }
    const auto rep = validate_complexity(samples);
    for (const auto& d : rep.diffs) ADD_FAILURE() << d;
    EXPECT_TRUE(rep.ok());
    ASSERT_EQ(rep.slope_by_order.size(), 4u);
    EXPECT_NEAR(rep.slope_by_order.at(0), 1.0, 1e-12);
}

TEST(Complexity, DirectRayCostsTChecks) {
    TriangleMesh mesh(scenes::box(10, 19, 3));
    TraceConfig cfg;
    cfg.max_reflection_order = 0;
    const auto res = trace_pair({1, 1, 1}, {5, 5, 2}, mesh, scenes::placeholder_materials(), cfg);
    EXPECT_EQ(res.counter.total_ops(), 12u);
}

TEST(Complexity, ReportsMismatches) {
    ComplexitySample s{12, 2, {}, false};
    s.counter.ensure_order(2);
    s.counter.tuples_by_order = {1, 12, 131};
    s.counter.tuples_visited = 144;
    const ComplexitySample one[] = {s};
    const auto rep = validate_complexity(one);
    EXPECT_FALSE(rep.tuples_exact);
    EXPECT_FALSE(rep.diffs.empty());
}

TEST(Complexity, PruningKeepsTuplesAndLowersChecks) {
    TriangleMesh mesh(scenes::box(10, 19, 3));
    TraceConfig cfg;
    cfg.max_reflection_order = 3;
    const auto full = trace_pair({1, 1, 1}, {5, 5, 2}, mesh, scenes::placeholder_materials(), cfg);
    cfg.rel_threshold_db = -15.0;
    const auto cut = trace_pair({1, 1, 1}, {5, 5, 2}, mesh, scenes::placeholder_materials(), cfg);
    EXPECT_EQ(cut.counter.tuples_visited, full.counter.tuples_visited);
    EXPECT_LT(cut.counter.obstruction_checks, full.counter.obstruction_checks);
}
