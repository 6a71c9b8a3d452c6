#pragma once

#include <qdrt/error.hpp>
#include <qdrt/raytracer.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace qdrt {

/// Sampled signal; NaN values mark outage samples.
struct TimeSeries {
    std::vector<double> t;
    std::vector<double> v;

    std::size_t size() const noexcept { return t.size(); }

    void validate() const {
        if (t.size() != v.size()) {
            throw MetricError("time series: time and value lengths differ");
        }
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (!(t[i] > t[i - 1])) {
                throw MetricError("time series: times must be strictly increasing");
            }
        }
    }
};

inline constexpr double kDefaultOutageFloorDb = -40.0;
inline constexpr double kAcceptableNrmse = 0.05;

/// Replaces NaN (outage) samples by a finite floor.
inline TimeSeries with_outage_floor(TimeSeries s, double floor_db = kDefaultOutageFloorDb) {
    for (auto& v : s.v) {
        if (std::isnan(v)) {
            v = floor_db;
        }
    }
    return s;
}

/// Population standard deviation.
inline double population_std(std::span<const double> v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double mean = 0.0;
    for (const double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size()));
}

/// RMSE(x, baseline) / std(baseline), population std. Both series must share the time grid.
inline double nrmse(const TimeSeries& x, const TimeSeries& baseline) {
    x.validate();
    baseline.validate();
    if (x.t != baseline.t) {
        throw MetricError("nrmse: time grids differ");
    }
    if (x.size() == 0) {
        throw MetricError("nrmse: empty series");
    }
    const double sigma = population_std(baseline.v);
    if (!(sigma > 0.0)) {
        throw MetricError("nrmse: baseline has zero spread");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.v[i] - baseline.v[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(x.size())) / sigma;
}

/// (T_rt + n T_ns) of the baseline over the same for the simplified run.
inline double speedup(double rt_baseline_s, double ns_baseline_s, double rt_simplified_s, double ns_simplified_s,
                      double network_runs = 1000.0) {
    const double base = rt_baseline_s + network_runs * ns_baseline_s;
    const double simp = rt_simplified_s + network_runs * ns_simplified_s;
    if (!(base > 0.0) || !(simp > 0.0)) {
        throw MetricError("speedup: runtimes must be positive");
    }
    return base / simp;
}

struct WindowStat {
    double t_start{0.0};
    double mean{0.0};
    double std{0.0};
    bool outage{false};
};

/// Averages samples over sub-windows of `sub_s`, then reports mean and population std of the
/// sub-window means over each window of `window_s`. Windows are consecutive and start at t[0].
/// A window containing a NaN (or an empty sub-window) is flagged as outage with NaN statistics.
inline std::vector<WindowStat> windowed_stats(const TimeSeries& series, double window_s = 0.1, double sub_s = 0.005) {
    series.validate();
    if (!(sub_s > 0.0) || !(window_s > 0.0)) {
        throw MetricError("windowed_stats: window sizes must be > 0");
    }
    const double ratio = window_s / sub_s;
    const auto subs_per_window = static_cast<std::size_t>(std::llround(ratio));
    if (subs_per_window == 0 || std::abs(ratio - static_cast<double>(subs_per_window)) > 1e-9 * ratio) {
        throw MetricError("windowed_stats: window must be a whole number of sub-windows");
    }
    std::vector<WindowStat> out;
    if (series.size() == 0) {
        return out;
    }
    const double t0 = series.t.front();
    const auto sub_index = [&](double t) { return static_cast<std::size_t>(std::floor((t - t0) / sub_s + 1e-9)); };
    const std::size_t total_subs = sub_index(series.t.back()) + 1;
    std::vector<double> sums(total_subs, 0.0);
    std::vector<std::size_t> counts(total_subs, 0);
    std::vector<bool> has_nan(total_subs, false);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t k = sub_index(series.t[i]);
        if (std::isnan(series.v[i])) {
            has_nan[k] = true;
        } else {
            sums[k] += series.v[i];
        }
        ++counts[k];
    }
    // complete windows only
    const std::size_t windows = total_subs / subs_per_window;
    for (std::size_t w = 0; w < windows; ++w) {
        WindowStat ws;
        ws.t_start = t0 + static_cast<double>(w) * window_s;
        std::vector<double> means;
        for (std::size_t j = 0; j < subs_per_window; ++j) {
            const std::size_t k = w * subs_per_window + j;
            if (has_nan[k] || counts[k] == 0) {
                ws.outage = true;
                break;
            }
            means.push_back(sums[k] / static_cast<double>(counts[k]));
        }
        if (ws.outage) {
            ws.mean = ws.std = std::numeric_limits<double>::quiet_NaN();
        } else {
            double m = 0.0;
            for (const double x : means) {
                m += x;
            }
            ws.mean = m / static_cast<double>(means.size());
            ws.std = population_std(means);
        }
        out.push_back(ws);
    }
    return out;
}

struct EcdfPoint {
    double value{0.0};
    double fraction{0.0};
};

/// Right-continuous empirical CDF: one point per distinct value with the fraction of samples <= it.
inline std::vector<EcdfPoint> ecdf(std::vector<double> samples) {
    std::vector<EcdfPoint> out;
    if (samples.empty()) {
        return out;
    }
    for (const double s : samples) {
        if (!std::isfinite(s)) {
            throw MetricError("ecdf: samples must be finite");
        }
    }
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i + 1 < samples.size() && samples[i + 1] == samples[i]) {
            continue;
        }
        out.push_back({samples[i], static_cast<double>(i + 1) / n});
    }
    return out;
}

/// Accuracy/complexity summary of a simplified run against its baseline.
struct ComparisonReport {
    double nrmse{0.0};
    double speedup{1.0};
    std::uint64_t rays_baseline{0};
    std::uint64_t rays_simplified{0};
    std::uint64_t checks_saved{0};
    double outage_floor_db{kDefaultOutageFloorDb};
};

/// Counters from one unpruned channel instance in a scene with `triangles` triangles.
struct ComplexitySample {
    std::uint64_t triangles{0};
    int max_order{0};
    OpCounter counter;
    bool early_exit{false};
};

struct ComplexityReport {
    bool tuples_exact{true};
    bool ops_exact{true};
    bool slopes_ok{true};
    std::map<int, double> slope_by_order; // log-log slope of total ops vs T, per R
    std::vector<std::string> diffs;

    bool ok() const noexcept { return tuples_exact && ops_exact && slopes_ok; }
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Checks per-depth tuple counts against T (T-1)^(r-1), geometric ops against r per tuple,
/// obstruction checks against the per-ray (r+1) T - exclusions budget (runs without early exit),
/// and that total ops grow like T^(R+1) within `slope_tolerance`.
inline ComplexityReport validate_complexity(std::span<const ComplexitySample> samples, double slope_tolerance = 0.3) {
    ComplexityReport rep;
    std::map<int, std::map<std::uint64_t, double>> ops_by_r;
    for (const auto& s : samples) {
        std::ostringstream where;
        where << "T=" << s.triangles << " R=" << s.max_order;
        const auto& c = s.counter;
        std::uint64_t expected_geo = 0;
        std::uint64_t level = 1;
        for (int r = 0; r <= s.max_order; ++r) {
            const std::uint64_t expected = r == 0 ? 1 : level;
            const std::uint64_t got = r < static_cast<int>(c.tuples_by_order.size()) ? c.tuples_by_order[r] : 0;
            if (got != expected) {
                rep.tuples_exact = false;
                rep.diffs.push_back(where.str() + " depth " + std::to_string(r) + ": tuples " + std::to_string(got) +
                                    " expected " + std::to_string(expected));
            }
            expected_geo += static_cast<std::uint64_t>(r) * expected;
            level = (r == 0) ? s.triangles : level * (s.triangles == 0 ? 0 : s.triangles - 1);
        }
        if (c.tuples_visited != predicted_tuple_count(s.triangles, s.max_order)) {
            rep.tuples_exact = false;
            rep.diffs.push_back(where.str() + ": tuples_visited " + std::to_string(c.tuples_visited) + " expected " +
                                std::to_string(predicted_tuple_count(s.triangles, s.max_order)));
        }
        if (c.geometric_ops != expected_geo) {
            rep.ops_exact = false;
            rep.diffs.push_back(where.str() + ": geometric_ops " + std::to_string(c.geometric_ops) + " expected " +
                                std::to_string(expected_geo));
        }
        if (!s.early_exit && c.obstruction_checks != c.check_budget) {
            rep.ops_exact = false;
            rep.diffs.push_back(where.str() + ": obstruction_checks " + std::to_string(c.obstruction_checks) +
                                " expected " + std::to_string(c.check_budget));
        }
        ops_by_r[s.max_order][s.triangles] = static_cast<double>(c.total_ops());
    }
    for (const auto& [r, by_t] : ops_by_r) {
        if (by_t.size() < 2) {
            continue;
        }
        std::vector<double> xs, ys;
        for (const auto& [t, ops] : by_t) {
            if (t > 0 && ops > 0.0) {
                xs.push_back(static_cast<double>(t));
                ys.push_back(ops);
            }
        }
        if (xs.size() < 2) {
            continue;
        }
        const double slope = loglog_slope(xs, ys);
        rep.slope_by_order[r] = slope;
        if (std::abs(slope - (r + 1)) > slope_tolerance) {
            rep.slopes_ok = false;
            rep.diffs.push_back("R=" + std::to_string(r) + ": op-count slope " + std::to_string(slope) +
                                " outside " + std::to_string(r + 1) + " +/- " + std::to_string(slope_tolerance));
        }
    }
    return rep;
}

} // namespace qdrt
