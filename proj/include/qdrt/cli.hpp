#pragma once

#include <qdrt/evaluate.hpp>
#include <qdrt/metrics.hpp>
#include <qdrt/qd_stats.hpp>
#include <qdrt/scenario.hpp>
#include <qdrt/scenes.hpp>
#include <qdrt/trace_io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace qdrt::cli {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

/// Accepts a dB value or "-inf".
inline double parse_threshold(const std::string& s) {
    if (s == "-inf" || s == "-Inf" || s == "-INF") {
        return -std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad threshold '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) {
        throw ConfigError("bad threshold '" + s + "'");
    }
    return v;
}

inline nlohmann::json threshold_json(double v) {
    if (std::isinf(v) && v < 0) {
        return "-inf";
    }
    return v;
}

/// Files written next to each other and renamed into place only when all succeed.
class StagedOutput {
public:
    explicit StagedOutput(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;

    ~StagedOutput() {
        if (!committed_) {
            std::error_code ec;
            for (const auto& name : names_) {
                fs::remove(staged(name), ec);
            }
        }
    }

    std::ofstream open(const std::string& name) {
        names_.push_back(name);
        std::ofstream out(staged(name), std::ios::binary);
        if (!out) {
            throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
        }
        return out;
    }

    void commit() {
        for (const auto& name : names_) {
            fs::rename(staged(name), dir_ / name);
        }
        committed_ = true;
    }

private:
    fs::path staged(const std::string& name) const { return dir_ / ("." + name + ".partial"); }

    fs::path dir_;
    std::vector<std::string> names_;
    bool committed_{false};
};

struct TraceOverrides {
    std::optional<int> max_reflections;
    std::optional<std::string> rel_threshold_db;
    std::optional<std::string> abs_threshold_db;
    std::optional<std::string> qd;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    bool threshold_after_obstruction{false};
    bool no_post_qd_filter{false};
};

/// Loads a scenario file with CLI overrides folded into the JSON, so the digest covers them.
inline Scenario load_with_overrides(const fs::path& path, const TraceOverrides& o) {
    nlohmann::json doc = read_json_file(path);
    auto& simp = doc["simplification"];
    if (!simp.is_object()) {
        simp = nlohmann::json::object();
    }
    if (o.max_reflections) simp["max_reflections"] = *o.max_reflections;
    if (o.rel_threshold_db) simp["rel_threshold_db"] = threshold_json(parse_threshold(*o.rel_threshold_db));
    if (o.abs_threshold_db) simp["abs_threshold_db"] = threshold_json(parse_threshold(*o.abs_threshold_db));
    if (o.qd) doc["qd"] = (*o.qd == "on");
    if (o.seed) doc["seed"] = *o.seed;
    if (o.steps) doc["steps"] = *o.steps;
    if (o.threshold_after_obstruction) doc["threshold_after_obstruction"] = true;
    if (o.no_post_qd_filter) doc["post_qd_filter"] = false;
    return parse_scenario(doc, path.parent_path());
}

struct RunTotals {
    std::uint64_t instances{0};
    std::uint64_t rays{0};
    std::uint64_t mpcs{0};
    std::uint64_t tuples_visited{0};
    std::uint64_t geometric_ops{0};
    std::uint64_t obstruction_checks{0};
    std::uint64_t checks_saved{0};
};

inline RunTotals totals(std::span<const ChannelInstance> instances) {
    RunTotals t;
    for (const auto& i : instances) {
        ++t.instances;
        t.rays += i.rays;
        t.mpcs += i.mpcs.size();
        t.tuples_visited += i.counters.tuples_visited;
        t.geometric_ops += i.counters.geometric_ops;
        t.obstruction_checks += i.counters.obstruction_checks;
        t.checks_saved += i.checks_saved;
    }
    return t;
}

inline nlohmann::json manifest_json(const Scenario& scn, const RunTotals& tot, unsigned jobs, double t_rt, double t_ns) {
    nlohmann::json m;
    m["tool"] = "qdrt";
    m["version"] = kVersion;
    m["digest"] = scn.digest;
    m["seed"] = scn.seed;
    m["jobs"] = jobs;
    m["t_rt_s"] = t_rt;
    m["t_ns_s"] = t_ns;
    m["steps"] = scn.steps;
    m["timestep_s"] = scn.timestep_s;
    m["max_reflections"] = scn.simplification.max_reflection_order;
    m["rel_threshold_db"] = threshold_json(scn.simplification.rel_threshold_db);
    m["abs_threshold_db"] = threshold_json(scn.simplification.abs_threshold_db);
    m["qd"] = scn.qd_enabled;
    m["materials_calibrated"] = scn.materials.calibrated;
    m["instances"] = tot.instances;
    m["rays"] = tot.rays;
    m["mpcs"] = tot.mpcs;
    m["tuples_visited"] = tot.tuples_visited;
    m["geometric_ops"] = tot.geometric_ops;
    m["obstruction_checks"] = tot.obstruction_checks;
    m["checks_saved"] = tot.checks_saved;
    m["host"] = {{"hardware_threads", std::thread::hardware_concurrency()},
#if defined(__clang__)
                 {"compiler", std::string("clang ") + __clang_version__},
#elif defined(__GNUC__)
                 {"compiler", std::string("gcc ") + __VERSION__},
#else
                 {"compiler", "unknown"},
#endif
#if defined(__linux__)
                 {"os", "linux"}};
#elif defined(__APPLE__)
                 {"os", "darwin"}};
#else
                 {"os", "other"}};
#endif
    return m;
}

inline int cmd_trace(const fs::path& scenario, const TraceOverrides& o, unsigned jobs, bool emit_counters,
                     const fs::path& out_dir) {
    const Scenario scn = load_with_overrides(scenario, o);
    const RunResult run_res = run(scn, jobs);
    const EvaluationResult ev = evaluate_links(scn, run_res.instances, jobs);

    StagedOutput out(out_dir);
    {
        auto f = out.open("trace.csv");
        write_trace(f, run_res.instances, scn.digest);
    }
    {
        auto f = out.open("sinr.csv");
        write_sinr_csv(f, ev.samples);
    }
    if (emit_counters) {
        auto f = out.open("counters.csv");
        write_counters_csv(f, run_res.instances);
    }
    {
        auto f = out.open("manifest.json");
        f << manifest_json(scn, totals(run_res.instances), jobs, run_res.trace_seconds, ev.network_seconds).dump(2)
          << "\n";
    }
    out.commit();
    return 0;
}

/// Value extractor for the compared metric; NaN marks outage.
inline double metric_of(const LinkSample& s, const std::string& metric) {
    if (metric == "sinr") return s.sinr_db;
    if (metric == "snr") return s.snr_db;
    return s.rx_power_dbm;
}

/// Per-receiver time series of `metric`, outage samples replaced by `floor_db`.
inline std::map<std::string, TimeSeries> series_by_rx(std::span<const LinkSample> samples, const std::string& metric,
                                                      double floor_db) {
    std::map<std::string, TimeSeries> out;
    for (const auto& s : samples) {
        auto& ts = out[s.rx_id];
        ts.t.push_back(s.time_s);
        ts.v.push_back(metric_of(s, metric));
    }
    for (auto& [_, ts] : out) {
        ts = with_outage_floor(std::move(ts), floor_db);
    }
    return out;
}

inline std::vector<LinkSample> read_sinr_dir(const fs::path& dir) {
    std::ifstream in(dir / "sinr.csv");
    if (!in) {
        throw ConfigError("cannot open '" + (dir / "sinr.csv").string() + "'");
    }
    return read_sinr_csv(in);
}

inline void check_same_grid(std::span<const LinkSample> a, std::span<const LinkSample> b) {
    if (a.size() != b.size()) {
        throw MetricError("time grid mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                          " samples");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].timestep != b[i].timestep || a[i].time_s != b[i].time_s || a[i].rx_id != b[i].rx_id) {
            throw MetricError("time grid mismatch at sample " + std::to_string(i));
        }
    }
}

inline int cmd_compare(const fs::path& base_dir, const fs::path& simp_dir, const std::string& metric,
                       double floor_db, const fs::path& out_file, const std::string& cdf_file,
                       const std::string& window_file) {
    const auto base = read_sinr_dir(base_dir);
    const auto simp = read_sinr_dir(simp_dir);
    check_same_grid(base, simp);
    const auto mb = read_json_file(base_dir / "manifest.json");
    const auto ms = read_json_file(simp_dir / "manifest.json");
    const double sp = speedup(mb.at("t_rt_s").get<double>(), mb.at("t_ns_s").get<double>(),
                              ms.at("t_rt_s").get<double>(), ms.at("t_ns_s").get<double>());
    const auto sb = series_by_rx(base, metric, floor_db);
    const auto ss = series_by_rx(simp, metric, floor_db);

    std::ofstream out(out_file);
    if (!out) {
        throw ConfigError("cannot write '" + out_file.string() + "'");
    }
    out << "# metric=" << metric << " std=population outage_floor_db=" << format_double(floor_db)
        << " acceptable_nrmse=" << format_double(kAcceptableNrmse) << "\n";
    out << "rx,nrmse,speedup,rays_baseline,rays_simplified,checks_saved,acceptable\n";
    for (const auto& [rx, series] : sb) {
        double e = std::numeric_limits<double>::quiet_NaN();
        try {
            e = nrmse(ss.at(rx), series);
        } catch (const MetricError& err) {
            std::cerr << "warning: " << rx << ": " << err.what() << "\n";
        }
        out << rx << "," << format_double(e) << "," << format_double(sp) << "," << mb.at("rays").get<std::uint64_t>()
            << "," << ms.at("rays").get<std::uint64_t>() << "," << ms.at("checks_saved").get<std::uint64_t>() << ","
            << (e <= kAcceptableNrmse ? 1 : 0) << "\n";
    }
    if (!cdf_file.empty()) {
        std::ofstream cdf(cdf_file);
        cdf << "run,rx,value,fraction\n";
        for (const auto& [name, set] : {std::pair{"baseline", &sb}, std::pair{"simplified", &ss}}) {
            for (const auto& [rx, series] : *set) {
                for (const auto& p : ecdf(series.v)) {
                    cdf << name << "," << rx << "," << format_double(p.value) << "," << format_double(p.fraction)
                        << "\n";
                }
            }
        }
    }
    if (!window_file.empty()) {
        std::ofstream win(window_file);
        win << "run,rx,t_start_s,mean,std,outage\n";
        for (const auto& [name, samples] : {std::pair{"baseline", &base}, std::pair{"simplified", &simp}}) {
            // outage stays NaN here so windows containing it are flagged
            std::map<std::string, TimeSeries> raw;
            for (const auto& s : *samples) {
                raw[s.rx_id].t.push_back(s.time_s);
                raw[s.rx_id].v.push_back(metric_of(s, metric));
            }
            for (const auto& [rx, series] : raw) {
                for (const auto& w : windowed_stats(series)) {
                    win << name << "," << rx << "," << format_double(w.t_start) << "," << format_double(w.mean) << ","
                        << format_double(w.std) << "," << (w.outage ? 1 : 0) << "\n";
                }
            }
        }
    }
    return 0;
}

struct SweepGrid {
    std::vector<int> orders;
    std::vector<double> gammas;
};

/// "R=1..4,gamma=-inf,-40,-25,-15": values after a key belong to it until the next key.
inline SweepGrid parse_grid(const std::string& spec) {
    SweepGrid g;
    std::string key;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t comma = spec.find(',', start);
        if (comma == std::string::npos) comma = spec.size();
        std::string tok = spec.substr(start, comma - start);
        start = comma + 1;
        if (const auto eq = tok.find('='); eq != std::string::npos) {
            key = tok.substr(0, eq);
            tok = tok.substr(eq + 1);
        }
        if (tok.empty()) {
            throw ConfigError("empty value in grid '" + spec + "'");
        }
        if (key == "R") {
            if (const auto dots = tok.find(".."); dots != std::string::npos) {
                const int lo = std::stoi(tok.substr(0, dots));
                const int hi = std::stoi(tok.substr(dots + 2));
                if (lo > hi) throw ConfigError("empty R range '" + tok + "'");
                for (int r = lo; r <= hi; ++r) g.orders.push_back(r);
            } else {
                g.orders.push_back(std::stoi(tok));
            }
        } else if (key == "gamma") {
            g.gammas.push_back(parse_threshold(tok));
        } else {
            throw ConfigError("grid key must be R or gamma, got '" + key + "'");
        }
    }
    if (g.orders.empty() || g.gammas.empty()) {
        throw ConfigError("grid needs R and gamma values");
    }
    return g;
}

struct SweepCell {
    int order{0};
    double gamma_db{0.0};
    double t_rt_s{0.0};
    double t_ns_s{0.0};
    RunTotals totals;
    std::vector<LinkSample> samples;
};

inline SweepCell run_cell(const fs::path& scenario, TraceOverrides o, int order, double gamma, unsigned jobs,
                          unsigned repeat) {
    o.max_reflections = order;
    o.rel_threshold_db = std::isinf(gamma) ? std::string("-inf") : format_double(gamma);
    const Scenario scn = load_with_overrides(scenario, o);
    SweepCell cell;
    cell.order = order;
    cell.gamma_db = gamma;
    cell.t_rt_s = cell.t_ns_s = std::numeric_limits<double>::infinity();
    for (unsigned k = 0; k < std::max(1U, repeat); ++k) {
        const RunResult rr = run(scn, jobs);
        EvaluationResult ev = evaluate_links(scn, rr.instances, jobs);
        cell.t_rt_s = std::min(cell.t_rt_s, rr.trace_seconds);
        cell.t_ns_s = std::min(cell.t_ns_s, ev.network_seconds);
        if (k == 0) {
            cell.totals = totals(rr.instances);
            cell.samples = std::move(ev.samples);
        }
    }
    return cell;
}

/// NRMSE of the reference receiver (first bound receiver) against the baseline cell.
inline double cell_nrmse(const SweepCell& cell, const SweepCell& baseline, double floor_db) {
    const auto sb = series_by_rx(baseline.samples, "sinr", floor_db);
    const auto sc = series_by_rx(cell.samples, "sinr", floor_db);
    if (baseline.samples.empty()) {
        throw MetricError("scenario has no bound receiver");
    }
    const std::string& ref = baseline.samples.front().rx_id;
    return nrmse(sc.at(ref), sb.at(ref));
}

inline int cmd_sweep(const fs::path& scenario, const std::string& grid_spec, const TraceOverrides& base_o,
                     unsigned jobs, unsigned repeat, const fs::path& out_dir) {
    const SweepGrid grid = parse_grid(grid_spec);
    const int r_max = *std::max_element(grid.orders.begin(), grid.orders.end());
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<SweepCell> cells;
    std::optional<std::size_t> base_idx;
    for (const int r : grid.orders) {
        for (const double g : grid.gammas) {
            cells.push_back(run_cell(scenario, base_o, r, g, jobs, repeat));
            if (r == r_max && g == ninf) {
                base_idx = cells.size() - 1;
            }
        }
    }
    const SweepCell baseline = base_idx ? cells[*base_idx] : run_cell(scenario, base_o, r_max, ninf, jobs, repeat);

    StagedOutput out(out_dir);
    {
        auto f = out.open("sweep.csv");
        f << "# baseline R=" << r_max << " gamma_db=-inf; nrmse of the reference receiver's SINR, population std, "
          << "outage floor " << format_double(kDefaultOutageFloorDb) << " dB; speedup with 1000 network runs\n";
        f << "R,gamma_db,speedup,nrmse,t_rt_s,t_ns_s,rays,mpcs,obstruction_checks,acceptable\n";
        for (const auto& c : cells) {
            const double sp = speedup(baseline.t_rt_s, baseline.t_ns_s, c.t_rt_s, c.t_ns_s);
            double e = std::numeric_limits<double>::quiet_NaN();
            try {
                e = cell_nrmse(c, baseline, kDefaultOutageFloorDb);
            } catch (const MetricError& err) {
                std::cerr << "warning: R=" << c.order << " gamma=" << format_double(c.gamma_db) << ": " << err.what()
                          << "\n";
            }
            f << c.order << "," << format_double(c.gamma_db) << "," << format_double(sp) << "," << format_double(e)
              << "," << format_double(c.t_rt_s) << "," << format_double(c.t_ns_s) << "," << c.totals.rays << ","
              << c.totals.mpcs << "," << c.totals.obstruction_checks << "," << (e <= kAcceptableNrmse ? 1 : 0)
              << "\n";
        }
    }
    {
        auto f = out.open("manifest.json");
        nlohmann::json m;
        m["tool"] = "qdrt";
        m["version"] = kVersion;
        m["grid"] = grid_spec;
        m["repeat"] = repeat;
        m["jobs"] = jobs;
        f << m.dump(2) << "\n";
    }
    out.commit();
    return 0;
}

inline int cmd_qd_stats(std::size_t samples, const std::string& materials, int material, std::uint64_t seed,
                        const std::string& out_file) {
    QdMaterialParams params;
    if (!materials.empty()) {
        params = load_materials_file(materials).at(material);
    } else {
        params = scenes::placeholder_materials().at(scenes::kWall);
    }
    const QdStatsReport rep = qd_statistics(params, samples, seed);
    std::ofstream file;
    if (!out_file.empty()) {
        file.open(out_file);
        if (!file) {
            throw ConfigError("cannot write '" + out_file + "'");
        }
    }
    std::ostream& out = out_file.empty() ? std::cout : file;
    out << "statistic,empirical,analytic,tolerance,pass\n";
    for (const auto& r : rep.rows) {
        out << r.name << "," << format_double(r.empirical) << "," << format_double(r.analytic) << ","
            << format_double(r.tolerance) << "," << (r.pass ? 1 : 0) << "\n";
    }
    return rep.ok() ? 0 : 1;
}

/// Entry point shared by the executable and the tests. Returns the process exit code:
/// 0 success, 1 runtime or validation failure, 2 usage error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Quasi-deterministic mmWave ray tracer and link evaluator", "qdrt"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    TraceOverrides o;
    std::string scenario;
    std::string out_dir;
    unsigned jobs = 1;
    bool emit_counters = false;

    const auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--max-reflections", o.max_reflections, "Maximum reflection order R")->check(CLI::NonNegativeNumber);
        sub->add_option("--rel-threshold-db", o.rel_threshold_db, "Relative threshold in dB, or -inf")
            ->allow_extra_args(false);
        sub->add_option("--abs-threshold-db", o.abs_threshold_db, "Absolute path-gain threshold in dB");
        sub->add_option("--qd", o.qd, "Diffuse components")->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_flag("--threshold-after-obstruction", o.threshold_after_obstruction,
                      "Apply thresholds after obstruction checks");
        sub->add_flag("--no-post-qd-filter", o.no_post_qd_filter, "Skip thresholding of expanded MPCs");
        sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--steps", o.steps, "Override the number of time steps")->check(CLI::PositiveNumber);
    };

    auto* trace = app.add_subcommand("trace", "Trace a scenario; writes trace.csv, sinr.csv and manifest.json");
    trace->add_option("--scenario", scenario, "Scenario JSON file")->required();
    trace->add_option("--out", out_dir, "Output directory")->required();
    trace->add_flag("--emit-counters", emit_counters, "Also write per-instance operation counters (counters.csv)");
    add_overrides(trace);

    std::string baseline, simplified, metric = "sinr", report, cdf_file, window_file;
    double floor_db = kDefaultOutageFloorDb;
    auto* compare = app.add_subcommand(
        "compare", "Compare two trace runs. Report columns: rx, nrmse (population std, outage floored), speedup "
                   "(T_rt + 1000 T_ns ratio), rays_baseline, rays_simplified, checks_saved, acceptable (nrmse <= 0.05)");
    compare->add_option("--baseline", baseline, "Baseline run directory")->required();
    compare->add_option("--simplified", simplified, "Simplified run directory")->required();
    compare->add_option("--metric", metric, "sinr, snr or rx_power")->check(CLI::IsMember({"sinr", "snr", "rx_power"}));
    compare->add_option("--out", report, "Report CSV")->required();
    compare->add_option("--cdf", cdf_file, "Also write empirical CDFs (run, rx, value, fraction)");
    compare->add_option("--window-stats", window_file, "Also write 100 ms / 5 ms windowed statistics");
    compare->add_option("--outage-floor-db", floor_db, "Value substituted for outage samples");

    std::string grid_spec;
    unsigned repeat = 1;
    auto* sweep = app.add_subcommand("sweep", "Run a grid of (R, gamma) settings against the R_max, -inf baseline");
    sweep->add_option("--scenario", scenario, "Scenario JSON file")->required();
    sweep->add_option("--grid", grid_spec, "Grid such as R=1..4,gamma=-inf,-40,-25,-15")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_option("--repeat", repeat, "Timing repetitions per cell (minimum is kept)")->check(CLI::PositiveNumber);
    sweep->add_option("--steps", o.steps, "Override the number of time steps")->check(CLI::PositiveNumber);
    sweep->add_option("--qd", o.qd, "Diffuse components")->check(CLI::IsMember({"on", "off"}));
    sweep->add_option("--seed", o.seed, "Random seed");
    sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--threshold-after-obstruction", o.threshold_after_obstruction,
                    "Apply thresholds after obstruction checks");

    std::size_t samples = 0;
    std::string materials;
    int material = 0;
    std::uint64_t seed = 1;
    std::string stats_out;
    auto* qd = app.add_subcommand("qd-stats", "Empirical vs analytic diffuse-cluster statistics");
    qd->add_option("--samples", samples, "Number of clusters (>= 1000)")->required();
    qd->add_option("--materials", materials, "Material JSON file (default: built-in placeholders)");
    qd->add_option("--material", material, "Material id within --materials");
    qd->add_option("--seed", seed, "Random seed");
    qd->add_option("--out", stats_out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const CLI::App* failed = &app;
        for (const auto* sub : app.get_subcommands()) {
            failed = sub;
        }
        err << failed->help();
        return 2;
    }

    try {
        if (trace->parsed()) {
            return cmd_trace(scenario, o, jobs, emit_counters, out_dir);
        }
        if (compare->parsed()) {
            return cmd_compare(baseline, simplified, metric, floor_db, report, cdf_file, window_file);
        }
        if (sweep->parsed()) {
            return cmd_sweep(scenario, grid_spec, o, jobs, repeat, out_dir);
        }
        if (qd->parsed()) {
            return cmd_qd_stats(samples, materials, material, seed, stats_out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace qdrt::cli
