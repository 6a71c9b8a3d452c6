#include <qdrt/evaluate.hpp>
#include <qdrt/scenario.hpp>
#include <qdrt/scenes.hpp>
#include <qdrt/trace_io.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace qdrt;
namespace fs = std::filesystem;

namespace {

const fs::path kData = QDRT_DATA_DIR;

nlohmann::json indoor_doc() { return read_json_file(kData / "indoor1.json"); }

Scenario small_indoor(std::size_t steps, int order, double rel = -std::numeric_limits<double>::infinity()) {
    auto doc = indoor_doc();
    doc["steps"] = steps;
    doc["simplification"]["max_reflections"] = order;
    doc["simplification"]["rel_threshold_db"] = std::isinf(rel) ? nlohmann::json("-inf") : nlohmann::json(rel);
    return parse_scenario(doc, kData);
}

std::string serialize(std::span<const ChannelInstance> inst, const std::string& digest) {
    std::ostringstream ss;
    write_trace(ss, inst, digest);
    return ss.str();
}

} // namespace

TEST(Mobility, StaticNode) {
    NodeSpec n;
    n.waypoints = {{1, 2, 3}};
    for (const double t : {0.0, 1.0, 100.0}) EXPECT_EQ(position_at(n, t), (Vec3{1, 2, 3}));
}

TEST(Mobility, ConstantSpeedAlongWaypoints) {
    NodeSpec n;
    n.waypoints = {{0, 0, 0}, {12, 0, 0}};
    n.speed_mps = 1.2;
    const Vec3 p = position_at(n, 5.0);
    EXPECT_NEAR(p.x, 6.0, 1e-12);
    EXPECT_EQ(position_at(n, 1000.0), (Vec3{12, 0, 0}));
}

TEST(Mobility, TurnsCorners) {
    NodeSpec n;
    n.waypoints = {{0, 0, 0}, {3, 0, 0}, {3, 4, 0}};
    n.speed_mps = 1.0;
    const Vec3 p = position_at(n, 5.0);
    EXPECT_NEAR(p.x, 3.0, 1e-12);
    EXPECT_NEAR(p.y, 2.0, 1e-12);
}

TEST(ScenarioFile, ShippedScenariosLoad) {
    for (const char* name : {"indoor1.json", "l_corridor.json", "courtyard.json"}) {
        const auto scn = parse_scenario(read_json_file(kData / name), kData);
        EXPECT_FALSE(scn.digest.empty()) << name;
        EXPECT_FALSE(scn.materials.calibrated);
    }
    const auto l = parse_scenario(read_json_file(kData / "l_corridor.json"), kData);
    EXPECT_EQ(l.pairs().size(), 4u);
    EXPECT_EQ(l.mesh.size(), 20u);
}

TEST(ScenarioFile, MeshesMatchSceneBuilders) {
    const auto check = [](const char* file, const std::vector<Triangle>& want) {
        const auto mesh = load_mesh_file((kData / file).string());
        ASSERT_EQ(mesh.size(), want.size()) << file;
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_EQ(mesh.triangle(i).v0, want[i].v0);
            EXPECT_EQ(mesh.triangle(i).v1, want[i].v1);
            EXPECT_EQ(mesh.triangle(i).v2, want[i].v2);
            EXPECT_EQ(mesh.triangle(i).material_id, want[i].material_id);
        }
    };
    check("indoor1.mesh", scenes::indoor1());
    check("l_corridor.mesh", scenes::l_corridor());
    check("courtyard.mesh", scenes::courtyard());
}

TEST(ScenarioFile, DigestIgnoresKeyOrderButNotValues) {
    const auto doc = indoor_doc();
    const auto reordered = nlohmann::json::parse(doc.dump()); // objects are key-sorted either way
    EXPECT_EQ(parse_scenario(doc, kData).digest, parse_scenario(reordered, kData).digest);
    auto changed = doc;
    changed["seed"] = 99;
    EXPECT_NE(parse_scenario(doc, kData).digest, parse_scenario(changed, kData).digest);
}

TEST(ScenarioFile, ValidationErrors) {
    const auto expect_config_error = [](nlohmann::json doc) {
        EXPECT_THROW(parse_scenario(doc, kData), ConfigError) << doc.dump();
    };
    auto d = indoor_doc();
    d["nodes"][0].erase("tx_power_dbm");
    expect_config_error(d);
    d = indoor_doc();
    d["nodes"][1]["tx_power_dbm"] = 10;
    expect_config_error(d);
    d = indoor_doc();
    d["nodes"][1]["serving"] = "nobody";
    expect_config_error(d);
    d = indoor_doc();
    d["nodes"][1]["id"] = "tx0";
    expect_config_error(d);
    d = indoor_doc();
    d["nodes"][1]["speed_mps"] = -1;
    expect_config_error(d);
    d = indoor_doc();
    d["steps"] = 0;
    expect_config_error(d);
    d = indoor_doc();
    d["timestep_s"] = 0;
    expect_config_error(d);
    d = indoor_doc();
    d["simplification"]["max_reflections"] = -2;
    expect_config_error(d);
    d = indoor_doc();
    d["unexpected"] = 1;
    expect_config_error(d);
    d = indoor_doc();
    d["nodes"][0]["kind"] = "relay";
    expect_config_error(d);
    d = indoor_doc();
    d["mesh"] = "missing.mesh";
    expect_config_error(d);
}

TEST(Run, InstanceCountAndLineOfSight) {
    const auto scn = small_indoor(10, 1);
    const auto res = run(scn);
    ASSERT_EQ(res.instances.size(), 10u * scn.pairs().size());
    for (std::size_t i = 0; i < res.instances.size(); ++i) {
        EXPECT_EQ(res.instances[i].timestep, i);
        EXPECT_GE(res.instances[i].mpcs.size(), 1u);
        EXPECT_EQ(res.instances[i].counters.tuples_visited, predicted_tuple_count(12, 1));
    }
}

TEST(Run, IndependentOfWorkerCount) {
    auto scn = small_indoor(12, 2);
    scn.qd_enabled = true;
    const auto a = serialize(run(scn, 1).instances, scn.digest);
    const auto b = serialize(run(scn, 3).instances, scn.digest);
    EXPECT_EQ(a, b);
}

TEST(Run, SimplifiedRunIsSubsetOfBaseline) {
    for (const bool qd : {false, true}) {
        auto base = small_indoor(6, 3);
        base.qd_enabled = qd;
        const auto full = run(base);
        for (const auto& [order, rel] : {std::pair{1, -1e300}, std::pair{3, -15.0}, std::pair{2, -25.0}}) {
            auto simp = small_indoor(6, order, rel);
            simp.qd_enabled = qd;
            const auto cut = run(simp);
            ASSERT_EQ(cut.instances.size(), full.instances.size());
            for (std::size_t i = 0; i < cut.instances.size(); ++i) {
                for (const auto& m : cut.instances[i].mpcs) {
                    EXPECT_NE(std::find(full.instances[i].mpcs.begin(), full.instances[i].mpcs.end(), m),
                              full.instances[i].mpcs.end());
                }
            }
        }
    }
}

TEST(Run, SymmetricShortcutSwapsAngles) {
    auto scn = small_indoor(3, 2);
    scn.reciprocal_links = true;
    const auto res = run(scn);
    ASSERT_EQ(res.instances.size(), 6u);
    const auto& fwd = res.instances[0];
    const auto& rev = res.instances[1];
    EXPECT_EQ(rev.tx_id, fwd.rx_id);
    ASSERT_EQ(rev.mpcs.size(), fwd.mpcs.size());
    for (std::size_t i = 0; i < fwd.mpcs.size(); ++i) {
        EXPECT_EQ(rev.mpcs[i].aod, fwd.mpcs[i].aoa);
        EXPECT_EQ(rev.mpcs[i].aoa, fwd.mpcs[i].aod);
        EXPECT_EQ(rev.mpcs[i].gain_db, fwd.mpcs[i].gain_db);
    }
    // without the shortcut the reverse link is traced; geometry agrees, loss draws are per direction
    scn.symmetric_shortcut = false;
    const auto traced = run(scn);
    const auto delays = [](const ChannelInstance& inst) {
        std::vector<double> d;
        for (const auto& m : inst.mpcs) d.push_back(m.delay_s);
        std::sort(d.begin(), d.end());
        return d;
    };
    const auto want = delays(fwd), got = delays(traced.instances[1]);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-18);
}

TEST(TraceIo, RoundTripRandomInstances) {
    std::mt19937_64 g(41);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    std::uniform_int_distribution<int> count(0, 5);
    std::vector<ChannelInstance> inst(1000);
    for (std::size_t i = 0; i < inst.size(); ++i) {
        inst[i].timestep = i / 3;
        inst[i].tx_id = "tx" + std::to_string(i % 3);
        inst[i].rx_id = "rx_a";
        const int n = count(g);
        for (int k = 0; k < n; ++k) {
            Mpc m;
            m.delay_s = u(g) * 1e-9;
            m.gain_db = u(g);
            m.aod = {u(g) / 400, u(g) / 700};
            m.aoa = {u(g) / 400, u(g) / 700};
            m.phase_rad = std::abs(u(g)) / 170;
            m.kind = static_cast<MpcKind>(k % 3);
            m.parent = g();
            inst[i].mpcs.push_back(m);
        }
    }
    std::stringstream ss;
    write_trace(ss, inst, "abc123");
    const auto back = read_trace(ss);
    EXPECT_EQ(back.digest, "abc123");
    ASSERT_EQ(back.instances.size(), inst.size());
    for (std::size_t i = 0; i < inst.size(); ++i) {
        EXPECT_EQ(back.instances[i].timestep, inst[i].timestep);
        EXPECT_EQ(back.instances[i].tx_id, inst[i].tx_id);
        EXPECT_EQ(back.instances[i].rx_id, inst[i].rx_id);
        EXPECT_EQ(back.instances[i].mpcs, inst[i].mpcs);
    }
}

TEST(TraceIo, EmptyTraceIsValid) {
    std::stringstream ss;
    write_trace(ss, {}, "d");
    EXPECT_TRUE(read_trace(ss).instances.empty());
}

TEST(TraceIo, TruncationIsDetected) {
    const auto scn = small_indoor(4, 1);
    const std::string text = serialize(run(scn).instances, scn.digest);
    // cut at every line boundary except the complete file
    std::size_t pos = 0;
    int cuts = 0;
    while ((pos = text.find('\n', pos)) != std::string::npos && pos + 1 < text.size()) {
        std::istringstream in(text.substr(0, pos + 1));
        EXPECT_THROW(read_trace(in), ParseError) << "cut at " << pos;
        ++pos;
        ++cuts;
    }
    EXPECT_GT(cuts, 5);
    std::istringstream whole(text);
    EXPECT_NO_THROW(read_trace(whole));
}

TEST(TraceIo, ErrorsReportLineNumbers) {
    std::istringstream bad("# qdrt-trace v1 digest=x\nI,0,a,b,1\nM,0,a,b,main,1,2,3,4,5,6,7\nEND,1\n");
    try {
        read_trace(bad);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream junk("hello\n");
    EXPECT_THROW(read_trace(junk), ParseError);
}

TEST(Evaluate, SamplesPerReceiverAndStep) {
    const auto scn = small_indoor(5, 2);
    const auto res = run(scn);
    const auto ev = evaluate_links(scn, res.instances);
    ASSERT_EQ(ev.samples.size(), 5u);
    for (const auto& s : ev.samples) {
        EXPECT_EQ(s.rx_id, "rx0");
        EXPECT_EQ(s.tx_id, "tx0");
        EXPECT_TRUE(std::isfinite(s.sinr_db));
        EXPECT_EQ(s.sinr_db, s.snr_db); // no interferer in this room
    }
}

TEST(Evaluate, InterfererLowersSinrAndIdleRestoresSnr) {
    auto scn = parse_scenario(read_json_file(kData / "l_corridor.json"), kData);
    scn.steps = 3;
    scn.simplification.max_reflection_order = 1;
    const auto res = run(scn);
    const auto ev = evaluate_links(scn, res.instances);
    ASSERT_EQ(ev.samples.size(), 6u);
    for (const auto& s : ev.samples) EXPECT_LE(s.sinr_db, s.snr_db);
    for (auto& n : scn.nodes) {
        if (n.id == "txi") n.active = false;
    }
    const auto quiet = evaluate_links(scn, res.instances);
    for (const auto& s : quiet.samples) {
        if (s.rx_id == "rx0") {
            EXPECT_EQ(s.sinr_db, s.snr_db);
        } else {
            EXPECT_TRUE(std::isnan(s.sinr_db));
        }
    }
}
