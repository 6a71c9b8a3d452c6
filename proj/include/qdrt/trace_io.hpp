#pragma once

#include <qdrt/error.hpp>
#include <qdrt/evaluate.hpp>
#include <qdrt/mesh_io.hpp>
#include <qdrt/qd.hpp>
#include <qdrt/scenario.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace qdrt {

inline constexpr std::string_view kTraceMagic = "# qdrt-trace v1";

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

inline double csv_double(std::string_view f, std::size_t line) {
    if (f == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (f == "inf") return std::numeric_limits<double>::infinity();
    if (f == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size()) {
        throw ParseError(line, "bad number '" + std::string(f) + "'");
    }
    return v;
}

template <typename T>
T csv_uint(std::string_view f, std::size_t line, int base = 10) {
    T v{};
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v, base);
    if (ec != std::errc{} || p != f.data() + f.size() || f.empty()) {
        throw ParseError(line, "bad integer '" + std::string(f) + "'");
    }
    return v;
}

inline MpcKind parse_kind(std::string_view f, std::size_t line) {
    if (f == "main") return MpcKind::main_cursor;
    if (f == "pre") return MpcKind::pre_cursor;
    if (f == "post") return MpcKind::post_cursor;
    throw ParseError(line, "bad MPC kind '" + std::string(f) + "'");
}

} // namespace detail

/// CSV trace. A header line carries the configuration digest; each channel instance is an
/// `I,timestep,tx,rx,n` line followed by its n MPC lines
/// `M,timestep,tx,rx,kind,delay_s,gain_db,aod_az,aod_el,aoa_az,aoa_el,phase_rad,parent`;
/// a final `END,count` line lets readers detect truncation.
inline void write_trace(std::ostream& out, std::span<const ChannelInstance> instances, std::string_view digest) {
    out << kTraceMagic << " digest=" << digest << "\n";
    for (const auto& inst : instances) {
        const std::string key = std::to_string(inst.timestep) + "," + inst.tx_id + "," + inst.rx_id;
        out << "I," << key << "," << inst.mpcs.size() << "\n";
        for (const auto& m : inst.mpcs) {
            out << "M," << key << "," << to_string(m.kind) << "," << format_double(m.delay_s) << ","
                << format_double(m.gain_db) << "," << format_double(m.aod.azimuth) << ","
                << format_double(m.aod.elevation) << "," << format_double(m.aoa.azimuth) << ","
                << format_double(m.aoa.elevation) << "," << format_double(m.phase_rad) << ","
                << detail::hex64(m.parent) << "\n";
        }
    }
    out << "END," << instances.size() << "\n";
}

struct TraceFile {
    std::string digest;
    std::vector<ChannelInstance> instances; // MPCs only; counters are not stored
};

inline TraceFile read_trace(std::istream& in) {
    TraceFile tf;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || !line.starts_with(kTraceMagic)) {
        throw ParseError(1, "not a qdrt trace");
    }
    ++lineno;
    const auto at = line.find("digest=");
    if (at != std::string::npos) {
        tf.digest = line.substr(at + 7);
    }
    std::size_t expected = 0;
    bool ended = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (ended) {
            throw ParseError(lineno, "data after END");
        }
        const auto f = detail::split_csv(line);
        if (f[0] == "END") {
            if (f.size() != 2 || detail::csv_uint<std::size_t>(f[1], lineno) != tf.instances.size()) {
                throw ParseError(lineno, "instance count mismatch");
            }
            if (expected != 0) {
                throw ParseError(lineno, "instance ended early");
            }
            ended = true;
        } else if (f[0] == "I") {
            if (f.size() != 5) throw ParseError(lineno, "instance line needs 5 fields");
            if (expected != 0) throw ParseError(lineno, "instance ended early");
            ChannelInstance inst;
            inst.timestep = detail::csv_uint<std::size_t>(f[1], lineno);
            inst.tx_id = std::string(f[2]);
            inst.rx_id = std::string(f[3]);
            expected = detail::csv_uint<std::size_t>(f[4], lineno);
            inst.mpcs.reserve(expected);
            tf.instances.push_back(std::move(inst));
        } else if (f[0] == "M") {
            if (f.size() != 13) throw ParseError(lineno, "MPC line needs 13 fields");
            if (expected == 0) throw ParseError(lineno, "MPC outside an instance");
            auto& inst = tf.instances.back();
            if (detail::csv_uint<std::size_t>(f[1], lineno) != inst.timestep || f[2] != inst.tx_id ||
                f[3] != inst.rx_id) {
                throw ParseError(lineno, "MPC does not match its instance");
            }
            Mpc m;
            m.kind = detail::parse_kind(f[4], lineno);
            m.delay_s = detail::csv_double(f[5], lineno);
            m.gain_db = detail::csv_double(f[6], lineno);
            m.aod = {detail::csv_double(f[7], lineno), detail::csv_double(f[8], lineno)};
            m.aoa = {detail::csv_double(f[9], lineno), detail::csv_double(f[10], lineno)};
            m.phase_rad = detail::csv_double(f[11], lineno);
            m.parent = detail::csv_uint<std::uint64_t>(f[12], lineno, 16);
            inst.mpcs.push_back(m);
            --expected;
        } else {
            throw ParseError(lineno, "unknown record '" + std::string(f[0]) + "'");
        }
    }
    if (!ended) {
        throw ParseError(lineno + 1, "trace is truncated (no END line)");
    }
    return tf;
}

inline constexpr std::string_view kSinrHeader = "timestep,time_s,rx,tx,sinr_db,snr_db,rx_power_dbm,n_mpcs";

inline void write_sinr_csv(std::ostream& out, std::span<const LinkSample> samples) {
    out << kSinrHeader << "\n";
    for (const auto& s : samples) {
        out << s.timestep << "," << format_double(s.time_s) << "," << s.rx_id << "," << s.tx_id << ","
            << format_double(s.sinr_db) << "," << format_double(s.snr_db) << "," << format_double(s.rx_power_dbm)
            << "," << s.n_mpcs << "\n";
    }
}

inline std::vector<LinkSample> read_sinr_csv(std::istream& in) {
    std::vector<LinkSample> out;
    std::string line;
    if (!std::getline(in, line) || line != kSinrHeader) {
        throw ParseError(1, "unexpected SINR header");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto f = detail::split_csv(line);
        if (f.size() != 8) {
            throw ParseError(lineno, "SINR line needs 8 fields");
        }
        LinkSample s;
        s.timestep = detail::csv_uint<std::size_t>(f[0], lineno);
        s.time_s = detail::csv_double(f[1], lineno);
        s.rx_id = std::string(f[2]);
        s.tx_id = std::string(f[3]);
        s.sinr_db = detail::csv_double(f[4], lineno);
        s.snr_db = detail::csv_double(f[5], lineno);
        s.rx_power_dbm = detail::csv_double(f[6], lineno);
        s.n_mpcs = detail::csv_uint<std::size_t>(f[7], lineno);
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_counters_csv(std::ostream& out, std::span<const ChannelInstance> instances) {
    out << "timestep,tx,rx,tuples_visited,geometric_ops,obstruction_checks,rays,mpcs,checks_saved\n";
    for (const auto& i : instances) {
        out << i.timestep << "," << i.tx_id << "," << i.rx_id << "," << i.counters.tuples_visited << ","
            << i.counters.geometric_ops << "," << i.counters.obstruction_checks << "," << i.rays << ","
            << i.mpcs.size() << "," << i.checks_saved << "\n";
    }
}

} // namespace qdrt
