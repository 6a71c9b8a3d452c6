#pragma once

#include <qdrt/channel.hpp>
#include <qdrt/parallel.hpp>
#include <qdrt/scenario.hpp>

#include <chrono>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qdrt {

/// One receiver's link quality at one timestep. NaN SINR/SNR marks an outage.
struct LinkSample {
    std::size_t timestep{0};
    double time_s{0.0};
    std::string rx_id;
    std::string tx_id;
    double sinr_db{0.0};
    double snr_db{0.0};
    double rx_power_dbm{0.0};
    std::size_t n_mpcs{0};
};

struct EvaluationResult {
    std::vector<LinkSample> samples; // timestep-major, receivers in node order
    double network_seconds{0.0};
};

namespace detail {

inline const ChannelInstance* find_instance(std::span<const ChannelInstance> step, const std::string& tx,
                                            const std::string& rx) {
    for (const auto& inst : step) {
        if (inst.tx_id == tx && inst.rx_id == rx) {
            return &inst;
        }
    }
    return nullptr;
}

} // namespace detail

/// SINR of every bound receiver from its serving transmitter. Each other active transmitter
/// interferes with the transmit beam it points at its own first bound receiver; transmitters
/// without a bound receiver or with an all-zero serving channel stay idle.
/// `instances` must come from run() on the same scenario.
inline EvaluationResult evaluate_links(const Scenario& scn, std::span<const ChannelInstance> instances, unsigned jobs = 1) {
    const std::size_t per_step = scn.pairs().size();
    if (per_step == 0 || instances.size() != per_step * scn.steps) {
        throw ConfigError("evaluate_links: instance count does not match the scenario");
    }
    std::vector<std::size_t> receivers;
    for (std::size_t i = 0; i < scn.nodes.size(); ++i) {
        if (!scn.nodes[i].is_tx() && !scn.nodes[i].serving.empty()) {
            receivers.push_back(i);
        }
    }
    // first bound receiver of each transmitter
    std::map<std::string, std::string> aim;
    for (const auto& n : scn.nodes) {
        if (!n.is_tx() && !n.serving.empty() && !aim.contains(n.serving)) {
            aim[n.serving] = n.id;
        }
    }

    EvaluationResult res;
    res.samples.resize(scn.steps * receivers.size());
    const auto start = std::chrono::steady_clock::now();
    parallel_for(scn.steps, jobs, [&](std::size_t step) {
        const std::span<const ChannelInstance> here = instances.subspan(step * per_step, per_step);
        const auto channel = [&](const NodeSpec& tx, const NodeSpec& rx) {
            const ChannelInstance* inst = detail::find_instance(here, tx.id, rx.id);
            if (inst == nullptr) {
                throw ConfigError("evaluate_links: missing channel " + tx.id + " -> " + rx.id);
            }
            return std::pair{assemble_channel(inst->mpcs, tx.array, rx.array), inst->mpcs.size()};
        };
        // transmit beams of every active transmitter toward its aimed receiver
        std::map<std::string, CVector> beams;
        for (const auto& n : scn.nodes) {
            if (!n.is_tx() || !n.active || !aim.contains(n.id)) {
                continue;
            }
            try {
                beams[n.id] = svd_beamforming(channel(n, *scn.find_node(aim.at(n.id))).first).tx;
            } catch (const LinkOutage&) {
            }
        }
        for (std::size_t k = 0; k < receivers.size(); ++k) {
            const NodeSpec& rx = scn.nodes[receivers[k]];
            const NodeSpec& tx = *scn.find_node(rx.serving);
            LinkSample& out = res.samples[step * receivers.size() + k];
            out.timestep = step;
            out.time_s = static_cast<double>(step) * scn.timestep_s;
            out.rx_id = rx.id;
            out.tx_id = tx.id;
            const auto [h, n_mpcs] = channel(tx, rx);
            out.n_mpcs = n_mpcs;
            constexpr double nan = std::numeric_limits<double>::quiet_NaN();
            if (!tx.active) {
                out.sinr_db = out.snr_db = out.rx_power_dbm = nan;
                continue;
            }
            std::optional<Beamformers> bf;
            try {
                bf = svd_beamforming(h);
            } catch (const LinkOutage&) {
                out.sinr_db = out.snr_db = out.rx_power_dbm = nan;
                continue;
            }
            std::vector<Interferer> itf;
            for (const auto& [id, w] : beams) {
                if (id == tx.id) {
                    continue;
                }
                const NodeSpec& m = *scn.find_node(id);
                itf.push_back({*m.tx_power_dbm, channel(m, rx).first, w});
            }
            const SinrResult s = sinr(*tx.tx_power_dbm, h, bf->tx, bf->rx, itf, scn.budget);
            out.sinr_db = s.sinr_db;
            out.snr_db = s.snr_db;
            out.rx_power_dbm = s.signal_dbm;
        }
    });
    res.network_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

} // namespace qdrt
