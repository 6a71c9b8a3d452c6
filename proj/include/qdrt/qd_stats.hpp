#pragma once

#include <qdrt/error.hpp>
#include <qdrt/material.hpp>
#include <qdrt/qd.hpp>
#include <qdrt/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace qdrt {

struct QdStatRow {
    std::string name;
    double empirical{0.0};
    double analytic{0.0};
    double tolerance{0.0}; // relative, or absolute critical value for the KS row
    bool pass{false};
};

struct QdStatsReport {
    std::size_t clusters{0};
    std::vector<QdStatRow> rows;

    bool ok() const {
        return std::all_of(rows.begin(), rows.end(), [](const QdStatRow& r) { return r.pass; });
    }
};

/// E[1/X] for X ~ Rician(s, sigma), by trapezoidal integration of the density.
inline double rician_mean_inverse(double s, double sigma) {
    if (sigma == 0.0) {
        return 1.0 / s;
    }
    const double hi = s + 12.0 * sigma;
    const std::size_t n = 20000;
    const double h = hi / static_cast<double>(n);
    const double s2 = sigma * sigma;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = h * static_cast<double>(i);
        const double z = x * s / s2;
        // I0(z) e^{-z}, asymptotic form where the unscaled Bessel value would overflow
        const double i0e = z < 500.0 ? std::cyl_bessel_i(0.0, z) * std::exp(-z) : 1.0 / std::sqrt(2.0 * std::numbers::pi * z);
        const double pdf = x / s2 * std::exp(-(x - s) * (x - s) / (2.0 * s2)) * i0e;
        const double w = (i == n) ? 0.5 : 1.0;
        num += w * pdf / x;
        den += w * pdf;
    }
    return num / den;
}

/// Draws `clusters` single-reflector diffuse batches around a synthetic ray and compares the
/// pooled statistics with their analytic targets: post-cursor inter-arrival mean vs 1/lambda,
/// post-cursor dB decay slope vs -(10/ln10) E[1/gamma], AoD azimuth offset std vs sqrt(2) b,
/// and the Kolmogorov-Smirnov distance of the phases from U[0, 2 pi).
inline QdStatsReport qd_statistics(const QdMaterialParams& params, std::size_t clusters, std::uint64_t seed) {
    if (clusters < 1000) {
        throw ConfigError("qd statistics need at least 1000 clusters");
    }
    params.validate();
    if (params.n_post < 1) {
        throw ConfigError("qd statistics need n_post >= 1");
    }
    DeterministicRay ray;
    ray.order = 1;
    ray.tuple = {0};
    ray.delay_s = 1e-3; // far from zero so pre-cursors are never truncated
    ray.gain_db = -80.0;
    ray.aod = {0.3, 0.0};
    ray.aoa = {-2.0, 0.1};
    ray.id = 1;

    double gap_sum = 0.0;
    std::size_t gaps = 0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t npts = 0;
    double az_ss = 0.0;
    std::size_t naz = 0;
    std::vector<double> phases;
    phases.reserve(clusters * static_cast<std::size_t>(params.n_pre + params.n_post));
    for (std::size_t c = 0; c < clusters; ++c) {
        RngStream rng(StreamKey{seed, c, 0, ray.id, DrawPurpose::diffuse});
        const auto batch = diffuse_batch(ray, params, rng);
        double prev = ray.delay_s;
        for (const auto& m : batch) {
            phases.push_back(m.phase_rad);
            const double d_az = wrap_pi(m.aod.azimuth - ray.aod.azimuth);
            az_ss += d_az * d_az;
            ++naz;
            if (m.kind != MpcKind::post_cursor) {
                continue;
            }
            gap_sum += m.delay_s - prev;
            prev = m.delay_s;
            ++gaps;
            const double x = m.delay_s - ray.delay_s;
            const double y = m.gain_db - ray.gain_db;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++npts;
        }
    }
    QdStatsReport rep;
    rep.clusters = clusters;
    const auto rel_row = [&](std::string name, double emp, double ana, double tol) {
        const bool pass = std::abs(emp - ana) <= tol * std::abs(ana);
        rep.rows.push_back({std::move(name), emp, ana, tol, pass});
    };
    rel_row("post_interarrival_mean_s", gap_sum / static_cast<double>(gaps), 1.0 / params.lambda_post_hz, 0.01);
    const double n = static_cast<double>(npts);
    const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    rel_row("post_decay_slope_db_per_s", slope,
            -kDbPerNeper * rician_mean_inverse(params.s_gamma_post_s, params.sigma_gamma_post_s), 0.05);
    rel_row("aod_azimuth_std_rad", std::sqrt(az_ss / static_cast<double>(naz)),
            std::sqrt(2.0) * params.angle_spread_rad, 0.02);

    std::sort(phases.begin(), phases.end());
    const double np = static_cast<double>(phases.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const double f = phases[i] / (2.0 * std::numbers::pi);
        ks = std::max({ks, static_cast<double>(i + 1) / np - f, f - static_cast<double>(i) / np});
    }
    const double critical = 1.628 / std::sqrt(np);
    rep.rows.push_back({"phase_ks_statistic", ks, 0.0, critical, ks < critical});
    return rep;
}

} // namespace qdrt
