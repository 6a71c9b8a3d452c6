#pragma once

#include <qdrt/error.hpp>
#include <qdrt/qd.hpp>
#include <qdrt/raytracer.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>

namespace qdrt {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Uniform planar array of omnidirectional elements. In local coordinates the array lies in
/// the y-z plane: column index runs along y, row index along z. `orientation` rotates local
/// coordinates into the global frame (identity: array parallel to the global y-z plane).
struct ArrayConfig {
    int rows{1};
    int cols{1};
    double spacing_wavelengths{0.5};
    Eigen::Matrix3d orientation{Eigen::Matrix3d::Identity()};

    int size() const noexcept { return rows * cols; }

    void validate() const {
        if (rows < 1 || cols < 1) {
            throw ConfigError("array needs at least one row and one column");
        }
        if (!(spacing_wavelengths > 0.0)) {
            throw ConfigError("array spacing must be > 0");
        }
    }

    /// Rotation by `yaw` about global z (radians).
    static Eigen::Matrix3d yaw_rotation(double yaw) {
        return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    }
};

/// Element responses toward `dir`, row-major (element index = row * cols + col).
/// Element (m, n) sits at (0, n d, m d) wavelengths in array coordinates and responds with
/// exp(j 2 pi d (n u_y + m u_z)), u being the unit direction in array coordinates.
inline CVector steering_vector(const ArrayConfig& cfg, const Angles& dir) {
    const Vec3 u = unit_direction(dir);
    const Eigen::Vector3d local = cfg.orientation.transpose() * Eigen::Vector3d(u.x, u.y, u.z);
    const double ky = 2.0 * std::numbers::pi * cfg.spacing_wavelengths * local.y();
    const double kz = 2.0 * std::numbers::pi * cfg.spacing_wavelengths * local.z();
    CVector a(cfg.size());
    for (int m = 0; m < cfg.rows; ++m) {
        for (int n = 0; n < cfg.cols; ++n) {
            a(m * cfg.cols + n) = std::polar(1.0, n * ky + m * kz);
        }
    }
    return a;
}

inline double db_to_linear_power(double db) noexcept { return std::pow(10.0, db / 10.0); }
inline double linear_power_to_db(double lin) noexcept { return 10.0 * std::log10(lin); }

/// H = sum_m sqrt(PG_m) exp(j Phi_m) conj(a_rx(AoA_m)) a_tx(AoD_m)^H, a U x S matrix.
/// Phi_m already carries the propagation phase, so no -2 pi tau f_c term is added here.
inline CMatrix assemble_channel(std::span<const Mpc> mpcs, const ArrayConfig& tx_cfg, const ArrayConfig& rx_cfg) {
    CMatrix h = CMatrix::Zero(rx_cfg.size(), tx_cfg.size());
    for (const auto& m : mpcs) {
        const Complex coeff = std::polar(std::sqrt(db_to_linear_power(m.gain_db)), m.phase_rad);
        const CVector a_rx = steering_vector(rx_cfg, m.aoa).conjugate();
        const CVector a_tx = steering_vector(tx_cfg, m.aod);
        h.noalias() += (coeff * a_rx) * a_tx.adjoint();
    }
    return h;
}

struct Beamformers {
    CVector tx; // unit norm, S entries
    CVector rx; // unit norm, U entries
    double gain{0.0}; // |rx^H H tx| = sigma_max
};

/// Dominant singular pair of H. For repeated singular values the first triplet of the
/// decomposition's output order is used.
inline Beamformers svd_beamforming(const CMatrix& h) {
    if (h.size() == 0 || h.cwiseAbs().maxCoeff() == 0.0) {
        throw LinkOutage("zero channel matrix");
    }
    Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Beamformers bf;
    bf.rx = svd.matrixU().col(0);
    bf.tx = svd.matrixV().col(0);
    bf.gain = svd.singularValues()(0);
    return bf;
}

/// |w_rx^H H w_tx|^2
inline double beamformed_power_gain(const CMatrix& h, const CVector& w_tx, const CVector& w_rx) {
    return std::norm(w_rx.dot(h * w_tx));
}

struct LinkBudget {
    double bandwidth_hz{400e6};
    double noise_figure_db{9.0};
    double noise_psd_dbm_hz{-174.0};

    double noise_floor_dbm() const {
        if (!(bandwidth_hz > 0.0)) {
            throw ConfigError("bandwidth must be > 0");
        }
        return noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
    }
};

/// An interfering transmitter as seen by the victim receiver. An empty `w_tx` means idle.
struct Interferer {
    double tx_power_dbm{0.0};
    CMatrix h; // interferer -> victim RX
    CVector w_tx;
};

struct SinrResult {
    double sinr_db{0.0};
    double snr_db{0.0};
    double signal_dbm{0.0};
    double interference_dbm{0.0};
};

/// SINR = P_t |w_rx^H H w_t|^2 / (sum_m P_m |w_rx^H H_m w_m|^2 + N0 B F), all powers in mW.
inline SinrResult sinr(double tx_power_dbm, const CMatrix& h, const CVector& w_tx, const CVector& w_rx,
                       std::span<const Interferer> interferers, const LinkBudget& budget) {
    const double signal_mw = db_to_linear_power(tx_power_dbm) * beamformed_power_gain(h, w_tx, w_rx);
    double interference_mw = 0.0;
    for (const auto& itf : interferers) {
        if (itf.w_tx.size() == 0) {
            continue;
        }
        if (itf.h.rows() != h.rows()) {
            throw ConfigError("interferer channel does not share the victim RX dimension");
        }
        interference_mw += db_to_linear_power(itf.tx_power_dbm) * beamformed_power_gain(itf.h, itf.w_tx, w_rx);
    }
    const double noise_mw = db_to_linear_power(budget.noise_floor_dbm());
    SinrResult r;
    r.signal_dbm = linear_power_to_db(signal_mw);
    r.interference_dbm = linear_power_to_db(interference_mw);
    r.sinr_db = linear_power_to_db(signal_mw / (interference_mw + noise_mw));
    r.snr_db = linear_power_to_db(signal_mw / noise_mw);
    return r;
}

inline double sinr_db(double tx_power_dbm, const CMatrix& h, const CVector& w_tx, const CVector& w_rx,
                      std::span<const Interferer> interferers, const LinkBudget& budget) {
    return sinr(tx_power_dbm, h, w_tx, w_rx, interferers, budget).sinr_db;
}

} // namespace qdrt
