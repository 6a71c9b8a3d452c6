#include <qdrt/channel.hpp>

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qdrt;

namespace {

ArrayConfig upa(int rows, int cols) {
    ArrayConfig a;
    a.rows = rows;
    a.cols = cols;
    return a;
}

CMatrix random_matrix(std::mt19937_64& g, int rows, int cols) {
    std::normal_distribution<double> n;
    CMatrix h(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) h(i, j) = Complex(n(g), n(g));
    return h;
}

Mpc ray_mpc(double gain_db, Angles aod, Angles aoa, double phase) {
    Mpc m;
    m.gain_db = gain_db;
    m.aod = aod;
    m.aoa = aoa;
    m.phase_rad = phase;
    return m;
}

} // namespace

TEST(Steering, BroadsideIsAllOnes) {
    const auto a = steering_vector(upa(4, 4), {0.0, 0.0});
    ASSERT_EQ(a.size(), 16);
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(std::abs(a(i) - Complex(1, 0)), 0.0, 1e-15);
}

TEST(Steering, EndfireAlongColumnsAlternatesSign) {
    // u = +y: half-wavelength spacing gives a pi phase step per column
    const auto a = steering_vector(upa(2, 4), {std::numbers::pi / 2, 0.0});
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 4; ++n) EXPECT_NEAR(std::abs(a(m * 4 + n) - std::polar(1.0, n * std::numbers::pi)), 0.0, 1e-12);
}

TEST(Steering, ZenithStepsAlongRows) {
    const auto a = steering_vector(upa(3, 2), {0.0, std::numbers::pi / 2});
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 2; ++n) EXPECT_NEAR(std::abs(a(m * 2 + n) - std::polar(1.0, m * std::numbers::pi)), 0.0, 1e-12);
}

TEST(Steering, YawRotatesBoresight) {
    ArrayConfig a = upa(4, 4);
    a.orientation = ArrayConfig::yaw_rotation(std::numbers::pi / 2);
    const auto v = steering_vector(a, {std::numbers::pi / 2, 0.0}); // +y is the rotated boresight
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(std::abs(v(i) - Complex(1, 0)), 0.0, 1e-12);
}

TEST(Beamforming, RankOneGainIsArrayProduct) {
    const double pg_db = -87.3;
    const Mpc m = ray_mpc(pg_db, {0.4, -0.2}, {-1.9, 0.3}, 1.1);
    const CMatrix h = assemble_channel(std::span<const Mpc>(&m, 1), upa(8, 8), upa(4, 4));
    ASSERT_EQ(h.rows(), 16);
    ASSERT_EQ(h.cols(), 64);
    const auto bf = svd_beamforming(h);
    const double gain_db = 10.0 * std::log10(beamformed_power_gain(h, bf.tx, bf.rx));
    EXPECT_NEAR(gain_db - pg_db, 10.0 * std::log10(1024.0), 1e-6);
    EXPECT_NEAR(10.0 * std::log10(1024.0), 30.103, 1e-3);
}

TEST(Beamforming, GainEqualsPowerIterationSigmaMax) {
    std::mt19937_64 g(29);
    std::uniform_int_distribution<int> dim(1, 12);
    for (int k = 0; k < 100; ++k) {
        const CMatrix h = random_matrix(g, dim(g), dim(g));
        const auto bf = svd_beamforming(h);
        EXPECT_NEAR(bf.tx.norm(), 1.0, 1e-12);
        EXPECT_NEAR(bf.rx.norm(), 1.0, 1e-12);
        const double s = oracle::sigma_max(h);
        EXPECT_NEAR(std::abs(bf.rx.dot(h * bf.tx)), s, 1e-9 * s);
        EXPECT_NEAR(bf.gain, s, 1e-9 * s);
    }
}

TEST(Beamforming, ZeroChannelIsOutage) {
    EXPECT_THROW(svd_beamforming(CMatrix::Zero(4, 8)), LinkOutage);
    EXPECT_THROW(svd_beamforming(assemble_channel({}, upa(2, 2), upa(2, 2))), LinkOutage);
}

TEST(Channel, SuperposesMpcs) {
    const Mpc a = ray_mpc(-80, {0.1, 0.0}, {2.0, 0.1}, 0.3);
    const Mpc b = ray_mpc(-90, {-0.7, 0.2}, {1.0, -0.3}, 2.2);
    const Mpc both[] = {a, b};
    const auto tx = upa(2, 2), rx = upa(2, 2);
    const CMatrix h = assemble_channel(both, tx, rx);
    const CMatrix ha = assemble_channel(std::span<const Mpc>(&a, 1), tx, rx);
    const CMatrix hb = assemble_channel(std::span<const Mpc>(&b, 1), tx, rx);
    EXPECT_LT((h - ha - hb).norm(), 1e-18);
    // single entry by hand: element (0,0) of both arrays is the phase reference
    EXPECT_NEAR(std::abs(ha(0, 0) - std::polar(std::pow(10.0, -80.0 / 20.0), 0.3)), 0.0, 1e-18);
}

TEST(LinkBudget, NoiseFloor) {
    LinkBudget b;
    EXPECT_NEAR(b.noise_floor_dbm(), -78.98, 0.01);
    EXPECT_NEAR(b.noise_floor_dbm(), -78.97940008672037, 1e-9);
    b.bandwidth_hz = 0.0;
    EXPECT_THROW(b.noise_floor_dbm(), ConfigError);
}

TEST(Sinr, BoundedBySnrAndEqualWhenIdle) {
    std::mt19937_64 g(31);
    LinkBudget budget;
    for (int k = 0; k < 200; ++k) {
        const CMatrix h = random_matrix(g, 4, 8) * 1e-4;
        const auto bf = svd_beamforming(h);
        Interferer itf;
        itf.tx_power_dbm = 20.0;
        itf.h = random_matrix(g, 4, 8) * 1e-4;
        itf.w_tx = svd_beamforming(random_matrix(g, 4, 8)).tx;
        const Interferer items[] = {itf};
        const auto s = sinr(20.0, h, bf.tx, bf.rx, items, budget);
        EXPECT_LE(s.sinr_db, s.snr_db);
        Interferer idle = itf;
        idle.w_tx.resize(0);
        const Interferer quiet[] = {idle};
        const auto q = sinr(20.0, h, bf.tx, bf.rx, quiet, budget);
        EXPECT_EQ(q.sinr_db, q.snr_db);
        EXPECT_EQ(q.sinr_db, sinr_db(20.0, h, bf.tx, bf.rx, {}, budget));
    }
}

TEST(Sinr, HandComputedValue) {
    // 1x1 channel of power gain -100 dB, 20 dBm: signal -80 dBm; noise -78.98 dBm
    CMatrix h(1, 1);
    h(0, 0) = Complex(1e-5, 0);
    CVector w(1);
    w(0) = 1;
    LinkBudget budget;
    const auto s = sinr(20.0, h, w, w, {}, budget);
    EXPECT_NEAR(s.signal_dbm, -80.0, 1e-9);
    EXPECT_NEAR(s.snr_db, -80.0 - budget.noise_floor_dbm(), 1e-9);
}
