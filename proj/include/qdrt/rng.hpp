#pragma once

#include <qdrt/error.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>

namespace qdrt {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) noexcept {
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

/// Hash of an ordered triangle tuple. The empty tuple (direct ray) hashes to the FNV offset basis.
inline std::uint64_t tuple_hash(std::span<const std::size_t> tuple) noexcept {
    std::uint64_t h = kFnvOffset;
    for (const std::size_t idx : tuple) {
        auto v = static_cast<std::uint64_t>(idx);
        for (int b = 0; b < 8; ++b) {
            h ^= (v & 0xffU);
            h *= kFnvPrime;
            v >>= 8;
        }
    }
    return h;
}

enum class DrawPurpose : std::uint64_t {
    reflection_loss = 1,
    diffuse = 2,
    test = 99,
};

/// Identifies one independent random stream. Same key, same sequence.
struct StreamKey {
    std::uint64_t seed{0};
    std::uint64_t timestep{0};
    std::uint64_t pair{0};
    std::uint64_t ray{0};
    DrawPurpose purpose{DrawPurpose::test};

    std::uint64_t mix() const noexcept {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ timestep);
        h = splitmix64(h ^ pair);
        h = splitmix64(h ^ ray);
        return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    }
};

/// Seeded stream with portable samplers. The standard distributions are avoided so that
/// draws do not depend on the standard library implementation.
class RngStream {
public:
    explicit RngStream(const StreamKey& key) : engine_(key.mix()) {}
    explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1].
    double uniform_open0() noexcept { return 1.0 - uniform(); }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double exponential(double rate) noexcept { return -std::log(uniform_open0()) / rate; }

    /// Zero-mean Laplacian with scale b (standard deviation sqrt(2) b).
    double laplace(double scale) noexcept {
        const double u = uniform() - 0.5;
        const double mag = -std::log1p(-2.0 * std::abs(u));
        return u < 0.0 ? -scale * mag : scale * mag;
    }

    std::uint64_t next_u64() noexcept { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_{0.0};
    bool has_spare_{false};
};

/// |Z| with Z complex Gaussian of mean magnitude s and per-component deviation sigma.
inline double sample_rician(double s, double sigma, RngStream& rng) {
    if (sigma < 0.0 || !std::isfinite(sigma)) {
        throw ConfigError("Rician sigma must be >= 0");
    }
    if (sigma == 0.0) {
        return s;
    }
    const double re = s + sigma * rng.normal();
    const double im = sigma * rng.normal();
    return std::hypot(re, im);
}

} // namespace qdrt
