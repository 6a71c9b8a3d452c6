#pragma once

#include <qdrt/error.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace qdrt {

/// The two complexity-reduction knobs: a reflection-order cap and the path-gain thresholds.
struct SimplificationSetting {
    int max_reflection_order{4};
    double rel_threshold_db{-std::numeric_limits<double>::infinity()};
    double abs_threshold_db{-200.0};

    void validate() const {
        if (max_reflection_order < 0) {
            throw ConfigError("max reflection order must be >= 0");
        }
        if (!std::isfinite(abs_threshold_db)) {
            throw ConfigError("absolute threshold must be finite");
        }
        if (std::isnan(rel_threshold_db) || rel_threshold_db == std::numeric_limits<double>::infinity()) {
            throw ConfigError("relative threshold must be a finite dB value or -inf");
        }
    }
};

template <typename T>
concept HasGainDb = requires(const T& t) {
    { t.gain_db } -> std::convertible_to<double>;
};

/// Indices (ascending) of gains with gain >= abs_threshold_db.
inline std::vector<std::size_t> select_absolute(std::span<const double> gains_db, double abs_threshold_db) {
    std::vector<std::size_t> keep;
    keep.reserve(gains_db.size());
    for (std::size_t i = 0; i < gains_db.size(); ++i) {
        if (gains_db[i] >= abs_threshold_db) {
            keep.push_back(i);
        }
    }
    return keep;
}

/// Indices (ascending) of gains within rel_threshold_db of the strongest: gain - max >= threshold.
inline std::vector<std::size_t> select_relative(std::span<const double> gains_db, double rel_threshold_db) {
    std::vector<std::size_t> keep;
    if (gains_db.empty()) {
        return keep;
    }
    keep.reserve(gains_db.size());
    const double strongest = *std::max_element(gains_db.begin(), gains_db.end());
    for (std::size_t i = 0; i < gains_db.size(); ++i) {
        if (rel_threshold_db == -std::numeric_limits<double>::infinity() || gains_db[i] - strongest >= rel_threshold_db) {
            keep.push_back(i);
        }
    }
    return keep;
}

/// Absolute filter first, then relative filter anchored on the strongest survivor.
inline std::vector<std::size_t> select_thresholded(std::span<const double> gains_db, double rel_threshold_db,
                                                   double abs_threshold_db) {
    const auto abs_keep = select_absolute(gains_db, abs_threshold_db);
    std::vector<double> survivors;
    survivors.reserve(abs_keep.size());
    for (const auto i : abs_keep) {
        survivors.push_back(gains_db[i]);
    }
    const auto rel_keep = select_relative(survivors, rel_threshold_db);
    std::vector<std::size_t> keep;
    keep.reserve(rel_keep.size());
    for (const auto j : rel_keep) {
        keep.push_back(abs_keep[j]);
    }
    return keep;
}

namespace detail {

template <HasGainDb T>
std::vector<double> gains_of(std::span<const T> items) {
    std::vector<double> g;
    g.reserve(items.size());
    for (const auto& it : items) {
        g.push_back(it.gain_db);
    }
    return g;
}

template <typename T>
std::vector<T> gather(std::span<const T> items, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (const auto i : idx) {
        out.push_back(items[i]);
    }
    return out;
}

} // namespace detail

template <HasGainDb T>
std::vector<T> filter_relative(std::span<const T> items, double rel_threshold_db) {
    return detail::gather(items, select_relative(detail::gains_of(items), rel_threshold_db));
}

template <HasGainDb T>
std::vector<T> filter_absolute(std::span<const T> items, double abs_threshold_db) {
    return detail::gather(items, select_absolute(detail::gains_of(items), abs_threshold_db));
}

template <HasGainDb T>
std::vector<T> filter_thresholds(std::span<const T> items, double rel_threshold_db, double abs_threshold_db) {
    return detail::gather(items, select_thresholded(detail::gains_of(items), rel_threshold_db, abs_threshold_db));
}

/// A ray dropped by thresholding before its obstruction checks ran.
struct DiscardedRay {
    int order{0};
    std::uint64_t id{0};
    std::uint64_t exclusions{0}; // triangle skips summed over the ray's segments
};

/// Obstruction checks avoided by discarding `discarded` in a T-triangle scene:
/// sum over rays of (r + 1) T - exclusions.
inline std::uint64_t saved_checks(std::span<const DiscardedRay> discarded, std::uint64_t triangle_count) {
    std::uint64_t total = 0;
    for (const auto& d : discarded) {
        total += static_cast<std::uint64_t>(d.order + 1) * triangle_count - d.exclusions;
    }
    return total;
}

} // namespace qdrt
