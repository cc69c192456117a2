#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "echelon/matrix.hpp"

namespace echelon {

inline constexpr std::size_t kFeatureDim = 10;
inline constexpr std::size_t kWindowLen = 10;
inline constexpr std::size_t kHorizon = 7;

using FeatureVec = std::array<double, kFeatureDim>;
using Forecast = std::array<double, kHorizon>;

/// Feature layout, one row per layer-day:
///   0 demand(t)
///   1 orders(t-1)        2 orders(t-2)
///   3 inventory(t-1)     4 inventory(t-2)
///   5 sales(t-1)
///   6 std of orders over the last 5 days
///   7 std of demand over the last 5 days
///   8 seasonal index sin(2*pi*t/period)
///   9 t/horizon
enum FeatureIndex : std::size_t {
    kFeatDemand = 0,
    kFeatOrderLag1 = 1,
    kFeatOrderLag2 = 2,
    kFeatInvLag1 = 3,
    kFeatInvLag2 = 4,
    kFeatSalesLag1 = 5,
    kFeatOrderStd5 = 6,
    kFeatDemandStd5 = 7,
    kFeatSeasonal = 8,
    kFeatTime = 9,
};

/// Population standard deviation of the trailing `window` values (fewer if the
/// series is shorter; 0 for an empty or single-point tail).
inline double trailing_std(std::span<const double> series, std::size_t window) {
    const std::size_t n = std::min(series.size(), window);
    if (n == 0) return 0.0;
    const auto tail = series.subspan(series.size() - n, n);
    double mean = 0.0;
    for (double v : tail) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : tail) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n));
}

inline double trailing_mean(std::span<const double> series, std::size_t window) {
    const std::size_t n = std::min(series.size(), window);
    if (n == 0) return 0.0;
    double mean = 0.0;
    for (std::size_t i = series.size() - n; i < series.size(); ++i) mean += series[i];
    return mean / static_cast<double>(n);
}

/// Build the feature row for day t. `demand` must cover days 0..t; the other
/// histories cover days 0..t-1. Lags that reach before day 0 are zero.
inline FeatureVec build_features(std::span<const double> demand, std::span<const double> orders,
                                 std::span<const double> inventory, std::span<const double> sales,
                                 std::size_t t, double seasonal_period = 90.0,
                                 double horizon = 1095.0) {
    const auto lag = [](std::span<const double> s, std::size_t k) {
        return s.size() >= k ? s[s.size() - k] : 0.0;
    };
    FeatureVec f{};
    f[kFeatDemand] = demand.empty() ? 0.0 : demand.back();
    f[kFeatOrderLag1] = lag(orders, 1);
    f[kFeatOrderLag2] = lag(orders, 2);
    f[kFeatInvLag1] = lag(inventory, 1);
    f[kFeatInvLag2] = lag(inventory, 2);
    f[kFeatSalesLag1] = lag(sales, 1);
    f[kFeatOrderStd5] = trailing_std(orders, 5);
    f[kFeatDemandStd5] = trailing_std(demand, 5);
    f[kFeatSeasonal] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / seasonal_period);
    f[kFeatTime] = static_cast<double>(t) / horizon;
    return f;
}

struct WindowSample {
    std::array<FeatureVec, kWindowLen> x;
    Forecast y;
};

using WindowBatch = std::vector<WindowSample>;

/// Slide a length-W window over the feature series; the target is the next H
/// demand values. One sample per valid start index; a series shorter than
/// W + H yields an empty batch.
inline WindowBatch make_windows(const std::vector<FeatureVec>& features,
                                std::span<const double> demand, std::size_t window = kWindowLen,
                                std::size_t horizon = kHorizon) {
    WindowBatch batch;
    const std::size_t len = std::min(features.size(), demand.size());
    if (len < window + horizon) return batch;
    batch.reserve(len - window - horizon + 1);
    for (std::size_t s = 0; s + window + horizon <= len; ++s) {
        WindowSample sample{};
        for (std::size_t i = 0; i < window; ++i) sample.x[i] = features[s + i];
        for (std::size_t k = 0; k < horizon; ++k) sample.y[k] = demand[s + window + k];
        batch.push_back(sample);
    }
    return batch;
}

inline Matrix features_to_matrix(const std::vector<FeatureVec>& features) {
    Matrix m(features.size(), kFeatureDim);
    for (std::size_t r = 0; r < features.size(); ++r)
        for (std::size_t c = 0; c < kFeatureDim; ++c) m(r, c) = features[r][c];
    return m;
}

}  // namespace echelon
