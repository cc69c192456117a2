#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "echelon/rng.hpp"

namespace echelon {

/// Consumer-level demand generator: constant base plus a seasonal sine, a
/// weekly sine and Gaussian noise, floored at zero.
struct DemandSpec {
    double base = 50.0;
    double seasonal_amp = 20.0;
    double seasonal_period = 90.0;
    double weekly_amp = 5.0;
    double weekly_period = 7.0;
    double noise_sd = 3.0;
    std::uint64_t seed = 42;
    int horizon = 1095;

    void validate() const {
        if (seasonal_amp < 0 || weekly_amp < 0 || noise_sd < 0)
            throw std::invalid_argument("DemandSpec: amplitudes must be >= 0");
        if (horizon < 1) throw std::invalid_argument("DemandSpec: horizon must be >= 1");
        if (seasonal_period <= 0 || weekly_period <= 0)
            throw std::invalid_argument("DemandSpec: periods must be > 0");
    }
};

inline std::vector<double> generate_demand(const DemandSpec& spec) {
    spec.validate();
    Rng rng = Rng::derive(spec.seed, 0xD0);
    std::vector<double> out(static_cast<std::size_t>(spec.horizon));
    for (int t = 0; t < spec.horizon; ++t) {
        const double td = static_cast<double>(t);
        double d = spec.base +
                   spec.seasonal_amp * std::sin(2.0 * std::numbers::pi * td / spec.seasonal_period) +
                   spec.weekly_amp * std::sin(2.0 * std::numbers::pi * td / spec.weekly_period) +
                   rng.gaussian(0.0, spec.noise_sd);
        out[static_cast<std::size_t>(t)] = std::max(0.0, d);
    }
    return out;
}

/// Perturb a demand segment with Gaussian noise scaled by the segment's own
/// population std, then clamp each value to [0, 2 * max(original segment)].
/// The std and the cap are computed from the series before noise is added.
inline std::vector<double> inject_noise(std::span<const double> series, double level, Rng& rng) {
    if (level < 0.0) throw std::invalid_argument("inject_noise: level must be >= 0");
    std::vector<double> out(series.begin(), series.end());
    if (level == 0.0 || series.empty()) return out;

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double ss = 0.0;
    for (double v : series) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(series.size()));
    const double cap = 2.0 * *std::max_element(series.begin(), series.end());

    for (double& v : out) v = std::clamp(v + rng.gaussian(0.0, level * sd), 0.0, cap);
    return out;
}

inline void write_demand_csv(const std::string& path, std::span<const double> series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,demand\n";
    char buf[64];
    for (std::size_t t = 0; t < series.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", t, series[t]);
        out << buf;
    }
}

}  // namespace echelon
