#pragma once

#include <array>
#include <stdexcept>

namespace echelon {

/// Economic and physical constants of the four-tier chain. Layer 0 is the
/// consumer; layers 1..3 (retailer, distributor, manufacturer) hold stock.
struct ChainConfig {
    static constexpr int kLayers = 4;

    std::array<double, 4> unit_cost{0.0, 30.0, 45.0, 60.0};
    std::array<double, 4> unit_price{0.0, 70.0, 100.0, 130.0};
    double holding_rate = 0.03;   // money per unit per day
    double shortage_rate = 0.03;  // money per unit per day
    int lead_time = 1;            // days from order to receipt
    double initial_inventory = 100.0;
    int batch_size = 16;      // orders round up to a multiple of this
    int candidate_step = 80;  // spacing of the candidate-order grid
    double max_inventory = 1000.0;
    int horizon = 1095;
    int train_days = 219;
    double smoothing_alpha = 0.3;
    double safety_stock_base = 10.0;
    double safety_stock_factor = 1.0;
    int demand_std_window = 10;

    /// Horizon weights for collapsing a 7-day forecast to a point estimate:
    /// linear from 1.0 (tomorrow) down to 0.5 (day 7).
    std::array<double, 7> forecast_weights() const {
        std::array<double, 7> w{};
        for (int k = 0; k < 7; ++k) w[k] = 1.0 - 0.5 * static_cast<double>(k) / 6.0;
        return w;
    }

    void validate() const {
        for (int i = 1; i < kLayers; ++i)
            if (unit_price[i] <= unit_cost[i])
                throw std::invalid_argument("ChainConfig: price must exceed cost at layers 1..3");
        if (lead_time < 1) throw std::invalid_argument("ChainConfig: lead_time must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("ChainConfig: batch_size must be >= 1");
        if (candidate_step < 1) throw std::invalid_argument("ChainConfig: candidate_step must be >= 1");
        if (horizon < 1 || train_days < 0 || train_days > horizon)
            throw std::invalid_argument("ChainConfig: bad horizon/train_days split");
        if (holding_rate < 0 || shortage_rate < 0)
            throw std::invalid_argument("ChainConfig: rates must be >= 0");
        if (smoothing_alpha < 0 || smoothing_alpha > 1)
            throw std::invalid_argument("ChainConfig: smoothing_alpha must be in [0,1]");
        if (max_inventory <= 0) throw std::invalid_argument("ChainConfig: max_inventory must be > 0");
    }
};

}  // namespace echelon
