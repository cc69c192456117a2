#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "echelon/config.hpp"
#include "echelon/simulator.hpp"

namespace echelon {

inline double population_variance(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(xs.size());
}

/// Profit of serving demand D perfectly with no holding or shortage drag.
inline double theoretical_profit(double demand, int layer, const ChainConfig& cfg) {
    if (layer < 1 || layer > 3) throw std::invalid_argument("theoretical_profit: layer in 1..3");
    return demand * (cfg.unit_price[static_cast<std::size_t>(layer)] -
                     cfg.unit_cost[static_cast<std::size_t>(layer)]);
}

/// Actual over theoretical profit; defined as 0 when the ceiling is 0.
inline double efficiency(double profit, double theoretical) {
    return theoretical == 0.0 ? 0.0 : profit / theoretical;
}

/// Trailing 7-day mean, defined from the 7th observation on (output length
/// max(0, len-6)).
inline std::vector<double> moving_avg7(std::span<const double> series) {
    std::vector<double> out;
    if (series.size() < 7) return out;
    out.reserve(series.size() - 6);
    double window = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        window += series[i];
        if (i >= 7) window -= series[i - 7];
        if (i >= 6) out.push_back(window / 7.0);
    }
    return out;
}

struct BullwhipRatio {
    double stage = 0.0;       // Var(orders) / Var(own incoming demand)
    double cumulative = 0.0;  // Var(orders) / Var(consumer demand)
};

/// Population-variance ratio; a degenerate denominator reports +inf.
inline double bullwhip(std::span<const double> orders, std::span<const double> demand) {
    const double vd = population_variance(demand);
    const double vo = population_variance(orders);
    if (vd == 0.0) return std::numeric_limits<double>::infinity();
    return vo / vd;
}

/// Scalar metrics of one layer over the validation window.
struct LayerMetrics {
    double cum_profit = 0.0;
    double turnover = 0.0;
    double service_level = 0.0;
    double cost = 0.0;  // holding + shortage, cumulative
    double mae = 0.0;
    double order_volatility = 0.0;
    double bullwhip_stage = 0.0;
    double bullwhip_cum = 0.0;
    double efficiency_mean = 0.0;
};

struct MetricRow {
    std::string model;
    std::uint64_t seed = 0;
    double noise = 0.0;
    int layer = 0;
    LayerMetrics m;
};

namespace detail {
inline std::span<const double> validation_slice(const std::vector<double>& s, int train_days) {
    const auto offset = static_cast<std::size_t>(train_days);
    if (s.size() < offset) throw std::invalid_argument("validation slice: series too short");
    return {s.data() + offset, s.size() - offset};
}
}  // namespace detail

/// Compute the per-layer validation metrics of a finished run. Forecast error
/// pairs the prediction made on day t with the demand realized on day t+1,
/// both inside the validation window.
inline LayerMetrics compute_layer_metrics(const RunResult& run, int layer,
                                          const ChainConfig& cfg) {
    const LayerSeries& s = run.layers[static_cast<std::size_t>(layer - 1)];
    const int train = run.train_days;
    const auto demand = detail::validation_slice(s.demand, train);
    const auto orders = detail::validation_slice(s.orders, train);
    const auto sales = detail::validation_slice(s.sales, train);
    const auto inventory = detail::validation_slice(s.inventory, train);
    const auto profit = detail::validation_slice(s.profit, train);
    const auto holding = detail::validation_slice(s.holding, train);
    const auto shortage = detail::validation_slice(s.shortage, train);
    const auto consumer = detail::validation_slice(run.layers[0].demand, train);
    const std::size_t n = demand.size();
    if (n == 0) throw std::invalid_argument("compute_layer_metrics: empty validation segment");

    LayerMetrics m;
    for (double p : profit) m.cum_profit += p;
    for (double c : holding) m.cost += c;
    for (double c : shortage) m.cost += c;

    double total_sales = 0.0, mean_inventory = 0.0;
    std::size_t served = 0;
    double eff_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        total_sales += sales[t];
        mean_inventory += inventory[t];
        if (demand[t] - sales[t] <= 1e-9) ++served;
        eff_sum += efficiency(profit[t], theoretical_profit(demand[t], layer, cfg));
    }
    mean_inventory /= static_cast<double>(n);
    m.turnover = mean_inventory == 0.0 ? 0.0 : total_sales / mean_inventory;
    m.service_level = static_cast<double>(served) / static_cast<double>(n);
    m.efficiency_mean = eff_sum / static_cast<double>(n);

    double abs_err = 0.0;
    std::size_t pairs = 0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        abs_err += std::abs(s.point_forecast[static_cast<std::size_t>(train) + t] - demand[t + 1]);
        ++pairs;
    }
    m.mae = pairs == 0 ? 0.0 : abs_err / static_cast<double>(pairs);

    m.order_volatility = std::sqrt(population_variance(orders));
    m.bullwhip_stage = bullwhip(orders, demand);
    m.bullwhip_cum = bullwhip(orders, consumer);
    return m;
}

inline std::vector<MetricRow> compute_metrics(const RunResult& run, const ChainConfig& cfg) {
    std::vector<MetricRow> rows;
    for (int layer = 1; layer <= 3; ++layer)
        rows.push_back({run.model, run.seed, run.noise_level, layer,
                        compute_layer_metrics(run, layer, cfg)});
    return rows;
}

inline const char* metric_csv_header() {
    return "model,seed,noise,layer,cum_profit,turnover,service_level,cost,mae,"
           "order_volatility,bullwhip_stage,bullwhip_cum,efficiency_mean";
}

inline std::string metric_csv_row(const MetricRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s,%llu,%.2f,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  r.model.c_str(), static_cast<unsigned long long>(r.seed), r.noise, r.layer,
                  r.m.cum_profit, r.m.turnover, r.m.service_level, r.m.cost, r.m.mae,
                  r.m.order_volatility, r.m.bullwhip_stage, r.m.bullwhip_cum,
                  r.m.efficiency_mean);
    return buf;
}

}  // namespace echelon
