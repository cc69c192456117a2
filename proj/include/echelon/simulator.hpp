#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "echelon/config.hpp"
#include "echelon/features.hpp"

namespace echelon {

struct PipelineEntry {
    int arrival_day;
    double units;
};

/// Mutable per-layer simulation state. Histories are indexed by day; at
/// decision time on day t, `demand` covers 0..t and the others cover 0..t-1.
struct LayerState {
    double inventory = 0.0;
    std::vector<PipelineEntry> pipeline;
    std::vector<double> demand, orders, sales, inventory_eod;
    std::vector<FeatureVec> features;

    double receive(int day) {
        double arrived = 0.0;
        std::erase_if(pipeline, [&](const PipelineEntry& e) {
            if (e.arrival_day == day) {
                arrived += e.units;
                return true;
            }
            return false;
        });
        return arrived;
    }

    void enqueue(int arrival_day, double units) {
        if (units > 0.0) pipeline.push_back({arrival_day, units});
    }
};

/// One layer-day of accounting. The profit identity
/// profit == revenue - purchase - holding - shortage holds exactly.
struct DayLedger {
    double revenue = 0.0;
    double purchase_cost = 0.0;
    double holding_cost = 0.0;
    double shortage_cost = 0.0;
    double profit = 0.0;
    double sales = 0.0;
    double shortage_units = 0.0;
};

/// SS = base + factor * std of the trailing demand window.
inline double safety_stock(std::span<const double> demand_hist, const ChainConfig& cfg) {
    return cfg.safety_stock_base +
           cfg.safety_stock_factor *
               trailing_std(demand_hist, static_cast<std::size_t>(cfg.demand_std_window));
}

struct BlendResult {
    double point = 0.0;
    Forecast smoothed{};
};

/// Point estimate: weighted mean of the horizon with weights 1.0 .. 0.5.
inline double forecast_point(const Forecast& f, const ChainConfig& cfg) {
    const auto w = cfg.forecast_weights();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < kHorizon; ++k) {
        num += w[k] * f[k];
        den += w[k];
    }
    return num / den;
}

/// Exponential smoothing across forecast refreshes, then the weighted point.
inline BlendResult blend_forecast(const Forecast& raw, const Forecast& prev_smoothed,
                                  const ChainConfig& cfg) {
    BlendResult out;
    for (std::size_t k = 0; k < kHorizon; ++k)
        out.smoothed[k] = cfg.smoothing_alpha * raw[k] + (1.0 - cfg.smoothing_alpha) * prev_smoothed[k];
    out.point = forecast_point(out.smoothed, cfg);
    return out;
}

/// Candidate order grid: from the order-up-to gap (demand estimate plus safety
/// stock minus on-hand) up to a week of 1.5x recent demand, capped by
/// remaining warehouse room, stepped by cfg.candidate_step with the upper
/// bound always included.
inline std::vector<double> candidate_orders(double demand_estimate, double stock_target,
                                            double inventory, std::span<const double> demand_hist,
                                            const ChainConfig& cfg) {
    const auto lo =
        std::max<std::int64_t>(0, std::llround(demand_estimate + stock_target - inventory));
    const double avg10 = trailing_mean(demand_hist, 10);
    const std::int64_t hi_demand = std::llround(1.5 * avg10 * 7.0 - inventory);
    const std::int64_t hi_room = std::llround(cfg.max_inventory - inventory);
    const std::int64_t hi = std::max(lo, std::min(hi_demand, hi_room));

    std::vector<double> candidates;
    for (std::int64_t c = lo; c <= hi; c += cfg.candidate_step)
        candidates.push_back(static_cast<double>(c));
    if (candidates.empty() || candidates.back() != static_cast<double>(hi))
        candidates.push_back(static_cast<double>(hi));
    return candidates;
}

/// Profit of ordering `order` now, played against the forecast for the next
/// kHorizon days with no further orders. The order arrives (and is paid for)
/// at lookahead day lead_time - 1; in-flight orders from previous days are not
/// modelled here.
inline double evaluate_candidate(double order, const Forecast& forecast, double inventory,
                                 int layer, const ChainConfig& cfg) {
    if (order < 0.0) throw std::invalid_argument("evaluate_candidate: negative order");
    double revenue = 0.0, purchase = 0.0, holding = 0.0, shortage = 0.0;
    for (std::size_t j = 0; j < kHorizon; ++j) {
        if (static_cast<int>(j) == cfg.lead_time - 1) {
            inventory += order;
            purchase += cfg.unit_cost[static_cast<std::size_t>(layer)] * order;
        }
        const double start = inventory;
        const double demand = std::max(0.0, forecast[j]);
        const double sold = std::min(inventory, demand);
        inventory -= sold;
        revenue += cfg.unit_price[static_cast<std::size_t>(layer)] * sold;
        shortage += cfg.shortage_rate * (demand - sold);
        holding += cfg.holding_rate * 0.5 * (start + inventory);
    }
    return revenue - purchase - holding - shortage;
}

inline double round_to_batch(double order, int batch_size) {
    if (order <= 0.0) return 0.0;
    const auto units = std::llround(order);
    const auto b = static_cast<std::int64_t>(batch_size);
    return static_cast<double>((units + b - 1) / b * b);
}

/// Profit-maximizing candidate (ties go to the smaller order), rounded up to
/// the batch size. Zero stays zero.
inline double choose_order(const LayerState& state, const Forecast& forecast, int layer,
                           const ChainConfig& cfg) {
    const double ss = safety_stock(state.demand, cfg);
    const double point = forecast_point(forecast, cfg);
    const std::vector<double> candidates =
        candidate_orders(point, ss, state.inventory, state.demand, cfg);

    double best = candidates.front();
    double best_profit = evaluate_candidate(best, forecast, state.inventory, layer, cfg);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double p = evaluate_candidate(candidates[i], forecast, state.inventory, layer, cfg);
        if (p > best_profit) {
            best = candidates[i];
            best_profit = p;
        }
    }
    return round_to_batch(best, cfg.batch_size);
}

/// Per-layer ordering behaviour plugged into the chain. decide() is called
/// once per day after the day's books are closed: `today` is the finished
/// ledger and the feature row for the day is already appended to
/// state.features.
class OrderingAgent {
public:
    virtual ~OrderingAgent() = default;
    virtual double decide(int day, int layer, const LayerState& state, const DayLedger& today,
                          const ChainConfig& cfg) = 0;
    /// Day-1-ahead demand prediction backing the forecast-error metric.
    virtual double last_point_forecast() const = 0;
};

struct LayerSeries {
    int layer = 0;
    std::vector<double> demand, orders, sales, inventory, profit, cum_profit, holding, shortage;
    // Kept in memory for audits and metrics; not part of the run file.
    std::vector<double> revenue, purchase, arrivals, shortage_units, point_forecast;
};

struct RunResult {
    std::string model;
    std::uint64_t seed = 0;
    std::array<LayerSeries, 3> layers{};
    int train_days = 0;
    double noise_level = 0.0;
};

/// The four-tier chain. Layer i's demand on day t is the order layer i-1
/// placed on day t (consumer demand at the retailer). Upstream shipments are
/// capped by the supplier's on-hand stock; the manufacturer's raw-material
/// source is unconstrained. Unmet demand is lost, not backlogged.
class ChainSimulator {
public:
    ChainSimulator(const ChainConfig& cfg, std::vector<double> consumer_demand,
                   std::array<OrderingAgent*, 3> agents)
        : cfg_(cfg), demand_(std::move(consumer_demand)), agents_(agents) {
        cfg_.validate();
        if (demand_.size() < static_cast<std::size_t>(cfg_.horizon))
            throw std::invalid_argument("ChainSimulator: demand shorter than horizon");
        for (int i = 0; i < 3; ++i) {
            states_[i].inventory = cfg_.initial_inventory;
            result_.layers[i].layer = i + 1;
        }
        result_.train_days = cfg_.train_days;
    }

    /// Event order per layer (processed retailer -> manufacturer):
    ///   1. receive arrivals due today and pay for them
    ///   2. observe demand (downstream order placed today)
    ///   3. sell from stock, losing and penalizing the unmet remainder;
    ///      the sold units ship downstream for day t + lead_time
    ///   4. holding cost on the mean of post-arrival and end-of-day stock
    ///   5. build features, decide the order, place it upstream
    std::array<DayLedger, 3> step_day(int t) {
        if (t < 0 || t >= cfg_.horizon) throw std::invalid_argument("step_day: day out of range");
        std::array<DayLedger, 3> ledgers{};
        std::array<double, 3> orders_today{};

        for (int i = 1; i <= 3; ++i) {
            LayerState& st = states_[i - 1];
            DayLedger& led = ledgers[i - 1];

            const double arrived = st.receive(t);
            st.inventory += arrived;
            led.purchase_cost = cfg_.unit_cost[static_cast<std::size_t>(i)] * arrived;

            const double d = i == 1 ? demand_[static_cast<std::size_t>(t)] : orders_today[i - 2];
            st.demand.push_back(d);

            const double start = st.inventory;
            const double sold = std::min(start, d);
            st.inventory -= sold;
            led.sales = sold;
            led.shortage_units = d - sold;
            led.revenue = cfg_.unit_price[static_cast<std::size_t>(i)] * sold;
            led.shortage_cost = cfg_.shortage_rate * led.shortage_units;
            led.holding_cost = cfg_.holding_rate * 0.5 * (start + st.inventory);
            led.profit = led.revenue - led.purchase_cost - led.holding_cost - led.shortage_cost;

            // Ship what was actually sold to the layer below.
            if (i >= 2) states_[i - 2].enqueue(t + cfg_.lead_time, sold);

            st.features.push_back(build_features(st.demand, st.orders, st.inventory_eod, st.sales,
                                                 static_cast<std::size_t>(t), seasonal_period_,
                                                 static_cast<double>(cfg_.horizon)));
            const double order = agents_[i - 1]->decide(t, i, st, led, cfg_);
            if (order < 0.0) throw std::runtime_error("agent returned negative order");
            orders_today[i - 1] = order;
            if (i == 3) st.enqueue(t + cfg_.lead_time, order);  // raw source ships in full

            st.orders.push_back(order);
            st.sales.push_back(sold);
            st.inventory_eod.push_back(st.inventory);

            record(i - 1, led, order, arrived, agents_[i - 1]->last_point_forecast());
        }
        return ledgers;
    }

    void run(int days) {
        for (int t = 0; t < days; ++t) step_day(t);
    }

    const RunResult& result() const { return result_; }
    RunResult& result() { return result_; }
    const LayerState& state(int layer) const { return states_[static_cast<std::size_t>(layer - 1)]; }
    void set_seasonal_period(double p) { seasonal_period_ = p; }

private:
    void record(int idx, const DayLedger& led, double order, double arrived, double forecast) {
        LayerSeries& s = result_.layers[static_cast<std::size_t>(idx)];
        const LayerState& st = states_[idx];
        s.demand.push_back(st.demand.back());
        s.orders.push_back(order);
        s.sales.push_back(led.sales);
        s.inventory.push_back(st.inventory);
        s.profit.push_back(led.profit);
        s.cum_profit.push_back((s.cum_profit.empty() ? 0.0 : s.cum_profit.back()) + led.profit);
        s.holding.push_back(led.holding_cost);
        s.shortage.push_back(led.shortage_cost);
        s.revenue.push_back(led.revenue);
        s.purchase.push_back(led.purchase_cost);
        s.arrivals.push_back(arrived);
        s.shortage_units.push_back(led.shortage_units);
        s.point_forecast.push_back(forecast);
    }

    ChainConfig cfg_;
    std::vector<double> demand_;
    std::array<OrderingAgent*, 3> agents_;
    std::array<LayerState, 3> states_{};
    RunResult result_;
    double seasonal_period_ = 90.0;
};

/// Simulate the full horizon with the given per-layer agents. Agents carry
/// their own train/validation switching; the caller is responsible for having
/// fitted any models they wrap.
inline RunResult run_episode(const ChainConfig& cfg, std::vector<double> consumer_demand,
                             std::array<OrderingAgent*, 3> agents, std::string model_name,
                             std::uint64_t seed, double noise_level = 0.0) {
    ChainSimulator sim(cfg, std::move(consumer_demand), agents);
    sim.run(cfg.horizon);
    RunResult out = std::move(sim.result());
    out.model = std::move(model_name);
    out.seed = seed;
    out.noise_level = noise_level;
    return out;
}

}  // namespace echelon
