#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "echelon/demand.hpp"
#include "echelon/models.hpp"
#include "echelon/simulator.hpp"

namespace echelon {

/// Sub-stream ids for Rng::derive so every role in an experiment has its own
/// documented stream.
namespace streams {
inline constexpr std::uint64_t kDemand = 0xD0;        // used by generate_demand
inline constexpr std::uint64_t kModelFit = 0x100;     // + kind*8 + layer
inline constexpr std::uint64_t kDqnAgent = 0x200;     // + layer
inline constexpr std::uint64_t kDqnAct = 0x240;       // + layer
inline constexpr std::uint64_t kNoise = 0x300;        // ^ bit pattern of level
inline constexpr std::uint64_t kSearch = 0x400;       // + trial index
}  // namespace streams

/// Forecast-driven ordering. Until `switch_day` the agent runs the plain
/// moving-average forecaster (the warm-up policy that generates training
/// histories); from `switch_day` on it consults the wrapped model on the last
/// kWindowLen scaled feature rows. Forecasts pass through the exponential
/// smoother, which restarts at the switch.
class PolicyAgent : public OrderingAgent {
public:
    PolicyAgent(const ForecastModel* model, MinMaxScaler feature_scaler, int switch_day)
        : model_(model), scaler_(std::move(feature_scaler)), switch_day_(switch_day) {}

    /// Warm-up-only agent (never switches to a model).
    PolicyAgent() : model_(nullptr), switch_day_(std::numeric_limits<int>::max()) {}

    double decide(int day, int layer, const LayerState& state, const DayLedger&,
                  const ChainConfig& cfg) override {
        Forecast raw;
        if (model_ != nullptr && day >= switch_day_) {
            raw = model_->predict(scaled_window(state), state.demand);
        } else {
            raw = sma_forecast(state.demand, 5);
        }
        if (day == switch_day_) smoother_primed_ = false;
        if (!smoother_primed_) {
            smoothed_ = raw;
            smoother_primed_ = true;
        } else {
            smoothed_ = blend_forecast(raw, smoothed_, cfg).smoothed;
        }
        last_point_ = smoothed_[0];
        return choose_order(state, smoothed_, layer, cfg);
    }

    double last_point_forecast() const override { return last_point_; }

protected:
    std::array<FeatureVec, kWindowLen> scaled_window(const LayerState& state) const {
        if (state.features.size() < kWindowLen)
            throw std::runtime_error("PolicyAgent: not enough history for a window");
        std::array<FeatureVec, kWindowLen> w{};
        const std::size_t base = state.features.size() - kWindowLen;
        for (std::size_t i = 0; i < kWindowLen; ++i)
            for (std::size_t c = 0; c < kFeatureDim; ++c)
                w[i][c] = scaler_.transform_value(state.features[base + i][c], c);
        return w;
    }

    const ForecastModel* model_;
    MinMaxScaler scaler_;
    int switch_day_;
    Forecast smoothed_{};
    bool smoother_primed_ = false;
    double last_point_ = 0.0;
};

/// Greedy Q-policy after the switch; moving-average ordering during warm-up.
/// The smoother keeps running on the moving-average forecast so the agent
/// still reports a day-ahead prediction.
class DqnPolicyAgent : public OrderingAgent {
public:
    DqnPolicyAgent(const DqnModel* model, MinMaxScaler feature_scaler, int switch_day, Rng rng)
        : model_(model), scaler_(std::move(feature_scaler)), switch_day_(switch_day), rng_(rng) {}

    double decide(int day, int layer, const LayerState& state, const DayLedger&,
                  const ChainConfig& cfg) override {
        const Forecast raw = sma_forecast(state.demand, 5);
        if (!smoother_primed_) {
            smoothed_ = raw;
            smoother_primed_ = true;
        } else {
            smoothed_ = blend_forecast(raw, smoothed_, cfg).smoothed;
        }
        last_point_ = smoothed_[0];

        if (day < switch_day_) return choose_order(state, smoothed_, layer, cfg);

        const std::vector<double> s = scaled_row(state);
        return model_->agent().order_for_action(model_->agent().act(s, 0.0, rng_));
    }

    double last_point_forecast() const override { return last_point_; }

private:
    std::vector<double> scaled_row(const LayerState& state) const {
        const FeatureVec& f = state.features.back();
        std::vector<double> s(kFeatureDim);
        for (std::size_t c = 0; c < kFeatureDim; ++c) s[c] = scaler_.transform_value(f[c], c);
        return s;
    }

    const DqnModel* model_;
    MinMaxScaler scaler_;
    int switch_day_;
    Rng rng_;
    Forecast smoothed_{};
    bool smoother_primed_ = false;
    double last_point_ = 0.0;
};

/// Epsilon-greedy acting plus transition collection for one training episode.
/// The reward for yesterday's action is today's profit plus a service bonus
/// when the day's demand was fully met; the final completed transition of an
/// episode is terminal.
class DqnTrainAgent : public OrderingAgent {
public:
    DqnTrainAgent(DqnAgent* agent, const MinMaxScaler* scaler, long total_steps, int last_day,
                  Rng rng, double service_bonus = 10.0)
        : agent_(agent),
          scaler_(scaler),
          total_steps_(total_steps),
          last_day_(last_day),
          rng_(rng),
          service_bonus_(service_bonus) {}

    void begin_episode() { prev_valid_ = false; }

    double decide(int day, int, const LayerState& state, const DayLedger& today,
                  const ChainConfig&) override {
        const FeatureVec& f = state.features.back();
        std::vector<double> s(kFeatureDim);
        for (std::size_t c = 0; c < kFeatureDim; ++c) s[c] = scaler_->transform_value(f[c], c);

        // Yesterday's action paid off in today's books (lead time >= 1), so
        // the transition completes now.
        if (prev_valid_) {
            const double reward =
                today.profit + (today.shortage_units == 0.0 ? service_bonus_ : 0.0);
            agent_->remember({prev_state_, prev_action_, reward, s, day == last_day_});
            agent_->train_step();
        }

        const double eps = epsilon_at(step_, total_steps_);
        const int action = agent_->act(s, eps, rng_);
        ++step_;
        prev_state_ = std::move(s);
        prev_action_ = action;
        prev_valid_ = true;
        last_point_ = trailing_mean(state.demand, 5);
        return agent_->order_for_action(action);
    }

    double last_point_forecast() const override { return last_point_; }

private:
    DqnAgent* agent_;
    const MinMaxScaler* scaler_;
    long total_steps_;
    int last_day_;
    Rng rng_;
    double service_bonus_;
    long step_ = 0;
    bool prev_valid_ = false;
    std::vector<double> prev_state_;
    int prev_action_ = 0;
    double last_point_ = 0.0;
};

/// Classic order-up-to rule with a moving-average forecast: raise the
/// inventory position (on hand + in flight) to (lead_time + 1) * MA_p + buffer.
/// Used for structural bullwhip checks.
class OrderUpToAgent : public OrderingAgent {
public:
    OrderUpToAgent(std::size_t p, double buffer) : p_(p), buffer_(buffer) {}

    double decide(int, int, const LayerState& state, const DayLedger&,
                  const ChainConfig& cfg) override {
        const double ma = trailing_mean(state.demand, p_);
        last_point_ = ma;
        double position = state.inventory;
        for (const PipelineEntry& e : state.pipeline) position += e.units;
        const double target = (static_cast<double>(cfg.lead_time) + 1.0) * ma + buffer_;
        const double order = std::max(0.0, std::round(target - position));
        return round_to_batch(order, cfg.batch_size);
    }

    double last_point_forecast() const override { return last_point_; }

private:
    std::size_t p_;
    double buffer_;
    double last_point_ = 0.0;
};

/// Scale/window the warm-up histories of one layer into a training set.
/// Feature and target extrema come from the training days only.
inline LayerTrainingData build_training_data(const LayerState& state, const ChainConfig& cfg) {
    const auto days = static_cast<std::size_t>(cfg.train_days);
    if (state.features.size() < days || state.demand.size() < days)
        throw std::invalid_argument("build_training_data: histories shorter than train_days");

    std::vector<FeatureVec> feats(state.features.begin(),
                                  state.features.begin() + static_cast<std::ptrdiff_t>(days));
    const Matrix raw = features_to_matrix(feats);
    auto [fscaler, scaled] = scaler_fit_transform(raw, 0, days);

    std::vector<FeatureVec> scaled_feats(days);
    for (std::size_t r = 0; r < days; ++r)
        for (std::size_t c = 0; c < kFeatureDim; ++c) scaled_feats[r][c] = scaled(r, c);

    Matrix demand_col(days, 1);
    for (std::size_t r = 0; r < days; ++r) demand_col(r, 0) = state.demand[r];
    MinMaxScaler tscaler;
    tscaler.fit(demand_col, 0, days);
    std::vector<double> scaled_demand(days);
    for (std::size_t r = 0; r < days; ++r)
        scaled_demand[r] = tscaler.transform_value(state.demand[r], 0);

    LayerTrainingData data;
    data.windows = make_windows(scaled_feats, scaled_demand);
    data.feature_scaler = std::move(fscaler);
    data.target_scaler = std::move(tscaler);
    data.raw_demand.assign(state.demand.begin(),
                           state.demand.begin() + static_cast<std::ptrdiff_t>(days));
    return data;
}

struct FittedModels {
    ModelKind kind = ModelKind::kSma;
    std::array<std::unique_ptr<ForecastModel>, 3> layer;
    std::array<MinMaxScaler, 3> feature_scaler;
};

namespace detail {

/// Run the moving-average warm-up for cfg.train_days and hand back the
/// simulator (histories and features up to the switch day).
inline ChainSimulator warmup_chain(const ChainConfig& cfg, const std::vector<double>& demand,
                                   std::array<PolicyAgent, 3>& agents) {
    ChainConfig warm = cfg;
    warm.horizon = cfg.train_days;
    std::vector<double> head(demand.begin(),
                             demand.begin() + static_cast<std::ptrdiff_t>(cfg.train_days));
    ChainSimulator sim(warm, std::move(head),
                       {&agents[0], &agents[1], &agents[2]});
    sim.run(cfg.train_days);
    return sim;
}

inline void fit_dqn(FittedModels& out, const HyperParams& hp, const ChainConfig& cfg,
                    const std::vector<double>& demand, std::uint64_t seed) {
    std::array<std::unique_ptr<DqnAgent>, 3> agents;
    for (int l = 0; l < 3; ++l) {
        agents[l] = std::make_unique<DqnAgent>(
            kFeatureDim, static_cast<std::size_t>(hp.hidden), hp.dqn_actions, hp.dqn_order_unit,
            Rng::derive(seed, streams::kDqnAgent + static_cast<std::uint64_t>(l)), hp.lr, 0.99, 100,
            hp.batch, 20000);
    }

    ChainConfig train_cfg = cfg;
    train_cfg.horizon = cfg.train_days;
    std::vector<double> head(demand.begin(),
                             demand.begin() + static_cast<std::ptrdiff_t>(cfg.train_days));
    const long total_steps = static_cast<long>(hp.epochs) * cfg.train_days;

    std::array<std::unique_ptr<DqnTrainAgent>, 3> trainers;
    for (int l = 0; l < 3; ++l) {
        trainers[l] = std::make_unique<DqnTrainAgent>(
            agents[l].get(), &out.feature_scaler[static_cast<std::size_t>(l)], total_steps,
            cfg.train_days - 1,
            Rng::derive(seed, streams::kDqnAct + static_cast<std::uint64_t>(l)));
    }

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        for (auto& t : trainers) t->begin_episode();
        ChainSimulator sim(train_cfg, head,
                           {trainers[0].get(), trainers[1].get(), trainers[2].get()});
        sim.run(cfg.train_days);
    }

    for (int l = 0; l < 3; ++l) {
        auto model = std::make_unique<DqnModel>(hp);
        model->adopt(std::move(agents[static_cast<std::size_t>(l)]));
        out.layer[static_cast<std::size_t>(l)] = std::move(model);
    }
}

}  // namespace detail

/// Fit one model per stocked layer on the warm-up histories. The DQN trains by
/// replaying episodes against the simulated chain; every other kind trains on
/// its layer's window batch.
inline FittedModels fit_models(ModelKind kind, const HyperParams& hp, const ChainConfig& cfg,
                               const std::vector<double>& demand, std::uint64_t seed) {
    hp.validate(kind);
    cfg.validate();
    if (demand.size() < static_cast<std::size_t>(cfg.train_days))
        throw std::invalid_argument("fit_models: demand shorter than train_days");

    std::array<PolicyAgent, 3> warm_agents{};
    ChainSimulator warm = detail::warmup_chain(cfg, demand, warm_agents);

    FittedModels out;
    out.kind = kind;
    std::array<LayerTrainingData, 3> data;
    for (int l = 0; l < 3; ++l) {
        data[l] = build_training_data(warm.state(l + 1), cfg);
        out.feature_scaler[l] = data[l].feature_scaler;
    }

    if (kind == ModelKind::kDqn) {
        detail::fit_dqn(out, hp, cfg, demand, seed);
        return out;
    }

    for (int l = 0; l < 3; ++l) {
        const auto stream = streams::kModelFit + static_cast<std::uint64_t>(kind) * 8 +
                            static_cast<std::uint64_t>(l);
        Rng rng = Rng::derive(seed, stream);
        auto model = registry_build(kind, hp, rng);
        model->fit(data[l], rng);
        out.layer[l] = std::move(model);
    }
    return out;
}

/// Full-horizon episode with fitted models taking over at cfg.train_days.
inline RunResult run_with_models(const ChainConfig& cfg, std::vector<double> demand,
                                 const FittedModels& models, std::uint64_t seed,
                                 double noise_level = 0.0) {
    std::array<std::unique_ptr<OrderingAgent>, 3> agents;
    for (int l = 0; l < 3; ++l) {
        const ForecastModel* m = models.layer[static_cast<std::size_t>(l)].get();
        if (m->is_direct_policy()) {
            agents[l] = std::make_unique<DqnPolicyAgent>(
                static_cast<const DqnModel*>(m), models.feature_scaler[static_cast<std::size_t>(l)],
                cfg.train_days, Rng::derive(seed, streams::kDqnAct + static_cast<std::uint64_t>(l)));
        } else {
            agents[l] = std::make_unique<PolicyAgent>(
                m, models.feature_scaler[static_cast<std::size_t>(l)], cfg.train_days);
        }
    }
    return run_episode(cfg, std::move(demand), {agents[0].get(), agents[1].get(), agents[2].get()},
                       model_name(models.kind), seed, noise_level);
}

/// Demand with robustness noise injected into the validation segment only.
/// The noise stream is keyed by both the seed and the level.
inline std::vector<double> demand_with_noise(const std::vector<double>& demand,
                                             const ChainConfig& cfg, double level,
                                             std::uint64_t seed) {
    if (level == 0.0) return demand;
    Rng rng = Rng::derive(seed, streams::kNoise ^ std::bit_cast<std::uint64_t>(level));
    std::vector<double> out = demand;
    const std::span<const double> validation(demand.data() + cfg.train_days,
                                             demand.size() - static_cast<std::size_t>(cfg.train_days));
    const std::vector<double> noisy = inject_noise(validation, level, rng);
    std::copy(noisy.begin(), noisy.end(), out.begin() + cfg.train_days);
    return out;
}

struct PipelineOutput {
    RunResult run;
    FittedModels models;
};

/// fit + simulate for one (model, seed, noise) cell.
inline PipelineOutput run_pipeline(const ChainConfig& cfg, const DemandSpec& spec, ModelKind kind,
                                   const HyperParams& hp, double noise_level = 0.0) {
    DemandSpec s = spec;
    s.horizon = cfg.horizon;
    const std::vector<double> demand = generate_demand(s);
    PipelineOutput out{.run = {}, .models = fit_models(kind, hp, cfg, demand, s.seed)};
    out.run = run_with_models(cfg, demand_with_noise(demand, cfg, noise_level, s.seed), out.models,
                              s.seed, noise_level);
    return out;
}

}  // namespace echelon
