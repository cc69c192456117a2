#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "echelon/policies.hpp"

namespace echelon {

/// Tunable grids per model family. Defaults span the full supported ranges;
/// callers may narrow them (e.g. desk-scale caps) but not leave them.
struct SearchSpace {
    int neurons_min = 64, neurons_max = 1024;  // step 64
    int hidden_min = 64, hidden_max = 256;     // step 64
    int lstm_layers_min = 1, lstm_layers_max = 3;
    double lr_min = 1e-5, lr_max = 1e-3;  // log-uniform
    int epochs_min = 50, epochs_max = 100;
    int dqn_epochs_min = 100, dqn_epochs_max = 200;
    int trees_min = 100, trees_max = 300;
    int depth_min = 3, depth_max = 7;
    double gbt_lr_min = 0.01, gbt_lr_max = 0.3;  // log-uniform
    double ss_base_min = 5.0, ss_base_max = 20.0;
};

struct SearchConfig {
    HyperParams hyper;
    double safety_stock_base = 10.0;
};

/// Uniform draw over the grids; learning rates are log-uniform. Deterministic
/// in the generator state.
inline SearchConfig sample_config(const SearchSpace& space, ModelKind kind, Rng& rng) {
    SearchConfig out;
    HyperParams& hp = out.hyper;

    const auto grid_int = [&](int lo, int hi, int step) {
        const int cells = (hi - lo) / step;
        return lo + step * static_cast<int>(rng.uniform_int(0, cells));
    };
    const auto log_uniform = [&](double lo, double hi) {
        return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    };

    if (kind == ModelKind::kLnn || kind == ModelKind::kHybrid)
        hp.neurons = grid_int(space.neurons_min, space.neurons_max, 64);
    if (kind == ModelKind::kLstm || kind == ModelKind::kDqn)
        hp.hidden = grid_int(space.hidden_min, space.hidden_max, 64);
    if (kind == ModelKind::kLstm)
        hp.lstm_layers = static_cast<int>(rng.uniform_int(space.lstm_layers_min, space.lstm_layers_max));
    if (kind == ModelKind::kLnn || kind == ModelKind::kHybrid || kind == ModelKind::kLstm ||
        kind == ModelKind::kDqn) {
        hp.lr = log_uniform(space.lr_min, space.lr_max);
        hp.batch = rng.uniform_int(0, 1) == 0 ? 4 : 8;
        hp.epochs = kind == ModelKind::kDqn
                        ? static_cast<int>(rng.uniform_int(space.dqn_epochs_min, space.dqn_epochs_max))
                        : static_cast<int>(rng.uniform_int(space.epochs_min, space.epochs_max));
    }
    if (kind == ModelKind::kGbt || kind == ModelKind::kHybrid) {
        hp.trees = static_cast<int>(rng.uniform_int(space.trees_min, space.trees_max));
        hp.depth = static_cast<int>(rng.uniform_int(space.depth_min, space.depth_max));
        hp.gbt_lr = log_uniform(space.gbt_lr_min, space.gbt_lr_max);
    }
    out.safety_stock_base =
        static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(space.ss_base_min),
                                            static_cast<std::int64_t>(space.ss_base_max)));
    hp.validate(kind);
    return out;
}

struct TrialRecord {
    int trial = 0;
    SearchConfig config;
    double objective = 0.0;  // cumulative manufacturer profit, validation days
};

struct SearchResult {
    SearchConfig best;
    int best_trial = 0;
    double best_objective = 0.0;
    std::vector<TrialRecord> log;
    PipelineOutput best_output;  // run + fitted models of the winning trial
};

/// Validation-window manufacturer profit, the tuning objective.
inline double manufacturer_objective(const RunResult& run) {
    const LayerSeries& s = run.layers[2];
    double sum = 0.0;
    for (std::size_t t = static_cast<std::size_t>(run.train_days); t < s.profit.size(); ++t)
        sum += s.profit[t];
    return sum;
}

/// Random search: `trials` independent draws, each evaluated by a full
/// fit + validation episode. The winner is the argmax objective, ties to the
/// earlier trial.
inline SearchResult run_search(ModelKind kind, int trials, const ChainConfig& base_cfg,
                               const DemandSpec& spec, const SearchSpace& space,
                               double noise_level = 0.0) {
    if (trials < 1) throw std::invalid_argument("run_search: trials must be >= 1");
    SearchResult result;
    bool have_best = false;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::derive(spec.seed, streams::kSearch + static_cast<std::uint64_t>(trial));
        const SearchConfig config = sample_config(space, kind, rng);
        ChainConfig cfg = base_cfg;
        cfg.safety_stock_base = config.safety_stock_base;

        PipelineOutput out = run_pipeline(cfg, spec, kind, config.hyper, noise_level);
        const double objective = manufacturer_objective(out.run);
        result.log.push_back({trial, config, objective});
        if (!have_best || objective > result.best_objective) {
            have_best = true;
            result.best = config;
            result.best_trial = trial;
            result.best_objective = objective;
            result.best_output = std::move(out);
        }
    }
    return result;
}

}  // namespace echelon
