#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "echelon/policies.hpp"

using namespace echelon;

namespace {

ChainConfig tiny_cfg() {
    ChainConfig cfg;
    cfg.horizon = 70;
    cfg.train_days = 40;
    return cfg;
}

/// Synthetic batch: the target blends the window-mean of feature 0 with the
/// last time feature, so window context genuinely matters.
LayerTrainingData synthetic_data(std::uint64_t seed, std::size_t n_windows) {
    Rng rng(seed);
    LayerTrainingData data;
    for (std::size_t i = 0; i < n_windows; ++i) {
        WindowSample s{};
        double mean0 = 0.0;
        for (std::size_t t = 0; t < kWindowLen; ++t) {
            for (double& v : s.x[t]) v = rng.uniform(0.0, 1.0);
            mean0 += s.x[t][0];
        }
        mean0 /= static_cast<double>(kWindowLen);
        const double y = 0.6 * mean0 + 0.3 * s.x.back()[kFeatTime] + 0.05;
        s.y.fill(y);
        data.windows.push_back(s);
    }
    data.target_scaler.set_extrema({0.0}, {1.0});  // identity on [0,1]
    data.raw_demand.assign(40, 50.0);
    return data;
}

double train_rmse(const ForecastModel& m, const LayerTrainingData& data) {
    double ss = 0.0;
    std::size_t n = 0;
    for (const WindowSample& s : data.windows) {
        const Forecast f = m.predict(s.x, data.raw_demand);
        for (std::size_t k = 0; k < kHorizon; ++k) {
            const double scaled = data.target_scaler.transform_value(f[k], 0);
            ss += (scaled - s.y[k]) * (scaled - s.y[k]);
            ++n;
        }
    }
    return std::sqrt(ss / static_cast<double>(n));
}

}  // namespace

TEST_CASE("sma_forecast: mean of the trailing window") {
    const std::vector<double> hist{10, 20, 30, 40, 50};
    const Forecast f = sma_forecast(hist, 5);
    for (double v : f) REQUIRE(v == 30.0);

    const std::vector<double> empty;
    for (double v : sma_forecast(empty, 5)) REQUIRE(v == 0.0);

    const std::vector<double> constant(12, 7.5);
    for (double v : sma_forecast(constant, 5)) REQUIRE(v == 7.5);
}

TEST_CASE("registry: construction and range validation") {
    HyperParams hp;
    Rng rng(1);
    REQUIRE(registry_build(ModelKind::kSma, hp, rng)->kind() == ModelKind::kSma);

    hp.neurons = 64;
    auto lnn = registry_build(ModelKind::kLnn, hp, rng);
    LayerTrainingData data = synthetic_data(2, 20);
    Rng fit_rng(3);
    lnn->fit(data, fit_rng);
    REQUIRE(lnn->parameter_count() == 5255);

    HyperParams bad = hp;
    bad.neurons = 100;
    REQUIRE_THROWS_AS(registry_build(ModelKind::kLnn, bad, rng), std::invalid_argument);
    bad = hp;
    bad.epochs = 20;
    REQUIRE_THROWS_AS(registry_build(ModelKind::kLstm, bad, rng), std::invalid_argument);
    bad = hp;
    bad.trees = 50;
    REQUIRE_THROWS_AS(registry_build(ModelKind::kGbt, bad, rng), std::invalid_argument);
    bad = hp;
    bad.lr = 0.5;
    REQUIRE_THROWS_AS(registry_build(ModelKind::kHybrid, bad, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_model("TRANSFORMER"), std::invalid_argument);
}

TEST_CASE("hybrid: constant targets collapse both stages to zero error") {
    // Constant demand makes the scaled targets identically zero, so the
    // boosting stage cannot be worse than the cell alone.
    LayerTrainingData data;
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        WindowSample s{};
        for (auto& row : s.x)
            for (double& v : row) v = rng.uniform(0.0, 1.0);
        s.y.fill(0.0);
        data.windows.push_back(s);
    }
    data.target_scaler.set_extrema({50.0}, {50.0});  // degenerate: everything -> 0
    data.raw_demand.assign(40, 50.0);

    HyperParams hp;
    HybridModel hybrid(hp);
    Rng r1(5);
    hybrid.fit(data, r1);

    LnnModel lnn(hp);
    Rng r2(5);
    lnn.fit(data, r2);

    // scaled-domain train MSE: hybrid must be exactly zero here
    for (const WindowSample& s : data.windows) {
        const Forecast f = hybrid.predict(s.x, data.raw_demand);
        for (double v : f) REQUIRE(v == Catch::Approx(50.0).margin(1e-9));
    }
}

TEST_CASE("hybrid: deterministic under a fixed seed") {
    LayerTrainingData data = synthetic_data(6, 24);
    HyperParams hp;
    const auto fit_once = [&] {
        HybridModel m(hp);
        Rng rng(77);
        m.fit(data, rng);
        return m.predict(data.windows[3].x, data.raw_demand);
    };
    REQUIRE(fit_once() == fit_once());
}

TEST_CASE("hybrid: window-aware features beat the plain regressor on train fit") {
    LayerTrainingData data = synthetic_data(8, 40);
    HyperParams hp;
    hp.epochs = 60;

    HybridModel hybrid(hp);
    Rng r1(9);
    hybrid.fit(data, r1);

    GbtModel gbt(hp);
    Rng r2(9);
    gbt.fit(data, r2);

    REQUIRE(train_rmse(hybrid, data) <= train_rmse(gbt, data) + 1e-12);
}

TEST_CASE("hybrid: prediction matches brute-force recipe assembly") {
    LayerTrainingData data = synthetic_data(10, 20);
    HyperParams hp;
    HybridModel m(hp);
    Rng rng(11);
    m.fit(data, rng);

    const auto& window = data.windows[7].x;
    std::vector<double> recipe(m.recipe_dim());
    std::size_t at = 0;
    for (double v : window.back()) recipe[at++] = v;
    for (double v : lnn_states(m.cell(), window)) recipe[at++] = v;
    for (double v : lnn_forecast(m.cell(), window)) recipe[at++] = v;

    const Forecast got = m.predict(window, data.raw_demand);
    for (std::size_t d = 0; d < kHorizon; ++d) {
        const double scaled = m.ensembles()[d].predict(recipe);
        const double raw = std::max(0.0, data.target_scaler.inverse_value(scaled, 0));
        REQUIRE(got[d] == Catch::Approx(raw).margin(1e-12));
    }
}

TEST_CASE("hybrid: zeroed cell degrades to the regressor on zero states") {
    LayerTrainingData data = synthetic_data(12, 20);
    HyperParams hp;
    HybridModel m(hp);
    Rng rng(13);
    m.fit(data, rng);

    LiquidCell& cell = m.cell();
    cell.w_in *= 0.0;
    cell.w_rec *= 0.0;
    cell.b *= 0.0;
    cell.w_out *= 0.0;
    for (std::size_t k = 0; k < kHorizon; ++k) cell.b_out(k, 0) = 0.25;

    const auto& window = data.windows[0].x;
    std::vector<double> recipe(m.recipe_dim(), 0.0);
    std::size_t at = 0;
    for (double v : window.back()) recipe[at++] = v;
    at += static_cast<std::size_t>(cell.n_units);  // states identically zero
    for (std::size_t k = 0; k < kHorizon; ++k) recipe[at++] = 0.25;

    const Forecast got = m.predict(window, data.raw_demand);
    for (std::size_t d = 0; d < kHorizon; ++d) {
        const double scaled = m.ensembles()[d].predict(recipe);
        REQUIRE(got[d] ==
                Catch::Approx(std::max(0.0, data.target_scaler.inverse_value(scaled, 0)))
                    .margin(1e-12));
    }
}

TEST_CASE("models: predictions are clamped non-negative") {
    LayerTrainingData data = synthetic_data(14, 20);
    HyperParams hp;
    LnnModel m(hp);
    Rng rng(15);
    m.fit(data, rng);
    // force a strongly negative readout
    for (std::size_t k = 0; k < kHorizon; ++k) m.cell().b_out(k, 0) = -100.0;
    m.cell().w_out *= 0.0;
    const Forecast f = m.predict(data.windows[0].x, data.raw_demand);
    for (double v : f) REQUIRE(v >= 0.0);
}

TEST_CASE("fit_models + run_with_models: deterministic end to end") {
    ChainConfig cfg = tiny_cfg();
    DemandSpec spec;
    spec.horizon = cfg.horizon;
    spec.seed = 321;
    const auto demand = generate_demand(spec);

    const auto once = [&] {
        FittedModels m = fit_models(ModelKind::kSma, HyperParams{}, cfg, demand, spec.seed);
        return run_with_models(cfg, demand, m, spec.seed);
    };
    const RunResult a = once(), b = once();
    for (int i = 0; i < 3; ++i)
        REQUIRE(a.layers[static_cast<std::size_t>(i)].orders ==
                b.layers[static_cast<std::size_t>(i)].orders);
    REQUIRE(a.model == "SMA");
}

TEST_CASE("fit_models: orders obey the batch constraint for every model kind") {
    ChainConfig cfg = tiny_cfg();
    DemandSpec spec;
    spec.horizon = cfg.horizon;
    spec.seed = 5150;
    const auto demand = generate_demand(spec);

    FittedModels sma = fit_models(ModelKind::kSma, HyperParams{}, cfg, demand, spec.seed);
    const RunResult r = run_with_models(cfg, demand, sma, spec.seed);
    for (const LayerSeries& s : r.layers)
        for (double o : s.orders) {
            REQUIRE(o >= 0.0);
            REQUIRE(std::fmod(o, cfg.batch_size) == 0.0);
        }
}

TEST_CASE("dqn policy: validation orders come from the action grid") {
    ChainConfig cfg = tiny_cfg();
    DemandSpec spec;
    spec.horizon = cfg.horizon;
    spec.seed = 8;
    const auto demand = generate_demand(spec);

    HyperParams hp;
    hp.epochs = 100;  // DQN minimum
    hp.hidden = 64;
    FittedModels dqn = fit_models(ModelKind::kDqn, hp, cfg, demand, spec.seed);
    const RunResult r = run_with_models(cfg, demand, dqn, spec.seed);
    for (const LayerSeries& s : r.layers)
        for (std::size_t t = static_cast<std::size_t>(cfg.train_days); t < s.orders.size(); ++t) {
            const double o = s.orders[t];
            REQUIRE(o >= 0.0);
            REQUIRE(o <= (hp.dqn_actions - 1) * hp.dqn_order_unit);
            REQUIRE(std::fmod(o, hp.dqn_order_unit) == 0.0);
        }
}

TEST_CASE("order-up-to agent tracks the moving-average target") {
    ChainConfig cfg;
    cfg.horizon = 50;
    cfg.train_days = 10;
    cfg.batch_size = 1;
    OrderUpToAgent a1(5, 30.0), a2(5, 30.0), a3(5, 30.0);
    DemandSpec spec;
    spec.horizon = 50;
    spec.seasonal_amp = 0.0;
    spec.weekly_amp = 0.0;
    spec.noise_sd = 5.0;
    spec.seed = 12;
    const RunResult r =
        run_episode(cfg, generate_demand(spec), {&a1, &a2, &a3}, "OUT", spec.seed);
    // the rule holds the inventory position near (L+1)*mean + buffer = 130
    const LayerSeries& s = r.layers[0];
    double mean_inv = 0.0;
    for (std::size_t t = 20; t < 50; ++t) mean_inv += s.inventory[t];
    mean_inv /= 30.0;
    REQUIRE(mean_inv > 20.0);
    REQUIRE(mean_inv < 130.0);
}
