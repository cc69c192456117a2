#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "echelon/dqn.hpp"
#include "echelon/features.hpp"
#include "echelon/gbt.hpp"
#include "echelon/lnn.hpp"
#include "echelon/lstm.hpp"
#include "echelon/scaler.hpp"

namespace echelon {

enum class ModelKind { kSma, kLnn, kGbt, kHybrid, kLstm, kDqn };

inline const char* model_name(ModelKind k) {
    switch (k) {
        case ModelKind::kSma: return "SMA";
        case ModelKind::kLnn: return "LNN";
        case ModelKind::kGbt: return "GBT";
        case ModelKind::kHybrid: return "HYBRID";
        case ModelKind::kLstm: return "LSTM";
        case ModelKind::kDqn: return "DQN";
    }
    return "?";
}

inline ModelKind parse_model(const std::string& s) {
    if (s == "SMA") return ModelKind::kSma;
    if (s == "LNN") return ModelKind::kLnn;
    if (s == "GBT") return ModelKind::kGbt;
    if (s == "HYBRID") return ModelKind::kHybrid;
    if (s == "LSTM") return ModelKind::kLstm;
    if (s == "DQN") return ModelKind::kDqn;
    throw std::invalid_argument("unknown model: " + s);
}

/// Tunable knobs, validated per model against the supported grids before use.
struct HyperParams {
    int neurons = 64;      // liquid cell width, multiple of 64 in [64, 1024]
    int hidden = 64;       // LSTM/DQN width, multiple of 64 in [64, 256]
    int lstm_layers = 1;   // [1, 3]
    double lr = 3e-4;      // [1e-5, 1e-3]
    int batch = 8;         // {4, 8}
    int epochs = 50;       // [50, 100]; DQN [100, 200]
    int trees = 100;       // [100, 300]
    int depth = 4;         // [3, 7]
    double gbt_lr = 0.1;   // [0.01, 0.3]
    bool hybrid_full_states = false;  // feed all window states to the regressor
    int dqn_actions = 33;             // order grid {0, 16, ..., 16*(n-1)}
    int dqn_order_unit = 16;

    void validate(ModelKind kind) const {
        const auto fail = [](const std::string& what) {
            throw std::invalid_argument("HyperParams: " + what);
        };
        const bool neural = kind == ModelKind::kLnn || kind == ModelKind::kHybrid ||
                            kind == ModelKind::kLstm || kind == ModelKind::kDqn;
        if (kind == ModelKind::kLnn || kind == ModelKind::kHybrid) {
            if (neurons < 64 || neurons > 1024 || neurons % 64 != 0)
                fail("neurons must be in 64..1024 step 64");
        }
        if (kind == ModelKind::kLstm || kind == ModelKind::kDqn) {
            if (hidden < 64 || hidden > 256 || hidden % 64 != 0)
                fail("hidden must be in 64..256 step 64");
        }
        if (kind == ModelKind::kLstm && (lstm_layers < 1 || lstm_layers > 3))
            fail("lstm_layers must be in 1..3");
        if (neural) {
            if (lr < 1e-5 || lr > 1e-3) fail("lr must be in [1e-5, 1e-3]");
            if (batch != 4 && batch != 8) fail("batch must be 4 or 8");
            if (kind == ModelKind::kDqn) {
                if (epochs < 100 || epochs > 200) fail("DQN epochs must be in 100..200");
            } else if (epochs < 50 || epochs > 100) {
                fail("epochs must be in 50..100");
            }
        }
        if (kind == ModelKind::kGbt || kind == ModelKind::kHybrid) {
            if (trees < 100 || trees > 300) fail("trees must be in 100..300");
            if (depth < 3 || depth > 7) fail("depth must be in 3..7");
            if (gbt_lr < 0.01 || gbt_lr > 0.3) fail("gbt_lr must be in [0.01, 0.3]");
        }
        if (kind == ModelKind::kDqn && (dqn_actions < 2 || dqn_order_unit < 1))
            fail("bad DQN action grid");
    }
};

/// Everything a layer's forecaster sees at fit time: windows of scaled
/// features paired with min-max scaled demand targets, the frozen scalers, and
/// the raw training demand.
struct LayerTrainingData {
    WindowBatch windows;
    MinMaxScaler feature_scaler;  // kFeatureDim columns
    MinMaxScaler target_scaler;   // single column (demand)
    std::vector<double> raw_demand;
};

inline Forecast sma_forecast(std::span<const double> demand_hist, std::size_t p = 5) {
    Forecast f{};
    f.fill(trailing_mean(demand_hist, p));
    return f;
}

/// Uniform 7-day-ahead demand predictor. predict() returns raw demand units,
/// finite and clamped at zero.
class ForecastModel {
public:
    virtual ~ForecastModel() = default;
    virtual ModelKind kind() const = 0;
    virtual void fit(const LayerTrainingData& data, Rng rng) = 0;
    virtual Forecast predict(const std::array<FeatureVec, kWindowLen>& scaled_window,
                             std::span<const double> raw_demand) const = 0;
    /// Direct policies emit orders themselves instead of feeding the
    /// profit-search order rule.
    virtual bool is_direct_policy() const { return false; }
    virtual std::size_t parameter_count() const { return 0; }
};

namespace detail {

inline Forecast descale_forecast(const Forecast& scaled, const MinMaxScaler& target_scaler) {
    Forecast out{};
    for (std::size_t k = 0; k < kHorizon; ++k) {
        const double v = target_scaler.inverse_value(scaled[k], 0);
        out[k] = std::isfinite(v) ? std::max(0.0, v) : 0.0;
    }
    return out;
}

}  // namespace detail

class SmaModel final : public ForecastModel {
public:
    explicit SmaModel(std::size_t p = 5) : p_(p) {}
    ModelKind kind() const override { return ModelKind::kSma; }
    void fit(const LayerTrainingData&, Rng) override {}
    Forecast predict(const std::array<FeatureVec, kWindowLen>&,
                     std::span<const double> raw_demand) const override {
        return sma_forecast(raw_demand, p_);
    }

private:
    std::size_t p_;
};

class LnnModel final : public ForecastModel {
public:
    explicit LnnModel(const HyperParams& hp) : hp_(hp) { hp.validate(ModelKind::kLnn); }
    ModelKind kind() const override { return ModelKind::kLnn; }

    void fit(const LayerTrainingData& data, Rng rng) override {
        cell_.n_units = hp_.neurons;
        cell_.init(rng);
        report_ = lnn_train(cell_, data.windows, hp_.epochs, hp_.lr, hp_.batch, rng);
        target_scaler_ = data.target_scaler;
    }

    Forecast predict(const std::array<FeatureVec, kWindowLen>& scaled_window,
                     std::span<const double>) const override {
        return detail::descale_forecast(lnn_forecast(cell_, scaled_window), target_scaler_);
    }

    std::size_t parameter_count() const override { return cell_.parameter_count(); }
    const LiquidCell& cell() const { return cell_; }
    LiquidCell& cell() { return cell_; }
    const TrainReport& train_report() const { return report_; }
    const MinMaxScaler& target_scaler() const { return target_scaler_; }
    void set_target_scaler(const MinMaxScaler& s) { target_scaler_ = s; }

private:
    HyperParams hp_;
    LiquidCell cell_;
    MinMaxScaler target_scaler_;
    TrainReport report_;
};

class LstmModel final : public ForecastModel {
public:
    explicit LstmModel(const HyperParams& hp) : hp_(hp) { hp.validate(ModelKind::kLstm); }
    ModelKind kind() const override { return ModelKind::kLstm; }

    void fit(const LayerTrainingData& data, Rng rng) override {
        cell_.hidden = hp_.hidden;
        cell_.layers = hp_.lstm_layers;
        cell_.init(rng);
        report_ = lstm_train(cell_, data.windows, hp_.epochs, hp_.lr, hp_.batch, rng);
        target_scaler_ = data.target_scaler;
    }

    Forecast predict(const std::array<FeatureVec, kWindowLen>& scaled_window,
                     std::span<const double>) const override {
        return detail::descale_forecast(lstm_forecast(cell_, scaled_window), target_scaler_);
    }

    std::size_t parameter_count() const override { return cell_.parameter_count(); }
    const LstmCell& cell() const { return cell_; }
    LstmCell& cell() { return cell_; }
    const MinMaxScaler& target_scaler() const { return target_scaler_; }
    void set_target_scaler(const MinMaxScaler& s) { target_scaler_ = s; }

private:
    HyperParams hp_;
    LstmCell cell_;
    MinMaxScaler target_scaler_;
    TrainReport report_;
};

/// Standalone boosted-tree forecaster: one ensemble per horizon day on the
/// current day's scaled feature row.
class GbtModel final : public ForecastModel {
public:
    explicit GbtModel(const HyperParams& hp) : hp_(hp) { hp.validate(ModelKind::kGbt); }
    ModelKind kind() const override { return ModelKind::kGbt; }

    void fit(const LayerTrainingData& data, Rng) override {
        if (data.windows.empty()) throw std::invalid_argument("GbtModel::fit: empty batch");
        Matrix X(data.windows.size(), kFeatureDim);
        for (std::size_t r = 0; r < data.windows.size(); ++r)
            for (std::size_t c = 0; c < kFeatureDim; ++c) X(r, c) = data.windows[r].x.back()[c];

        const GbtParams params{hp_.trees, hp_.depth, hp_.gbt_lr, 1.0, 0.0};
        std::vector<double> y(data.windows.size());
        for (std::size_t d = 0; d < kHorizon; ++d) {
            for (std::size_t r = 0; r < data.windows.size(); ++r) y[r] = data.windows[r].y[d];
            ensembles_[d].fit(X, y, params);
        }
        background_ = std::move(X);
        target_scaler_ = data.target_scaler;
    }

    Forecast predict(const std::array<FeatureVec, kWindowLen>& scaled_window,
                     std::span<const double>) const override {
        std::vector<double> x(scaled_window.back().begin(), scaled_window.back().end());
        Forecast scaled{};
        for (std::size_t d = 0; d < kHorizon; ++d) scaled[d] = ensembles_[d].predict(x);
        return detail::descale_forecast(scaled, target_scaler_);
    }

    const std::array<GbtEnsemble, kHorizon>& ensembles() const { return ensembles_; }
    std::array<GbtEnsemble, kHorizon>& ensembles() { return ensembles_; }
    const Matrix& background() const { return background_; }
    Matrix& background() { return background_; }
    const MinMaxScaler& target_scaler() const { return target_scaler_; }
    void set_target_scaler(const MinMaxScaler& s) { target_scaler_ = s; }

private:
    HyperParams hp_;
    std::array<GbtEnsemble, kHorizon> ensembles_;
    Matrix background_;
    MinMaxScaler target_scaler_;
};

/// Two-stage pipeline: the liquid cell is trained on the windows first, then
/// one boosted ensemble per horizon day is fit on
///   [current scaled features | cell state(s) | raw cell forecast]
/// against the same targets.
class HybridModel final : public ForecastModel {
public:
    explicit HybridModel(const HyperParams& hp) : hp_(hp) { hp.validate(ModelKind::kHybrid); }
    ModelKind kind() const override { return ModelKind::kHybrid; }

    void fit(const LayerTrainingData& data, Rng rng) override {
        if (data.windows.empty()) throw std::invalid_argument("HybridModel::fit: empty batch");
        cell_.n_units = hp_.neurons;
        cell_.init(rng);
        report_ = lnn_train(cell_, data.windows, hp_.epochs, hp_.lr, hp_.batch, rng);

        Matrix X(data.windows.size(), recipe_dim());
        std::vector<double> row(recipe_dim());
        for (std::size_t r = 0; r < data.windows.size(); ++r) {
            assemble_recipe(data.windows[r].x, row);
            for (std::size_t c = 0; c < row.size(); ++c) X(r, c) = row[c];
        }

        const GbtParams params{hp_.trees, hp_.depth, hp_.gbt_lr, 1.0, 0.0};
        std::vector<double> y(data.windows.size());
        for (std::size_t d = 0; d < kHorizon; ++d) {
            for (std::size_t r = 0; r < data.windows.size(); ++r) y[r] = data.windows[r].y[d];
            ensembles_[d].fit(X, y, params);
        }
        background_ = std::move(X);
        target_scaler_ = data.target_scaler;
    }

    Forecast predict(const std::array<FeatureVec, kWindowLen>& scaled_window,
                     std::span<const double>) const override {
        std::vector<double> row(recipe_dim());
        assemble_recipe(scaled_window, row);
        Forecast scaled{};
        for (std::size_t d = 0; d < kHorizon; ++d) scaled[d] = ensembles_[d].predict(row);
        return detail::descale_forecast(scaled, target_scaler_);
    }

    std::size_t recipe_dim() const {
        const auto n = static_cast<std::size_t>(hp_.neurons);
        return kFeatureDim + (hp_.hybrid_full_states ? kWindowLen * n : n) + kHorizon;
    }

    void assemble_recipe(const std::array<FeatureVec, kWindowLen>& window,
                         std::vector<double>& row) const {
        std::size_t at = 0;
        for (double v : window.back()) row[at++] = v;
        if (hp_.hybrid_full_states) {
            std::vector<std::vector<double>> states;
            lnn_states(cell_, window, &states);
            for (const auto& s : states)
                for (double v : s) row[at++] = v;
        } else {
            for (double v : lnn_states(cell_, window)) row[at++] = v;
        }
        for (double v : lnn_forecast(cell_, window)) row[at++] = v;
    }

    std::vector<std::string> recipe_feature_names() const {
        static const char* base[kFeatureDim] = {
            "demand",      "order_lag1", "order_lag2", "inventory_lag1", "inventory_lag2",
            "sales_lag1",  "order_std5", "demand_std5", "seasonal_index", "time_norm"};
        std::vector<std::string> names(base, base + kFeatureDim);
        const auto n = static_cast<std::size_t>(hp_.neurons);
        if (hp_.hybrid_full_states) {
            for (std::size_t t = 0; t < kWindowLen; ++t)
                for (std::size_t i = 0; i < n; ++i)
                    names.push_back("state_t" + std::to_string(t) + "_" + std::to_string(i));
        } else {
            for (std::size_t i = 0; i < n; ++i) names.push_back("state_" + std::to_string(i));
        }
        for (std::size_t k = 0; k < kHorizon; ++k) names.push_back("cell_fcst_" + std::to_string(k));
        return names;
    }

    std::size_t parameter_count() const override { return cell_.parameter_count(); }
    const LiquidCell& cell() const { return cell_; }
    LiquidCell& cell() { return cell_; }
    const std::array<GbtEnsemble, kHorizon>& ensembles() const { return ensembles_; }
    std::array<GbtEnsemble, kHorizon>& ensembles() { return ensembles_; }
    const Matrix& background() const { return background_; }
    Matrix& background() { return background_; }
    const TrainReport& train_report() const { return report_; }
    const MinMaxScaler& target_scaler() const { return target_scaler_; }
    void set_target_scaler(const MinMaxScaler& s) { target_scaler_ = s; }
    const HyperParams& hyper() const { return hp_; }

private:
    HyperParams hp_;
    LiquidCell cell_;
    std::array<GbtEnsemble, kHorizon> ensembles_;
    Matrix background_;
    MinMaxScaler target_scaler_;
    TrainReport report_;
};

/// Order policy learned by Q-learning. Trained against the simulated chain
/// (see fit_models in policies.hpp); fit() here only rejects misuse. Its
/// "forecast" is the moving-average fallback so the forecast-error metric
/// stays defined for every model.
class DqnModel final : public ForecastModel {
public:
    explicit DqnModel(const HyperParams& hp) : hp_(hp) { hp.validate(ModelKind::kDqn); }
    ModelKind kind() const override { return ModelKind::kDqn; }
    bool is_direct_policy() const override { return true; }

    void fit(const LayerTrainingData&, Rng) override {
        throw std::logic_error("DqnModel is trained against the simulator, not a window batch");
    }

    Forecast predict(const std::array<FeatureVec, kWindowLen>&,
                     std::span<const double> raw_demand) const override {
        return sma_forecast(raw_demand, 5);
    }

    void adopt(std::unique_ptr<DqnAgent> agent) { agent_ = std::move(agent); }
    DqnAgent& agent() { return *agent_; }
    const DqnAgent& agent() const { return *agent_; }
    bool trained() const { return agent_ != nullptr; }
    const HyperParams& hyper() const { return hp_; }

private:
    HyperParams hp_;
    std::unique_ptr<DqnAgent> agent_;
};

/// Construct an unfitted model of the requested kind, rejecting off-grid
/// hyperparameters.
inline std::unique_ptr<ForecastModel> registry_build(ModelKind kind, const HyperParams& hp, Rng) {
    hp.validate(kind);
    switch (kind) {
        case ModelKind::kSma: return std::make_unique<SmaModel>();
        case ModelKind::kLnn: return std::make_unique<LnnModel>(hp);
        case ModelKind::kGbt: return std::make_unique<GbtModel>(hp);
        case ModelKind::kHybrid: return std::make_unique<HybridModel>(hp);
        case ModelKind::kLstm: return std::make_unique<LstmModel>(hp);
        case ModelKind::kDqn: return std::make_unique<DqnModel>(hp);
    }
    throw std::invalid_argument("registry_build: unknown kind");
}

}  // namespace echelon
