#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "echelon/metrics.hpp"
#include "echelon/stats.hpp"

namespace echelon {

/// Weighted-sum scoring over normalized metrics. Cost and forecast error are
/// normalized like the others and enter with negative weights.
struct ScoreWeights {
    double profit = 0.5;
    double turnover = 0.2;
    double service = 0.2;
    double cost = -0.1;
    double mae = -0.1;
    std::array<double, 3> layer{0.4, 0.3, 0.3};  // retailer, distributor, manufacturer

    static ScoreWeights preset_default() { return {}; }
    static ScoreWeights preset_custom() {
        ScoreWeights w;
        w.profit = 0.4;
        w.turnover = 0.1;
        w.service = 0.3;
        w.cost = -0.1;
        w.mae = -0.1;
        return w;
    }
};

inline ScoreWeights parse_weights(const std::string& name) {
    if (name == "default") return ScoreWeights::preset_default();
    if (name == "custom") return ScoreWeights::preset_custom();
    throw std::invalid_argument("unknown weight preset: " + name);
}

/// Min-max to [0, 1] over the whole pool; degenerate extrema map to 0.
inline std::vector<double> normalize_global(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("normalize_global: no values");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, span = *hi_it - *lo_it;
    std::vector<double> out(values.size(), 0.0);
    if (span == 0.0) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / span;
    return out;
}

struct NormalizedMetrics {
    double profit = 0.0, turnover = 0.0, service = 0.0, cost = 0.0, mae = 0.0;
};

inline double layer_score(const NormalizedMetrics& m, const ScoreWeights& w) {
    return w.profit * m.profit + w.turnover * m.turnover + w.service * m.service +
           w.cost * m.cost + w.mae * m.mae;
}

inline double total_score(const std::array<double, 3>& layer_scores, const ScoreWeights& w) {
    return w.layer[0] * layer_scores[0] + w.layer[1] * layer_scores[1] +
           w.layer[2] * layer_scores[2];
}

struct RunScore {
    std::string model;
    std::uint64_t seed = 0;
    std::array<double, 3> layer_scores{};
    double total = 0.0;
};

struct ModelScore {
    std::string model;
    double mean = 0.0;
    double sd = 0.0;  // sample sd across runs
    int rank = 0;
    std::size_t runs = 0;
};

struct ScoreTable {
    std::vector<RunScore> runs;
    std::vector<ModelScore> models;  // sorted best-first
};

/// Score a pool of metric rows: global normalization per metric across every
/// (model, seed, layer) entry, weighted layer scores, fixed layer weights,
/// model means ranked best-first.
inline ScoreTable score_runs(const std::vector<MetricRow>& rows, const ScoreWeights& w) {
    if (rows.empty()) throw std::invalid_argument("score_runs: no rows");

    const auto column = [&](auto pick) {
        std::vector<double> v(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) v[i] = pick(rows[i].m);
        return v;
    };
    const auto norm_profit = normalize_global(column([](const LayerMetrics& m) { return m.cum_profit; }));
    const auto norm_turnover = normalize_global(column([](const LayerMetrics& m) { return m.turnover; }));
    const auto norm_service = normalize_global(column([](const LayerMetrics& m) { return m.service_level; }));
    const auto norm_cost = normalize_global(column([](const LayerMetrics& m) { return m.cost; }));
    const auto norm_mae = normalize_global(column([](const LayerMetrics& m) { return m.mae; }));

    std::map<std::pair<std::string, std::uint64_t>, RunScore> by_run;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const MetricRow& r = rows[i];
        if (r.layer < 1 || r.layer > 3) throw std::invalid_argument("score_runs: layer out of range");
        RunScore& rs = by_run[{r.model, r.seed}];
        rs.model = r.model;
        rs.seed = r.seed;
        const NormalizedMetrics nm{norm_profit[i], norm_turnover[i], norm_service[i],
                                   norm_cost[i], norm_mae[i]};
        rs.layer_scores[static_cast<std::size_t>(r.layer - 1)] = layer_score(nm, w);
    }

    ScoreTable table;
    std::map<std::string, std::vector<double>> totals;
    for (auto& [key, rs] : by_run) {
        rs.total = total_score(rs.layer_scores, w);
        totals[rs.model].push_back(rs.total);
        table.runs.push_back(rs);
    }
    for (const auto& [model, xs] : totals) {
        ModelScore ms;
        ms.model = model;
        ms.runs = xs.size();
        for (double v : xs) ms.mean += v;
        ms.mean /= static_cast<double>(xs.size());
        if (xs.size() > 1) {
            double ss = 0.0;
            for (double v : xs) ss += (v - ms.mean) * (v - ms.mean);
            ms.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
        table.models.push_back(ms);
    }
    std::sort(table.models.begin(), table.models.end(),
              [](const ModelScore& a, const ModelScore& b) {
                  return a.mean != b.mean ? a.mean > b.mean : a.model < b.model;
              });
    for (std::size_t i = 0; i < table.models.size(); ++i)
        table.models[i].rank = static_cast<int>(i) + 1;
    return table;
}

struct PairwiseTest {
    std::string model_a, model_b;
    stats::WelchResult welch;
};

struct StatReport {
    std::vector<PairwiseTest> pairwise;
    stats::AnovaResult anova;
    std::vector<std::pair<std::string, std::string>> tukey_significant;
    double tukey_hsd_threshold = 0.0;
};

/// Pairwise Welch tests, one-way ANOVA and Tukey HSD over per-model total
/// scores. Tukey requires balanced groups and at most six models.
inline StatReport statistical_report(const ScoreTable& table) {
    std::map<std::string, std::vector<double>> groups;
    for (const RunScore& rs : table.runs) groups[rs.model].push_back(rs.total);

    StatReport report;
    std::vector<std::string> names;
    std::vector<std::vector<double>> data;
    for (const auto& [name, xs] : groups) {
        names.push_back(name);
        data.push_back(xs);
    }
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            report.pairwise.push_back({names[i], names[j], stats::welch_t(data[i], data[j])});

    report.anova = stats::anova_f(data);

    bool balanced = true;
    for (const auto& g : data)
        if (g.size() != data[0].size()) balanced = false;
    if (balanced && data.size() >= 2 && data.size() <= 6 && data[0].size() >= 2) {
        const stats::TukeyResult t = stats::tukey_hsd(data);
        report.tukey_hsd_threshold = t.hsd;
        for (const auto& [i, j] : t.significant)
            report.tukey_significant.emplace_back(names[i], names[j]);
    }
    return report;
}

}  // namespace echelon
