#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "echelon/rng.hpp"
#include "echelon/scoring.hpp"

using namespace echelon;

TEST_CASE("normalize_global: endpoints and degenerate pools") {
    const std::vector<double> v{2, 4, 6};
    REQUIRE(normalize_global(v) == std::vector<double>{0.0, 0.5, 1.0});
    REQUIRE(normalize_global(std::vector<double>{5, 5, 5}) == std::vector<double>(3, 0.0));
}

TEST_CASE("layer_score and total_score arithmetic") {
    const ScoreWeights w = ScoreWeights::preset_default();
    REQUIRE(layer_score({1, 1, 1, 1, 1}, w) == Catch::Approx(0.7).margin(1e-12));
    REQUIRE(layer_score({0, 0, 0, 0, 0}, w) == 0.0);
    REQUIRE(layer_score({1, 0, 0, 0, 0}, w) == Catch::Approx(0.5).margin(1e-15));

    REQUIRE(total_score({1, 1, 1}, w) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(total_score({1, 0, 0}, w) == Catch::Approx(0.4).margin(1e-15));

    const ScoreWeights c = ScoreWeights::preset_custom();
    REQUIRE(layer_score({1, 1, 1, 1, 1}, c) == Catch::Approx(0.6).margin(1e-12));
}

namespace {

MetricRow row(const std::string& model, int layer, double profit, double turnover,
              double service, double cost, double mae) {
    MetricRow r;
    r.model = model;
    r.seed = 1;
    r.layer = layer;
    r.m.cum_profit = profit;
    r.m.turnover = turnover;
    r.m.service_level = service;
    r.m.cost = cost;
    r.m.mae = mae;
    return r;
}

std::vector<MetricRow> fixture() {
    return {
        row("A", 1, 10, 2, 1, 100, 1), row("A", 2, 20, 2, 1, 100, 2), row("A", 3, 30, 2, 1, 100, 3),
        row("B", 1, 40, 2, 0, 50, 3),  row("B", 2, 50, 2, 0, 100, 2), row("B", 3, 70, 4, 0, 150, 1),
    };
}

}  // namespace

TEST_CASE("score_runs: fixture table matches hand arithmetic") {
    // Normalized columns (global min-max over the six rows):
    //   profit: A (0, 1/6, 1/3), B (1/2, 2/3, 1)
    //   turnover: 0 everywhere except B layer3 = 1
    //   service: A = 1, B = 0; cost: A = 1/2, B = (0, 1/2, 1)
    //   mae: A = (0, 1/2, 1), B = (1, 1/2, 0)
    const ScoreTable t = score_runs(fixture(), ScoreWeights::preset_default());
    REQUIRE(t.runs.size() == 2);

    const auto find = [&](const std::string& m) {
        return *std::find_if(t.runs.begin(), t.runs.end(),
                             [&](const RunScore& r) { return r.model == m; });
    };
    const RunScore a = find("A"), b = find("B");
    REQUIRE(a.layer_scores[0] == Catch::Approx(0.15).margin(1e-12));
    REQUIRE(a.layer_scores[1] == Catch::Approx(0.5 / 6.0 + 0.2 - 0.1).margin(1e-12));
    REQUIRE(a.layer_scores[2] == Catch::Approx(0.5 / 3.0 + 0.2 - 0.05 - 0.1).margin(1e-12));
    REQUIRE(a.total == Catch::Approx(0.18).margin(1e-12));

    REQUIRE(b.layer_scores[0] == Catch::Approx(0.15).margin(1e-12));
    REQUIRE(b.layer_scores[1] == Catch::Approx(1.0 / 3.0 - 0.05 - 0.05).margin(1e-12));
    REQUIRE(b.layer_scores[2] == Catch::Approx(0.5 + 0.2 - 0.1).margin(1e-12));
    REQUIRE(b.total == Catch::Approx(0.31).margin(1e-12));

    REQUIRE(t.models[0].model == "B");
    REQUIRE(t.models[0].rank == 1);
    REQUIRE(t.models[1].model == "A");
}

TEST_CASE("score_runs: invariant to power-of-two rescaling of a raw metric") {
    auto rows = fixture();
    const ScoreTable base = score_runs(rows, ScoreWeights::preset_default());
    for (MetricRow& r : rows) r.m.cum_profit *= 4.0;  // exact in binary
    const ScoreTable scaled = score_runs(rows, ScoreWeights::preset_default());
    for (std::size_t i = 0; i < base.runs.size(); ++i)
        REQUIRE(base.runs[i].total == scaled.runs[i].total);
}

TEST_CASE("score_runs: invariant to affine rescaling within tolerance") {
    auto rows = fixture();
    const ScoreTable base = score_runs(rows, ScoreWeights::preset_default());
    for (MetricRow& r : rows) r.m.cost = 3.7 * r.m.cost + 11.0;
    const ScoreTable shifted = score_runs(rows, ScoreWeights::preset_default());
    for (std::size_t i = 0; i < base.runs.size(); ++i)
        REQUIRE(base.runs[i].total == Catch::Approx(shifted.runs[i].total).margin(1e-12));
}

TEST_CASE("score_runs: ranking ignores row order") {
    auto rows = fixture();
    const ScoreTable base = score_runs(rows, ScoreWeights::preset_default());
    std::reverse(rows.begin(), rows.end());
    const ScoreTable rev = score_runs(rows, ScoreWeights::preset_default());
    REQUIRE(base.models[0].model == rev.models[0].model);
    REQUIRE(base.models[0].mean == Catch::Approx(rev.models[0].mean).margin(1e-12));
}

TEST_CASE("statistical_report: separated models are flagged") {
    std::vector<MetricRow> rows;
    Rng rng(3);
    for (int seed = 0; seed < 6; ++seed) {
        for (int layer = 1; layer <= 3; ++layer) {
            MetricRow good = row("GOOD", layer, 1000 + rng.uniform(-5.0, 5.0), 3, 1, 50, 1);
            good.seed = static_cast<std::uint64_t>(seed);
            rows.push_back(good);
            MetricRow bad = row("BAD", layer, rng.uniform(-5.0, 5.0), 1, 0, 150, 5);
            bad.seed = static_cast<std::uint64_t>(seed);
            rows.push_back(bad);
            MetricRow mid = row("MID", layer, 500 + rng.uniform(-5.0, 5.0), 2, 0.5, 100, 3);
            mid.seed = static_cast<std::uint64_t>(seed);
            rows.push_back(mid);
        }
    }
    const ScoreTable t = score_runs(rows, ScoreWeights::preset_default());
    const StatReport rep = statistical_report(t);
    REQUIRE(rep.pairwise.size() == 3);
    REQUIRE(rep.anova.p < 0.05);
    REQUIRE(rep.tukey_significant.size() == 3);  // all pairs far apart
    for (const PairwiseTest& p : rep.pairwise) REQUIRE(p.welch.p < 0.05);
}
