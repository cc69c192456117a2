#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "echelon/search.hpp"

using namespace echelon;

TEST_CASE("sample_config: draws stay on the supported grids") {
    SearchSpace space;
    Rng rng(61);
    for (int i = 0; i < 300; ++i) {
        const SearchConfig c = sample_config(space, ModelKind::kHybrid, rng);
        REQUIRE(c.hyper.neurons % 64 == 0);
        REQUIRE(c.hyper.neurons >= 64);
        REQUIRE(c.hyper.neurons <= 1024);
        REQUIRE(c.hyper.trees >= 100);
        REQUIRE(c.hyper.trees <= 300);
        REQUIRE(c.hyper.depth >= 3);
        REQUIRE(c.hyper.depth <= 7);
        REQUIRE((c.hyper.batch == 4 || c.hyper.batch == 8));
        REQUIRE(c.safety_stock_base >= 5.0);
        REQUIRE(c.safety_stock_base <= 20.0);
    }
}

TEST_CASE("sample_config: learning rate is log-uniform over [1e-5, 1e-3]") {
    SearchSpace space;
    Rng rng(62);
    std::array<int, 4> bins{};
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const SearchConfig c = sample_config(space, ModelKind::kLnn, rng);
        const double lg = std::log10(c.hyper.lr);
        REQUIRE(lg >= -5.0);
        REQUIRE(lg <= -3.0);
        ++bins[static_cast<std::size_t>(std::min(3.0, (lg + 5.0) / 0.5))];
    }
    for (int b : bins) REQUIRE(std::abs(b / static_cast<double>(n) - 0.25) < 0.05);
}

TEST_CASE("sample_config: deterministic trial sequences") {
    SearchSpace space;
    Rng a(63), b(63);
    for (int i = 0; i < 50; ++i) {
        const SearchConfig ca = sample_config(space, ModelKind::kLstm, a);
        const SearchConfig cb = sample_config(space, ModelKind::kLstm, b);
        REQUIRE(ca.hyper.hidden == cb.hyper.hidden);
        REQUIRE(ca.hyper.lr == cb.hyper.lr);
        REQUIRE(ca.hyper.epochs == cb.hyper.epochs);
    }
}

TEST_CASE("run_search: argmax contract and determinism") {
    ChainConfig cfg;
    cfg.horizon = 70;
    cfg.train_days = 40;
    DemandSpec spec;
    spec.seed = 42;
    SearchSpace space;

    const SearchResult r1 = run_search(ModelKind::kSma, 3, cfg, spec, space);
    REQUIRE(r1.log.size() == 3);
    for (const TrialRecord& t : r1.log) {
        REQUIRE(r1.best_objective >= t.objective);
        REQUIRE(t.config.safety_stock_base >= 5.0);
        REQUIRE(t.config.safety_stock_base <= 20.0);
    }

    const SearchResult r2 = run_search(ModelKind::kSma, 3, cfg, spec, space);
    REQUIRE(r1.best_trial == r2.best_trial);
    REQUIRE(r1.best_objective == r2.best_objective);

    const SearchResult single = run_search(ModelKind::kSma, 1, cfg, spec, space);
    REQUIRE(single.best_trial == 0);
    REQUIRE(single.best_objective == single.log[0].objective);
}
