#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "smgi/gsrm.hpp"

using namespace smgi;

namespace {

GsrmInstance worked_instance(double alpha) {
    // Losses from the worked three-step instance, unit switch cost.
    return GsrmInstance::make({{0.1, 0.5}, {0.6, 0.2}, {0.1, 0.5}}, alpha, 0.0, 0);
}

GsrmInstance random_instance(RngState& rng, std::size_t max_k, std::size_t max_t) {
    const std::size_t k = 1 + rng.next_below(max_k);
    const std::size_t t = 1 + rng.next_below(max_t);
    std::vector<std::vector<double>> losses(t, std::vector<double>(k, 0.0));
    for (auto& row : losses)
        for (auto& v : row) v = rng.next_unit();
    GsrmInstance inst = GsrmInstance::make(std::move(losses), rng.next_unit(), rng.next_unit(),
                                           rng.next_below(k));
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            if (a != b) inst.switch_cost[a][b] = rng.next_unit() * 2.0;
    for (auto& v : inst.incoherence) v = rng.next_unit();
    return inst;
}

} // namespace

TEST_CASE("gsrm_objective worked cases") {
    SECTION("K=1 with no penalties is the plain cumulative loss") {
        GsrmInstance inst = GsrmInstance::make({{0.3}, {0.2}, {0.4}}, 0.0, 0.0);
        CHECK_THAT(gsrm_objective(inst, {0, 0, 0}), Catch::Matchers::WithinAbs(0.9, 1e-15));
    }
    SECTION("all-first-regime sequence at alpha=0.5 costs 0.8") {
        CHECK_THAT(gsrm_objective(worked_instance(0.5), {0, 0, 0}),
                   Catch::Matchers::WithinAbs(0.8, 1e-15));
    }
    SECTION("switching sequence at alpha=0.5 costs 1.4") {
        CHECK_THAT(gsrm_objective(worked_instance(0.5), {0, 1, 0}),
                   Catch::Matchers::WithinAbs(1.4, 1e-15));
    }
    SECTION("sequence validation") {
        CHECK_THROWS_AS(gsrm_objective(worked_instance(0.5), {0, 0}), ConfigError);
        CHECK_THROWS_AS(gsrm_objective(worked_instance(0.5), {0, 0, 7}), ConfigError);
    }
}

TEST_CASE("gsrm_minimize worked cases") {
    SECTION("alpha=0.5 keeps the first regime: (0,0,0) at 0.8") {
        for (GsrmMode mode : {GsrmMode::dynamic_programming, GsrmMode::exhaustive}) {
            const auto sol = gsrm_minimize(worked_instance(0.5), mode);
            CHECK(sol.regimes == std::vector<std::size_t>{0, 0, 0});
            CHECK_THAT(sol.value, Catch::Matchers::WithinAbs(0.8, 1e-15));
        }
    }
    SECTION("alpha=0.1 switches: (0,1,0) at 0.6") {
        for (GsrmMode mode : {GsrmMode::dynamic_programming, GsrmMode::exhaustive}) {
            const auto sol = gsrm_minimize(worked_instance(0.1), mode);
            CHECK(sol.regimes == std::vector<std::size_t>{0, 1, 0});
            CHECK_THAT(sol.value, Catch::Matchers::WithinAbs(0.6, 1e-15));
        }
    }
    SECTION("K=1 is the unique sequence at its cumulative loss") {
        GsrmInstance inst = GsrmInstance::make({{0.3}, {0.2}}, 0.7, 0.3);
        inst.incoherence = {0.0};
        const auto sol = gsrm_minimize(inst);
        CHECK(sol.regimes == std::vector<std::size_t>{0, 0});
        CHECK_THAT(sol.value, Catch::Matchers::WithinAbs(0.5, 1e-15));
    }
}

TEST_CASE("dp and exhaustive minimizers agree on 200 random instances") {
    RngState rng(31415);
    for (int trial = 0; trial < 200; ++trial) {
        const GsrmInstance inst = random_instance(rng, 4, 6); // K^T <= 4096
        const auto dp = gsrm_minimize(inst, GsrmMode::dynamic_programming);
        const auto ex = gsrm_minimize(inst, GsrmMode::exhaustive);
        REQUIRE(dp.value == ex.value);
        REQUIRE(dp.regimes == ex.regimes);
    }
}

TEST_CASE("gsrm minimum value is monotone in alpha and beta") {
    RngState rng(99);
    const GsrmInstance base = random_instance(rng, 3, 5);
    double prev = -1.0;
    for (double alpha : {0.0, 0.1, 0.3, 0.6, 1.0, 2.0}) {
        GsrmInstance inst = base;
        inst.alpha = alpha;
        const double value = gsrm_minimize(inst).value;
        REQUIRE(value >= prev - 1e-12);
        prev = value;
    }
    prev = -1.0;
    for (double beta : {0.0, 0.1, 0.3, 0.6, 1.0, 2.0}) {
        GsrmInstance inst = base;
        inst.beta = beta;
        const double value = gsrm_minimize(inst).value;
        REQUIRE(value >= prev - 1e-12);
        prev = value;
    }
}

TEST_CASE("large alpha forbids switching") {
    RngState rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        GsrmInstance inst = random_instance(rng, 3, 6);
        inst.alpha = static_cast<double>(inst.horizon) + 1.0;
        for (auto& row : inst.switch_cost)
            for (auto& v : row) v = v > 0.0 ? 1.0 : 0.0;
        const auto sol = gsrm_minimize(inst);
        std::size_t prev = inst.k_init;
        for (std::size_t k : sol.regimes) {
            REQUIRE(k == prev);
            prev = k;
        }
    }
}

TEST_CASE("gsrm_expected worked cases") {
    const GsrmInstance inst = worked_instance(0.5);
    const std::vector<std::string> contexts(3, "any");

    SECTION("deterministic switching equals the objective exactly") {
        const auto expectation = gsrm_expected(inst, SwitchingOperator::always(2, 0), contexts, 100, 7);
        CHECK(expectation.mean == gsrm_objective(inst, {0, 0, 0}));
        CHECK(expectation.confidence_radius == 0.0);
    }
    SECTION("uniform switching matches exact enumeration within 3 radii") {
        double exact = 0.0;
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b)
                for (std::size_t c = 0; c < 2; ++c) exact += gsrm_objective(inst, {a, b, c}) / 8.0;
        const auto expectation =
            gsrm_expected(inst, SwitchingOperator::uniform_over(2), contexts, 100000, 3);
        CHECK(std::abs(expectation.mean - exact) <= 3.0 * expectation.confidence_radius);
    }
    SECTION("large incoherence penalty steers the optimum away from regime 2") {
        GsrmInstance penalized = worked_instance(0.1);
        penalized.beta = 10.0;
        penalized.incoherence = {0.0, 1.0};
        const auto sol = gsrm_minimize(penalized);
        for (std::size_t k : sol.regimes) REQUIRE(k == 0);
        // Enumeration over all 8 sequences confirms.
        double best = std::numeric_limits<double>::infinity();
        std::vector<std::size_t> best_seq;
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b)
                for (std::size_t c = 0; c < 2; ++c) {
                    const double v = gsrm_objective(penalized, {a, b, c});
                    if (v < best) {
                        best = v;
                        best_seq = {a, b, c};
                    }
                }
        CHECK(sol.regimes == best_seq);
        CHECK(sol.value == best);
    }
    SECTION("deterministic given the seed") {
        const auto a = gsrm_expected(inst, SwitchingOperator::uniform_over(2), contexts, 1000, 5);
        const auto b = gsrm_expected(inst, SwitchingOperator::uniform_over(2), contexts, 1000, 5);
        CHECK(a.mean == b.mean);
    }
}
