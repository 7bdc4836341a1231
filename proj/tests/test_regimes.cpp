#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "smgi/fixtures.hpp"
#include "smgi/regimes.hpp"

using namespace smgi;

namespace {

EvaluatorFamily two_regime_family(std::vector<double> r1, std::vector<double> r2) {
    EvaluatorFamily fam;
    fam.evaluators.push_back(Evaluator::from_hypothesis_risks(std::move(r1), "l1"));
    fam.evaluators.push_back(Evaluator::from_hypothesis_risks(std::move(r2), "l2"));
    fam.active_weights = RegimeWeights::delta(2, 0);
    return fam;
}

// Grid-search oracle over the weight simplex at a given resolution: the
// objective is evaluated at every grid point satisfying the constraints.
std::vector<double> simplex_grid_oracle(const std::vector<double>& candidate,
                                        const std::vector<WeightConstraint>& cons, double resolution) {
    REQUIRE(candidate.size() == 2);
    std::vector<double> best;
    double best_obj = std::numeric_limits<double>::infinity();
    const int steps = static_cast<int>(std::round(1.0 / resolution));
    for (int i = 0; i <= steps; ++i) {
        const double w0 = static_cast<double>(i) / steps;
        const std::vector<double> w = {w0, 1.0 - w0};
        bool ok = true;
        for (const auto& c : cons)
            if (c.coeffs[0] * w[0] + c.coeffs[1] * w[1] < c.lower - 1e-12) ok = false;
        if (!ok) continue;
        const double obj = (w[0] - candidate[0]) * (w[0] - candidate[0]) +
                           (w[1] - candidate[1]) * (w[1] - candidate[1]);
        if (obj < best_obj) {
            best_obj = obj;
            best = w;
        }
    }
    REQUIRE_FALSE(best.empty());
    return best;
}

} // namespace

TEST_CASE("active_loss worked cases and linearity") {
    const State s = State::with_counter(0);

    SECTION("K=1 equals the single evaluator") {
        const auto fam = EvaluatorFamily::single(Evaluator::from_hypothesis_risks({0.37, 0.9}));
        CHECK(active_loss(fam, RegimeWeights{{1.0}}, 0, s, 0.0) == 0.37);
    }
    SECTION("even mixture of 0.2 and 0.8 is 0.5") {
        const auto fam = two_regime_family({0.2, 0.8}, {0.8, 0.2});
        CHECK_THAT(active_loss(fam, RegimeWeights{{0.5, 0.5}}, 0, s, 0.0),
                   Catch::Matchers::WithinAbs(0.5, 1e-15));
    }
    SECTION("zero salience kills the loss") {
        const auto fam = two_regime_family({0.2, 0.8}, {0.8, 0.2});
        CHECK(active_loss(fam, RegimeWeights{{0.5, 0.5}}, 0, s, 0.0, 0.0) == 0.0);
    }
    SECTION("linear in the weights") {
        const auto fam = two_regime_family({0.13, 0.5}, {0.77, 0.5});
        RngState rng(5);
        for (int i = 0; i < 200; ++i) {
            const double a = rng.next_unit();
            const double w1 = rng.next_unit();
            const double w2 = rng.next_unit();
            const RegimeWeights wa{{w1, 1.0 - w1}};
            const RegimeWeights wb{{w2, 1.0 - w2}};
            const RegimeWeights mix{{a * w1 + (1 - a) * w2, a * (1 - w1) + (1 - a) * (1 - w2)}};
            const double lhs = active_loss(fam, mix, 0, s, 0.0);
            const double rhs =
                a * active_loss(fam, wa, 0, s, 0.0) + (1 - a) * active_loss(fam, wb, 0, s, 0.0);
            REQUIRE_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-12));
        }
    }
}

TEST_CASE("select_regime worked cases") {
    const State s = State::with_counter(0);

    SECTION("delta rule always picks its regime") {
        const auto op = SwitchingOperator::always(3, 1);
        RngState rng(1);
        for (int i = 0; i < 100; ++i) REQUIRE(select_regime(op, "any", s, rng) == 1);
    }
    SECTION("uniform rule is balanced over 100k draws") {
        const auto op = SwitchingOperator::uniform_over(2);
        RngState rng(123);
        int ones = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) ones += select_regime(op, "", s, rng) == 1 ? 1 : 0;
        CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 0.01);
    }
    SECTION("context-keyed rule") {
        const auto op = SwitchingOperator::from_context_table(3, {{"adversarial", 2}}, 0);
        RngState rng(1);
        CHECK(select_regime(op, "adversarial", s, rng) == 2);
        CHECK(select_regime(op, "benign", s, rng) == 0);
    }
}

TEST_CASE("check_protected_core worked cases") {
    auto fam = two_regime_family({0.2, 0.8}, {0.8, 0.2});
    AuditTriple triple;
    triple.hypothesis_index = 0;
    triple.state = State::with_counter(0);
    triple.z = 0.0;
    ProtectedCore core;
    core.audit_set = {triple};
    CoreConstraint ordering;
    ordering.name = "pair";
    ordering.kind = CoreConstraint::Kind::pair_ordering;
    ordering.evaluator_index = -1;
    ordering.hyp_low = 0;
    ordering.hyp_high = 1;
    core.constraints = {ordering};

    SECTION("identity update keeps the margins") {
        const auto before = check_protected_core(core, fam);
        const auto after = check_protected_core(core, fam);
        CHECK(before.pass);
        CHECK(after.pass);
        CHECK(before.sub_reports[0].evidence.at("margin") ==
              after.sub_reports[0].evidence.at("margin"));
    }
    SECTION("regime switch flips the protected ordering") {
        fam.active_weights = RegimeWeights::delta(2, 1);
        const auto report = check_protected_core(core, fam);
        CHECK_FALSE(report.pass);
        REQUIRE_FALSE(report.witnesses.empty());
        CHECK(report.witnesses[0].find("(0, 1)") != std::string::npos);
    }
    SECTION("safety threshold with margin") {
        CoreConstraint safety;
        safety.name = "safety_cap";
        safety.kind = CoreConstraint::Kind::risk_threshold;
        safety.evaluator_index = 1;
        safety.threshold = 0.1;
        safety.hypothesis_index = 0;
        ProtectedCore safety_core;
        safety_core.audit_set = {triple};
        safety_core.constraints = {safety};
        auto safe_fam = two_regime_family({0.2, 0.8}, {0.05, 0.6});
        const auto report = check_protected_core(safety_core, safe_fam);
        CHECK(report.pass);
        CHECK_THAT(report.sub_reports[0].evidence.at("margin"), Catch::Matchers::WithinAbs(0.05, 1e-15));
    }
    SECTION("empty audit set is rejected") {
        ProtectedCore empty = core;
        empty.audit_set.clear();
        CHECK_THROWS_AS(check_protected_core(empty, fam), EmptyAdmissibleSet);
    }
}

TEST_CASE("cert_update worked cases") {
    const auto fam = two_regime_family({0.2, 0.8}, {0.8, 0.2});
    ProtectedCore core;
    AuditTriple triple;
    triple.hypothesis_index = 0;
    triple.state = State::with_counter(0);
    triple.z = 0.0;
    core.audit_set = {triple};

    WeightConstraint floor;
    floor.coeffs = {0.0, 1.0};
    floor.lower = 0.3;

    SECTION("admissible candidate is returned unchanged") {
        const RegimeWeights candidate{{0.6, 0.4}};
        const auto out = cert_update(core, fam, candidate, WeightDivergence::squared_euclidean, {floor});
        CHECK(out.weights == candidate);
        CHECK(out.report.evidence.at("divergence") == 0.0);
    }
    SECTION("projection lands on the floor: (0.9, 0.1) -> (0.7, 0.3)") {
        const auto out = cert_update(core, fam, RegimeWeights{{0.9, 0.1}},
                                     WeightDivergence::squared_euclidean, {floor});
        REQUIRE(out.weights.weights.size() == 2);
        CHECK_THAT(out.weights.weights[0], Catch::Matchers::WithinAbs(0.7, 1e-9));
        CHECK_THAT(out.weights.weights[1], Catch::Matchers::WithinAbs(0.3, 1e-9));
        // Grid-search oracle at resolution 1e-4 confirms within 1e-3.
        const auto oracle = simplex_grid_oracle({0.9, 0.1}, {floor}, 1e-4);
        CHECK_THAT(out.weights.weights[0], Catch::Matchers::WithinAbs(oracle[0], 1e-3));
    }
    SECTION("infeasible constraint set raises EmptyAdmissibleSet") {
        WeightConstraint impossible;
        impossible.coeffs = {0.0, 1.0};
        impossible.lower = 1.5;
        CHECK_THROWS_AS(cert_update(core, fam, RegimeWeights{{0.9, 0.1}},
                                    WeightDivergence::squared_euclidean, {impossible}),
                        EmptyAdmissibleSet);
    }
    SECTION("idempotence: second application changes nothing") {
        RngState rng(31);
        for (int i = 0; i < 50; ++i) {
            const double c0 = rng.next_unit();
            WeightConstraint f2;
            f2.coeffs = {0.0, 1.0};
            f2.lower = rng.next_unit() * 0.8;
            const RegimeWeights candidate{{c0, 1.0 - c0}};
            const auto first =
                cert_update(core, fam, candidate, WeightDivergence::squared_euclidean, {f2});
            const auto second =
                cert_update(core, fam, first.weights, WeightDivergence::squared_euclidean, {f2});
            REQUIRE(second.weights == first.weights);
            REQUIRE(second.report.evidence.at("divergence") == 0.0);
        }
    }
    SECTION("output is simplex-feasible and constraint-feasible on random pairs") {
        RngState rng(77);
        for (int i = 0; i < 100; ++i) {
            const std::size_t k = 2 + rng.next_below(3);
            auto fam_k = EvaluatorFamily::single(Evaluator::constant_loss(0.1));
            fam_k.evaluators.assign(k, Evaluator::constant_loss(0.1));
            fam_k.active_weights = RegimeWeights::uniform(k);
            std::vector<double> cand(k, 0.0);
            double sum = 0.0;
            for (auto& v : cand) {
                v = 0.02 + rng.next_unit();
                sum += v;
            }
            for (auto& v : cand) v /= sum;
            WeightConstraint c;
            c.coeffs.assign(k, 0.0);
            c.coeffs[rng.next_below(k)] = 1.0;
            c.lower = rng.next_unit() * 0.6;
            const auto out = cert_update(core, fam_k, RegimeWeights{cand},
                                         WeightDivergence::squared_euclidean, {c});
            double w_sum = 0.0;
            for (double v : out.weights.weights) {
                REQUIRE(v >= -1e-12);
                w_sum += v;
            }
            REQUIRE_THAT(w_sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
            double dot = 0.0;
            for (std::size_t d = 0; d < k; ++d) dot += c.coeffs[d] * out.weights.weights[d];
            REQUIRE(dot >= c.lower - 1e-9);
        }
    }
    SECTION("kl projection agrees with a fine grid oracle at K=2") {
        const RegimeWeights candidate{{0.9, 0.1}};
        const auto out = cert_update(core, fam, candidate, WeightDivergence::kl_on_weights, {floor});
        // Oracle: minimize KL(w||c) over the grid.
        double best_obj = std::numeric_limits<double>::infinity();
        double best_w1 = 0.0;
        for (int i = 0; i <= 10000; ++i) {
            const double w1 = static_cast<double>(i) / 10000.0;
            if (w1 < 0.3) continue;
            const double w0 = 1.0 - w1;
            double obj = 0.0;
            if (w0 > 0) obj += w0 * std::log(w0 / 0.9);
            if (w1 > 0) obj += w1 * std::log(w1 / 0.1);
            if (obj < best_obj) {
                best_obj = obj;
                best_w1 = w1;
            }
        }
        CHECK_THAT(out.weights.weights[1], Catch::Matchers::WithinAbs(best_w1, 1e-3));
    }
}

TEST_CASE("check_core_equivalence worked cases") {
    SECTION("K=1 always passes") {
        const auto report = check_core_equivalence({{0.3, 0.7}}, {});
        CHECK(report.pass);
        CHECK(report.evidence.at("impossibility") == 0.0);
    }
    SECTION("identical rows pass with a matching candidate") {
        const auto report = check_core_equivalence({{0.2, 0.8}, {0.2, 0.8}}, {{0.1, 0.9}});
        CHECK(report.pass);
    }
    SECTION("flipped rows raise the impossibility flag") {
        const auto report = check_core_equivalence({{0.2, 0.8}, {0.8, 0.2}}, {{0.5, 0.5}});
        CHECK_FALSE(report.pass);
        CHECK(report.evidence.at("impossibility") == 1.0);
        REQUIRE_FALSE(report.witnesses.empty());
    }
    SECTION("impossibility flag is sound against the exhaustive grid") {
        const StrictInclusionFixture f = fixture_strict_inclusion();
        const auto report = check_core_equivalence(f.risk_matrix, f.candidate_grid);
        REQUIRE(report.evidence.at("impossibility") == 1.0);
        REQUIRE(report.evidence.at("candidates_checked") >= 10000.0);
        CHECK(report.evidence.at("candidates_matched") == 0.0);
    }
}

TEST_CASE("K=1 machinery is observationally a single fixed loss") {
    // 1000 random inputs through the regime machinery with K=1 match the bare
    // evaluator exactly.
    const Evaluator bare = Evaluator::from_hypothesis_risks({0.25, 0.5});
    auto fam = EvaluatorFamily::single(bare);
    fam.mixing = SwitchingOperator::always(1, 0);
    RngState rng(9);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t h = rng.next_below(2);
        const State s = State::with_counter(static_cast<std::int64_t>(rng.next_below(10)));
        const double z = rng.next_unit();
        RngState sel(i);
        REQUIRE(select_regime(*fam.mixing, "any", s, sel) == 0);
        REQUIRE(active_loss(fam, fam.active_weights, h, s, z) == bare(h, s, z));
    }
}
