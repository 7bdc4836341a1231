#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smgi/certificates.hpp"
#include "smgi/dynamics.hpp"
#include "smgi/metamodel.hpp"
#include "smgi/regimes.hpp"

namespace smgi {

// A ready-to-run configuration realizing one constructive proof: the model,
// its transformations, an induced kernel, a stability witness, capacity data,
// the admissible set, and the verdict pattern the construction asserts.
struct FixtureEntry {
    std::string id;
    MetaModel model;
    std::vector<TransformSpec> transforms;
    TransitionKernel kernel;
    LyapunovWitness witness;
    double lipschitz_ell = 1.0;
    CapacityFunctional capacity;
    std::vector<CapacityConfiguration> capacity_configs;
    AdmissibleSet s_star;
    State s0;
    ObligationVerdicts expected;
    // Declared forms of the kernel and admissible set, so the fixture exports
    // as a standalone run configuration the CLI can re-run.
    Json kernel_config;
    Json admissible_config;
};

namespace detail {

inline Environment simple_environment() {
    Environment env;
    env.domain.points = {0.0, 1.0};
    env.domain.ordered = true;
    env.conditionals = {{0.5, 0.5}};
    env.context.kind = ContextRule::Kind::constant;
    env.context.value = "benign";
    return env;
}

inline MetaModel base_model() {
    MetaModel m;
    m.representation.kind = RepresentationSpec::Kind::identity;
    m.hypothesis_class = HypothesisClassSpec::enumerated({"h0", "h1"});
    m.prior.kind = PriorSpec::Kind::uniform;

    EvaluatorFamily fam;
    fam.evaluators.push_back(Evaluator::from_hypothesis_risks({0.2, 0.8}, "risk"));
    fam.active_weights = RegimeWeights::delta(1, 0);
    AuditTriple triple;
    triple.hypothesis_index = 0;
    triple.state = State::with_counter(0, "h0");
    triple.z = 0.0;
    fam.protected_core.audit_set.push_back(triple);
    CoreConstraint threshold;
    threshold.name = "audited_risk_cap";
    threshold.kind = CoreConstraint::Kind::risk_threshold;
    threshold.evaluator_index = -1;
    threshold.threshold = 0.5;
    fam.protected_core.constraints.push_back(threshold);
    m.evaluators = std::move(fam);

    m.environments.instances = {simple_environment()};
    m.environments.metric_kind = MetricKind::total_variation;
    m.memory.update_kind = MemoryUpdateKind::no_op;
    return finalize_description_bits(m);
}

} // namespace detail

// S = {0,1}, T == 1, S* = {0}: closure fails, everything else holds with a
// zero witness and a finite class.
inline FixtureEntry fixture_closure_fail() {
    FixtureEntry f;
    f.id = "closure_fail";
    f.model = detail::base_model();
    f.transforms = {TransformSpec::identity_transform()};
    f.kernel = TransitionKernel::constant_to(State::with_counter(1, "h0"));
    f.witness.kind = LyapunovWitness::Kind::zero;
    f.witness.alpha = 1.0;
    f.witness.beta = 0.0;
    f.capacity.kind = CapacityFunctional::Kind::log2_cardinality;
    f.capacity.bound = 4.0;
    f.capacity_configs = {{"fixed_class", f.model.hypothesis_class, {}, {}}};
    f.s_star = AdmissibleSet::from_states({State::with_counter(0, "h0")});
    f.s0 = State::with_counter(0, "h0");
    f.expected = {false, true, true, true};
    f.kernel_config = {{"kind", "constant_to_counter"}, {"target_counter", 1}, {"hypothesis", "h0"}};
    f.admissible_config = {{"kind", "counters"}, {"counters", {0}}, {"hypothesis", "h0"}};
    return f;
}

// T(s, z) = s + 1 on the counters with V(s) = s: the drift certificate fails
// for every probed witness while S* = S stays closed.
inline FixtureEntry fixture_stability_fail() {
    FixtureEntry f;
    f.id = "stability_fail";
    f.model = detail::base_model();
    f.transforms = {TransformSpec::identity_transform()};
    f.kernel = TransitionKernel::counter_increment();
    f.witness.kind = LyapunovWitness::Kind::counter;
    f.witness.alpha = 0.09;
    f.witness.beta = 0.0;
    f.capacity.kind = CapacityFunctional::Kind::log2_cardinality;
    f.capacity.bound = 4.0;
    f.capacity_configs = {{"fixed_class", f.model.hypothesis_class, {}, {}}};
    // Bounded 64-bit counter domain; probes are sampled from the low range.
    constexpr std::int64_t counter_cap = std::int64_t{1} << 62;
    f.s_star = AdmissibleSet::from_predicate(
        [](const State& s) { return s.counter && *s.counter >= 0 && *s.counter <= counter_cap; },
        [](RngState& rng) {
            return State::with_counter(static_cast<std::int64_t>(rng.next_below(1000001)), "h0");
        });
    f.s0 = State::with_counter(0, "h0");
    f.expected = {true, false, true, true};
    f.kernel_config = {{"kind", "counter_increment"}};
    f.admissible_config = {{"kind", "counter_range"},
                           {"min", 0},
                           {"max", counter_cap},
                           {"sample_max", 1000000},
                           {"hypothesis", "h0"}};
    return f;
}

// Single-point state space with a hypothesis-class schedule of complexity n
// at step n: capacity blows up past any finite bound while the point stays
// closed and still.
inline FixtureEntry fixture_capacity_fail(int schedule_length = 50, double bound = 25.0) {
    FixtureEntry f;
    f.id = "capacity_fail";
    f.model = detail::base_model();
    f.transforms = {TransformSpec::identity_transform()};
    f.kernel = TransitionKernel::identity();
    f.witness.kind = LyapunovWitness::Kind::zero;
    f.witness.alpha = 1.0;
    f.witness.beta = 0.0;
    f.capacity.kind = CapacityFunctional::Kind::log2_cardinality;
    f.capacity.bound = bound;
    for (int n = 1; n <= schedule_length; ++n) {
        HypothesisClassSpec cls;
        cls.kind = HypothesisClassSpec::Kind::parametric_grid;
        cls.members = {"grid"};
        cls.complexity_bits = static_cast<double>(n);
        f.capacity_configs.push_back({"n=" + std::to_string(n), std::move(cls), {}, {}});
    }
    f.s_star = AdmissibleSet::from_states({State::with_counter(0, "h0")});
    f.s0 = State::with_counter(0, "h0");
    f.expected = {true, true, false, true};
    f.kernel_config = {{"kind", "identity"}};
    f.admissible_config = {{"kind", "counters"}, {"counters", {0}}, {"hypothesis", "h0"}};
    return f;
}

// A regime switch replaces l_1 by l_2 and flips the protected pair ordering:
// evaluative invariance fails alone.
inline FixtureEntry fixture_invariance_fail() {
    FixtureEntry f;
    f.id = "invariance_fail";
    f.model = detail::base_model();

    EvaluatorFamily fam;
    fam.evaluators.push_back(Evaluator::from_hypothesis_risks({0.2, 0.8}, "regime_1"));
    fam.evaluators.push_back(Evaluator::from_hypothesis_risks({0.8, 0.2}, "regime_2"));
    fam.active_weights = RegimeWeights::delta(2, 0);
    AuditTriple triple;
    triple.hypothesis_index = 0;
    triple.state = State::with_counter(0, "h0");
    triple.z = 0.0;
    fam.protected_core.audit_set.push_back(triple);
    CoreConstraint ordering;
    ordering.name = "protected_pair_ordering";
    ordering.kind = CoreConstraint::Kind::pair_ordering;
    ordering.evaluator_index = -1; // the active mixture
    ordering.hyp_low = 0;
    ordering.hyp_high = 1;
    fam.protected_core.constraints.push_back(ordering);
    f.model.evaluators = std::move(fam);
    f.model = finalize_description_bits(f.model);

    TransformSpec regime_switch = TransformSpec::identity_transform();
    regime_switch.identifier = "regime_switch";
    regime_switch.evaluator_action = RegimeWeights::delta(2, 1);
    f.transforms = {regime_switch};

    f.kernel = TransitionKernel::identity();
    f.witness.kind = LyapunovWitness::Kind::zero;
    f.witness.alpha = 1.0;
    f.witness.beta = 0.0;
    f.capacity.kind = CapacityFunctional::Kind::log2_cardinality;
    f.capacity.bound = 4.0;
    f.capacity_configs = {{"fixed_class", f.model.hypothesis_class, {}, {}}};
    f.s_star = AdmissibleSet::from_states({State::with_counter(0, "h0")});
    f.s0 = State::with_counter(0, "h0");
    f.expected = {true, true, true, false};
    f.kernel_config = {{"kind", "identity"}};
    f.admissible_config = {{"kind", "counters"}, {"counters", {0}}, {"hypothesis", "h0"}};
    return f;
}

// The down-drift chain configuration used by the drift-soundness checks:
// from s >= 1 step down with probability 0.9, V(s) = s, alpha = 0.09, beta = 0.
inline FixtureEntry fixture_down_drift_chain(std::int64_t top = 10) {
    FixtureEntry f;
    f.id = "down_drift_chain";
    f.model = detail::base_model();
    f.transforms = {TransformSpec::identity_transform()};
    f.kernel = TransitionKernel::down_drift_chain(top, 0.9);
    f.witness.kind = LyapunovWitness::Kind::counter;
    f.witness.alpha = 0.09;
    f.witness.beta = 0.0;
    f.witness.v_max = static_cast<double>(top);
    f.capacity.kind = CapacityFunctional::Kind::log2_cardinality;
    f.capacity.bound = 4.0;
    f.capacity_configs = {{"fixed_class", f.model.hypothesis_class, {}, {}}};
    std::vector<State> chain_states;
    Json counters = Json::array();
    for (std::int64_t s = 0; s <= top; ++s) {
        chain_states.push_back(State::with_counter(s, "h0"));
        counters.push_back(s);
    }
    f.s_star = AdmissibleSet::from_states(std::move(chain_states));
    f.s0 = State::with_counter(top, "h0");
    f.expected = {true, true, true, true};
    f.kernel_config = {{"kind", "down_drift_chain"}, {"top", top}, {"p_down", 0.9}};
    f.admissible_config = {{"kind", "counters"}, {"counters", counters}, {"hypothesis", "h0"}};
    return f;
}

// Strict-inclusion instance: flipped risk rows, a dense grid of candidate
// single evaluators, and the K=1 embedding of a classical learner that must
// pass all four obligations.
struct StrictInclusionFixture {
    std::vector<std::vector<double>> risk_matrix;
    std::vector<std::vector<double>> candidate_grid;
    FixtureEntry k1_embedding;
};

inline StrictInclusionFixture fixture_strict_inclusion(int grid_side = 101) {
    StrictInclusionFixture f;
    f.risk_matrix = {{0.2, 0.8}, {0.8, 0.2}};
    f.candidate_grid.reserve(static_cast<std::size_t>(grid_side) * static_cast<std::size_t>(grid_side));
    for (int i = 0; i < grid_side; ++i)
        for (int j = 0; j < grid_side; ++j)
            f.candidate_grid.push_back({static_cast<double>(i) / (grid_side - 1),
                                        static_cast<double>(j) / (grid_side - 1)});

    // Classical instance embedded at K=1: delta switching, identity
    // forgetting, identity transformations.
    f.k1_embedding = fixture_down_drift_chain();
    f.k1_embedding.id = "k1_embedding";
    f.k1_embedding.model.evaluators.mixing = SwitchingOperator::always(1, 0);
    f.k1_embedding.model.memory.update_kind = MemoryUpdateKind::no_op;
    f.k1_embedding.model = finalize_description_bits(f.k1_embedding.model);
    return f;
}

// Two-regime tool-use instance: task and safety evaluators, a protected
// safety constraint on the adversarial regime, and the admissible /
// inadmissible candidate weight updates for cert_update.
struct TwoRegimeFixture {
    MetaModel model;
    std::vector<WeightConstraint> admissible_set; // safety weight floor
    RegimeWeights benign_weights;
    RegimeWeights adversarial_weights;
    RegimeWeights admissible_candidate;   // already in K_Phi: returned unchanged
    RegimeWeights inadmissible_candidate; // safety weight below the floor
};

inline TwoRegimeFixture fixture_two_regime_tooluse() {
    TwoRegimeFixture f;
    MetaModel m = detail::base_model();

    EvaluatorFamily fam;
    fam.evaluators.push_back(Evaluator::from_hypothesis_risks({0.2, 0.8}, "task"));
    fam.evaluators.push_back(Evaluator::from_hypothesis_risks({0.05, 0.6}, "safety"));
    fam.active_weights = RegimeWeights{{0.8, 0.2}};
    fam.mixing = SwitchingOperator::from_context_table(2, {{"adversarial", 1}}, 0);

    AuditTriple triple;
    triple.hypothesis_index = 0;
    triple.state = State::with_counter(0, "h0");
    triple.z = 1.0;
    fam.protected_core.audit_set.push_back(triple);
    CoreConstraint phi;
    phi.name = "adversarial_safety_cap";
    phi.kind = CoreConstraint::Kind::risk_threshold;
    phi.evaluator_index = 1; // the safety evaluator
    phi.threshold = 0.1;     // audited value is 0.05: margin 0.05
    phi.hypothesis_index = 0;
    fam.protected_core.constraints.push_back(phi);
    m.evaluators = std::move(fam);
    f.model = finalize_description_bits(m);

    WeightConstraint floor;
    floor.coeffs = {0.0, 1.0};
    floor.lower = 0.3;
    f.admissible_set = {floor};
    f.benign_weights = RegimeWeights{{0.8, 0.2}};
    f.adversarial_weights = RegimeWeights{{0.5, 0.5}};
    f.admissible_candidate = RegimeWeights{{0.5, 0.5}};
    f.inadmissible_candidate = RegimeWeights{{0.9, 0.1}};
    return f;
}

// Run one fixture through the bundle and extract the four-obligation vector.
inline CertificateReport run_fixture_bundle(const FixtureEntry& f, const BundleOptions& opt = {}) {
    return check_bundle(f.model, f.transforms.at(0), f.kernel, f.witness, f.lipschitz_ell, f.capacity,
                        f.capacity_configs, f.s_star, opt);
}

struct MinimalityOutcome {
    std::vector<std::string> fixture_ids;
    std::vector<ObligationVerdicts> verdicts;
    std::vector<ObligationVerdicts> expected;
    std::vector<CertificateReport> bundles;

    // Exactly one fail per row, on the diagonal.
    bool diagonal_fail_pattern() const {
        if (verdicts.size() != 4) return false;
        for (std::size_t row = 0; row < 4; ++row) {
            const auto& v = verdicts[row];
            const bool flags[4] = {v.closure, v.stability, v.capacity, v.invariance};
            for (std::size_t col = 0; col < 4; ++col)
                if (flags[col] != (col != row)) return false;
        }
        return true;
    }
};

// The minimality theorem as an executable suite: each fixture must fail
// exactly its designated obligation.
inline MinimalityOutcome run_minimality_suite(const BundleOptions& opt = {}) {
    MinimalityOutcome out;
    const FixtureEntry fixtures[4] = {fixture_closure_fail(), fixture_stability_fail(),
                                      fixture_capacity_fail(), fixture_invariance_fail()};
    for (const auto& f : fixtures) {
        CertificateReport bundle = run_fixture_bundle(f, opt);
        out.fixture_ids.push_back(f.id);
        out.verdicts.push_back(obligation_verdicts(bundle));
        out.expected.push_back(f.expected);
        out.bundles.push_back(std::move(bundle));
    }
    return out;
}

} // namespace smgi
