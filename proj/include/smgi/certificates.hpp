#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "smgi/dynamics.hpp"
#include "smgi/memory.hpp"
#include "smgi/metamodel.hpp"
#include "smgi/regimes.hpp"
#include "smgi/report.hpp"

namespace smgi {

// Nonnegative witness V with drift constants: E[V(s')|s] <= (1-alpha) V(s) + beta.
// Declared forms keep witnesses serializable alongside fixtures.
struct LyapunovWitness {
    enum class Kind { zero, counter, scaled_counter };

    Kind kind = Kind::zero;
    double scale = 1.0;
    double alpha = 1.0;
    double beta = 0.0;
    std::optional<double> v_max; // sublevel bound on S*

    friend bool operator==(const LyapunovWitness&, const LyapunovWitness&) = default;

    double value(const State& s) const {
        switch (kind) {
            case Kind::zero: return 0.0;
            case Kind::counter: return s.counter ? static_cast<double>(*s.counter) : 0.0;
            case Kind::scaled_counter: return scale * (s.counter ? static_cast<double>(*s.counter) : 0.0);
        }
        return 0.0;
    }

    std::function<double(const State&)> as_function() const {
        return [w = *this](const State& s) { return w.value(s); };
    }
};

struct CapacityFunctional {
    enum class Kind { log2_cardinality, kl_vs_prior, description_bits };

    Kind kind = Kind::log2_cardinality;
    double bound = 0.0;

    friend bool operator==(const CapacityFunctional&, const CapacityFunctional&) = default;
};

// One admissible configuration sampled along the evolution: the effective
// hypothesis class plus optional KL / model snapshots for the other kinds.
struct CapacityConfiguration {
    std::string label;
    HypothesisClassSpec hypothesis_class;
    std::optional<double> kl_value;
    std::optional<MetaModel> model_snapshot;
};

// SMGI (ii) as a one-step drift certificate. Enumerable kernels get the exact
// conditional expectation per probe state; sampling-only kernels get a
// Monte-Carlo estimate with a 95% Hoeffding radius (range [0, v_max] when
// declared, otherwise the empirical range, flagged in the evidence).
inline CertificateReport check_drift(const LyapunovWitness& w, const TransitionKernel& kernel,
                                     const std::vector<State>& probe_states, const Environment& env,
                                     int n_mc = 10000, std::uint64_t seed = 0) {
    if (probe_states.empty()) throw ConfigError("drift check needs at least one probe state");
    CertificateReport report;
    report.obligation = Obligation::stability;
    report.name = "lyapunov_drift";
    report.mode = kernel.enumerable ? CheckMode::exhaustive : CheckMode::sampled;
    report.pass = true;

    double worst_violation = -std::numeric_limits<double>::infinity();
    double max_v = 0.0;
    double radius = 0.0;

    RngState rng(seed);
    for (const auto& s : probe_states) {
        const double v_here = w.value(s);
        if (v_here < 0.0) throw ConfigError("Lyapunov witness is negative at a probe state");
        max_v = std::max(max_v, v_here);
        const auto& row = env.conditionals.at(env.condition_index(s));

        double expected = 0.0;
        if (kernel.enumerable) {
            for (std::size_t zi = 0; zi < env.domain.points.size(); ++zi) {
                if (row[zi] <= 0.0) continue;
                double inner = 0.0;
                for (const auto& [succ, p] : kernel.successors(s, env.domain.points[zi]))
                    inner += p * w.value(succ);
                expected += row[zi] * inner;
            }
        } else {
            double sum = 0.0;
            double emp_min = std::numeric_limits<double>::infinity();
            double emp_max = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n_mc; ++i) {
                const double z = env.domain.points[rng.next_index(row)];
                const double v = w.value(step(kernel, s, z, rng));
                sum += v;
                emp_min = std::min(emp_min, v);
                emp_max = std::max(emp_max, v);
            }
            expected = sum / static_cast<double>(n_mc);
            const double range = w.v_max ? *w.v_max : (emp_max - emp_min);
            radius = std::max(radius, range * std::sqrt(std::log(2.0 / 0.05) /
                                                        (2.0 * static_cast<double>(n_mc))));
            report.evidence["range_fallback"] = w.v_max ? 0.0 : 1.0;
        }

        const double allowed = (1.0 - w.alpha) * v_here + w.beta;
        const double violation = expected - allowed;
        worst_violation = std::max(worst_violation, violation);
        if (violation > (kernel.enumerable ? 1e-12 : radius)) {
            report.pass = false;
            if (report.witnesses.size() < 8)
                report.witnesses.push_back("state " + s.repr() + ": E[V]=" + std::to_string(expected) +
                                           " > " + std::to_string(allowed));
        }
    }

    report.evidence["worst_violation"] = worst_violation;
    report.evidence["alpha"] = w.alpha;
    report.evidence["beta"] = w.beta;
    report.evidence["probe_count"] = static_cast<double>(probe_states.size());
    // Drift implies sup_t E[V(s_t)] <= V(s_0) + beta/alpha from any probe start.
    report.evidence["uniform_bound"] = max_v + w.beta / w.alpha;
    if (!kernel.enumerable) {
        report.evidence["sample_count"] = static_cast<double>(n_mc);
        report.evidence["confidence_radius"] = radius;
    }
    return report;
}

// SMGI (iii): the capacity functional stays under its bound on every sampled
// admissible configuration.
inline CertificateReport check_capacity(const CapacityFunctional& c, const MetaModel& m,
                                        const std::vector<CapacityConfiguration>& configurations) {
    if (configurations.empty()) throw ConfigError("capacity check needs at least one configuration");
    CertificateReport report;
    report.obligation = Obligation::capacity;
    report.name = "capacity";
    report.mode = CheckMode::exhaustive;
    report.pass = true;

    double achieved = -std::numeric_limits<double>::infinity();
    for (const auto& cfg : configurations) {
        double value = 0.0;
        switch (c.kind) {
            case CapacityFunctional::Kind::log2_cardinality:
                value = cfg.hypothesis_class.complexity_bits;
                break;
            case CapacityFunctional::Kind::kl_vs_prior:
                if (!cfg.kl_value) throw ConfigError("kl_vs_prior configuration is missing its KL value");
                value = *cfg.kl_value;
                break;
            case CapacityFunctional::Kind::description_bits:
                value = static_cast<double>(
                    description_length_bits(cfg.model_snapshot ? *cfg.model_snapshot : m));
                break;
        }
        if (!std::isfinite(value)) {
            report.pass = false;
            report.witnesses.push_back("configuration '" + cfg.label + "' has non-finite capacity");
            continue;
        }
        if (value > achieved) achieved = value;
        if (value > c.bound + 1e-12) {
            report.pass = false;
            if (report.witnesses.size() < 8)
                report.witnesses.push_back("configuration '" + cfg.label + "' capacity " +
                                           std::to_string(value) + " exceeds bound " +
                                           std::to_string(c.bound));
        }
    }
    report.evidence["achieved_max"] = achieved;
    report.evidence["bound"] = c.bound;
    report.evidence["configurations"] = static_cast<double>(configurations.size());
    return report;
}

struct BundleOptions {
    int n_probe = 1000;    // predicate-mode closure probes
    int n_mc = 10000;      // Monte-Carlo draws for sampling-only kernels
    int n_shift_samples = 256; // (state, z, h) probes for the evaluator shift
    std::uint64_t seed = 17;
};

namespace detail {

// (U3) evaluator-shift control: |l_tau - l| <= L_l * D_E(e, tau(e)) on
// sampled admissible inputs, plus preservation of the protected core when
// the transform carries an evaluator update. A transform that changes the
// evaluator while leaving every environment fixed violates the Lipschitz
// control for any finite constant.
inline CertificateReport check_evaluator_shift(const MetaModel& m, const TransformSpec& t,
                                               double lipschitz_ell, const AdmissibleSet& s_star,
                                               const BundleOptions& opt) {
    CertificateReport report;
    report.obligation = Obligation::evaluative_invariance;
    report.name = "evaluator_shift";
    report.mode = CheckMode::sampled;
    report.pass = true;

    double max_env_distance = 0.0;
    for (const auto& e : m.environments.instances)
        max_env_distance =
            std::max(max_env_distance, env_distance(e, t.apply(e), m.environments.metric_kind));
    report.evidence["transform_distance"] = max_env_distance;

    EvaluatorFamily shifted = m.evaluators;
    if (t.evaluator_action) shifted.active_weights = *t.evaluator_action;

    double max_shift = 0.0;
    RngState rng(opt.seed ^ 0x51f7ULL);
    const Environment& env = m.environments.instances.at(0);
    for (int i = 0; i < opt.n_shift_samples; ++i) {
        State s;
        if (s_star.finite())
            s = s_star.states[rng.next_below(s_star.states.size())];
        else if (s_star.sample_fn)
            s = s_star.sample_fn(rng);
        const double z = env.domain.points.at(rng.next_below(env.domain.points.size()));
        const std::size_t h = rng.next_below(std::max<std::size_t>(m.hypothesis_class.members.size(), 1));
        const double before = active_loss(m.evaluators, m.evaluators.active_weights, h, s, z);
        const double after = active_loss(shifted, shifted.active_weights, h, s, t.point_action(z));
        max_shift = std::max(max_shift, std::abs(after - before));
    }
    report.evidence["max_evaluator_shift"] = max_shift;
    report.evidence["lipschitz_ell"] = lipschitz_ell;
    report.evidence["sample_count"] = static_cast<double>(opt.n_shift_samples);
    report.evidence["confidence_radius"] = 0.0; // deterministic probe set given the seed

    if (max_env_distance <= 1e-12) {
        // Identity-sized transforms admit no evaluator shift at all.
        if (max_shift > 1e-12) {
            report.pass = false;
            report.witnesses.push_back("evaluator changed under a zero-distance transformation");
        }
    } else if (max_shift > lipschitz_ell * max_env_distance + 1e-12) {
        report.pass = false;
        report.witnesses.push_back("shift " + std::to_string(max_shift) + " exceeds L*D_E = " +
                                   std::to_string(lipschitz_ell * max_env_distance));
    }

    if (!m.evaluators.protected_core.audit_set.empty()) {
        CertificateReport core = check_protected_core(m.evaluators.protected_core, shifted);
        report.pass = report.pass && core.pass;
        for (const auto& w : core.witnesses) report.witnesses.push_back(w);
        report.sub_reports.push_back(std::move(core));
    }
    return report;
}

} // namespace detail

// The (U1)-(U5) admissibility bundle for one transformation. The bundle
// passes iff all five sub-certificates pass; the four SMGI obligations map
// to U1 (closure), U4 (stability), U5 (capacity), and U3 (evaluative
// invariance).
inline CertificateReport check_bundle(const MetaModel& m, const TransformSpec& t,
                                      const TransitionKernel& kernel, const LyapunovWitness& w,
                                      double lipschitz_ell, const CapacityFunctional& capacity,
                                      const std::vector<CapacityConfiguration>& capacity_configs,
                                      const AdmissibleSet& s_star, const BundleOptions& opt = {}) {
    CertificateReport bundle;
    bundle.obligation = Obligation::bundle;
    bundle.name = "bundle_" + t.identifier;
    bundle.mode = CheckMode::exhaustive;

    const EnvironmentFamily transformed = t.apply(m.environments);

    CertificateReport u1 = check_closure(kernel, s_star, transformed.instances.at(0).domain, opt.n_probe,
                                         opt.seed);
    u1.name = "U1_closure";
    if (u1.mode == CheckMode::sampled) bundle.mode = CheckMode::sampled;

    CertificateReport u2 = check_transform_magnitude(t, m.environments);
    u2.name = "U2_transform_magnitude";

    CertificateReport u3 = detail::check_evaluator_shift(m, t, lipschitz_ell, s_star, opt);
    u3.name = "U3_evaluator_shift";

    std::vector<State> probes = s_star.states;
    if (probes.empty() && s_star.sample_fn) {
        RngState rng(opt.seed ^ 0xd21f7ULL);
        for (int i = 0; i < 32; ++i) probes.push_back(s_star.sample_fn(rng));
    }
    CertificateReport u4 = check_drift(w, kernel, probes, transformed.instances.at(0), opt.n_mc, opt.seed);
    u4.name = "U4_lyapunov_drift";
    if (u4.mode == CheckMode::sampled) bundle.mode = CheckMode::sampled;

    CertificateReport u5 = check_capacity(capacity, m, capacity_configs);
    u5.name = "U5_capacity";

    bundle.pass = u1.pass && u2.pass && u3.pass && u4.pass && u5.pass;
    bundle.evidence["components_passed"] = static_cast<double>(static_cast<int>(u1.pass) +
                                                               static_cast<int>(u2.pass) +
                                                               static_cast<int>(u3.pass) +
                                                               static_cast<int>(u4.pass) +
                                                               static_cast<int>(u5.pass));
    bundle.sub_reports.push_back(std::move(u1));
    bundle.sub_reports.push_back(std::move(u2));
    bundle.sub_reports.push_back(std::move(u3));
    bundle.sub_reports.push_back(std::move(u4));
    bundle.sub_reports.push_back(std::move(u5));
    return bundle;
}

// Four-obligation verdict vector [closure, stability, capacity, invariance]
// extracted from a bundle report.
struct ObligationVerdicts {
    bool closure = false;
    bool stability = false;
    bool capacity = false;
    bool invariance = false;

    bool all() const { return closure && stability && capacity && invariance; }
};

inline ObligationVerdicts obligation_verdicts(const CertificateReport& bundle) {
    ObligationVerdicts v;
    if (const auto* r = bundle.find("U1_closure")) v.closure = r->pass;
    if (const auto* r = bundle.find("U4_lyapunov_drift")) v.stability = r->pass;
    if (const auto* r = bundle.find("U5_capacity")) v.capacity = r->pass;
    if (const auto* r = bundle.find("U3_evaluator_shift")) v.invariance = r->pass;
    return v;
}

// Composite checker for the structural-closure theorem: verify the four
// hypotheses with their dedicated checkers, then the conclusion
// T_tau(S*) ⊆ S* for every declared transformation, and finally the converse
// variants (memory operator made expansive / protected core flipped), each of
// which must break at least one invariance property.
inline CertificateReport check_theorem_closure(const MetaModel& m,
                                               const std::vector<TransformSpec>& transforms,
                                               const std::vector<TransitionKernel>& kernels,
                                               const LyapunovWitness& w, const CapacityFunctional& capacity,
                                               const std::vector<CapacityConfiguration>& capacity_configs,
                                               const ProtectedCore& core, const AdmissibleSet& s_star,
                                               const BundleOptions& opt = {}) {
    if (transforms.size() != kernels.size())
        throw ConfigError("theorem check needs one kernel per transformation");
    if (s_star.finite() && s_star.states.empty())
        throw EmptyAdmissibleSet("theorem conclusion over an empty admissible set is vacuous");

    CertificateReport report;
    report.obligation = Obligation::theorem_structural_closure;
    report.name = "theorem_structural_closure";
    report.mode = CheckMode::exhaustive;

    // Hypothesis (i): bounded capacity.
    CertificateReport hyp_capacity = check_capacity(capacity, m, capacity_configs);
    hyp_capacity.name = "hypothesis_capacity";

    // Hypothesis (ii): non-expansive memory dynamics, probed on pairs built
    // from the audit states plus synthetic items.
    std::vector<std::pair<MemoryState, MemoryState>> pairs;
    {
        MemoryState a, b;
        a.put(MemoryItem{"item_a", "payload", 2.0, 0, std::nullopt});
        b.put(MemoryItem{"item_b", "payload", 3.0, 0, std::nullopt});
        MemoryState c = a;
        c.put(MemoryItem{"item_c", "payload", 1.0, 1, std::nullopt});
        pairs.emplace_back(a, b);
        pairs.emplace_back(a, c);
        pairs.emplace_back(MemoryState{}, b);
        pairs.emplace_back(a, a);
    }
    CertificateReport hyp_memory = check_nonexpansive(m.memory, pairs, {0.0, 1.0}, 0);
    hyp_memory.name = "hypothesis_memory_nonexpansive";

    // Hypothesis (iii): invariant evaluative subspace under every declared
    // transformation's evaluator action.
    CertificateReport hyp_core;
    hyp_core.obligation = Obligation::evaluative_invariance;
    hyp_core.name = "hypothesis_evaluative_invariance";
    hyp_core.mode = CheckMode::exhaustive;
    hyp_core.pass = true;
    for (const auto& t : transforms) {
        EvaluatorFamily shifted = m.evaluators;
        if (t.evaluator_action) shifted.active_weights = *t.evaluator_action;
        CertificateReport sub = check_protected_core(core, shifted);
        sub.name = "core_under_" + t.identifier;
        hyp_core.pass = hyp_core.pass && sub.pass;
        hyp_core.sub_reports.push_back(std::move(sub));
    }

    // Hypothesis (iv): stable updates via the drift certificate, under each
    // transformed environment.
    CertificateReport hyp_stability;
    hyp_stability.obligation = Obligation::stability;
    hyp_stability.name = "hypothesis_stable_updates";
    hyp_stability.mode = CheckMode::exhaustive;
    hyp_stability.pass = true;
    std::vector<State> probes = s_star.states;
    if (probes.empty() && s_star.sample_fn) {
        RngState rng(opt.seed);
        for (int i = 0; i < 32; ++i) probes.push_back(s_star.sample_fn(rng));
    }
    for (std::size_t i = 0; i < transforms.size(); ++i) {
        const EnvironmentFamily transformed = transforms[i].apply(m.environments);
        CertificateReport sub =
            check_drift(w, kernels[i], probes, transformed.instances.at(0), opt.n_mc, opt.seed);
        sub.name = "drift_under_" + transforms[i].identifier;
        if (sub.mode == CheckMode::sampled) hyp_stability.mode = CheckMode::sampled;
        hyp_stability.pass = hyp_stability.pass && sub.pass;
        hyp_stability.sub_reports.push_back(std::move(sub));
    }

    // Conclusion: closure under every declared transformation.
    CertificateReport conclusion;
    conclusion.obligation = Obligation::closure;
    conclusion.name = "conclusion_closure";
    conclusion.mode = CheckMode::exhaustive;
    conclusion.pass = true;
    for (std::size_t i = 0; i < transforms.size(); ++i) {
        const EnvironmentFamily transformed = transforms[i].apply(m.environments);
        CertificateReport sub = check_closure(kernels[i], s_star, transformed.instances.at(0).domain,
                                              opt.n_probe, opt.seed);
        sub.name = "closure_under_" + transforms[i].identifier;
        if (sub.mode == CheckMode::sampled) conclusion.mode = CheckMode::sampled;
        conclusion.pass = conclusion.pass && sub.pass;
        conclusion.sub_reports.push_back(std::move(sub));
    }

    const bool hypotheses_hold =
        hyp_capacity.pass && hyp_memory.pass && hyp_core.pass && hyp_stability.pass;

    // Converse A: replace the memory operator by the expansive duplicating
    // rule; non-expansiveness must fail.
    MemorySpec expansive = m.memory;
    expansive.update_kind = MemoryUpdateKind::duplicate_all;
    CertificateReport converse_memory = check_nonexpansive(expansive, pairs, {0.0}, 0);
    converse_memory.name = "converse_memory_removed";
    const bool converse_a = !converse_memory.pass;

    // Converse B: flip the active weights (the certified-core gate removed);
    // the protected core must fail.
    EvaluatorFamily flipped = m.evaluators;
    std::reverse(flipped.active_weights.weights.begin(), flipped.active_weights.weights.end());
    CertificateReport converse_core = check_protected_core(core, flipped);
    converse_core.name = "converse_core_removed";
    const bool converse_b = !converse_core.pass;

    report.pass = hypotheses_hold && conclusion.pass;
    report.evidence["hypotheses_hold"] = hypotheses_hold ? 1.0 : 0.0;
    report.evidence["conclusion_established"] = (hypotheses_hold && conclusion.pass) ? 1.0 : 0.0;
    report.evidence["converse_memory_fails"] = converse_a ? 1.0 : 0.0;
    report.evidence["converse_core_fails"] = converse_b ? 1.0 : 0.0;
    report.evidence["converse_demonstrated"] = (converse_a || converse_b) ? 1.0 : 0.0;
    if (!hypotheses_hold) report.witnesses.push_back("conclusion not established: a hypothesis failed");

    report.sub_reports.push_back(std::move(hyp_capacity));
    report.sub_reports.push_back(std::move(hyp_memory));
    report.sub_reports.push_back(std::move(hyp_core));
    report.sub_reports.push_back(std::move(hyp_stability));
    report.sub_reports.push_back(std::move(conclusion));
    report.sub_reports.push_back(std::move(converse_memory));
    report.sub_reports.push_back(std::move(converse_core));
    return report;
}

} // namespace smgi
