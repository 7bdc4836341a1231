#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smgi/errors.hpp"
#include "smgi/metamodel.hpp"
#include "smgi/report.hpp"
#include "smgi/rng.hpp"

namespace smgi {

// Markov kernel T : (State, z) -> distribution over successor states.
// Rules return finite successor distributions; `enumerable` marks kernels
// whose full distribution may be used for exact conditional expectations
// (sampling-only kernels are probed by Monte Carlo instead).
struct TransitionKernel {
    enum class Kind { deterministic_map, finite_stochastic_table, parameterized_rule };

    using Successors = std::vector<std::pair<State, double>>;

    Kind kind = Kind::deterministic_map;
    bool enumerable = true;
    std::function<Successors(const State&, double)> rule;

    Successors successors(const State& s, double z) const {
        Successors out = rule(s, z);
        if (out.empty()) throw DomainError("kernel returned no successors");
        double sum = 0.0;
        for (const auto& [_, p] : out) sum += p;
        if (std::abs(sum - 1.0) > 1e-12)
            throw DomainError("kernel successor probabilities do not sum to 1 within 1e-12");
        return out;
    }

    static TransitionKernel identity() {
        TransitionKernel k;
        k.kind = Kind::deterministic_map;
        k.rule = [](const State& s, double) { return Successors{{s, 1.0}}; };
        return k;
    }

    static TransitionKernel deterministic(std::function<State(const State&, double)> fn) {
        TransitionKernel k;
        k.kind = Kind::deterministic_map;
        k.rule = [fn = std::move(fn)](const State& s, double z) { return Successors{{fn(s, z), 1.0}}; };
        return k;
    }

    // Every input maps to the one declared successor (the closure-failure
    // fixture's "T == 1").
    static TransitionKernel constant_to(State target) {
        return deterministic([target = std::move(target)](const State&, double) { return target; });
    }

    // s.counter -> s.counter + 1, bounded by the 64-bit range.
    static TransitionKernel counter_increment() {
        return deterministic([](const State& s, double) {
            if (!s.counter) throw DomainError("counter kernel requires a counter state");
            if (*s.counter == std::numeric_limits<std::int64_t>::max())
                throw CounterOverflow("bounded counter reached its 64-bit limit");
            State next = s;
            next.counter = *s.counter + 1;
            next.representation_state = static_cast<double>(*next.counter);
            return next;
        });
    }

    // Stochastic table over counter states; rows map counter -> list of
    // (successor counter, probability).
    static TransitionKernel from_counter_table(
        std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>> table) {
        TransitionKernel k;
        k.kind = Kind::finite_stochastic_table;
        for (const auto& [state, row] : table) {
            double sum = 0.0;
            for (const auto& [_, p] : row) sum += p;
            if (std::abs(sum - 1.0) > 1e-12)
                throw ConfigError("stochastic table row for counter " + std::to_string(state) +
                                  " does not sum to 1 within 1e-12");
        }
        k.rule = [table = std::move(table)](const State& s, double) {
            if (!s.counter) throw DomainError("table kernel requires a counter state");
            const auto it = table.find(*s.counter);
            if (it == table.end())
                throw DomainError("counter " + std::to_string(*s.counter) + " outside the kernel table");
            Successors out;
            for (const auto& [next_counter, p] : it->second) {
                State next = s;
                next.counter = next_counter;
                next.representation_state = static_cast<double>(next_counter);
                out.emplace_back(std::move(next), p);
            }
            return out;
        };
        return k;
    }

    // The down-drift chain on {0..n}: from s >= 1 move down with probability
    // p_down, stay otherwise; state 0 is absorbing.
    static TransitionKernel down_drift_chain(std::int64_t n, double p_down) {
        std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>> table;
        table[0] = {{0, 1.0}};
        for (std::int64_t s = 1; s <= n; ++s) table[s] = {{s - 1, p_down}, {s, 1.0 - p_down}};
        return from_counter_table(std::move(table));
    }
};

// One successor draw from rule(s, z); deterministic given the rng state.
inline State step(const TransitionKernel& kernel, const State& s, double z, RngState& rng) {
    const auto succ = kernel.successors(s, z);
    if (succ.size() == 1) return succ[0].first;
    std::vector<double> probs;
    probs.reserve(succ.size());
    for (const auto& [_, p] : succ) probs.push_back(p);
    return succ[rng.next_index(probs)].first;
}

// A seeded realization of the coupled dynamics.
struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<State> states;       // horizon + 1 entries
    std::vector<double> observations; // horizon entries
    std::vector<std::size_t> regimes; // horizon entries
    std::vector<double> losses;       // horizon entries, in [0,1]
    std::vector<double> lyapunov_values; // horizon + 1 entries, V(s_t)

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

    std::string to_csv() const {
        std::ostringstream out;
        out.precision(17);
        out << "t,state_repr,hypothesis_id,regime,loss,lyapunov_value\n";
        out << "0," << states[0].repr() << "," << states[0].hypothesis_id << ",,,"
            << lyapunov_values[0] << "\n";
        for (std::size_t t = 0; t < observations.size(); ++t) {
            out << (t + 1) << "," << states[t + 1].repr() << "," << states[t + 1].hypothesis_id << ","
                << regimes[t] << "," << losses[t] << "," << lyapunov_values[t + 1] << "\n";
        }
        return out.str();
    }
};

// Iterate the induced dynamics under the tau-transformed environment.
// Step order at time t: draw z_t from the conditional of s_{t-1}, update the
// state through the kernel and the memory operator, read the context, sample
// the regime, then score the active evaluator on (s_t, z_t). Observations are
// drawn from instance 0 of the transformed family.
inline Trajectory simulate(const MetaModel& m, const TransformSpec& t, const TransitionKernel& kernel,
                           const State& s0, int horizon, std::uint64_t seed,
                           const std::function<double(const State&)>& lyapunov = {}) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    const EnvironmentFamily transformed = t.apply(m.environments);
    if (transformed.instances.empty()) throw ConfigError("transformed family has no instances");
    const Environment& env = transformed.instances[0];

    EvaluatorFamily fam = m.evaluators;
    if (t.evaluator_action) fam.active_weights = *t.evaluator_action;
    const SwitchingOperator switching =
        fam.mixing ? *fam.mixing : SwitchingOperator::always(fam.regime_count(), 0);

    const auto hyp_index = m.hypothesis_class.index_of(s0.hypothesis_id);
    if (!s0.hypothesis_id.empty() && !hyp_index)
        throw DomainError("s0 hypothesis '" + s0.hypothesis_id + "' not in the hypothesis class");

    RngState rng(seed);
    Trajectory traj;
    traj.seed = seed;
    traj.states.push_back(s0);
    traj.lyapunov_values.push_back(lyapunov ? lyapunov(s0) : 0.0);

    State current = s0;
    for (int step_idx = 1; step_idx <= horizon; ++step_idx) {
        const double z = env.sample_observation(env.condition_index(current), rng);
        State next = step(kernel, current, z, rng);
        const std::size_t k_for_memory = traj.regimes.empty() ? 0 : traj.regimes.back();
        next.memory = update_memory(m.memory, next.memory, z, static_cast<int>(k_for_memory));

        const std::string context = env.context.context(static_cast<std::size_t>(step_idx), next);
        const std::size_t regime = select_regime(switching, context, next, rng);

        const std::size_t h = m.hypothesis_class.index_of(next.hypothesis_id).value_or(hyp_index.value_or(0));
        const double loss = fam.evaluators.at(regime)(h, next, z);
        if (loss < 0.0 || loss > 1.0)
            throw EvaluatorError("loss " + std::to_string(loss) + " outside [0,1] at step " +
                                 std::to_string(step_idx));

        traj.observations.push_back(z);
        traj.regimes.push_back(regime);
        traj.losses.push_back(loss);
        traj.states.push_back(next);
        traj.lyapunov_values.push_back(lyapunov ? lyapunov(next) : 0.0);
        current = std::move(next);
    }
    return traj;
}

// Admissible candidate set S*: either an explicit finite enumeration or a
// predicate with a sampler for probing.
struct AdmissibleSet {
    std::vector<State> states; // finite form
    bool is_finite = false;
    std::function<bool(const State&)> contains_fn;
    std::function<State(RngState&)> sample_fn;

    bool finite() const { return is_finite; }

    bool contains(const State& s) const {
        if (finite()) {
            for (const auto& member : states)
                if (member == s) return true;
            return false;
        }
        return contains_fn(s);
    }

    static AdmissibleSet from_states(std::vector<State> members) {
        AdmissibleSet set;
        set.states = std::move(members);
        set.is_finite = true;
        return set;
    }

    static AdmissibleSet from_predicate(std::function<bool(const State&)> contains,
                                        std::function<State(RngState&)> sample) {
        AdmissibleSet set;
        set.contains_fn = std::move(contains);
        set.sample_fn = std::move(sample);
        return set;
    }
};

// SMGI (i): T(S*) ⊆ S*. Finite S* with finite observation support is checked
// exhaustively over every positive-probability successor (a proof); the
// predicate form is probed at n_probe sampled (state, observation) pairs
// (evidence only). An empty finite S* is vacuous, not a pass.
inline CertificateReport check_closure(const TransitionKernel& kernel, const AdmissibleSet& s_star,
                                       const ObservationDomain& domain, int n_probe = 1000,
                                       std::uint64_t seed = 0) {
    CertificateReport report;
    report.obligation = Obligation::closure;
    report.name = "closure";

    if (s_star.finite()) {
        if (s_star.states.empty())
            throw EmptyAdmissibleSet("closure check over an empty admissible set is vacuous");
        report.mode = CheckMode::exhaustive;
        report.pass = true;
        std::size_t checked = 0;
        for (const auto& s : s_star.states) {
            for (double z : domain.points) {
                for (const auto& [succ, p] : kernel.successors(s, z)) {
                    if (p <= 0.0) continue;
                    ++checked;
                    if (!s_star.contains(succ)) {
                        report.pass = false;
                        report.witnesses.push_back("from " + s.repr() + " via z=" + std::to_string(z) +
                                                   " to " + succ.repr());
                    }
                }
            }
        }
        report.evidence["transitions_checked"] = static_cast<double>(checked);
        return report;
    }

    if (!s_star.contains_fn || !s_star.sample_fn)
        throw ConfigError("predicate admissible set needs both a predicate and a sampler");
    report.mode = CheckMode::sampled;
    report.pass = true;
    RngState rng(seed);
    std::size_t checked = 0;
    for (int i = 0; i < n_probe; ++i) {
        const State s = s_star.sample_fn(rng);
        if (!s_star.contains(s)) continue;
        const double z = domain.points.at(rng.next_below(domain.points.size()));
        for (const auto& [succ, p] : kernel.successors(s, z)) {
            if (p <= 0.0) continue;
            ++checked;
            if (!s_star.contains(succ)) {
                report.pass = false;
                report.witnesses.push_back("from " + s.repr() + " via z=" + std::to_string(z) + " to " +
                                           succ.repr());
            }
        }
    }
    report.evidence["sample_count"] = static_cast<double>(n_probe);
    report.evidence["transitions_checked"] = static_cast<double>(checked);
    report.evidence["confidence_radius"] =
        std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(std::max(n_probe, 1))));
    return report;
}

// Mean per-step loss of one trajectory.
inline double empirical_risk(const Trajectory& traj) {
    if (traj.losses.empty()) throw ConfigError("empirical risk of an empty trajectory");
    double sum = 0.0;
    for (double l : traj.losses) sum += l;
    return sum / static_cast<double>(traj.losses.size());
}

// Posterior (Gibbs) empirical risk: weight-averaged over per-hypothesis
// trajectories that share seeds.
inline double empirical_risk_posterior(const std::vector<Trajectory>& trajectories,
                                       const std::vector<double>& weights) {
    if (trajectories.size() != weights.size())
        throw ConfigError("posterior risk needs one weight per trajectory");
    double risk = 0.0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) risk += weights[i] * empirical_risk(trajectories[i]);
    return risk;
}

} // namespace smgi
