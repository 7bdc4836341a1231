#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "smgi/bounds.hpp"
#include "smgi/certificates.hpp"
#include "smgi/dynamics.hpp"
#include "smgi/metamodel.hpp"
#include "smgi/regimes.hpp"
#include "smgi/report.hpp"

namespace smgi {

// One structural growth axis with strictly increasing levels.
struct GrowthAxis {
    enum class Kind { regime_switch_frequency, evaluator_antagonism };

    Kind kind = Kind::evaluator_antagonism;
    std::vector<double> levels;

    void validate() const {
        if (levels.empty()) throw ConfigError("growth axis needs at least one level");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (levels[i] < 0.0 || levels[i] > 1.0)
                throw ConfigError("axis levels must lie in [0,1]");
            if (i > 0 && !(levels[i - 1] < levels[i]))
                throw ConfigError("axis levels must be strictly increasing");
        }
    }
};

// Grow the family along one axis; level 0 reproduces the base exactly.
// regime_switch_frequency sets the adversarial-context probability;
// evaluator_antagonism moves observation mass onto the high point of a
// two-point support, which reverses the regime-2 risk row at full level.
inline std::vector<EnvironmentFamily> grow_family(const EnvironmentFamily& base, const GrowthAxis& axis) {
    axis.validate();
    std::vector<EnvironmentFamily> out;
    for (double level : axis.levels) {
        if (level == 0.0) {
            out.push_back(base);
            continue;
        }
        TransformSpec t;
        if (axis.kind == GrowthAxis::Kind::regime_switch_frequency) {
            t.kind = TransformSpec::Kind::set_adversarial_frequency;
            t.p = level;
        } else {
            if (base.instances.at(0).domain.points.size() != 2)
                throw ConfigError("evaluator_antagonism axis needs a two-point observation support");
            t.kind = TransformSpec::Kind::set_conditional;
            t.row = {1.0 - level, level};
        }
        t.identifier = "grow_" + std::to_string(level);
        out.push_back(t.apply(base));
    }
    return out;
}

struct ProtocolBudget {
    int n_steps = 200;
    int n_seeds = 8;
};

// One protocol arm: the model, its induced kernel, witnesses, and bound
// parameters. The tuned single-regime baseline re-tunes its fixed evaluator
// mixture on a weight grid at every level before being judged.
struct ProtocolArm {
    std::string name;
    MetaModel model;
    TransitionKernel kernel;
    LyapunovWitness witness;
    CapacityFunctional capacity;
    AdmissibleSet s_star;
    State s0;
    bool tuned_single_regime = false;
    double tuning_resolution = 0.01;
    double bound_l = 0.5; // loss-to-state sensitivity for the bound
    double bound_b = 1.0; // drift constant for the bound
};

struct ProtocolLevelArmResult {
    ObligationVerdicts verdicts;
    std::string first_failure; // empty when all obligations pass
    double bound_total = 0.0;
    double empirical_risk = 0.0;
    double tuned_weight = -1.0; // baseline only
    bool core_equivalence_impossible = false;
    std::uint64_t budget_units = 0; // deterministic work units: simulated steps
    // Signed margins, positive when the obligation holds with slack. Closure
    // has no graded margin: 0 when closed, -1 when a witness escaped.
    double closure_margin = 0.0;
    double stability_margin = 0.0;
    double capacity_margin = 0.0;
    double coherence_margin = 0.0;
};

struct ProtocolLevelResult {
    double level = 0.0;
    ProtocolLevelArmResult smgi;
    ProtocolLevelArmResult baseline;
};

struct ProtocolReport {
    GrowthAxis axis;
    ProtocolBudget budget;
    std::uint64_t seed = 0;
    std::vector<ProtocolLevelResult> levels;
    std::vector<std::string> anomalies; // monotone-failure violations

    Json to_json() const {
        Json j;
        j["axis"] = axis.kind == GrowthAxis::Kind::regime_switch_frequency ? "regime_switch_frequency"
                                                                           : "evaluator_antagonism";
        j["levels_declared"] = axis.levels;
        j["budget"] = {{"n_steps", budget.n_steps}, {"n_seeds", budget.n_seeds}};
        j["seed"] = seed;
        auto first_failure_level = [&](auto select) -> Json {
            for (const auto& lvl : levels)
                if (!select(lvl).verdicts.all()) return lvl.level;
            return nullptr;
        };
        j["smgi_first_failure_level"] = first_failure_level(
            [](const ProtocolLevelResult& l) -> const ProtocolLevelArmResult& { return l.smgi; });
        j["baseline_first_failure_level"] = first_failure_level(
            [](const ProtocolLevelResult& l) -> const ProtocolLevelArmResult& { return l.baseline; });
        Json rows = Json::array();
        for (const auto& lvl : levels) {
            auto arm_json = [](const ProtocolLevelArmResult& a) {
                Json aj;
                aj["pass_all"] = a.verdicts.all();
                aj["closure"] = a.verdicts.closure;
                aj["stability"] = a.verdicts.stability;
                aj["capacity"] = a.verdicts.capacity;
                aj["evaluative_coherence"] = a.verdicts.invariance;
                aj["first_failure"] = a.first_failure;
                aj["empirical_risk"] = a.empirical_risk;
                aj["bound_total"] = a.bound_total;
                aj["tuned_weight"] = a.tuned_weight;
                aj["core_equivalence_impossible"] = a.core_equivalence_impossible;
                aj["budget_units"] = a.budget_units;
                aj["margins"] = {{"closure", a.closure_margin},
                                 {"stability", a.stability_margin},
                                 {"capacity", a.capacity_margin},
                                 {"evaluative_coherence", a.coherence_margin}};
                return aj;
            };
            Json row;
            row["level"] = lvl.level;
            row["smgi"] = arm_json(lvl.smgi);
            row["baseline"] = arm_json(lvl.baseline);
            rows.push_back(row);
        }
        j["levels"] = rows;
        j["anomalies"] = anomalies;
        return j;
    }

    std::string to_csv() const {
        std::ostringstream out;
        out.precision(17);
        out << "level,arm,obligation,pass,margin\n";
        auto emit = [&](double level, const std::string& arm, const ProtocolLevelArmResult& a) {
            const std::tuple<const char*, bool, double> rows[4] = {
                {"closure", a.verdicts.closure, a.closure_margin},
                {"stability", a.verdicts.stability, a.stability_margin},
                {"capacity", a.verdicts.capacity, a.capacity_margin},
                {"evaluative_coherence", a.verdicts.invariance, a.coherence_margin}};
            for (const auto& [name, pass, margin] : rows)
                out << level << "," << arm << "," << name << "," << (pass ? 1 : 0) << "," << margin
                    << "\n";
        };
        for (const auto& lvl : levels) {
            emit(lvl.level, "smgi", lvl.smgi);
            emit(lvl.level, "baseline", lvl.baseline);
        }
        return out.str();
    }
};

namespace detail {

// Exact per-regime risk matrix under the level environment (instance 0,
// conditioning state 0).
inline std::vector<std::vector<double>> level_risk_matrix(const MetaModel& m, const Environment& env) {
    const std::size_t k = m.evaluators.regime_count();
    const std::size_t h = m.hypothesis_class.members.size();
    std::vector<std::vector<double>> matrix(k, std::vector<double>(h, 0.0));
    const auto& row = env.conditionals.at(0);
    const State probe = State::with_counter(0);
    for (std::size_t ki = 0; ki < k; ++ki)
        for (std::size_t hi = 0; hi < h; ++hi)
            for (std::size_t zi = 0; zi < env.domain.points.size(); ++zi)
                matrix[ki][hi] += row[zi] * m.evaluators.evaluators[ki](hi, probe, env.domain.points[zi]);
    return matrix;
}

inline bool row_preserves_orderings(const std::vector<double>& active,
                                    const std::vector<std::vector<double>>& matrix) {
    for (const auto& row : matrix)
        for (std::size_t a = 0; a < row.size(); ++a)
            for (std::size_t b = 0; b < row.size(); ++b)
                if (row[a] < row[b] && !(active[a] < active[b])) return false;
    return true;
}

// Smallest signed gap over every protected strict ordering; negative exactly
// when some ordering is violated. Zero when no strict orderings exist.
inline double min_ordering_gap(const std::vector<double>& active,
                               const std::vector<std::vector<double>>& matrix) {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& row : matrix)
        for (std::size_t a = 0; a < row.size(); ++a)
            for (std::size_t b = 0; b < row.size(); ++b)
                if (row[a] < row[b]) gap = std::min(gap, active[b] - active[a]);
    return std::isfinite(gap) ? gap : 0.0;
}

} // namespace detail

// The conclusion protocol: grow the family along one axis and, at every
// level, run closure / stability / capacity plus the evaluative-coherence
// check for both arms under byte-identical budgets and seeds. The coherence
// obligation asks the arm's active evaluator in each regime to reproduce
// that regime's protected risk ordering; the tuned baseline uses one fixed
// mixture row for all regimes.
inline ProtocolReport run_protocol(const ProtocolArm& smgi_arm, const ProtocolArm& baseline_arm,
                                   const GrowthAxis& axis, const ProtocolBudget& budget,
                                   std::uint64_t seed) {
    axis.validate();
    ProtocolReport report;
    report.axis = axis;
    report.budget = budget;
    report.seed = seed;

    const auto smgi_families = grow_family(smgi_arm.model.environments, axis);
    const auto baseline_families = grow_family(baseline_arm.model.environments, axis);

    auto run_arm = [&](const ProtocolArm& arm, const EnvironmentFamily& family,
                       std::size_t level_index) {
        ProtocolLevelArmResult result;
        MetaModel level_model = arm.model;
        level_model.environments = family;
        const Environment& env = family.instances.at(0);

        // Obligations (i)-(iii).
        CertificateReport closure =
            check_closure(arm.kernel, arm.s_star, env.domain, 512, seed ^ (level_index * 0x9e37ULL));
        std::vector<State> probes = arm.s_star.states;
        CertificateReport drift = check_drift(arm.witness, arm.kernel, probes, env, 0, seed);
        std::vector<CapacityConfiguration> configs = {
            {"level_" + std::to_string(level_index), level_model.hypothesis_class, {}, {}}};
        CertificateReport capacity = check_capacity(arm.capacity, level_model, configs);

        result.verdicts.closure = closure.pass;
        result.verdicts.stability = drift.pass;
        result.verdicts.capacity = capacity.pass;
        result.closure_margin = closure.pass ? 0.0 : -1.0;
        result.stability_margin = -drift.evidence.at("worst_violation");
        result.capacity_margin = capacity.evidence.at("bound") - capacity.evidence.at("achieved_max");

        // Evaluative coherence.
        const auto matrix = detail::level_risk_matrix(level_model, env);
        if (arm.tuned_single_regime) {
            // Tune the fixed mixture on a declared-resolution grid, then
            // require the tuned row to preserve every regime's orderings.
            const int grid = static_cast<int>(std::round(1.0 / arm.tuning_resolution)) + 1;
            std::vector<std::vector<double>> candidates;
            candidates.reserve(static_cast<std::size_t>(grid));
            const std::size_t h = matrix[0].size();
            for (int g = 0; g < grid; ++g) {
                const double w = static_cast<double>(g) * arm.tuning_resolution;
                std::vector<double> mixed(h, 0.0);
                for (std::size_t hi = 0; hi < h; ++hi)
                    mixed[hi] = w * matrix[0][hi] + (1.0 - w) * matrix[1][hi];
                candidates.push_back(std::move(mixed));
            }
            bool coherent = false;
            std::size_t tuned_index = 0;
            for (int g = 0; g < grid; ++g) {
                if (detail::row_preserves_orderings(candidates[static_cast<std::size_t>(g)], matrix)) {
                    coherent = true;
                    tuned_index = static_cast<std::size_t>(g);
                    break;
                }
            }
            if (!coherent) tuned_index = static_cast<std::size_t>(grid / 2); // declared fallback
            result.tuned_weight = static_cast<double>(tuned_index) * arm.tuning_resolution;
            CertificateReport equivalence = check_core_equivalence(matrix, candidates);
            result.core_equivalence_impossible = equivalence.evidence.at("impossibility") == 1.0;
            result.verdicts.invariance = coherent;
            result.coherence_margin = detail::min_ordering_gap(candidates[tuned_index], matrix);
        } else {
            // Certified switching activates regime k's own evaluator in
            // regime k; each row must (and trivially does) match itself, so
            // verify it honestly row by row.
            bool coherent = true;
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t ki = 0; ki < matrix.size(); ++ki) {
                coherent = coherent && detail::row_preserves_orderings(matrix[ki], {matrix[ki]});
                gap = std::min(gap, detail::min_ordering_gap(matrix[ki], {matrix[ki]}));
            }
            result.core_equivalence_impossible = false;
            result.verdicts.invariance = coherent;
            result.coherence_margin = std::isfinite(gap) ? gap : 0.0;
        }

        // Matched simulation budget: n_seeds trajectories of n_steps.
        TransformSpec identity = TransformSpec::identity_transform();
        double risk_sum = 0.0;
        for (int s = 0; s < budget.n_seeds; ++s) {
            const std::uint64_t traj_seed =
                splitmix64(seed ^ (level_index * 1000003ULL) ^ static_cast<std::uint64_t>(s));
            Trajectory traj = simulate(level_model, identity, arm.kernel, arm.s0, budget.n_steps,
                                       traj_seed, arm.witness.as_function());
            risk_sum += empirical_risk(traj);
            result.budget_units += static_cast<std::uint64_t>(budget.n_steps);
        }
        result.empirical_risk = risk_sum / static_cast<double>(budget.n_seeds);
        const std::uint64_t n = static_cast<std::uint64_t>(budget.n_steps) *
                                static_cast<std::uint64_t>(budget.n_seeds);
        result.bound_total = structural_bound(result.empirical_risk, 0.0, n, 0.05, arm.bound_l, arm.bound_b,
                                              arm.witness.value(arm.s0))
                                 .total;

        // First failing obligation in the fixed order (i) -> (iv).
        if (!result.verdicts.closure) result.first_failure = "closure";
        else if (!result.verdicts.stability) result.first_failure = "stability";
        else if (!result.verdicts.capacity) result.first_failure = "capacity";
        else if (!result.verdicts.invariance) result.first_failure = "evaluative_coherence";
        return result;
    };

    for (std::size_t i = 0; i < axis.levels.size(); ++i) {
        ProtocolLevelResult level;
        level.level = axis.levels[i];
        level.smgi = run_arm(smgi_arm, smgi_families[i], i);
        level.baseline = run_arm(baseline_arm, baseline_families[i], i);
        if (level.smgi.budget_units != level.baseline.budget_units)
            throw ConfigError("protocol arms consumed different budgets");
        report.levels.push_back(std::move(level));
    }

    // Monotone-failure audit: once an arm fails, it must keep failing at
    // every later level; violations are recorded, not hidden.
    auto audit = [&](const char* arm_name, auto select) {
        bool failed = false;
        for (const auto& lvl : report.levels) {
            const bool pass = select(lvl).verdicts.all();
            if (failed && pass)
                report.anomalies.push_back(std::string(arm_name) + " recovered at level " +
                                           std::to_string(lvl.level));
            if (!pass) failed = true;
        }
    };
    audit("smgi", [](const ProtocolLevelResult& l) -> const ProtocolLevelArmResult& { return l.smgi; });
    audit("baseline",
          [](const ProtocolLevelResult& l) -> const ProtocolLevelArmResult& { return l.baseline; });
    return report;
}

// The canonical protocol instance: task/safety regimes over a two-point
// support, the strict-inclusion risk structure at full antagonism, a
// down-drift chain for stability, and a finite class for capacity.
struct ProtocolInstance {
    ProtocolArm smgi;
    ProtocolArm baseline;
    GrowthAxis axis;
};

inline ProtocolInstance make_antagonism_instance() {
    ProtocolInstance inst;

    MetaModel m;
    m.representation.kind = RepresentationSpec::Kind::identity;
    m.hypothesis_class = HypothesisClassSpec::enumerated({"h0", "h1"});
    m.prior.kind = PriorSpec::Kind::uniform;

    EvaluatorFamily fam;
    // Task risks are observation-independent; safety risks move with the
    // observation mass, reversing at full antagonism.
    fam.evaluators.push_back(
        Evaluator::from_loss_table({0.0, 1.0}, {{0.2, 0.2}, {0.8, 0.8}}, "task"));
    fam.evaluators.push_back(
        Evaluator::from_loss_table({0.0, 1.0}, {{0.2, 0.8}, {0.8, 0.2}}, "safety"));
    fam.active_weights = RegimeWeights::delta(2, 0);
    fam.mixing = SwitchingOperator::from_context_table(2, {{"adversarial", 1}}, 0);
    AuditTriple triple;
    triple.hypothesis_index = 0;
    triple.state = State::with_counter(0, "h0");
    triple.z = 0.0;
    fam.protected_core.audit_set.push_back(triple);
    m.evaluators = std::move(fam);

    Environment env;
    env.domain.points = {0.0, 1.0};
    env.domain.ordered = true;
    env.conditionals = {{1.0, 0.0}};
    env.context.kind = ContextRule::Kind::constant;
    env.context.value = "benign";
    m.environments.instances = {env};
    m.environments.metric_kind = MetricKind::total_variation;
    m.memory.update_kind = MemoryUpdateKind::no_op;
    m = finalize_description_bits(m);

    ProtocolArm smgi;
    smgi.name = "smgi";
    smgi.model = m;
    smgi.kernel = TransitionKernel::down_drift_chain(3, 0.9);
    smgi.witness.kind = LyapunovWitness::Kind::counter;
    smgi.witness.alpha = 0.09;
    smgi.witness.beta = 0.0;
    smgi.witness.v_max = 3.0;
    smgi.capacity.kind = CapacityFunctional::Kind::log2_cardinality;
    smgi.capacity.bound = 4.0;
    std::vector<State> chain;
    for (std::int64_t s = 0; s <= 3; ++s) chain.push_back(State::with_counter(s, "h0"));
    smgi.s_star = AdmissibleSet::from_states(chain);
    smgi.s0 = State::with_counter(3, "h0");

    ProtocolArm baseline = smgi;
    baseline.name = "baseline";
    baseline.tuned_single_regime = true;
    baseline.model.evaluators.mixing = SwitchingOperator::always(2, 0);
    baseline.model = finalize_description_bits(baseline.model);

    inst.smgi = std::move(smgi);
    inst.baseline = std::move(baseline);
    inst.axis.kind = GrowthAxis::Kind::evaluator_antagonism;
    inst.axis.levels = {0.0, 0.25, 0.5, 0.75, 1.0};
    return inst;
}

} // namespace smgi
