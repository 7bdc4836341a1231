#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <cmath>
#include <sstream>

#include "smgi/bounds.hpp"
#include "smgi/certificates.hpp"
#include "smgi/dynamics.hpp"
#include "smgi/errors.hpp"
#include "smgi/fixtures.hpp"
#include "smgi/gsrm.hpp"
#include "smgi/metamodel.hpp"
#include "smgi/protocol.hpp"
#include "smgi/report.hpp"

// JSON configuration schema. The schema is strict: any unknown field is
// rejected so a typo cannot silently reconfigure a run.

namespace smgi::config {

inline void require_keys(const Json& j, const std::set<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(path + ": unknown field '" + key + "'");
}

inline const Json& require_field(const Json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + ": missing field '" + key + "'");
    return j.at(key);
}

// --- representation -------------------------------------------------------

inline RepresentationSpec load_representation(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "a", "b", "local_lipschitz_bound"}, path);
    RepresentationSpec r;
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "identity") r.kind = RepresentationSpec::Kind::identity;
    else if (kind == "scale") r.kind = RepresentationSpec::Kind::scale;
    else if (kind == "affine") r.kind = RepresentationSpec::Kind::affine;
    else if (kind == "constant") r.kind = RepresentationSpec::Kind::constant_map;
    else throw ConfigError(path + ".kind: unknown representation kind '" + kind + "'");
    if (j.contains("a")) r.a = j.at("a").get<double>();
    if (j.contains("b")) r.b = j.at("b").get<double>();
    if (j.contains("local_lipschitz_bound"))
        r.local_lipschitz_bound = j.at("local_lipschitz_bound").get<double>();
    return r;
}

inline Json representation_to_json(const RepresentationSpec& r) {
    Json j;
    switch (r.kind) {
        case RepresentationSpec::Kind::identity: j["kind"] = "identity"; break;
        case RepresentationSpec::Kind::scale: j["kind"] = "scale"; break;
        case RepresentationSpec::Kind::affine: j["kind"] = "affine"; break;
        case RepresentationSpec::Kind::constant_map: j["kind"] = "constant"; break;
    }
    j["a"] = r.a;
    j["b"] = r.b;
    if (r.local_lipschitz_bound) j["local_lipschitz_bound"] = *r.local_lipschitz_bound;
    return j;
}

// --- hypothesis class / prior ---------------------------------------------

inline HypothesisClassSpec load_hypothesis_class(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "members", "complexity_bits"}, path);
    HypothesisClassSpec spec;
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "finite_enumerated") spec.kind = HypothesisClassSpec::Kind::finite_enumerated;
    else if (kind == "parametric_grid") spec.kind = HypothesisClassSpec::Kind::parametric_grid;
    else throw ConfigError(path + ".kind: unknown hypothesis class kind '" + kind + "'");
    for (const auto& m : require_field(j, "members", path)) spec.members.push_back(m.get<std::string>());
    if (spec.kind == HypothesisClassSpec::Kind::finite_enumerated) {
        spec.complexity_bits = std::log2(static_cast<double>(spec.members.size()));
        if (j.contains("complexity_bits") &&
            std::abs(j.at("complexity_bits").get<double>() - spec.complexity_bits) > 1e-12)
            throw ConfigError(path + ": complexity_bits must equal log2(cardinality) for finite classes");
    } else {
        spec.complexity_bits = require_field(j, "complexity_bits", path).get<double>();
    }
    spec.validate();
    return spec;
}

inline Json hypothesis_class_to_json(const HypothesisClassSpec& spec) {
    Json j;
    j["kind"] = spec.kind == HypothesisClassSpec::Kind::finite_enumerated ? "finite_enumerated"
                                                                          : "parametric_grid";
    j["members"] = spec.members;
    j["complexity_bits"] = spec.complexity_bits;
    return j;
}

inline PriorSpec load_prior(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "weights", "rate"}, path);
    PriorSpec p;
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "uniform") p.kind = PriorSpec::Kind::uniform;
    else if (kind == "mdl") p.kind = PriorSpec::Kind::mdl_program_length;
    else if (kind == "explicit") p.kind = PriorSpec::Kind::explicit_weights;
    else throw ConfigError(path + ".kind: unknown prior kind '" + kind + "'");
    if (j.contains("weights"))
        for (const auto& w : j.at("weights")) p.weights.push_back(w.get<double>());
    if (j.contains("rate")) p.rate = j.at("rate").get<double>();
    return p;
}

inline Json prior_to_json(const PriorSpec& p) {
    Json j;
    switch (p.kind) {
        case PriorSpec::Kind::uniform: j["kind"] = "uniform"; break;
        case PriorSpec::Kind::mdl_program_length: j["kind"] = "mdl"; break;
        case PriorSpec::Kind::explicit_weights: j["kind"] = "explicit"; break;
    }
    if (!p.weights.empty()) j["weights"] = p.weights;
    j["rate"] = p.rate;
    return j;
}

// --- states ----------------------------------------------------------------

inline State load_state(const Json& j, const std::string& path) {
    require_keys(j, {"counter", "hypothesis", "representation"}, path);
    State s;
    if (j.contains("counter")) {
        s.counter = j.at("counter").get<std::int64_t>();
        s.representation_state = static_cast<double>(*s.counter);
    }
    if (j.contains("hypothesis")) s.hypothesis_id = j.at("hypothesis").get<std::string>();
    if (j.contains("representation")) {
        if (j.at("representation").is_string())
            s.representation_state = j.at("representation").get<std::string>();
        else
            s.representation_state = j.at("representation").get<double>();
    }
    return s;
}

inline Json state_to_json(const State& s) {
    Json j;
    if (s.counter) j["counter"] = *s.counter;
    if (!s.hypothesis_id.empty()) j["hypothesis"] = s.hypothesis_id;
    if (std::holds_alternative<std::string>(s.representation_state))
        j["representation"] = std::get<std::string>(s.representation_state);
    else
        j["representation"] = std::get<double>(s.representation_state);
    return j;
}

// --- evaluators / core -----------------------------------------------------

inline Evaluator load_evaluator(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "name", "c", "hyp_risks", "threshold", "below", "above", "target", "scale",
                     "support", "table"},
                 path);
    Evaluator e;
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (j.contains("name")) e.name = j.at("name").get<std::string>();
    if (kind == "constant") {
        e.kind = Evaluator::Kind::constant;
        e.c = require_field(j, "c", path).get<double>();
    } else if (kind == "hypothesis_table") {
        e.kind = Evaluator::Kind::hypothesis_table;
        for (const auto& r : require_field(j, "hyp_risks", path)) e.hyp_risks.push_back(r.get<double>());
    } else if (kind == "observation_threshold") {
        e.kind = Evaluator::Kind::observation_threshold;
        e.threshold = require_field(j, "threshold", path).get<double>();
        e.below = require_field(j, "below", path).get<double>();
        e.above = require_field(j, "above", path).get<double>();
    } else if (kind == "absolute_error") {
        e.kind = Evaluator::Kind::absolute_error;
        e.target = require_field(j, "target", path).get<double>();
        e.scale = require_field(j, "scale", path).get<double>();
    } else if (kind == "loss_table") {
        e.kind = Evaluator::Kind::loss_table;
        for (const auto& p : require_field(j, "support", path)) e.support.push_back(p.get<double>());
        for (const auto& row : require_field(j, "table", path)) {
            std::vector<double> r;
            for (const auto& v : row) r.push_back(v.get<double>());
            e.table.push_back(std::move(r));
        }
    } else {
        throw ConfigError(path + ".kind: unknown evaluator kind '" + kind + "'");
    }
    return e;
}

inline Json evaluator_to_json(const Evaluator& e) {
    Json j;
    j["name"] = e.name;
    switch (e.kind) {
        case Evaluator::Kind::constant:
            j["kind"] = "constant";
            j["c"] = e.c;
            break;
        case Evaluator::Kind::hypothesis_table:
            j["kind"] = "hypothesis_table";
            j["hyp_risks"] = e.hyp_risks;
            break;
        case Evaluator::Kind::observation_threshold:
            j["kind"] = "observation_threshold";
            j["threshold"] = e.threshold;
            j["below"] = e.below;
            j["above"] = e.above;
            break;
        case Evaluator::Kind::absolute_error:
            j["kind"] = "absolute_error";
            j["target"] = e.target;
            j["scale"] = e.scale;
            break;
        case Evaluator::Kind::loss_table:
            j["kind"] = "loss_table";
            j["support"] = e.support;
            j["table"] = e.table;
            break;
    }
    return j;
}

inline CoreConstraint load_core_constraint(const Json& j, const std::string& path) {
    require_keys(j, {"name", "kind", "evaluator_index", "threshold", "hypothesis_index", "hyp_low",
                     "hyp_high"},
                 path);
    CoreConstraint c;
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "risk_threshold") {
        c.kind = CoreConstraint::Kind::risk_threshold;
        c.threshold = require_field(j, "threshold", path).get<double>();
        if (j.contains("hypothesis_index")) c.hypothesis_index = j.at("hypothesis_index").get<std::size_t>();
    } else if (kind == "pair_ordering") {
        c.kind = CoreConstraint::Kind::pair_ordering;
        c.hyp_low = require_field(j, "hyp_low", path).get<std::size_t>();
        c.hyp_high = require_field(j, "hyp_high", path).get<std::size_t>();
    } else {
        throw ConfigError(path + ".kind: unknown constraint kind '" + kind + "'");
    }
    if (j.contains("evaluator_index")) c.evaluator_index = j.at("evaluator_index").get<int>();
    return c;
}

inline Json core_constraint_to_json(const CoreConstraint& c) {
    Json j;
    j["name"] = c.name;
    j["kind"] = c.kind == CoreConstraint::Kind::risk_threshold ? "risk_threshold" : "pair_ordering";
    j["evaluator_index"] = c.evaluator_index;
    if (c.kind == CoreConstraint::Kind::risk_threshold) {
        j["threshold"] = c.threshold;
        if (c.hypothesis_index) j["hypothesis_index"] = *c.hypothesis_index;
    } else {
        j["hyp_low"] = c.hyp_low;
        j["hyp_high"] = c.hyp_high;
    }
    return j;
}

inline ProtectedCore load_protected_core(const Json& j, const std::string& path) {
    require_keys(j, {"constraints", "audit_set"}, path);
    ProtectedCore core;
    if (j.contains("constraints")) {
        std::size_t i = 0;
        for (const auto& c : j.at("constraints"))
            core.constraints.push_back(load_core_constraint(c, path + ".constraints[" + std::to_string(i++) + "]"));
    }
    if (j.contains("audit_set")) {
        std::size_t i = 0;
        for (const auto& t : j.at("audit_set")) {
            const std::string tpath = path + ".audit_set[" + std::to_string(i++) + "]";
            require_keys(t, {"hypothesis_index", "state", "z"}, tpath);
            AuditTriple triple;
            triple.hypothesis_index = require_field(t, "hypothesis_index", tpath).get<std::size_t>();
            triple.state = load_state(require_field(t, "state", tpath), tpath + ".state");
            triple.z = require_field(t, "z", tpath).get<double>();
            core.audit_set.push_back(std::move(triple));
        }
    }
    return core;
}

inline Json protected_core_to_json(const ProtectedCore& core) {
    Json j;
    Json cons = Json::array();
    for (const auto& c : core.constraints) cons.push_back(core_constraint_to_json(c));
    j["constraints"] = cons;
    Json audit = Json::array();
    for (const auto& t : core.audit_set) {
        Json tj;
        tj["hypothesis_index"] = t.hypothesis_index;
        tj["state"] = state_to_json(t.state);
        tj["z"] = t.z;
        audit.push_back(tj);
    }
    j["audit_set"] = audit;
    return j;
}

inline SwitchingOperator load_switching(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "regime_count", "regime", "weights", "contexts", "default_regime"}, path);
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "delta") {
        return SwitchingOperator::always(require_field(j, "regime_count", path).get<std::size_t>(),
                                         require_field(j, "regime", path).get<std::size_t>());
    }
    if (kind == "uniform")
        return SwitchingOperator::uniform_over(require_field(j, "regime_count", path).get<std::size_t>());
    if (kind == "fixed") {
        std::vector<double> w;
        for (const auto& v : require_field(j, "weights", path)) w.push_back(v.get<double>());
        return SwitchingOperator::from_weights(std::move(w));
    }
    if (kind == "context_table") {
        std::map<std::string, std::size_t> table;
        for (const auto& [ctx, regime] : require_field(j, "contexts", path).items())
            table[ctx] = regime.get<std::size_t>();
        return SwitchingOperator::from_context_table(
            require_field(j, "regime_count", path).get<std::size_t>(), std::move(table),
            require_field(j, "default_regime", path).get<std::size_t>());
    }
    throw ConfigError(path + ".kind: unknown switching kind '" + kind + "'");
}

inline Json switching_to_json(const SwitchingOperator& op) {
    Json j;
    j["regime_count"] = op.regime_count;
    switch (op.kind) {
        case SwitchingOperator::Kind::delta:
            j["kind"] = "delta";
            j["regime"] = op.delta_regime;
            break;
        case SwitchingOperator::Kind::uniform:
            j["kind"] = "uniform";
            break;
        case SwitchingOperator::Kind::fixed:
            j["kind"] = "fixed";
            j["weights"] = op.fixed_weights;
            break;
        case SwitchingOperator::Kind::context_table: {
            j["kind"] = "context_table";
            Json ctx = Json::object();
            for (const auto& [k, v] : op.context_to_regime) ctx[k] = v;
            j["contexts"] = ctx;
            j["default_regime"] = op.default_regime;
            break;
        }
    }
    return j;
}

inline EvaluatorFamily load_evaluator_family(const Json& j, const std::string& path) {
    require_keys(j, {"evaluators", "protected_core", "active_weights", "mixing"}, path);
    EvaluatorFamily fam;
    std::size_t i = 0;
    for (const auto& e : require_field(j, "evaluators", path))
        fam.evaluators.push_back(load_evaluator(e, path + ".evaluators[" + std::to_string(i++) + "]"));
    if (j.contains("protected_core"))
        fam.protected_core = load_protected_core(j.at("protected_core"), path + ".protected_core");
    if (j.contains("active_weights")) {
        for (const auto& w : j.at("active_weights")) fam.active_weights.weights.push_back(w.get<double>());
    } else {
        fam.active_weights = RegimeWeights::uniform(fam.evaluators.size());
    }
    if (j.contains("mixing")) fam.mixing = load_switching(j.at("mixing"), path + ".mixing");
    fam.validate();
    return fam;
}

inline Json evaluator_family_to_json(const EvaluatorFamily& fam) {
    Json j;
    Json evs = Json::array();
    for (const auto& e : fam.evaluators) evs.push_back(evaluator_to_json(e));
    j["evaluators"] = evs;
    j["protected_core"] = protected_core_to_json(fam.protected_core);
    j["active_weights"] = fam.active_weights.weights;
    if (fam.mixing) j["mixing"] = switching_to_json(*fam.mixing);
    return j;
}

// --- environments ----------------------------------------------------------

inline ContextRule load_context_rule(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "value", "adversarial_value", "p", "salt"}, path);
    ContextRule rule;
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "constant") rule.kind = ContextRule::Kind::constant;
    else if (kind == "random_frequency") rule.kind = ContextRule::Kind::random_frequency;
    else throw ConfigError(path + ".kind: unknown context kind '" + kind + "'");
    if (j.contains("value")) rule.value = j.at("value").get<std::string>();
    if (j.contains("adversarial_value")) rule.adversarial_value = j.at("adversarial_value").get<std::string>();
    if (j.contains("p")) rule.p = j.at("p").get<double>();
    if (j.contains("salt")) rule.salt = j.at("salt").get<std::uint64_t>();
    return rule;
}

inline Json context_rule_to_json(const ContextRule& rule) {
    Json j;
    j["kind"] = rule.kind == ContextRule::Kind::constant ? "constant" : "random_frequency";
    j["value"] = rule.value;
    j["adversarial_value"] = rule.adversarial_value;
    j["p"] = rule.p;
    j["salt"] = rule.salt;
    return j;
}

inline Environment load_environment(const Json& j, const std::string& path) {
    require_keys(j, {"points", "ordered", "conditionals", "context"}, path);
    Environment e;
    for (const auto& p : require_field(j, "points", path)) e.domain.points.push_back(p.get<double>());
    if (j.contains("ordered")) e.domain.ordered = j.at("ordered").get<bool>();
    for (const auto& row : require_field(j, "conditionals", path)) {
        std::vector<double> r;
        for (const auto& v : row) r.push_back(v.get<double>());
        e.conditionals.push_back(std::move(r));
    }
    if (j.contains("context")) e.context = load_context_rule(j.at("context"), path + ".context");
    e.validate();
    return e;
}

inline Json environment_to_json(const Environment& e) {
    Json j;
    j["points"] = e.domain.points;
    j["ordered"] = e.domain.ordered;
    j["conditionals"] = e.conditionals;
    j["context"] = context_rule_to_json(e.context);
    return j;
}

inline EnvironmentFamily load_environment_family(const Json& j, const std::string& path) {
    require_keys(j, {"metric", "instances"}, path);
    EnvironmentFamily fam;
    const std::string metric = require_field(j, "metric", path).get<std::string>();
    if (metric == "total_variation") fam.metric_kind = MetricKind::total_variation;
    else if (metric == "wasserstein1") fam.metric_kind = MetricKind::wasserstein1_on_ordered_support;
    else throw ConfigError(path + ".metric: unknown metric '" + metric + "'");
    std::size_t i = 0;
    for (const auto& e : require_field(j, "instances", path))
        fam.instances.push_back(load_environment(e, path + ".instances[" + std::to_string(i++) + "]"));
    fam.validate();
    return fam;
}

inline Json environment_family_to_json(const EnvironmentFamily& fam) {
    Json j;
    j["metric"] = fam.metric_kind == MetricKind::total_variation ? "total_variation" : "wasserstein1";
    Json inst = Json::array();
    for (const auto& e : fam.instances) inst.push_back(environment_to_json(e));
    j["instances"] = inst;
    return j;
}

// --- memory ------------------------------------------------------------------

inline MemorySpec load_memory_spec(const Json& j, const std::string& path) {
    require_keys(j, {"update", "item_code_bits", "forget_lambda"}, path);
    MemorySpec spec;
    const std::string update = require_field(j, "update", path).get<std::string>();
    if (update == "no_op") spec.update_kind = MemoryUpdateKind::no_op;
    else if (update == "append_observation") spec.update_kind = MemoryUpdateKind::append_observation;
    else if (update == "duplicate_all") spec.update_kind = MemoryUpdateKind::duplicate_all;
    else if (update == "clear") spec.update_kind = MemoryUpdateKind::clear;
    else throw ConfigError(path + ".update: unknown memory update kind '" + update + "'");
    if (j.contains("item_code_bits")) spec.item_code_bits = j.at("item_code_bits").get<double>();
    if (j.contains("forget_lambda")) spec.forget_lambda = j.at("forget_lambda").get<double>();
    return spec;
}

inline Json memory_spec_to_json(const MemorySpec& spec) {
    Json j;
    switch (spec.update_kind) {
        case MemoryUpdateKind::no_op: j["update"] = "no_op"; break;
        case MemoryUpdateKind::append_observation: j["update"] = "append_observation"; break;
        case MemoryUpdateKind::duplicate_all: j["update"] = "duplicate_all"; break;
        case MemoryUpdateKind::clear: j["update"] = "clear"; break;
    }
    j["item_code_bits"] = spec.item_code_bits;
    j["forget_lambda"] = spec.forget_lambda;
    return j;
}

// --- meta-model --------------------------------------------------------------

inline MetaModel load_metamodel(const Json& j, const std::string& path = "model") {
    require_keys(j, {"representation", "hypothesis_class", "prior", "evaluators", "environments", "memory"},
                 path);
    MetaModel m;
    m.representation = load_representation(require_field(j, "representation", path), path + ".representation");
    m.hypothesis_class =
        load_hypothesis_class(require_field(j, "hypothesis_class", path), path + ".hypothesis_class");
    if (j.contains("prior")) m.prior = load_prior(j.at("prior"), path + ".prior");
    m.evaluators = load_evaluator_family(require_field(j, "evaluators", path), path + ".evaluators");
    m.environments =
        load_environment_family(require_field(j, "environments", path), path + ".environments");
    if (j.contains("memory")) m.memory = load_memory_spec(j.at("memory"), path + ".memory");
    m.validate();
    return finalize_description_bits(std::move(m));
}

inline Json metamodel_to_json(const MetaModel& m) {
    Json j;
    j["representation"] = representation_to_json(m.representation);
    j["hypothesis_class"] = hypothesis_class_to_json(m.hypothesis_class);
    j["prior"] = prior_to_json(m.prior);
    j["evaluators"] = evaluator_family_to_json(m.evaluators);
    j["environments"] = environment_family_to_json(m.environments);
    j["memory"] = memory_spec_to_json(m.memory);
    return j;
}

// --- transforms / witnesses / kernels / admissible sets ----------------------

inline TransformSpec load_transform(const Json& j, const std::string& path) {
    require_keys(j, {"identifier", "kind", "t", "row", "delta", "p", "epsilon_max", "evaluator_weights"},
                 path);
    TransformSpec t;
    if (j.contains("identifier")) t.identifier = j.at("identifier").get<std::string>();
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "identity") t.kind = TransformSpec::Kind::identity;
    else if (kind == "interpolate_to_uniform") {
        t.kind = TransformSpec::Kind::interpolate_to_uniform;
        t.t = require_field(j, "t", path).get<double>();
    } else if (kind == "set_conditional") {
        t.kind = TransformSpec::Kind::set_conditional;
        for (const auto& v : require_field(j, "row", path)) t.row.push_back(v.get<double>());
    } else if (kind == "shift_support") {
        t.kind = TransformSpec::Kind::shift_support;
        t.delta = require_field(j, "delta", path).get<double>();
    } else if (kind == "set_adversarial_frequency") {
        t.kind = TransformSpec::Kind::set_adversarial_frequency;
        t.p = require_field(j, "p", path).get<double>();
    } else {
        throw ConfigError(path + ".kind: unknown transform kind '" + kind + "'");
    }
    if (j.contains("epsilon_max")) t.epsilon_max = j.at("epsilon_max").get<double>();
    if (j.contains("evaluator_weights")) {
        RegimeWeights w;
        for (const auto& v : j.at("evaluator_weights")) w.weights.push_back(v.get<double>());
        t.evaluator_action = std::move(w);
    }
    return t;
}

inline Json transform_to_json(const TransformSpec& t) {
    Json j;
    j["identifier"] = t.identifier;
    switch (t.kind) {
        case TransformSpec::Kind::identity: j["kind"] = "identity"; break;
        case TransformSpec::Kind::interpolate_to_uniform:
            j["kind"] = "interpolate_to_uniform";
            j["t"] = t.t;
            break;
        case TransformSpec::Kind::set_conditional:
            j["kind"] = "set_conditional";
            j["row"] = t.row;
            break;
        case TransformSpec::Kind::shift_support:
            j["kind"] = "shift_support";
            j["delta"] = t.delta;
            break;
        case TransformSpec::Kind::set_adversarial_frequency:
            j["kind"] = "set_adversarial_frequency";
            j["p"] = t.p;
            break;
    }
    j["epsilon_max"] = t.epsilon_max;
    if (t.evaluator_action) j["evaluator_weights"] = t.evaluator_action->weights;
    return j;
}

inline LyapunovWitness load_witness(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "scale", "alpha", "beta", "v_max"}, path);
    LyapunovWitness w;
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "zero") w.kind = LyapunovWitness::Kind::zero;
    else if (kind == "counter") w.kind = LyapunovWitness::Kind::counter;
    else if (kind == "scaled_counter") w.kind = LyapunovWitness::Kind::scaled_counter;
    else throw ConfigError(path + ".kind: unknown witness kind '" + kind + "'");
    if (j.contains("scale")) w.scale = j.at("scale").get<double>();
    w.alpha = require_field(j, "alpha", path).get<double>();
    if (w.alpha <= 0.0 || w.alpha > 1.0) throw ConfigError(path + ".alpha must lie in (0,1]");
    if (j.contains("beta")) w.beta = j.at("beta").get<double>();
    if (w.beta < 0.0) throw ConfigError(path + ".beta must be nonnegative");
    if (j.contains("v_max")) w.v_max = j.at("v_max").get<double>();
    return w;
}

inline Json witness_to_json(const LyapunovWitness& w) {
    Json j;
    switch (w.kind) {
        case LyapunovWitness::Kind::zero: j["kind"] = "zero"; break;
        case LyapunovWitness::Kind::counter: j["kind"] = "counter"; break;
        case LyapunovWitness::Kind::scaled_counter: j["kind"] = "scaled_counter"; break;
    }
    j["scale"] = w.scale;
    j["alpha"] = w.alpha;
    j["beta"] = w.beta;
    if (w.v_max) j["v_max"] = *w.v_max;
    return j;
}

inline TransitionKernel load_kernel(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "target_counter", "top", "p_down", "rows", "hypothesis"}, path);
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    if (kind == "identity") return TransitionKernel::identity();
    if (kind == "counter_increment") return TransitionKernel::counter_increment();
    if (kind == "constant_to_counter") {
        const auto target = require_field(j, "target_counter", path).get<std::int64_t>();
        std::string hyp;
        if (j.contains("hypothesis")) hyp = j.at("hypothesis").get<std::string>();
        return TransitionKernel::constant_to(State::with_counter(target, hyp));
    }
    if (kind == "down_drift_chain") {
        return TransitionKernel::down_drift_chain(require_field(j, "top", path).get<std::int64_t>(),
                                                  require_field(j, "p_down", path).get<double>());
    }
    if (kind == "counter_table") {
        std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>> table;
        for (const auto& [from, row] : require_field(j, "rows", path).items()) {
            std::vector<std::pair<std::int64_t, double>> entries;
            for (const auto& entry : row)
                entries.emplace_back(entry.at(0).get<std::int64_t>(), entry.at(1).get<double>());
            table[std::stoll(from)] = std::move(entries);
        }
        return TransitionKernel::from_counter_table(std::move(table));
    }
    throw ConfigError(path + ".kind: unknown kernel kind '" + kind + "'");
}

inline AdmissibleSet load_admissible_set(const Json& j, const std::string& path) {
    require_keys(j, {"kind", "counters", "hypothesis", "min", "max", "sample_max"}, path);
    const std::string kind = require_field(j, "kind", path).get<std::string>();
    std::string hyp;
    if (j.contains("hypothesis")) hyp = j.at("hypothesis").get<std::string>();
    if (kind == "counters") {
        std::vector<State> states;
        for (const auto& c : require_field(j, "counters", path))
            states.push_back(State::with_counter(c.get<std::int64_t>(), hyp));
        return AdmissibleSet::from_states(std::move(states));
    }
    if (kind == "counter_range") {
        const auto lo = require_field(j, "min", path).get<std::int64_t>();
        const auto hi = require_field(j, "max", path).get<std::int64_t>();
        if (hi < lo) throw ConfigError(path + ": max must be >= min");
        // Probes are drawn from [min, sample_max]; membership spans [min, max].
        std::int64_t sample_hi = hi;
        if (j.contains("sample_max")) sample_hi = j.at("sample_max").get<std::int64_t>();
        if (sample_hi < lo || sample_hi > hi) throw ConfigError(path + ": sample_max outside [min, max]");
        return AdmissibleSet::from_predicate(
            [lo, hi](const State& s) { return s.counter && *s.counter >= lo && *s.counter <= hi; },
            [lo, sample_hi, hyp](RngState& rng) {
                const auto span = static_cast<std::uint64_t>(sample_hi - lo) + 1;
                return State::with_counter(lo + static_cast<std::int64_t>(rng.next_below(span)), hyp);
            });
    }
    throw ConfigError(path + ".kind: unknown admissible set kind '" + kind + "'");
}

// --- gsrm ---------------------------------------------------------------------

inline GsrmInstance load_gsrm_instance(const Json& j, const std::string& path = "gsrm") {
    require_keys(j, {"step_losses", "switch_cost", "alpha", "beta", "incoherence", "k_init"}, path);
    GsrmInstance inst;
    for (const auto& row : require_field(j, "step_losses", path)) {
        std::vector<double> r;
        for (const auto& v : row) r.push_back(v.get<double>());
        inst.step_losses.push_back(std::move(r));
    }
    inst.horizon = inst.step_losses.size();
    inst.regime_count = inst.horizon > 0 ? inst.step_losses[0].size() : 0;
    if (j.contains("switch_cost")) {
        for (const auto& row : j.at("switch_cost")) {
            std::vector<double> r;
            for (const auto& v : row) r.push_back(v.get<double>());
            inst.switch_cost.push_back(std::move(r));
        }
    } else {
        inst.switch_cost.assign(inst.regime_count, std::vector<double>(inst.regime_count, 1.0));
        for (std::size_t k = 0; k < inst.regime_count; ++k) inst.switch_cost[k][k] = 0.0;
    }
    inst.alpha = require_field(j, "alpha", path).get<double>();
    inst.beta = require_field(j, "beta", path).get<double>();
    if (j.contains("incoherence")) {
        for (const auto& v : j.at("incoherence")) inst.incoherence.push_back(v.get<double>());
    } else {
        inst.incoherence.assign(inst.regime_count, 0.0);
    }
    if (j.contains("k_init")) inst.k_init = j.at("k_init").get<std::size_t>();
    inst.validate();
    return inst;
}

// --- memory snapshots -----------------------------------------------------------

inline Json memory_state_to_json(const MemoryState& m) {
    Json items = Json::array();
    for (const auto& it : m.items) {
        Json ij;
        ij["key"] = it.key;
        ij["code_bits"] = it.code_bits;
        ij["regime_tag"] = it.regime_tag;
        ij["protected"] = it.is_protected();
        if (it.protected_by) ij["protected_by"] = *it.protected_by;
        items.push_back(ij);
    }
    Json j;
    j["items"] = items;
    j["total_bits"] = m.total_bits();
    return j;
}

// --- fixture export -----------------------------------------------------------

// The exported document is a complete certify configuration: running it back
// through the loaders reproduces the fixture's verdicts.
inline Json fixture_to_json(const FixtureEntry& f) {
    Json j;
    j["id"] = f.id;
    j["model"] = metamodel_to_json(f.model);
    Json transforms = Json::array();
    for (const auto& t : f.transforms) transforms.push_back(transform_to_json(t));
    j["transforms"] = transforms;
    if (f.transforms.size() == 1) j["transform"] = transform_to_json(f.transforms[0]);
    j["kernel"] = f.kernel_config;
    j["witness"] = witness_to_json(f.witness);
    j["lipschitz_ell"] = f.lipschitz_ell;
    j["capacity"] = {{"kind", f.capacity.kind == CapacityFunctional::Kind::log2_cardinality
                                  ? "log2_cardinality"
                                  : (f.capacity.kind == CapacityFunctional::Kind::kl_vs_prior
                                         ? "kl_vs_prior"
                                         : "description_bits")},
                     {"bound", f.capacity.bound}};
    j["admissible_set"] = f.admissible_config;
    j["s0"] = state_to_json(f.s0);
    j["expected"] = {{"closure", f.expected.closure},
                     {"stability", f.expected.stability},
                     {"capacity", f.expected.capacity},
                     {"evaluative_invariance", f.expected.invariance}};
    return j;
}

// --- bound sweeps ----------------------------------------------------------------

// One CSV row per grid point of n: plot-ready parameter sweeps.
inline std::string bound_sweep_csv(const std::string& preset, double rhat, double kl, double delta,
                                   double l_sensitivity, double b_drift, double v0,
                                   const std::vector<std::uint64_t>& n_grid) {
    std::ostringstream out;
    out.precision(17);
    out << "n,empirical_risk,kl,confidence_term,drift_term,total\n";
    for (std::uint64_t n : n_grid) {
        const BoundReport r = preset == "basic" ? pacbayes_basic(rhat, kl, n, delta)
                                                : structural_bound(rhat, kl, n, delta, l_sensitivity,
                                                                   b_drift, v0);
        out << n << "," << r.empirical_risk << "," << r.kl_term << "," << r.confidence_term << ","
            << r.drift_term << "," << r.total << "\n";
    }
    return out.str();
}

} // namespace smgi::config
