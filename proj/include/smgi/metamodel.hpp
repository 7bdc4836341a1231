#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "smgi/environment.hpp"
#include "smgi/errors.hpp"
#include "smgi/memory.hpp"
#include "smgi/regimes.hpp"
#include "smgi/report.hpp"
#include "smgi/rng.hpp"

namespace smgi {

// r : Z -> X as a declared total map on the reals. The representation metric
// d_X is the absolute difference.
struct RepresentationSpec {
    enum class Kind { identity, scale, affine, constant_map };

    Kind kind = Kind::identity;
    double a = 1.0;
    double b = 0.0;
    std::optional<double> local_lipschitz_bound;

    friend bool operator==(const RepresentationSpec&, const RepresentationSpec&) = default;

    double apply(double z) const {
        switch (kind) {
            case Kind::identity: return z;
            case Kind::scale: return a * z;
            case Kind::affine: return a * z + b;
            case Kind::constant_map: return b;
        }
        return z;
    }
};

struct HypothesisClassSpec {
    enum class Kind { finite_enumerated, parametric_grid };

    Kind kind = Kind::finite_enumerated;
    std::vector<std::string> members;
    double complexity_bits = 0.0;

    friend bool operator==(const HypothesisClassSpec&, const HypothesisClassSpec&) = default;

    static HypothesisClassSpec enumerated(std::vector<std::string> ids) {
        HypothesisClassSpec spec;
        spec.kind = Kind::finite_enumerated;
        spec.members = std::move(ids);
        spec.complexity_bits = std::log2(static_cast<double>(spec.members.size()));
        return spec;
    }

    void validate() const {
        if (kind == Kind::finite_enumerated) {
            if (members.empty()) throw ConfigError("finite hypothesis class must have at least one member");
            const double expected = std::log2(static_cast<double>(members.size()));
            if (std::abs(complexity_bits - expected) > 1e-12)
                throw ConfigError("complexity_bits must equal log2(cardinality) for finite classes");
        }
    }

    std::optional<std::size_t> index_of(const std::string& id) const {
        for (std::size_t i = 0; i < members.size(); ++i)
            if (members[i] == id) return i;
        return std::nullopt;
    }
};

struct PriorSpec {
    enum class Kind { uniform, mdl_program_length, explicit_weights };

    Kind kind = Kind::uniform;
    std::vector<double> weights; // explicit_weights over the hypothesis class
    double rate = 1.0;           // mdl rate (exp(-rate * bits) form)

    friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

// A typed admissible transformation tau acting on the environment family,
// with a declared magnitude bound and an optional certified evaluator-weight
// update. Declared kinds keep transforms serializable.
struct TransformSpec {
    enum class Kind {
        identity,
        interpolate_to_uniform,    // p' = (1-t) p + t uniform, per conditional row
        set_conditional,           // replace every conditional row by `row`
        shift_support,             // translate all support points by delta
        set_adversarial_frequency, // set context rule to random_frequency(p)
    };

    std::string identifier = "identity";
    Kind kind = Kind::identity;
    double t = 0.0;
    std::vector<double> row;
    double delta = 0.0;
    double p = 0.0;
    double epsilon_max = 0.0;
    std::optional<RegimeWeights> evaluator_action; // certified weight update (see cert_update)

    friend bool operator==(const TransformSpec&, const TransformSpec&) = default;

    static TransformSpec identity_transform(double epsilon = 0.0) {
        TransformSpec t;
        t.epsilon_max = epsilon;
        return t;
    }

    Environment apply(const Environment& e) const {
        Environment out = e;
        switch (kind) {
            case Kind::identity:
                break;
            case Kind::interpolate_to_uniform: {
                for (auto& cond : out.conditionals) {
                    const double u = 1.0 / static_cast<double>(cond.size());
                    for (double& pr : cond) pr = (1.0 - t) * pr + t * u;
                }
                break;
            }
            case Kind::set_conditional: {
                for (auto& cond : out.conditionals) cond = row;
                break;
            }
            case Kind::shift_support: {
                for (double& pt : out.domain.points) pt += delta;
                break;
            }
            case Kind::set_adversarial_frequency: {
                out.context.kind = ContextRule::Kind::random_frequency;
                out.context.p = p;
                break;
            }
        }
        return out;
    }

    EnvironmentFamily apply(const EnvironmentFamily& fam) const {
        EnvironmentFamily out = fam;
        for (auto& e : out.instances) e = apply(e);
        return out;
    }

    // Point action on observations induced by the support map; probability
    // reweightings leave points in place.
    double point_action(double z) const {
        return kind == Kind::shift_support ? z + delta : z;
    }
};

// The structural tuple theta. description_bits is derived: it always equals
// 8 * |serialize_metamodel(m)| and is re-established on deserialization.
struct MetaModel {
    RepresentationSpec representation;
    HypothesisClassSpec hypothesis_class;
    PriorSpec prior;
    EvaluatorFamily evaluators;
    EnvironmentFamily environments;
    MemorySpec memory;
    std::uint64_t description_bits = 0;

    bool operator==(const MetaModel& other) const {
        return representation == other.representation && hypothesis_class == other.hypothesis_class &&
               prior == other.prior && evaluators == other.evaluators &&
               environments == other.environments && memory == other.memory;
    }

    void validate() const {
        hypothesis_class.validate();
        evaluators.validate();
        environments.validate();
        for (const auto& e : evaluators.evaluators) {
            if (e.kind == Evaluator::Kind::hypothesis_table &&
                e.hyp_risks.size() != hypothesis_class.members.size())
                throw ConfigError("evaluator '" + e.name + "' risk table does not cover the hypothesis class");
            if (e.kind == Evaluator::Kind::loss_table &&
                e.table.size() != hypothesis_class.members.size())
                throw ConfigError("evaluator '" + e.name + "' loss table does not cover the hypothesis class");
        }
    }
};

// D_E magnitude certificate for a transformation: achieved
// max_e D_E(e, tau(e)) against the declared epsilon_max.
inline CertificateReport check_transform_magnitude(const TransformSpec& t, const EnvironmentFamily& fam) {
    CertificateReport report;
    report.obligation = Obligation::closure;
    report.name = "transform_magnitude";
    report.mode = CheckMode::exhaustive;
    double achieved = 0.0;
    for (std::size_t i = 0; i < fam.instances.size(); ++i) {
        const double d = env_distance(fam.instances[i], t.apply(fam.instances[i]), fam.metric_kind);
        if (d > achieved) achieved = d;
    }
    report.evidence["achieved_max_distance"] = achieved;
    report.evidence["epsilon_max"] = t.epsilon_max;
    report.pass = achieved <= t.epsilon_max + 1e-12;
    if (!report.pass)
        report.witnesses.push_back("achieved " + std::to_string(achieved) + " > epsilon_max " +
                                   std::to_string(t.epsilon_max));
    return report;
}

// Sampled lower bound on the restricted Lipschitz constant of r along tau:
// max over sampled pairs of |r(z) - r(tau.point_action(z))| / D_E(e, tau(e)).
// Pairs are coupled through the transform's point action, so probability-only
// transforms displace no support points and estimate 0.
inline double estimate_representation_lipschitz(const RepresentationSpec& r, const EnvironmentFamily& fam,
                                                const TransformSpec& t, int n_pairs, std::uint64_t seed) {
    if (n_pairs <= 0) throw ConfigError("n_pairs must be positive");
    RngState rng(seed);
    std::vector<double> instance_distance(fam.instances.size(), 0.0);
    bool any_moved = false;
    for (std::size_t i = 0; i < fam.instances.size(); ++i) {
        instance_distance[i] = env_distance(fam.instances[i], t.apply(fam.instances[i]), fam.metric_kind);
        if (instance_distance[i] > 1e-12) any_moved = true;
    }
    if (!any_moved)
        throw DegenerateTransform("transformation moves no environment instance; Lipschitz ratio undefined");

    double max_ratio = 0.0;
    for (int n = 0; n < n_pairs; ++n) {
        const std::size_t i = rng.next_below(fam.instances.size());
        if (instance_distance[i] <= 1e-12) continue;
        const Environment& e = fam.instances[i];
        const std::size_t cond = rng.next_below(e.conditionals.size());
        const double z = e.domain.points[rng.next_index(e.conditionals[cond])];
        const double z_tau = t.point_action(z);
        const double num = std::abs(r.apply(z) - r.apply(z_tau));
        max_ratio = std::max(max_ratio, num / instance_distance[i]);
    }
    return max_ratio;
}

// ---------------------------------------------------------------------------
// Canonical binary serialization: length-prefixed, field-ordered, fixed
// little-endian layout. Field order follows the type definitions, making the
// code length a deterministic description-length proxy.

namespace detail {

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void f64_vec(const std::vector<double>& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        for (double x : v) f64(x);
    }
    void opt_f64(const std::optional<double>& v) {
        u8(v ? 1 : 0);
        if (v) f64(*v);
    }
};

struct ByteReader {
    const std::vector<std::uint8_t>* bytes;
    std::size_t pos = 0;

    std::uint8_t u8() { return (*bytes).at(pos++); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        std::string s;
        s.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) s.push_back(static_cast<char>(u8()));
        return s;
    }
    std::vector<double> f64_vec() {
        const std::uint32_t n = u32();
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    std::optional<double> opt_f64() {
        if (u8() == 0) return std::nullopt;
        return f64();
    }
};

inline void encode_state(ByteWriter& w, const State& s) {
    if (std::holds_alternative<double>(s.representation_state)) {
        w.u8(0);
        w.f64(std::get<double>(s.representation_state));
    } else {
        w.u8(1);
        w.str(std::get<std::string>(s.representation_state));
    }
    w.str(s.hypothesis_id);
    w.f64_vec(s.policy_params);
    w.u32(static_cast<std::uint32_t>(s.memory.items.size()));
    for (const auto& it : s.memory.items) {
        w.str(it.key);
        w.str(it.payload);
        w.f64(it.code_bits);
        w.u32(static_cast<std::uint32_t>(it.regime_tag));
        w.u8(it.protected_by ? 1 : 0);
        if (it.protected_by) w.str(*it.protected_by);
    }
    w.u8(s.counter ? 1 : 0);
    if (s.counter) w.u64(static_cast<std::uint64_t>(*s.counter));
}

inline State decode_state(ByteReader& r) {
    State s;
    if (r.u8() == 0)
        s.representation_state = r.f64();
    else
        s.representation_state = r.str();
    s.hypothesis_id = r.str();
    s.policy_params = r.f64_vec();
    const std::uint32_t n_items = r.u32();
    for (std::uint32_t i = 0; i < n_items; ++i) {
        MemoryItem it;
        it.key = r.str();
        it.payload = r.str();
        it.code_bits = r.f64();
        it.regime_tag = static_cast<int>(r.u32());
        if (r.u8() == 1) it.protected_by = r.str();
        s.memory.items.push_back(std::move(it));
    }
    if (r.u8() == 1) s.counter = static_cast<std::int64_t>(r.u64());
    return s;
}

} // namespace detail

inline std::vector<std::uint8_t> serialize_metamodel(const MetaModel& m) {
    detail::ByteWriter w;

    // representation
    w.u8(static_cast<std::uint8_t>(m.representation.kind));
    w.f64(m.representation.a);
    w.f64(m.representation.b);
    w.opt_f64(m.representation.local_lipschitz_bound);

    // hypothesis class
    w.u8(static_cast<std::uint8_t>(m.hypothesis_class.kind));
    w.u32(static_cast<std::uint32_t>(m.hypothesis_class.members.size()));
    for (const auto& id : m.hypothesis_class.members) w.str(id);
    w.f64(m.hypothesis_class.complexity_bits);

    // prior
    w.u8(static_cast<std::uint8_t>(m.prior.kind));
    w.f64_vec(m.prior.weights);
    w.f64(m.prior.rate);

    // evaluator family
    w.u32(static_cast<std::uint32_t>(m.evaluators.evaluators.size()));
    for (const auto& e : m.evaluators.evaluators) {
        w.u8(static_cast<std::uint8_t>(e.kind));
        w.str(e.name);
        w.f64(e.c);
        w.f64_vec(e.hyp_risks);
        w.f64(e.threshold);
        w.f64(e.below);
        w.f64(e.above);
        w.f64(e.target);
        w.f64(e.scale);
        w.f64_vec(e.support);
        w.u32(static_cast<std::uint32_t>(e.table.size()));
        for (const auto& row : e.table) w.f64_vec(row);
    }
    w.u32(static_cast<std::uint32_t>(m.evaluators.protected_core.constraints.size()));
    for (const auto& c : m.evaluators.protected_core.constraints) {
        w.str(c.name);
        w.u8(static_cast<std::uint8_t>(c.kind));
        w.u32(static_cast<std::uint32_t>(c.evaluator_index + 1)); // shifted so -1 encodes as 0
        w.f64(c.threshold);
        w.u8(c.hypothesis_index ? 1 : 0);
        if (c.hypothesis_index) w.u32(static_cast<std::uint32_t>(*c.hypothesis_index));
        w.u32(static_cast<std::uint32_t>(c.hyp_low));
        w.u32(static_cast<std::uint32_t>(c.hyp_high));
    }
    w.u32(static_cast<std::uint32_t>(m.evaluators.protected_core.audit_set.size()));
    for (const auto& triple : m.evaluators.protected_core.audit_set) {
        w.u32(static_cast<std::uint32_t>(triple.hypothesis_index));
        detail::encode_state(w, triple.state);
        w.f64(triple.z);
    }
    w.f64_vec(m.evaluators.active_weights.weights);
    w.u8(m.evaluators.mixing ? 1 : 0);
    if (m.evaluators.mixing) {
        const auto& op = *m.evaluators.mixing;
        w.u8(static_cast<std::uint8_t>(op.kind));
        w.u32(static_cast<std::uint32_t>(op.regime_count));
        w.u32(static_cast<std::uint32_t>(op.delta_regime));
        w.f64_vec(op.fixed_weights);
        w.u32(static_cast<std::uint32_t>(op.context_to_regime.size()));
        for (const auto& [ctx, regime] : op.context_to_regime) {
            w.str(ctx);
            w.u32(static_cast<std::uint32_t>(regime));
        }
        w.u32(static_cast<std::uint32_t>(op.default_regime));
    }

    // environment family
    w.u8(static_cast<std::uint8_t>(m.environments.metric_kind));
    w.u32(static_cast<std::uint32_t>(m.environments.instances.size()));
    for (const auto& e : m.environments.instances) {
        w.f64_vec(e.domain.points);
        w.u8(e.domain.ordered ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(e.conditionals.size()));
        for (const auto& row : e.conditionals) w.f64_vec(row);
        w.u8(static_cast<std::uint8_t>(e.context.kind));
        w.str(e.context.value);
        w.str(e.context.adversarial_value);
        w.f64(e.context.p);
        w.u64(e.context.salt);
    }

    // memory spec
    w.u8(static_cast<std::uint8_t>(m.memory.update_kind));
    w.f64(m.memory.item_code_bits);
    w.f64(m.memory.forget_lambda);
    w.u8(static_cast<std::uint8_t>(m.memory.metric));

    return std::move(w.bytes);
}

inline MetaModel deserialize_metamodel(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r{&bytes};
    MetaModel m;

    m.representation.kind = static_cast<RepresentationSpec::Kind>(r.u8());
    m.representation.a = r.f64();
    m.representation.b = r.f64();
    m.representation.local_lipschitz_bound = r.opt_f64();

    m.hypothesis_class.kind = static_cast<HypothesisClassSpec::Kind>(r.u8());
    const std::uint32_t n_members = r.u32();
    for (std::uint32_t i = 0; i < n_members; ++i) m.hypothesis_class.members.push_back(r.str());
    m.hypothesis_class.complexity_bits = r.f64();

    m.prior.kind = static_cast<PriorSpec::Kind>(r.u8());
    m.prior.weights = r.f64_vec();
    m.prior.rate = r.f64();

    const std::uint32_t n_eval = r.u32();
    for (std::uint32_t i = 0; i < n_eval; ++i) {
        Evaluator e;
        e.kind = static_cast<Evaluator::Kind>(r.u8());
        e.name = r.str();
        e.c = r.f64();
        e.hyp_risks = r.f64_vec();
        e.threshold = r.f64();
        e.below = r.f64();
        e.above = r.f64();
        e.target = r.f64();
        e.scale = r.f64();
        e.support = r.f64_vec();
        const std::uint32_t n_rows = r.u32();
        for (std::uint32_t row = 0; row < n_rows; ++row) e.table.push_back(r.f64_vec());
        m.evaluators.evaluators.push_back(std::move(e));
    }
    const std::uint32_t n_cons = r.u32();
    for (std::uint32_t i = 0; i < n_cons; ++i) {
        CoreConstraint c;
        c.name = r.str();
        c.kind = static_cast<CoreConstraint::Kind>(r.u8());
        c.evaluator_index = static_cast<int>(r.u32()) - 1;
        c.threshold = r.f64();
        if (r.u8() == 1) c.hypothesis_index = r.u32();
        c.hyp_low = r.u32();
        c.hyp_high = r.u32();
        m.evaluators.protected_core.constraints.push_back(std::move(c));
    }
    const std::uint32_t n_audit = r.u32();
    for (std::uint32_t i = 0; i < n_audit; ++i) {
        AuditTriple triple;
        triple.hypothesis_index = r.u32();
        triple.state = detail::decode_state(r);
        triple.z = r.f64();
        m.evaluators.protected_core.audit_set.push_back(std::move(triple));
    }
    m.evaluators.active_weights.weights = r.f64_vec();
    if (r.u8() == 1) {
        SwitchingOperator op;
        op.kind = static_cast<SwitchingOperator::Kind>(r.u8());
        op.regime_count = r.u32();
        op.delta_regime = r.u32();
        op.fixed_weights = r.f64_vec();
        const std::uint32_t n_ctx = r.u32();
        for (std::uint32_t i = 0; i < n_ctx; ++i) {
            const std::string ctx = r.str();
            op.context_to_regime[ctx] = r.u32();
        }
        op.default_regime = r.u32();
        m.evaluators.mixing = std::move(op);
    }

    m.environments.metric_kind = static_cast<MetricKind>(r.u8());
    const std::uint32_t n_env = r.u32();
    for (std::uint32_t i = 0; i < n_env; ++i) {
        Environment e;
        e.domain.points = r.f64_vec();
        e.domain.ordered = r.u8() == 1;
        const std::uint32_t n_rows = r.u32();
        for (std::uint32_t row = 0; row < n_rows; ++row) e.conditionals.push_back(r.f64_vec());
        e.context.kind = static_cast<ContextRule::Kind>(r.u8());
        e.context.value = r.str();
        e.context.adversarial_value = r.str();
        e.context.p = r.f64();
        e.context.salt = r.u64();
        m.environments.instances.push_back(std::move(e));
    }

    m.memory.update_kind = static_cast<MemoryUpdateKind>(r.u8());
    m.memory.item_code_bits = r.f64();
    m.memory.forget_lambda = r.f64();
    m.memory.metric = static_cast<MemoryMetric>(r.u8());

    m.description_bits = 8 * static_cast<std::uint64_t>(bytes.size());
    return m;
}

// |theta| in bits: 8 times the canonical byte length.
inline std::uint64_t description_length_bits(const MetaModel& m) {
    return 8 * static_cast<std::uint64_t>(serialize_metamodel(m).size());
}

inline MetaModel finalize_description_bits(MetaModel m) {
    m.description_bits = description_length_bits(m);
    return m;
}

} // namespace smgi
