#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smgi/errors.hpp"
#include "smgi/report.hpp"
#include "smgi/rng.hpp"
#include "smgi/state.hpp"

namespace smgi {

// Declared-form loss function l_k(hypothesis, state, observation) -> [0,1].
// Keeping evaluators as data (kind + parameters) makes the meta-model
// serializable and configuration-loadable.
struct Evaluator {
    enum class Kind {
        constant,              // value c independent of inputs
        hypothesis_table,      // risk per hypothesis index, independent of (s, z)
        observation_threshold, // below / above a threshold on z
        absolute_error,        // clamp(scale * |z - target|, 0, 1)
        loss_table,            // table[hypothesis][support index of z]
    };

    Kind kind = Kind::constant;
    std::string name;
    double c = 0.0;
    std::vector<double> hyp_risks;
    double threshold = 0.0, below = 0.0, above = 1.0;
    double target = 0.0, scale = 1.0;
    std::vector<double> support;
    std::vector<std::vector<double>> table;

    friend bool operator==(const Evaluator&, const Evaluator&) = default;

    static Evaluator constant_loss(double value, std::string name = "constant") {
        Evaluator e;
        e.kind = Kind::constant;
        e.c = value;
        e.name = std::move(name);
        return e;
    }
    static Evaluator from_hypothesis_risks(std::vector<double> risks, std::string name = "risk_table") {
        Evaluator e;
        e.kind = Kind::hypothesis_table;
        e.hyp_risks = std::move(risks);
        e.name = std::move(name);
        return e;
    }
    static Evaluator from_loss_table(std::vector<double> support_points,
                                     std::vector<std::vector<double>> loss, std::string name = "loss_table") {
        Evaluator e;
        e.kind = Kind::loss_table;
        e.support = std::move(support_points);
        e.table = std::move(loss);
        e.name = std::move(name);
        return e;
    }

    double operator()(std::size_t hypothesis_index, const State& /*s*/, double z) const {
        switch (kind) {
            case Kind::constant:
                return c;
            case Kind::hypothesis_table:
                if (hypothesis_index >= hyp_risks.size())
                    throw DomainError("evaluator '" + name + "': hypothesis index out of range");
                return hyp_risks[hypothesis_index];
            case Kind::observation_threshold:
                return z >= threshold ? above : below;
            case Kind::absolute_error:
                return std::clamp(scale * std::abs(z - target), 0.0, 1.0);
            case Kind::loss_table: {
                if (hypothesis_index >= table.size())
                    throw DomainError("evaluator '" + name + "': hypothesis index out of range");
                for (std::size_t i = 0; i < support.size(); ++i)
                    if (std::abs(support[i] - z) <= 1e-9) return table[hypothesis_index][i];
                throw DomainError("evaluator '" + name + "': observation not in declared support");
            }
        }
        return 0.0;
    }
};

// Point on the K-simplex: the active evaluator mixture.
struct RegimeWeights {
    std::vector<double> weights;

    friend bool operator==(const RegimeWeights&, const RegimeWeights&) = default;

    static RegimeWeights uniform(std::size_t k) {
        RegimeWeights w;
        w.weights.assign(k, 1.0 / static_cast<double>(k));
        return w;
    }
    static RegimeWeights delta(std::size_t k, std::size_t active) {
        RegimeWeights w;
        w.weights.assign(k, 0.0);
        w.weights.at(active) = 1.0;
        return w;
    }

    bool on_simplex(double tol = 1e-12) const {
        double sum = 0.0;
        for (double v : weights) {
            if (v < -tol) return false;
            sum += v;
        }
        return std::abs(sum - 1.0) <= tol;
    }

    void validate() const {
        if (weights.empty()) throw ConfigError("regime weights are empty");
        if (!on_simplex()) throw ConfigError("regime weights are not on the simplex within 1e-12");
    }
};

// sigma : (context, state) -> distribution over regimes.
struct SwitchingOperator {
    enum class Kind {
        fixed,         // context/state independent distribution
        delta,         // always the declared regime
        uniform,       // uniform over K
        context_table, // context string -> regime, with a default
    };

    Kind kind = Kind::delta;
    std::size_t regime_count = 1;
    std::size_t delta_regime = 0;
    std::vector<double> fixed_weights;
    std::map<std::string, std::size_t> context_to_regime;
    std::size_t default_regime = 0;

    friend bool operator==(const SwitchingOperator&, const SwitchingOperator&) = default;

    static SwitchingOperator always(std::size_t k, std::size_t regime) {
        SwitchingOperator op;
        op.kind = Kind::delta;
        op.regime_count = k;
        op.delta_regime = regime;
        return op;
    }
    static SwitchingOperator uniform_over(std::size_t k) {
        SwitchingOperator op;
        op.kind = Kind::uniform;
        op.regime_count = k;
        return op;
    }
    static SwitchingOperator from_weights(std::vector<double> w) {
        SwitchingOperator op;
        op.kind = Kind::fixed;
        op.regime_count = w.size();
        op.fixed_weights = std::move(w);
        return op;
    }
    static SwitchingOperator from_context_table(std::size_t k, std::map<std::string, std::size_t> table,
                                                std::size_t fallback) {
        SwitchingOperator op;
        op.kind = Kind::context_table;
        op.regime_count = k;
        op.context_to_regime = std::move(table);
        op.default_regime = fallback;
        return op;
    }

    std::vector<double> distribution(const std::string& context, const State& /*s*/) const {
        std::vector<double> d(regime_count, 0.0);
        switch (kind) {
            case Kind::fixed:
                return fixed_weights;
            case Kind::delta:
                d.at(delta_regime) = 1.0;
                return d;
            case Kind::uniform:
                d.assign(regime_count, 1.0 / static_cast<double>(regime_count));
                return d;
            case Kind::context_table: {
                const auto it = context_to_regime.find(context);
                d.at(it == context_to_regime.end() ? default_regime : it->second) = 1.0;
                return d;
            }
        }
        return d;
    }
};

// k_t ~ sigma(. | c_t, s_t).
inline std::size_t select_regime(const SwitchingOperator& op, const std::string& context, const State& s,
                                 RngState& rng) {
    const auto d = op.distribution(context, s);
    return rng.next_index(d);
}

// Audit point: a (hypothesis, state, observation) triple. Ordering
// constraints reuse the (state, observation) component across both
// hypotheses of the protected pair.
struct AuditTriple {
    std::size_t hypothesis_index = 0;
    State state;
    double z = 0.0;

    friend bool operator==(const AuditTriple&, const AuditTriple&) = default;
};

// Declarable protected-core constraints: audited risk thresholds and
// pairwise risk orderings. evaluator_index < 0 means the family's active
// mixture, otherwise the indexed component evaluator.
struct CoreConstraint {
    enum class Kind { risk_threshold, pair_ordering };

    std::string name;
    Kind kind = Kind::risk_threshold;
    int evaluator_index = -1;
    double threshold = 0.0;
    std::optional<std::size_t> hypothesis_index; // threshold: restrict to one hypothesis
    std::size_t hyp_low = 0;                     // ordering: risk(hyp_low) < risk(hyp_high)
    std::size_t hyp_high = 1;

    friend bool operator==(const CoreConstraint&, const CoreConstraint&) = default;
};

struct ProtectedCore {
    std::vector<CoreConstraint> constraints;
    std::vector<AuditTriple> audit_set;

    friend bool operator==(const ProtectedCore&, const ProtectedCore&) = default;
};

// L = {l_k} with a protected core, current mixture weights, and an optional
// switching rule driving regime selection during simulation.
struct EvaluatorFamily {
    std::vector<Evaluator> evaluators;
    ProtectedCore protected_core;
    RegimeWeights active_weights;
    std::optional<SwitchingOperator> mixing;

    friend bool operator==(const EvaluatorFamily&, const EvaluatorFamily&) = default;

    std::size_t regime_count() const { return evaluators.size(); }

    static EvaluatorFamily single(Evaluator e) {
        EvaluatorFamily fam;
        fam.evaluators.push_back(std::move(e));
        fam.active_weights = RegimeWeights::delta(1, 0);
        return fam;
    }

    void validate() const {
        if (evaluators.empty()) throw ConfigError("evaluator family must have K >= 1");
        if (active_weights.weights.size() != evaluators.size())
            throw ConfigError("active weights length does not match evaluator count");
        active_weights.validate();
    }
};

// l_t = salience * sum_k w_k l_k; result stays in [0,1] for salience <= 1.
inline double active_loss(const EvaluatorFamily& fam, const RegimeWeights& w, std::size_t hypothesis_index,
                          const State& s, double z, double salience = 1.0) {
    double loss = 0.0;
    for (std::size_t k = 0; k < fam.evaluators.size(); ++k)
        loss += w.weights.at(k) * fam.evaluators[k](hypothesis_index, s, z);
    return salience * loss;
}

namespace detail {

// Mean audited loss of one hypothesis under a component evaluator or the
// active mixture (evaluator_index < 0).
inline double audited_risk(const EvaluatorFamily& fam, int evaluator_index, std::size_t hypothesis_index,
                           const std::vector<AuditTriple>& audit) {
    double sum = 0.0;
    for (const auto& triple : audit) {
        if (evaluator_index < 0)
            sum += active_loss(fam, fam.active_weights, hypothesis_index, triple.state, triple.z);
        else
            sum += fam.evaluators.at(static_cast<std::size_t>(evaluator_index))(hypothesis_index, triple.state,
                                                                                triple.z);
    }
    return sum / static_cast<double>(audit.size());
}

inline double audited_risk_own_hypotheses(const EvaluatorFamily& fam, int evaluator_index,
                                          const std::vector<AuditTriple>& audit) {
    double sum = 0.0;
    for (const auto& triple : audit) {
        if (evaluator_index < 0)
            sum += active_loss(fam, fam.active_weights, triple.hypothesis_index, triple.state, triple.z);
        else
            sum += fam.evaluators.at(static_cast<std::size_t>(evaluator_index))(triple.hypothesis_index,
                                                                                triple.state, triple.z);
    }
    return sum / static_cast<double>(audit.size());
}

} // namespace detail

// Evaluates every core constraint on the audit set against the family as it
// currently stands. Margins are positive exactly when the constraint holds.
inline CertificateReport check_protected_core(const ProtectedCore& core, const EvaluatorFamily& fam) {
    if (core.audit_set.empty()) throw EmptyAdmissibleSet("protected core has an empty audit set");
    CertificateReport report;
    report.obligation = Obligation::evaluative_invariance;
    report.name = "protected_core";
    report.mode = CheckMode::exhaustive;
    report.pass = true;
    for (const auto& c : core.constraints) {
        CertificateReport sub;
        sub.obligation = Obligation::evaluative_invariance;
        sub.name = c.name.empty() ? "constraint" : c.name;
        sub.mode = CheckMode::exhaustive;
        if (c.kind == CoreConstraint::Kind::risk_threshold) {
            const double measured =
                c.hypothesis_index
                    ? detail::audited_risk(fam, c.evaluator_index, *c.hypothesis_index, core.audit_set)
                    : detail::audited_risk_own_hypotheses(fam, c.evaluator_index, core.audit_set);
            sub.pass = measured <= c.threshold + 1e-12;
            sub.evidence["measured"] = measured;
            sub.evidence["threshold"] = c.threshold;
            sub.evidence["margin"] = c.threshold - measured;
            if (!sub.pass)
                sub.witnesses.push_back("audited risk " + std::to_string(measured) + " exceeds " +
                                        std::to_string(c.threshold));
        } else {
            const double r_low = detail::audited_risk(fam, c.evaluator_index, c.hyp_low, core.audit_set);
            const double r_high = detail::audited_risk(fam, c.evaluator_index, c.hyp_high, core.audit_set);
            sub.pass = r_low < r_high;
            sub.evidence["risk_low"] = r_low;
            sub.evidence["risk_high"] = r_high;
            sub.evidence["margin"] = r_high - r_low;
            if (!sub.pass)
                sub.witnesses.push_back("protected ordering flipped on pair (" + std::to_string(c.hyp_low) +
                                        ", " + std::to_string(c.hyp_high) + ")");
        }
        report.pass = report.pass && sub.pass;
        for (const auto& w : sub.witnesses) report.witnesses.push_back(w);
        report.sub_reports.push_back(std::move(sub));
    }
    report.evidence["constraint_count"] = static_cast<double>(core.constraints.size());
    return report;
}

// Half-space constraint on regime weights: dot(coeffs, w) >= lower.
struct WeightConstraint {
    std::vector<double> coeffs;
    double lower = 0.0;
};

enum class WeightDivergence {
    squared_euclidean,
    kl_on_weights,
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline bool weights_admissible(const std::vector<double>& w, const std::vector<WeightConstraint>& cons,
                               double tol) {
    double sum = 0.0;
    for (double v : w) {
        if (v < -tol) return false;
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
    for (const auto& c : cons)
        if (dot(c.coeffs, w) < c.lower - tol) return false;
    return true;
}

// Solve the dense linear system A x = rhs in place; returns false if singular.
inline bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> rhs,
                         std::vector<double>& out) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12) return false;
        std::swap(a[pivot], a[col]);
        std::swap(rhs[pivot], rhs[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c2 = col; c2 < n; ++c2) a[r][c2] -= f * a[col][c2];
            rhs[r] -= f * rhs[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) out[i] = rhs[i] / a[i][i];
    return true;
}

inline const std::vector<WeightConstraint>& ineq_size_guard(const std::vector<WeightConstraint>& cons,
                                                            std::size_t k) {
    for (const auto& c : cons)
        if (c.coeffs.size() != k) throw ConfigError("weight constraint dimension mismatch");
    return cons;
}

// Euclidean projection onto {simplex} ∩ {half-spaces} by enumerating active
// sets and solving the equality-constrained KKT system for each. The true
// projection's active set is among the subsets, so taking the feasible
// candidate with minimal distance is exact. Returns nullopt when no subset
// yields a feasible point, i.e. the constraint set is empty.
inline std::optional<std::vector<double>> project_euclidean(const std::vector<double>& candidate,
                                                            const std::vector<WeightConstraint>& cons) {
    const std::size_t k = candidate.size();
    // Inequalities: w_i >= 0 (k of them) then declared half-spaces.
    std::vector<WeightConstraint> ineq;
    for (std::size_t i = 0; i < k; ++i) {
        WeightConstraint c;
        c.coeffs.assign(k, 0.0);
        c.coeffs[i] = 1.0;
        c.lower = 0.0;
        ineq.push_back(std::move(c));
    }
    for (const auto& c : ineq_size_guard(cons, k)) ineq.push_back(c);

    const std::size_t m = ineq.size();
    if (m > 24) throw ConfigError("cert_update: too many weight constraints for exact projection");

    std::optional<std::vector<double>> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        // Equality rows: simplex constraint plus the active subset.
        std::vector<std::vector<double>> rows;
        std::vector<double> rhs;
        rows.push_back(std::vector<double>(k, 1.0));
        rhs.push_back(1.0);
        for (std::size_t j = 0; j < m; ++j) {
            if (mask & (1u << j)) {
                rows.push_back(ineq[j].coeffs);
                rhs.push_back(ineq[j].lower);
            }
        }
        const std::size_t r = rows.size();
        if (r > k + 1) continue;
        // (E E^T) nu = rhs - E c ;  w = c + E^T nu
        std::vector<std::vector<double>> gram(r, std::vector<double>(r, 0.0));
        std::vector<double> b(r, 0.0);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < r; ++j) gram[i][j] = dot(rows[i], rows[j]);
            b[i] = rhs[i] - dot(rows[i], candidate);
        }
        std::vector<double> nu;
        if (!solve_linear(gram, b, nu)) continue;
        std::vector<double> w = candidate;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < k; ++j) w[j] += nu[i] * rows[i][j];
        if (!weights_admissible(w, cons, 1e-9)) continue;
        double dist = 0.0;
        for (std::size_t j = 0; j < k; ++j) dist += (w[j] - candidate[j]) * (w[j] - candidate[j]);
        if (dist < best_dist) {
            best_dist = dist;
            best = std::move(w);
        }
    }
    return best;
}

// I-projection of the candidate onto {simplex} ∩ {half-spaces}: dual
// coordinate ascent on the multipliers of w_i ∝ c_i exp(sum_j λ_j a_ji).
inline std::optional<std::vector<double>> project_kl(const std::vector<double>& candidate,
                                                     const std::vector<WeightConstraint>& cons) {
    const std::size_t k = candidate.size();
    for (double v : candidate)
        if (v <= 0.0) throw ConfigError("kl_on_weights requires a strictly positive candidate");
    // Feasibility shares the euclidean geometry.
    if (!project_euclidean(candidate, cons)) return std::nullopt;

    std::vector<double> lambda(cons.size(), 0.0);
    auto weights_for = [&](const std::vector<double>& lam) {
        std::vector<double> w(k, 0.0);
        double norm = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double expo = 0.0;
            for (std::size_t j = 0; j < cons.size(); ++j) expo += lam[j] * cons[j].coeffs[i];
            w[i] = candidate[i] * std::exp(expo);
            norm += w[i];
        }
        for (double& v : w) v /= norm;
        return w;
    };
    for (int cycle = 0; cycle < 2000; ++cycle) {
        double residual = 0.0;
        for (std::size_t j = 0; j < cons.size(); ++j) {
            // 1-D concave maximization in lambda_j: root of b_j - a_j.w(lambda).
            double lo = 0.0, hi = 1.0;
            auto grad = [&](double lj) {
                std::vector<double> lam = lambda;
                lam[j] = lj;
                return cons[j].lower - dot(cons[j].coeffs, weights_for(lam));
            };
            if (grad(0.0) <= 0.0) {
                lambda[j] = 0.0;
            } else {
                while (grad(hi) > 0.0 && hi < 1e8) hi *= 2.0;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (grad(mid) > 0.0 ? lo : hi) = mid;
                }
                lambda[j] = 0.5 * (lo + hi);
            }
            const auto w = weights_for(lambda);
            residual = std::max(residual, std::max(0.0, cons[j].lower - dot(cons[j].coeffs, w)));
        }
        if (residual < 1e-13) break;
    }
    return weights_for(lambda);
}

inline double divergence_value(WeightDivergence d, const std::vector<double>& w,
                               const std::vector<double>& candidate) {
    if (d == WeightDivergence::squared_euclidean) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - candidate[i]) * (w[i] - candidate[i]);
        return s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) s += w[i] * std::log(w[i] / candidate[i]);
    return s;
}

} // namespace detail

struct CertUpdateResult {
    RegimeWeights weights;
    CertificateReport report;
};

// CertUpdate_Phi: project candidate weights onto the admissible set (the
// simplex intersected with the declared half-spaces) under the chosen
// divergence. Admissible candidates are returned unchanged (divergence 0).
// The report re-audits the protected core at the returned weights.
inline CertUpdateResult cert_update(const ProtectedCore& core, const EvaluatorFamily& current,
                                    const RegimeWeights& candidate, WeightDivergence divergence,
                                    const std::vector<WeightConstraint>& admissible_set) {
    if (candidate.weights.size() != current.evaluators.size())
        throw ConfigError("candidate weight length does not match evaluator count");

    CertificateReport report;
    report.obligation = Obligation::evaluative_invariance;
    report.name = "cert_update";
    report.mode = CheckMode::exhaustive;

    RegimeWeights out;
    if (detail::weights_admissible(candidate.weights, admissible_set, 1e-9)) {
        out = candidate;
        report.evidence["divergence"] = 0.0;
        report.evidence["projected"] = 0.0;
    } else {
        const auto projected = divergence == WeightDivergence::squared_euclidean
                                   ? detail::project_euclidean(candidate.weights, admissible_set)
                                   : detail::project_kl(candidate.weights, admissible_set);
        if (!projected)
            throw EmptyAdmissibleSet("weight constraint set does not intersect the simplex");
        out.weights = *projected;
        report.evidence["divergence"] = detail::divergence_value(divergence, out.weights, candidate.weights);
        report.evidence["projected"] = 1.0;
    }

    int binding = 0;
    for (std::size_t j = 0; j < admissible_set.size(); ++j) {
        const double slack = detail::dot(admissible_set[j].coeffs, out.weights) - admissible_set[j].lower;
        report.evidence["slack_" + std::to_string(j)] = slack;
        if (slack <= 1e-9) ++binding;
    }
    report.evidence["binding_constraints"] = static_cast<double>(binding);

    EvaluatorFamily updated = current;
    updated.active_weights = out;
    CertificateReport audit = check_protected_core(core, updated);
    report.pass = audit.pass;
    report.sub_reports.push_back(std::move(audit));
    return CertUpdateResult{std::move(out), std::move(report)};
}

// Does any candidate single evaluator reproduce the protected risk ordering
// of every regime row? Two rows ordering a pair oppositely prove that no
// single evaluator can (impossibility flag, an exhaustive-mode verdict).
inline CertificateReport check_core_equivalence(const std::vector<std::vector<double>>& risk_matrix,
                                                const std::vector<std::vector<double>>& candidates) {
    CertificateReport report;
    report.obligation = Obligation::evaluative_invariance;
    report.name = "core_equivalence";
    report.mode = CheckMode::exhaustive;
    report.evidence["impossibility"] = 0.0;

    const std::size_t k = risk_matrix.size();
    if (k == 0) throw ConfigError("risk matrix has no regimes");
    const std::size_t h = risk_matrix[0].size();
    if (h < 2) throw ConfigError("core equivalence needs at least two hypotheses");

    if (k == 1) {
        // The single row is its own single-regime counterpart.
        report.pass = true;
        report.evidence["candidates_checked"] = 0.0;
        return report;
    }

    // Opposite strict orderings on any pair are a proof of impossibility.
    for (std::size_t a = 0; a < h; ++a) {
        for (std::size_t b = a + 1; b < h; ++b) {
            bool low_high = false, high_low = false;
            for (std::size_t r = 0; r < k; ++r) {
                if (risk_matrix[r][a] < risk_matrix[r][b]) low_high = true;
                if (risk_matrix[r][a] > risk_matrix[r][b]) high_low = true;
            }
            if (low_high && high_low) {
                report.pass = false;
                report.evidence["impossibility"] = 1.0;
                report.witnesses.push_back("pair (" + std::to_string(a) + ", " + std::to_string(b) +
                                           ") is ordered oppositely across regimes");
            }
        }
    }

    auto matches_all_rows = [&](const std::vector<double>& cand) {
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t a = 0; a < h; ++a)
                for (std::size_t b = 0; b < h; ++b) {
                    if (risk_matrix[r][a] < risk_matrix[r][b] && !(cand[a] < cand[b])) return false;
                }
        return true;
    };

    std::size_t matched = 0;
    for (const auto& cand : candidates) {
        if (cand.size() != h) throw ConfigError("candidate evaluator row has wrong width");
        if (matches_all_rows(cand)) ++matched;
    }
    report.evidence["candidates_checked"] = static_cast<double>(candidates.size());
    report.evidence["candidates_matched"] = static_cast<double>(matched);
    if (report.evidence["impossibility"] == 0.0) report.pass = matched > 0;
    return report;
}

} // namespace smgi
