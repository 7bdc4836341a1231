#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "smgi/errors.hpp"
#include "smgi/metamodel.hpp"
#include "smgi/report.hpp"

namespace smgi {

// One evaluated bound. total always equals
// empirical_risk + confidence_term + shift_term + drift_term; kl_term records
// the KL input (it enters through the confidence term, not additively).
struct BoundReport {
    std::string formula;
    double empirical_risk = 0.0;
    double kl_term = 0.0;
    double confidence_term = 0.0;
    double shift_term = 0.0;
    double drift_term = 0.0;
    double total = 0.0;
    std::map<std::string, double> parameters;

    Json to_json() const {
        Json j;
        j["formula"] = formula;
        j["empirical_risk"] = empirical_risk;
        j["kl_term"] = kl_term;
        j["confidence_term"] = confidence_term;
        j["shift_term"] = shift_term;
        j["drift_term"] = drift_term;
        j["total"] = total;
        Json params = Json::object();
        for (const auto& [k, v] : parameters) params[k] = v;
        j["parameters"] = params;
        return j;
    }
};

// Baseline i.i.d. form: R <= R_hat + sqrt((KL + ln(1/delta)) / (2n)).
inline BoundReport pacbayes_basic(double empirical_risk, double kl, std::uint64_t n, double delta) {
    if (n < 1) throw ConfigError("pacbayes_basic needs n >= 1");
    if (delta <= 0.0 || delta >= 1.0) throw ConfigError("delta must lie in (0,1)");
    if (kl < 0.0) throw ConfigError("KL must be nonnegative");
    BoundReport r;
    r.formula = "pacbayes_basic";
    r.empirical_risk = empirical_risk;
    r.kl_term = kl;
    r.confidence_term = std::sqrt((kl + std::log(1.0 / delta)) / (2.0 * static_cast<double>(n)));
    r.total = r.empirical_risk + r.confidence_term + r.shift_term + r.drift_term;
    r.parameters = {{"n", static_cast<double>(n)}, {"delta", delta}, {"KL", kl}};
    return r;
}

// Structural form: R <= R_hat + sqrt((KL + ln(2 sqrt(n)/delta)) / (2(n-1)))
//                       + 2 L (B V0 + B).
inline BoundReport structural_bound(double empirical_risk, double kl, std::uint64_t n, double delta,
                                    double l_sensitivity, double b_drift, double v0) {
    if (n < 2) throw ConfigError("structural_bound needs n >= 2");
    if (delta <= 0.0 || delta >= 1.0) throw ConfigError("delta must lie in (0,1)");
    BoundReport r;
    r.formula = "structural";
    r.empirical_risk = empirical_risk;
    r.kl_term = kl;
    r.confidence_term = std::sqrt((kl + std::log(2.0 * std::sqrt(static_cast<double>(n)) / delta)) /
                                  (2.0 * (static_cast<double>(n) - 1.0)));
    r.drift_term = 2.0 * l_sensitivity * (b_drift * v0 + b_drift);
    r.total = r.empirical_risk + r.confidence_term + r.shift_term + r.drift_term;
    r.parameters = {{"n", static_cast<double>(n)}, {"delta", delta}, {"KL", kl},
                    {"L", l_sensitivity},          {"B", b_drift},   {"V0", v0}};
    return r;
}

// Unified form: R <= R_hat + Gen_n + L_l eps_max + (c_V / n) sum_t E[V(s_t)].
inline BoundReport unified_bound(double empirical_risk, double gen_term, double l_ell, double eps_max,
                                 double c_v, const std::vector<double>& lyapunov_means) {
    if (lyapunov_means.empty()) throw ConfigError("unified_bound needs at least one Lyapunov mean");
    BoundReport r;
    r.formula = "unified";
    r.empirical_risk = empirical_risk;
    r.confidence_term = gen_term;
    r.shift_term = l_ell * eps_max;
    double mean_sum = 0.0;
    for (double v : lyapunov_means) mean_sum += v;
    r.drift_term = c_v / static_cast<double>(lyapunov_means.size()) * mean_sum;
    r.total = r.empirical_risk + r.confidence_term + r.shift_term + r.drift_term;
    r.parameters = {{"n", static_cast<double>(lyapunov_means.size())},
                    {"L_ell", l_ell},
                    {"eps_max", eps_max},
                    {"c_V", c_v},
                    {"Gen", gen_term}};
    return r;
}

// Azuma term of the appendix decomposition:
// (2 L V_max / sqrt(n)) * sqrt(2 ln(2/delta)).
inline double azuma_drift_term(double l_sensitivity, double v_max, std::uint64_t n, double delta) {
    if (n < 1) throw ConfigError("azuma_drift_term needs n >= 1");
    if (delta <= 0.0 || delta >= 1.0) throw ConfigError("delta must lie in (0,1)");
    return 2.0 * l_sensitivity * v_max / std::sqrt(static_cast<double>(n)) *
           std::sqrt(2.0 * std::log(2.0 / delta));
}

// Program prior over declared code lengths: Pi ∝ 2^(-bits). Normalization is
// done relative to the smallest length for numerical stability.
inline std::vector<double> program_prior_from_lengths(const std::vector<double>& bits) {
    if (bits.empty()) throw ConfigError("program prior needs at least one code length");
    double min_bits = bits[0];
    for (double b : bits) min_bits = std::min(min_bits, b);
    std::vector<double> prior(bits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        prior[i] = std::exp2(-(bits[i] - min_bits));
        z += prior[i];
    }
    for (double& p : prior) p /= z;
    return prior;
}

// Program prior over meta-models: Pi(theta) ∝ 2^(-|theta|).
inline std::vector<double> program_prior(const std::vector<MetaModel>& models) {
    if (models.empty()) throw ConfigError("program prior needs at least one model");
    std::vector<double> bits;
    bits.reserve(models.size());
    for (const auto& m : models) bits.push_back(static_cast<double>(description_length_bits(m)));
    return program_prior_from_lengths(bits);
}

// Both sides of the KL–length identity:
//   KL(Q || Pi) = E_Q[|theta|] ln 2 + ln Z - H(Q),
// with the additive constant realized as the log-normalizer ln Z of the
// prior (Z = sum_theta 2^(-|theta|)). Returns (direct KL, expanded RHS).
inline std::pair<double, double> kl_length_identity_check_lengths(const std::vector<double>& q,
                                                                  const std::vector<double>& bits) {
    if (q.size() != bits.size()) throw ConfigError("posterior and code-length vectors differ in size");
    const std::vector<double> prior = program_prior_from_lengths(bits);

    double lhs = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] > 0.0) lhs += q[i] * std::log(q[i] / prior[i]);

    // ln Z via a stable shift by the smallest length.
    double min_bits = bits[0];
    for (double b : bits) min_bits = std::min(min_bits, b);
    double z_shifted = 0.0;
    for (double b : bits) z_shifted += std::exp2(-(b - min_bits));
    const double ln_z = std::log(z_shifted) - min_bits * std::log(2.0);

    double expected_bits = 0.0;
    double entropy = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        expected_bits += q[i] * bits[i];
        if (q[i] > 0.0) entropy -= q[i] * std::log(q[i]);
    }
    const double rhs = expected_bits * std::log(2.0) + ln_z - entropy;
    return {lhs, rhs};
}

inline std::pair<double, double> kl_length_identity_check(const std::vector<double>& q,
                                                          const std::vector<MetaModel>& models) {
    std::vector<double> bits;
    bits.reserve(models.size());
    for (const auto& m : models) bits.push_back(static_cast<double>(description_length_bits(m)));
    return kl_length_identity_check_lengths(q, bits);
}

} // namespace smgi
