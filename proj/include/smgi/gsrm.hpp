#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "smgi/errors.hpp"
#include "smgi/regimes.hpp"
#include "smgi/rng.hpp"

namespace smgi {

// Generalized structural risk instance over a horizon: per-step regime
// losses, a switching cost on consecutive regimes, and per-regime
// incoherence penalties. Regime indices are 0-based.
struct GsrmInstance {
    std::size_t horizon = 0;
    std::size_t regime_count = 0;
    std::vector<std::vector<double>> step_losses;    // [t][k], values in [0,1]
    std::vector<std::vector<double>> switch_cost;    // [k_prev][k_next], zero diagonal
    double alpha = 0.0;                              // switch-cost weight
    std::vector<double> incoherence;                 // [k] penalty
    double beta = 0.0;                               // incoherence weight
    std::size_t k_init = 0;

    static GsrmInstance make(std::vector<std::vector<double>> losses, double alpha, double beta,
                             std::size_t k_init = 0) {
        GsrmInstance inst;
        inst.horizon = losses.size();
        inst.regime_count = losses.empty() ? 0 : losses[0].size();
        inst.step_losses = std::move(losses);
        inst.switch_cost.assign(inst.regime_count, std::vector<double>(inst.regime_count, 1.0));
        for (std::size_t k = 0; k < inst.regime_count; ++k) inst.switch_cost[k][k] = 0.0;
        inst.incoherence.assign(inst.regime_count, 0.0);
        inst.alpha = alpha;
        inst.beta = beta;
        inst.k_init = k_init;
        return inst;
    }

    void validate() const {
        if (horizon == 0 || regime_count == 0) throw ConfigError("gsrm instance must have T >= 1, K >= 1");
        if (step_losses.size() != horizon) throw ConfigError("step_losses row count must equal the horizon");
        for (const auto& row : step_losses)
            if (row.size() != regime_count) throw ConfigError("step_losses row width must equal K");
        if (switch_cost.size() != regime_count) throw ConfigError("switch_cost must be K x K");
        for (std::size_t k = 0; k < regime_count; ++k) {
            if (switch_cost[k].size() != regime_count) throw ConfigError("switch_cost must be K x K");
            if (switch_cost[k][k] != 0.0) throw ConfigError("switch_cost(k, k) must be 0");
        }
        if (incoherence.size() != regime_count) throw ConfigError("incoherence must have K entries");
        if (k_init >= regime_count) throw ConfigError("k_init out of range");
    }
};

// sum_t [ loss[t][k_t] + alpha * switch_cost(k_{t-1}, k_t) + beta * incoh(k_t) ]
// with k_0 = k_init (no cost charged unless k_1 differs from it).
inline double gsrm_objective(const GsrmInstance& inst, const std::vector<std::size_t>& regimes) {
    if (regimes.size() != inst.horizon) throw ConfigError("regime sequence length must equal the horizon");
    double total = 0.0;
    std::size_t prev = inst.k_init;
    for (std::size_t t = 0; t < inst.horizon; ++t) {
        const std::size_t k = regimes[t];
        if (k >= inst.regime_count) throw ConfigError("regime index out of range");
        total += inst.step_losses[t][k] + inst.alpha * inst.switch_cost[prev][k] +
                 inst.beta * inst.incoherence[k];
        prev = k;
    }
    return total;
}

struct GsrmSolution {
    std::vector<std::size_t> regimes;
    double value = 0.0;
};

enum class GsrmMode { dynamic_programming, exhaustive };

namespace detail {

inline GsrmSolution gsrm_minimize_dp(const GsrmInstance& inst) {
    const std::size_t big = inst.regime_count;
    // cost_to_go[t][k_prev]: optimal remaining cost from step t given the
    // previous regime; computed backwards so the forward pass can pick the
    // lexicographically smallest minimizer.
    std::vector<std::vector<double>> cost_to_go(inst.horizon + 1,
                                                std::vector<double>(big, 0.0));
    for (std::size_t ti = inst.horizon; ti-- > 0;) {
        for (std::size_t prev = 0; prev < big; ++prev) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < big; ++k) {
                const double c = inst.step_losses[ti][k] + inst.alpha * inst.switch_cost[prev][k] +
                                 inst.beta * inst.incoherence[k] + cost_to_go[ti + 1][k];
                best = std::min(best, c);
            }
            cost_to_go[ti][prev] = best;
        }
    }
    GsrmSolution sol;
    std::size_t prev = inst.k_init;
    for (std::size_t t = 0; t < inst.horizon; ++t) {
        std::size_t chosen = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < big; ++k) {
            const double c = inst.step_losses[t][k] + inst.alpha * inst.switch_cost[prev][k] +
                             inst.beta * inst.incoherence[k] + cost_to_go[t + 1][k];
            if (c < best) {
                best = c;
                chosen = k;
            }
        }
        sol.regimes.push_back(chosen);
        prev = chosen;
    }
    sol.value = gsrm_objective(inst, sol.regimes);
    return sol;
}

inline GsrmSolution gsrm_minimize_exhaustive(const GsrmInstance& inst) {
    double sequences = 1.0;
    for (std::size_t t = 0; t < inst.horizon; ++t) {
        sequences *= static_cast<double>(inst.regime_count);
        if (sequences > 1e7) throw ConfigError("exhaustive gsrm mode only supports K^T <= 1e7");
    }
    GsrmSolution sol;
    std::vector<std::size_t> seq(inst.horizon, 0);
    sol.regimes = seq;
    sol.value = gsrm_objective(inst, seq);
    // Odometer enumeration in lexicographic order; strict improvement keeps
    // the lexicographically smallest minimizer.
    while (true) {
        std::size_t pos = inst.horizon;
        while (pos > 0) {
            --pos;
            if (seq[pos] + 1 < inst.regime_count) {
                ++seq[pos];
                std::fill(seq.begin() + static_cast<std::ptrdiff_t>(pos) + 1, seq.end(), 0);
                break;
            }
            if (pos == 0) return sol;
        }
        const double value = gsrm_objective(inst, seq);
        if (value < sol.value) {
            sol.value = value;
            sol.regimes = seq;
        }
    }
}

} // namespace detail

// Exact minimization over regime sequences. DP is exact because the
// objective is first-order Markov in k; ties break lexicographically in both
// modes, and both report the objective recomputed by gsrm_objective.
inline GsrmSolution gsrm_minimize(const GsrmInstance& inst, GsrmMode mode = GsrmMode::dynamic_programming) {
    inst.validate();
    return mode == GsrmMode::dynamic_programming ? detail::gsrm_minimize_dp(inst)
                                                 : detail::gsrm_minimize_exhaustive(inst);
}

struct GsrmExpectation {
    double mean = 0.0;
    double confidence_radius = 0.0; // 95% normal-approximation radius
    std::size_t samples = 0;
};

// Monte-Carlo mean of the objective over regime sequences sampled from the
// switching operator; the per-step state carries t in its counter.
inline GsrmExpectation gsrm_expected(const GsrmInstance& inst, const SwitchingOperator& switching,
                                     const std::vector<std::string>& contexts, int n_mc,
                                     std::uint64_t seed) {
    inst.validate();
    if (contexts.size() != inst.horizon) throw ConfigError("gsrm_expected needs one context per step");
    if (n_mc <= 0) throw ConfigError("n_mc must be positive");
    RngState rng(seed);
    // Welford accumulation; a constant sample stream reports its exact value.
    double mean = 0.0;
    double m2 = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> seq(inst.horizon, 0);
    for (int i = 0; i < n_mc; ++i) {
        for (std::size_t t = 0; t < inst.horizon; ++t)
            seq[t] = select_regime(switching, contexts[t], State::with_counter(static_cast<std::int64_t>(t)),
                                   rng);
        const double value = gsrm_objective(inst, seq);
        lo = std::min(lo, value);
        hi = std::max(hi, value);
        const double delta = value - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (value - mean);
    }
    GsrmExpectation out;
    out.samples = static_cast<std::size_t>(n_mc);
    if (lo == hi) {
        out.mean = lo;
        out.confidence_radius = 0.0;
        return out;
    }
    out.mean = mean;
    const double var = std::max(0.0, m2 / static_cast<double>(n_mc));
    out.confidence_radius = 1.96 * std::sqrt(var / static_cast<double>(n_mc));
    return out;
}

} // namespace smgi
