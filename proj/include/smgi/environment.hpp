#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "smgi/errors.hpp"
#include "smgi/rng.hpp"
#include "smgi/state.hpp"

namespace smgi {

// Finite observation support. Points must be strictly increasing when the
// domain is declared ordered (Wasserstein-1 needs the order).
struct ObservationDomain {
    std::vector<double> points;
    bool ordered = true;

    friend bool operator==(const ObservationDomain&, const ObservationDomain&) = default;
};

// Context descriptor schedule c_t. `constant` always reports `value`;
// `random_frequency` reports `adversarial_value` on a deterministic
// pseudorandom fraction p of timesteps (keyed by t and salt).
struct ContextRule {
    enum class Kind { constant, random_frequency };
    Kind kind = Kind::constant;
    std::string value = "benign";
    std::string adversarial_value = "adversarial";
    double p = 0.0;
    std::uint64_t salt = 0;

    friend bool operator==(const ContextRule&, const ContextRule&) = default;

    std::string context(std::size_t t, const State& /*s*/) const {
        if (kind == Kind::constant) return value;
        return hash_unit(static_cast<std::uint64_t>(t) * 0x9e3779b97f4a7c15ULL + salt) < p
                   ? adversarial_value
                   : value;
    }
};

// State-conditioned observation distribution over a finite support.
// `conditionals[c][i]` is the probability of `domain.points[i]` given
// conditioning state c; rows sum to 1 within 1e-12.
struct Environment {
    ObservationDomain domain;
    std::vector<std::vector<double>> conditionals;
    ContextRule context;

    friend bool operator==(const Environment&, const Environment&) = default;

    void validate() const {
        if (conditionals.empty()) throw ConfigError("environment has no conditional distributions");
        for (const auto& row : conditionals) {
            if (row.size() != domain.points.size())
                throw ConfigError("conditional row length does not match the observation domain");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw ConfigError("negative probability in conditional distribution");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw ConfigError("conditional distribution does not sum to 1 within 1e-12");
        }
        if (domain.ordered) {
            for (std::size_t i = 1; i < domain.points.size(); ++i)
                if (!(domain.points[i - 1] < domain.points[i]))
                    throw ConfigError("ordered observation domain must be strictly increasing");
        }
    }

    // Conditioning-state index for a system state; counters index rows, any
    // other state uses row 0.
    std::size_t condition_index(const State& s) const {
        if (s.counter && !conditionals.empty()) {
            const auto c = *s.counter;
            return static_cast<std::size_t>(((c % static_cast<std::int64_t>(conditionals.size())) +
                                             static_cast<std::int64_t>(conditionals.size())) %
                                            static_cast<std::int64_t>(conditionals.size()));
        }
        return 0;
    }

    double sample_observation(std::size_t condition, RngState& rng) const {
        const auto& row = conditionals.at(condition);
        return domain.points[rng.next_index(row)];
    }
};

enum class MetricKind {
    total_variation,
    wasserstein1_on_ordered_support,
};

struct EnvironmentFamily {
    std::vector<Environment> instances;
    MetricKind metric_kind = MetricKind::total_variation;

    friend bool operator==(const EnvironmentFamily&, const EnvironmentFamily&) = default;

    void validate() const {
        if (instances.empty()) throw ConfigError("environment family has no instances");
        for (const auto& e : instances) e.validate();
    }
};

namespace detail {

// Merge two supports into one sorted point list with aligned probabilities.
struct MergedSupport {
    std::vector<double> points;
    std::vector<double> pa;
    std::vector<double> pb;
};

inline MergedSupport merge_supports(const ObservationDomain& da, const std::vector<double>& rowa,
                                    const ObservationDomain& db, const std::vector<double>& rowb) {
    MergedSupport m;
    m.points = da.points;
    m.points.insert(m.points.end(), db.points.begin(), db.points.end());
    std::sort(m.points.begin(), m.points.end());
    m.points.erase(std::unique(m.points.begin(), m.points.end()), m.points.end());
    m.pa.assign(m.points.size(), 0.0);
    m.pb.assign(m.points.size(), 0.0);
    auto place = [&](const std::vector<double>& pts, const std::vector<double>& row, std::vector<double>& out) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto it = std::lower_bound(m.points.begin(), m.points.end(), pts[i]);
            out[static_cast<std::size_t>(it - m.points.begin())] += row[i];
        }
    };
    place(da.points, rowa, m.pa);
    place(db.points, rowb, m.pb);
    return m;
}

inline double tv_distance(const MergedSupport& m) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < m.points.size(); ++i) l1 += std::abs(m.pa[i] - m.pb[i]);
    return 0.5 * l1;
}

inline double w1_distance(const MergedSupport& m) {
    // On the real line W1 equals the integral of |CDF_a - CDF_b|.
    double dist = 0.0;
    double cdf_gap = 0.0;
    for (std::size_t i = 0; i + 1 < m.points.size(); ++i) {
        cdf_gap += m.pa[i] - m.pb[i];
        dist += std::abs(cdf_gap) * (m.points[i + 1] - m.points[i]);
    }
    return dist;
}

} // namespace detail

// Pseudometric D_E between two environments: per-conditioning-state distances
// averaged uniformly. TV works on any finite supports; Wasserstein-1 needs
// both domains ordered.
inline double env_distance(const Environment& a, const Environment& b, MetricKind metric) {
    if (a.conditionals.size() != b.conditionals.size())
        throw DomainMismatch("environments have different numbers of conditioning states");
    if (metric == MetricKind::wasserstein1_on_ordered_support && (!a.domain.ordered || !b.domain.ordered))
        throw DomainMismatch("wasserstein1 requires ordered observation supports");
    double total = 0.0;
    for (std::size_t c = 0; c < a.conditionals.size(); ++c) {
        const auto merged = detail::merge_supports(a.domain, a.conditionals[c], b.domain, b.conditionals[c]);
        total += metric == MetricKind::total_variation ? detail::tv_distance(merged)
                                                       : detail::w1_distance(merged);
    }
    return total / static_cast<double>(a.conditionals.size());
}

} // namespace smgi
