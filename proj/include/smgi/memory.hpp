#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "smgi/errors.hpp"
#include "smgi/report.hpp"

namespace smgi {

// One stored record. Protected items carry the name of the core constraint
// that pins them; an item is protected iff protected_by is set.
struct MemoryItem {
    std::string key;
    std::string payload;
    double code_bits = 1.0;
    int regime_tag = 0;
    std::optional<std::string> protected_by;

    bool is_protected() const { return protected_by.has_value(); }

    friend bool operator==(const MemoryItem&, const MemoryItem&) = default;
};

// Finite item set, keyed and kept in canonical (key-sorted) order.
struct MemoryState {
    std::vector<MemoryItem> items; // sorted by key, unique keys

    double total_bits() const {
        double bits = 0.0;
        for (const auto& it : items) bits += it.code_bits;
        return bits;
    }

    const MemoryItem* find(const std::string& key) const {
        for (const auto& it : items)
            if (it.key == key) return &it;
        return nullptr;
    }

    // Insert-or-replace, preserving key order.
    void put(MemoryItem item) {
        auto pos = std::lower_bound(items.begin(), items.end(), item.key,
                                    [](const MemoryItem& a, const std::string& k) { return a.key < k; });
        if (pos != items.end() && pos->key == item.key)
            *pos = std::move(item);
        else
            items.insert(pos, std::move(item));
    }

    friend bool operator==(const MemoryState&, const MemoryState&) = default;
};

enum class MemoryUpdateKind {
    no_op,
    append_observation, // insert an item keyed by the observation value
    duplicate_all,      // expansive fixture: re-insert every item under a forked key
    clear,              // drop everything; mis-specified whenever protected items exist
};

enum class MemoryMetric {
    weighted_symmetric_difference, // sum of code_bits over items present in exactly one state
};

struct MemorySpec {
    MemoryUpdateKind update_kind = MemoryUpdateKind::no_op;
    double item_code_bits = 1.0;  // code length assigned to appended items
    double forget_lambda = 0.0;   // compression pressure per bit
    MemoryMetric metric = MemoryMetric::weighted_symmetric_difference;

    friend bool operator==(const MemorySpec&, const MemorySpec&) = default;
};

inline double memory_distance(const MemoryState& a, const MemoryState& b,
                              MemoryMetric /*metric*/ = MemoryMetric::weighted_symmetric_difference) {
    double d = 0.0;
    for (const auto& it : a.items) {
        const MemoryItem* other = b.find(it.key);
        if (other == nullptr || !(*other == it)) d += it.code_bits;
    }
    for (const auto& it : b.items) {
        const MemoryItem* other = a.find(it.key);
        if (other == nullptr || !(*other == it)) d += it.code_bits;
    }
    return d;
}

namespace detail {
inline std::string format_observation_key(double z) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "obs:%.17g", z);
    return buf;
}
} // namespace detail

// m_{t+1} = U(m_t, z_t, k_t). Protected items survive every declared rule;
// a rule that drops one signals a mis-specified update.
inline MemoryState update_memory(const MemorySpec& spec, const MemoryState& m, double z, int regime) {
    MemoryState out = m;
    switch (spec.update_kind) {
        case MemoryUpdateKind::no_op:
            break;
        case MemoryUpdateKind::append_observation: {
            MemoryItem item;
            item.key = detail::format_observation_key(z);
            item.payload = item.key;
            item.code_bits = spec.item_code_bits;
            item.regime_tag = regime;
            out.put(std::move(item));
            break;
        }
        case MemoryUpdateKind::duplicate_all: {
            for (const auto& it : m.items) {
                MemoryItem copy = it;
                copy.key = it.key + "#dup";
                copy.protected_by.reset();
                out.put(std::move(copy));
            }
            break;
        }
        case MemoryUpdateKind::clear:
            out.items.clear();
            break;
    }
    for (const auto& it : m.items) {
        if (!it.is_protected()) continue;
        const MemoryItem* kept = out.find(it.key);
        if (kept == nullptr)
            throw ProtectedItemRemoved("update rule removed protected item '" + it.key + "'");
    }
    return out;
}

// Loss of acting from a kept memory subset; total on every subset that
// contains the protected items.
using MemoryLossFn = std::function<double(const MemoryState&)>;

struct ForgetResult {
    MemoryState state;
    double objective = 0.0;
    bool exact = true; // exhaustive minimization (item count <= forget_exact_limit)
};

inline constexpr std::size_t forget_exact_limit = 20;

namespace detail {

inline MemoryState subset_state(const MemoryState& m, const std::vector<std::size_t>& optional_idx,
                                std::uint32_t mask) {
    MemoryState kept;
    std::vector<bool> keep(m.items.size(), false);
    for (std::size_t i = 0; i < m.items.size(); ++i)
        if (m.items[i].is_protected()) keep[i] = true;
    for (std::size_t b = 0; b < optional_idx.size(); ++b)
        if (mask & (1u << b)) keep[optional_idx[b]] = true;
    for (std::size_t i = 0; i < m.items.size(); ++i)
        if (keep[i]) kept.items.push_back(m.items[i]);
    return kept;
}

// Lexicographic comparison of key sequences (used for deterministic ties).
inline bool keys_less(const MemoryState& a, const MemoryState& b) {
    const std::size_t n = std::min(a.items.size(), b.items.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a.items[i].key != b.items[i].key) return a.items[i].key < b.items[i].key;
    }
    return a.items.size() < b.items.size();
}

} // namespace detail

// Forgetting as constrained compression: keep the subset minimizing
// loss(kept) + lambda * bits(kept) subject to retaining protected items.
// Exhaustive (exact) up to forget_exact_limit items; greedy beyond, with
// exact=false in the result. Ties break toward smaller kept bits, then
// lexicographic key order.
inline ForgetResult forget_detailed(const MemorySpec& spec, const MemoryState& m,
                                    const MemoryLossFn& loss_given_memory, int /*regime*/,
                                    const std::string& /*context*/ = {}) {
    std::vector<std::size_t> optional_idx;
    for (std::size_t i = 0; i < m.items.size(); ++i)
        if (!m.items[i].is_protected()) optional_idx.push_back(i);

    const double lambda = spec.forget_lambda;
    ForgetResult best;

    if (m.items.size() <= forget_exact_limit) {
        bool have = false;
        const std::uint32_t limit = 1u << optional_idx.size();
        for (std::uint32_t mask = 0; mask < limit; ++mask) {
            MemoryState kept = detail::subset_state(m, optional_idx, mask);
            const double obj = loss_given_memory(kept) + lambda * kept.total_bits();
            bool better = !have || obj < best.objective;
            if (!better && obj == best.objective) {
                const double bits = kept.total_bits();
                const double best_bits = best.state.total_bits();
                better = bits < best_bits ||
                         (bits == best_bits && detail::keys_less(kept, best.state));
            }
            if (better) {
                best.state = std::move(kept);
                best.objective = obj;
                have = true;
            }
        }
        best.exact = true;
        return best;
    }

    // Greedy descent: start from everything, drop the single unprotected item
    // whose removal improves the objective most, until no drop helps.
    MemoryState current = m;
    double current_obj = loss_given_memory(current) + lambda * current.total_bits();
    bool improved = true;
    while (improved) {
        improved = false;
        std::size_t best_drop = 0;
        double best_obj = current_obj;
        for (std::size_t i = 0; i < current.items.size(); ++i) {
            if (current.items[i].is_protected()) continue;
            MemoryState candidate = current;
            candidate.items.erase(candidate.items.begin() + static_cast<std::ptrdiff_t>(i));
            const double obj = loss_given_memory(candidate) + lambda * candidate.total_bits();
            if (obj < best_obj) {
                best_obj = obj;
                best_drop = i;
                improved = true;
            }
        }
        if (improved) {
            current.items.erase(current.items.begin() + static_cast<std::ptrdiff_t>(best_drop));
            current_obj = best_obj;
        }
    }
    best.state = std::move(current);
    best.objective = current_obj;
    best.exact = false;
    return best;
}

inline MemoryState forget(const MemorySpec& spec, const MemoryState& m,
                          const MemoryLossFn& loss_given_memory, int regime,
                          const std::string& context = {}) {
    return forget_detailed(spec, m, loss_given_memory, regime, context).state;
}

// Sampled non-expansiveness evidence for an arbitrary memory operator:
// d(G(m1), G(m2)) <= d(m1, m2) on every probed pair. Pairs at distance 0
// must stay at distance 0.
inline CertificateReport check_nonexpansive_op(const std::function<MemoryState(const MemoryState&)>& op,
                                               const std::vector<std::pair<MemoryState, MemoryState>>& pairs,
                                               MemoryMetric metric = MemoryMetric::weighted_symmetric_difference) {
    CertificateReport report;
    report.obligation = Obligation::stability;
    report.name = "memory_nonexpansive";
    report.mode = CheckMode::sampled;
    report.pass = true;
    double max_ratio = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double before = memory_distance(pairs[i].first, pairs[i].second, metric);
        const double after = memory_distance(op(pairs[i].first), op(pairs[i].second), metric);
        if (before == 0.0) {
            if (after > 0.0) {
                report.pass = false;
                report.witnesses.push_back("pair " + std::to_string(i) + ": expanded from distance 0");
                max_ratio = std::numeric_limits<double>::infinity();
            }
            continue;
        }
        const double ratio = after / before;
        max_ratio = std::max(max_ratio, ratio);
        if (after > before + 1e-12) {
            report.pass = false;
            report.witnesses.push_back("pair " + std::to_string(i) + ": d " + std::to_string(before) +
                                       " -> " + std::to_string(after));
        }
    }
    report.evidence["max_ratio"] = max_ratio;
    report.evidence["sample_count"] = static_cast<double>(pairs.size());
    report.evidence["confidence_radius"] = 0.0; // deterministic evaluation of the sampled pairs
    return report;
}

// Spec-shaped entry point: checks the update operator U(., z, k) for each z
// in the stream against all sampled pairs.
inline CertificateReport check_nonexpansive(const MemorySpec& spec,
                                            const std::vector<std::pair<MemoryState, MemoryState>>& pairs,
                                            const std::vector<double>& z_stream, int regime) {
    CertificateReport merged;
    merged.obligation = Obligation::stability;
    merged.name = "memory_nonexpansive";
    merged.mode = CheckMode::sampled;
    merged.pass = true;
    double max_ratio = 0.0;
    double samples = 0.0;
    for (double z : z_stream) {
        auto op = [&](const MemoryState& m) { return update_memory(spec, m, z, regime); };
        CertificateReport r = check_nonexpansive_op(op, pairs, spec.metric);
        merged.pass = merged.pass && r.pass;
        max_ratio = std::max(max_ratio, r.evidence["max_ratio"]);
        samples += r.evidence["sample_count"];
        for (auto& w : r.witnesses) merged.witnesses.push_back("z=" + std::to_string(z) + " " + w);
    }
    merged.evidence["max_ratio"] = max_ratio;
    merged.evidence["sample_count"] = samples;
    merged.evidence["confidence_radius"] = 0.0;
    return merged;
}

} // namespace smgi
