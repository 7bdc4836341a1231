#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "smgi/memory.hpp"
#include "smgi/rng.hpp"

using namespace smgi;

namespace {

MemoryItem item(std::string key, double bits, bool prot = false) {
    MemoryItem it;
    it.key = std::move(key);
    it.payload = it.key;
    it.code_bits = bits;
    if (prot) it.protected_by = "core_constraint";
    return it;
}

// Additive loss model used across the forgetting tests: base plus a penalty
// for every dropped item.
MemoryLossFn drop_penalty_loss(const MemoryState& full, std::map<std::string, double> penalties,
                               double base) {
    return [full, penalties = std::move(penalties), base](const MemoryState& kept) {
        double loss = base;
        for (const auto& it : full.items)
            if (kept.find(it.key) == nullptr) loss += penalties.at(it.key);
        return loss;
    };
}

} // namespace

TEST_CASE("update_memory worked cases") {
    MemorySpec spec;
    MemoryState m;
    m.put(item("a", 2.0));

    SECTION("no-op leaves the state") {
        CHECK(update_memory(spec, m, 0.5, 0) == m);
    }
    SECTION("append on empty memory") {
        spec.update_kind = MemoryUpdateKind::append_observation;
        spec.item_code_bits = 2.0;
        const MemoryState out = update_memory(spec, MemoryState{}, 0.5, 1);
        REQUIRE(out.items.size() == 1);
        CHECK(out.total_bits() == 2.0);
        CHECK(out.items[0].regime_tag == 1);
    }
    SECTION("duplicate key replaces the payload, bits unchanged") {
        spec.update_kind = MemoryUpdateKind::append_observation;
        spec.item_code_bits = 2.0;
        MemoryState first = update_memory(spec, MemoryState{}, 0.5, 0);
        MemoryState second = update_memory(spec, first, 0.5, 1);
        REQUIRE(second.items.size() == 1);
        CHECK(second.total_bits() == first.total_bits());
        CHECK(second.items[0].regime_tag == 1);
    }
    SECTION("rule that drops a protected item is rejected") {
        MemoryState prot;
        prot.put(item("keep", 1.0, true));
        MemorySpec clearing;
        clearing.update_kind = MemoryUpdateKind::clear;
        CHECK_THROWS_AS(update_memory(clearing, prot, 0.0, 0), ProtectedItemRemoved);
        // Without protected items the same rule is fine.
        CHECK(update_memory(clearing, m, 0.0, 0).items.empty());
    }
}

TEST_CASE("memory distance is a weighted symmetric difference") {
    MemoryState a, b;
    a.put(item("x", 2.0));
    a.put(item("y", 3.0));
    b.put(item("y", 3.0));
    b.put(item("z", 5.0));
    CHECK(memory_distance(a, a) == 0.0);
    CHECK(memory_distance(a, b) == 7.0); // x (2) + z (5)
    CHECK(memory_distance(a, b) == memory_distance(b, a));
}

TEST_CASE("forget worked cases") {
    SECTION("lambda 0 with non-increasing loss keeps everything") {
        MemoryState m;
        m.put(item("a", 2.0));
        m.put(item("b", 3.0));
        MemorySpec spec;
        spec.forget_lambda = 0.0;
        const auto loss = drop_penalty_loss(m, {{"a", 0.1}, {"b", 0.1}}, 0.0);
        CHECK(forget(spec, m, loss, 0) == m);
    }
    SECTION("worked three-item instance: keep {a}, objective 0.55") {
        MemoryState m;
        m.put(item("a", 2.0));
        m.put(item("b", 3.0));
        m.put(item("c", 1.0));
        MemorySpec spec;
        spec.forget_lambda = 0.1;
        const auto loss = drop_penalty_loss(m, {{"a", 0.4}, {"b", 0.1}, {"c", 0.05}}, 0.2);
        const ForgetResult out = forget_detailed(spec, m, loss, 0);
        REQUIRE(out.exact);
        REQUIRE(out.state.items.size() == 1);
        CHECK(out.state.items[0].key == "a");
        CHECK_THAT(out.objective, Catch::Matchers::WithinAbs(0.55, 1e-15));
    }
    SECTION("protected item constrains every candidate subset") {
        MemoryState m;
        m.put(item("a", 2.0, true));
        m.put(item("b", 3.0));
        m.put(item("c", 1.0));
        MemorySpec spec;
        spec.forget_lambda = 10.0; // heavy pressure would drop everything unprotected
        const auto loss = drop_penalty_loss(m, {{"a", 0.4}, {"b", 0.1}, {"c", 0.05}}, 0.2);
        const MemoryState out = forget(spec, m, loss, 0);
        CHECK(out.find("a") != nullptr);
        CHECK(out.items.size() == 1);
    }
}

TEST_CASE("forget matches the exhaustive oracle on random instances") {
    RngState rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.next_below(12);
        MemoryState m;
        std::map<std::string, double> penalties;
        for (std::size_t i = 0; i < n; ++i) {
            char key[8];
            std::snprintf(key, sizeof(key), "i%02zu", i);
            const bool prot = rng.next_below(8) == 0;
            m.put(item(key, 0.5 + rng.next_unit() * 4.0, prot));
            penalties[key] = rng.next_unit();
        }
        MemorySpec spec;
        spec.forget_lambda = rng.next_unit() * 0.5;
        const auto loss = drop_penalty_loss(m, penalties, rng.next_unit());
        const ForgetResult got = forget_detailed(spec, m, loss, 0);
        REQUIRE(got.exact);

        // Independent oracle: recursive enumeration over drop decisions.
        double best = std::numeric_limits<double>::infinity();
        std::vector<const MemoryItem*> optional;
        MemoryState protected_only;
        for (const auto& it : m.items) {
            if (it.is_protected()) protected_only.put(it);
            else optional.push_back(&it);
        }
        const std::size_t subsets = 1u << optional.size();
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            MemoryState kept = protected_only;
            for (std::size_t b = 0; b < optional.size(); ++b)
                if (mask & (1u << b)) kept.put(*optional[b]);
            best = std::min(best, loss(kept) + spec.forget_lambda * kept.total_bits());
        }
        REQUIRE_THAT(got.objective, Catch::Matchers::WithinAbs(best, 1e-12));
        for (const auto& it : m.items)
            if (it.is_protected()) REQUIRE(got.state.find(it.key) != nullptr);
    }
}

TEST_CASE("kept bits are monotone non-increasing in lambda") {
    MemoryState m;
    for (int i = 0; i < 10; ++i) m.put(item("k" + std::to_string(i), 1.0 + i * 0.3));
    std::map<std::string, double> penalties;
    RngState rng(7);
    for (const auto& it : m.items) penalties[it.key] = rng.next_unit();
    const auto loss = drop_penalty_loss(m, penalties, 0.1);

    double previous_bits = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 5.0}) {
        MemorySpec spec;
        spec.forget_lambda = lambda;
        const double bits = forget(spec, m, loss, 0).total_bits();
        REQUIRE(bits <= previous_bits + 1e-12);
        previous_bits = bits;
    }
}

TEST_CASE("forget then no-op update does not grow total bits") {
    MemoryState m;
    m.put(item("a", 2.0));
    m.put(item("b", 4.0));
    MemorySpec spec;
    spec.forget_lambda = 0.3;
    const auto loss = drop_penalty_loss(m, {{"a", 0.2}, {"b", 0.05}}, 0.0);
    const MemoryState compressed = forget(spec, m, loss, 0);
    const MemoryState updated = update_memory(spec, compressed, 0.0, 0);
    CHECK(updated.total_bits() <= m.total_bits());
}

TEST_CASE("check_nonexpansive worked cases") {
    MemoryState a, b;
    a.put(item("x", 2.0));
    b.put(item("y", 2.0));

    SECTION("identity update is non-expansive") {
        MemorySpec spec; // no_op
        const auto report = check_nonexpansive(spec, {{a, b}, {a, a}}, {0.0, 1.0}, 0);
        CHECK(report.pass);
        CHECK(report.evidence.at("max_ratio") <= 1.0);
    }
    SECTION("duplicating rule expands by a factor of two") {
        MemorySpec spec;
        spec.update_kind = MemoryUpdateKind::duplicate_all;
        const auto report = check_nonexpansive(spec, {{a, b}}, {0.0}, 0);
        CHECK_FALSE(report.pass);
        CHECK_THAT(report.evidence.at("max_ratio"), Catch::Matchers::WithinAbs(2.0, 1e-12));
    }
    SECTION("forget with a fixed loss map is non-expansive on small pairs") {
        MemorySpec spec;
        spec.forget_lambda = 0.2;
        // Fixed loss: bits kept (cheaper to drop everything unprotected);
        // checked exhaustively over all pairs of subsets of 6 items.
        std::vector<MemoryItem> pool;
        for (int i = 0; i < 6; ++i) pool.push_back(item("p" + std::to_string(i), 1.0 + 0.25 * i));
        auto fixed_loss = [](const MemoryState& kept) { return 0.05 * kept.total_bits(); };
        auto op = [&](const MemoryState& state) { return forget(spec, state, fixed_loss, 0); };

        std::vector<MemoryState> subsets;
        for (std::size_t mask = 0; mask < 64; ++mask) {
            MemoryState s;
            for (std::size_t bit = 0; bit < 6; ++bit)
                if (mask & (1u << bit)) s.put(pool[bit]);
            subsets.push_back(std::move(s));
        }
        std::vector<std::pair<MemoryState, MemoryState>> pairs;
        for (std::size_t i = 0; i < subsets.size(); ++i)
            for (std::size_t j = i + 1; j < subsets.size(); j += 7) pairs.emplace_back(subsets[i], subsets[j]);
        const auto report = check_nonexpansive_op(op, pairs);
        CHECK(report.pass);
    }
}
