#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smgi/memory.hpp"

namespace smgi {

// One point of the induced state space: representation value (or symbolic
// tag), active hypothesis, policy parameters, memory, and an optional
// counter used by the finite fixture dynamics.
struct State {
    std::variant<double, std::string> representation_state = 0.0;
    std::string hypothesis_id;
    std::vector<double> policy_params;
    MemoryState memory;
    std::optional<std::int64_t> counter;

    friend bool operator==(const State&, const State&) = default;

    static State with_counter(std::int64_t c, std::string hypothesis = {}) {
        State s;
        s.counter = c;
        s.representation_state = static_cast<double>(c);
        s.hypothesis_id = std::move(hypothesis);
        return s;
    }

    std::string repr() const {
        std::string out;
        if (std::holds_alternative<double>(representation_state)) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(representation_state));
            out = buf;
        } else {
            out = std::get<std::string>(representation_state);
        }
        if (counter) out += "|c=" + std::to_string(*counter);
        if (!hypothesis_id.empty()) out += "|h=" + hypothesis_id;
        return out;
    }
};

} // namespace smgi
