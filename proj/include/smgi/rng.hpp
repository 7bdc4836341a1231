#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "smgi/errors.hpp"

namespace smgi {

// Deterministic random source. mt19937_64 output is bit-exact across
// implementations; the standard distributions are not, so uniform and
// discrete draws are derived from raw engine words here.
class RngState {
public:
    explicit RngState(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Inverse-CDF draw from a finite distribution; probabilities need not be
    // exactly normalized (the last positive entry absorbs rounding slack).
    std::size_t next_index(std::span<const double> probs) {
        if (probs.empty()) throw DomainError("next_index: empty distribution");
        const double u = next_unit();
        double cum = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) last_positive = i;
            cum += probs[i];
            if (u < cum) return i;
        }
        return last_positive;
    }

    std::size_t next_below(std::size_t n) {
        // Rejection-free modulo is fine here: n is tiny relative to 2^64.
        return static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 engine_;
};

// splitmix64: stateless hash used where a per-step deterministic value is
// needed without threading an engine through (e.g. context schedules).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double hash_unit(std::uint64_t x) {
    return static_cast<double>(splitmix64(x) >> 11) * 0x1.0p-53;
}

} // namespace smgi
