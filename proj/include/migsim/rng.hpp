#pragma once

#include <cstdint>
#include <random>

#include "migsim/bytes.hpp"

namespace migsim {

/// Seeded deterministic generator. mt19937_64 output is pinned by the
/// standard, and all draws below are hand-rolled on top of the raw stream,
/// so the same seed yields the same sequence on every platform. The
/// simulation owns exactly one of these; crypto nonces, payload generation
/// and loss/duplication draws all pull from it.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

    /// Uniform double in [0, 1) with 53 bits of entropy.
    double real01() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    bool chance(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return real01() < p;
    }

    Bytes bytes(std::size_t n) {
        Bytes out(n);
        std::size_t i = 0;
        while (i < n) {
            std::uint64_t word = next_u64();
            for (int b = 0; b < 8 && i < n; ++b, ++i) {
                out[i] = static_cast<std::uint8_t>(word >> (8 * b));
            }
        }
        return out;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace migsim
