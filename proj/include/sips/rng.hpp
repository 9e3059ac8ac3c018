#pragma once

#include <cstdint>

#include "sips/field.hpp"

namespace sips {

/* Deterministic seeded RNG (splitmix64).  Every random choice in the
 * toolkit flows through one of these so runs are reproducible from the
 * CLI --seed alone.  Not cryptographic; verifier challenges in this
 * artifact only need to be unpredictable to the modeled prover, and the
 * tests need replayability more than anything else. */

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) by rejection on the top multiple of bound.
    uint64_t next_below(uint64_t bound) {
        uint64_t limit = bound * (~0ull / bound);
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

    Fp next_field() {
        // 61-bit rejection; hits the reject branch with prob 2^-61.
        for (;;) {
            uint64_t x = next_u64() >> 3;
            if (x < Fp::P) return Fp::raw(x);
        }
    }

    // Field element outside {0,1}; used where a challenge of 0 or 1 would
    // let incremental prover bookkeeping divide by zero.
    Fp next_field_nontrivial() {
        for (;;) {
            Fp x = next_field();
            if (x.value() > 1) return x;
        }
    }

private:
    uint64_t state_;
};

}  // namespace sips
