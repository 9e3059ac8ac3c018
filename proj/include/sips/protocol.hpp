#pragma once

#include <cstdint>
#include <string>

#include "sips/field.hpp"
#include "sips/transport.hpp"

namespace sips {

/* Options shared by every protocol runner.  The seed feeds both the
 * verifier's challenge draws and nothing else; provers are deterministic
 * functions of the data.  adversary_word >= 0 bumps that prover payload
 * word by one on its way into the verifier, for soundness experiments. */
struct RunOptions {
    uint64_t seed = 1;
    TransportKind transport = TransportKind::Memory;
    int64_t adversary_word = -1;
    bool record_transcript = false;
};

struct RunResult {
    bool accepted = false;
    Fp answer;            // protocol-defined scalar (e.g. F2 value, F0 count)
    std::string detail;   // reject reason or empty
    CostReport cost;
};

}  // namespace sips
