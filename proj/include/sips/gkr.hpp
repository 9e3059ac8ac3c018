#pragma once

#include <cstdint>
#include <vector>

#include "sips/circuit.hpp"
#include "sips/protocol.hpp"
#include "sips/stream.hpp"
#include "sips/transport.hpp"

namespace sips {

/* Circuit-checking interactive protocol.  The claim about the circuit
 * output descends layer by layer: each layer runs one sum-check over
 *
 *   beta_z(p) * [ add(p,w1,w2) (V(w1)+V(w2)) + mult(p,w1,w2) V(w1)V(w2)
 *                 + pow(p,w1,w2) (V(w1)V(w2))^j + one(p,w1,w2) ]
 *
 * with v_out rounds binding p and 2 v_in rounds binding w1, w2, then the
 * two V claims collapse to one point on the line (1-t) w1* + t w2*.  The
 * last layer's claim lands on the input extension, which the verifier
 * fingerprints from the stream; every challenge comes from the seeded
 * RNG, so the fingerprint point is known before the stream is read.
 *
 * Circuits whose top layer is wider than one value are finished with a
 * plain sum over that layer: the prover claims the total and one extra
 * sum-check (3-evaluation messages) reduces it to a point claim.
 *
 * mvmult runs carry the claimed product vector b as a prover preamble;
 * the verifier folds -b into its input fingerprint and insists the
 * mismatch-count output is zero, so accepting means b = Ax.
 */

struct GkrOptions {
    // evaluate wiring predicates in closed form; false walks every gate
    bool closed_form_wiring = true;
    // precompute the per-layer wiring values and the input point from the
    // coin script before any message flows (verifier-side offline phase)
    bool preprocess = false;
};

// Message/word counts determined by the circuit shape alone.
struct GkrStructure {
    uint64_t sumcheck_rounds = 0;    // round messages across all sum-checks
    uint64_t prover_messages = 0;    // output + rounds + line frames + b chunks
    uint64_t verifier_messages = 0;  // challenges, including line reductions
    uint64_t prover_words = 0;       // payload words prover -> verifier
    uint64_t verifier_words = 0;
};
GkrStructure gkr_structure(const Circuit& c);

// Point on the line through a (t=0) and b (t=1).
std::vector<Fp> line_point(const std::vector<Fp>& a, const std::vector<Fp>& b, Fp t);

// Restriction of table's multilinear extension to that line, as degree-v
// evaluations at t = 0..v.
std::vector<Fp> line_restriction(const std::vector<Fp>& table, const std::vector<Fp>& a,
                                 const std::vector<Fp>& b);

// Dense input vector in the circuit's layout, aggregated from the stream.
std::vector<Fp> gkr_input_from_stream(const Circuit& c, const Stream& s);

// Honest prover; input must match the circuit's dense input layout.
void gkr_prove(const Circuit& c, std::vector<Fp> input, Endpoint& ep);

// Streaming verifier; reads the stream once against the coin-determined
// fingerprint point and drives the rounds from the same seed.
RunResult gkr_verify_stream(const Circuit& c, const Stream& s, uint64_t seed, Endpoint& ep,
                            const GkrOptions& gopt = {});

// Runs both sides over a transport and fills in the cost report.
RunResult run_gkr(const Stream& s, const Circuit& c, const RunOptions& opt,
                  const GkrOptions& gopt = {});

}  // namespace sips
