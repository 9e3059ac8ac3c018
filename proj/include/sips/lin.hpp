#pragma once

#include <cstdint>
#include <vector>

#include "sips/field.hpp"
#include "sips/protocol.hpp"
#include "sips/stream.hpp"
#include "sips/transport.hpp"

namespace sips {

/* Operator-expression protocols: the answer is written as a chain of
 * quantifier-like operators applied to the multilinear extension f of a
 * 0/1 base array on {0,1}^d, and the chain is verified one operator per
 * round, outermost first.
 *
 *   Sum(k)   adds the two restrictions of variable k
 *   Or(k)    g|0 + g|1 - g|0 g|1    (boolean OR on 0/1 inputs)
 *   And(k)   g|0 * g|1
 *   Lin(i)   X_i g|1 + (1 - X_i) g|0  (re-linearizes variable i)
 *
 * Every Or/And is preceded by Lin operators restoring multilinearity, so
 * round messages have degree at most 2: Sum/Or/And rounds carry s(0), s(1)
 * and Lin rounds carry s(0), s(1), s(2).  The verifier's whole challenge
 * script is drawn from the seed before the stream is read; the final
 * binding of each variable doubles as the fingerprint point, so the last
 * check is s(a) against the streamed f(r).
 *
 * Base arrays.  For distinct elements (f0) the array is indexed by
 * (item, position): cell (i, j) is 1 iff the j'th update is an occurrence
 * of item i; positions pad to a power of two.  The expression sums over
 * item bits and ORs over position bits.  For pattern matching (pmww) the
 * array is indexed by (offset, slot, symbol, side): side 0 holds
 * "text has symbol c at offset+slot", side 1 "pattern has symbol c at
 * slot", with symbols shifted up by one, wildcards owning every symbol
 * row, and off-text cells owning a sentinel symbol no pattern can name.
 * And over the side bit, Or over symbol bits and And over slot bits leave
 * the match indicator per offset; the leading sums count matches.
 *
 * Stream contract: f0 streams are unit occurrence updates; pmww streams
 * assign every text and pattern position exactly once and must not end
 * the pattern with a wildcard.
 */

enum class LinOpKind : uint8_t { Sum, Or, And, Lin };

struct LinOp {
    LinOpKind kind;
    uint32_t var;  // cube bit index, lowest bit is 0
};

struct LinExpression {
    Problem problem = Problem::F0;
    uint32_t d = 0;     // cube dimension
    uint32_t sums = 0;  // leading Sum rounds, binding variables 0..sums-1
    uint64_t n = 0, m = 0, q = 0, alphabet = 0;
    // pmww bit-field widths, low to high: offset, slot, symbol, side
    uint32_t off_bits = 0, slot_bits = 0, sym_bits = 0;
    std::vector<LinOp> ops;  // strip order: outermost operator first

    uint32_t lin_rounds() const;
    // total prover payload words: 1 claim + 2 or 3 per round
    uint64_t message_words() const;
};

/* Expression builders.  f0 takes the item range n and the stream length
 * m; pmww takes the text length n, pattern length q and the symbol
 * alphabet size (0 derives the generator's min(n, 8)).  Sizes round up
 * to powers of two internally.  Consuming operators bind variables in
 * increasing order, each preceded by re-linearization of everything
 * below it. */
LinExpression build_expression(Problem problem, uint64_t n, uint64_t m, uint64_t q = 0,
                               uint64_t alphabet = 0);

/* Base cells of the 0/1 array for a concrete stream, as cube indices,
 * sorted so that reversed bit strings ascend (the order the prover's
 * fold levels need).  Throws on streams breaking the contract above. */
std::vector<uint64_t> lin_base_keys(const LinExpression& e, const Stream& s);

// f(r) for the same base array, one streaming pass, O(d) state.
Fp lin_fingerprint(const LinExpression& e, const Stream& s, const std::vector<Fp>& r);

void lin_prove(const LinExpression& e, const Stream& s, Endpoint& ep);
RunResult lin_verify_stream(const LinExpression& e, const Stream& s, uint64_t seed,
                            Endpoint& ep);

RunResult run_lin_f0(const Stream& s, const RunOptions& opt);
RunResult run_lin_pm(const Stream& s, uint64_t q, uint64_t alphabet, const RunOptions& opt);

/* Test oracle: a polynomial of per-variable degree <= 2 tabulated on the
 * grid {0,1,2}^vars, index = sum of digit_t * 3^t.  apply_operator is the
 * literal operator semantics; chains of it brute-force tiny instances. */
struct PolyGrid {
    uint32_t vars = 0;
    std::vector<Fp> values;
};

// Grid table of the multilinear extension of a dense cube (size 2^k).
PolyGrid grid_from_cube(const std::vector<Fp>& cube);
PolyGrid apply_operator(const LinOp& op, const PolyGrid& g);
// Applies e.ops right to left to the base cube and returns the scalar.
Fp evaluate_expression(const LinExpression& e, const std::vector<Fp>& cube);

}  // namespace sips
