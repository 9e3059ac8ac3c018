#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sips/field.hpp"
#include "sips/protocol.hpp"
#include "sips/stream.hpp"

namespace sips {

/* Sum-check engine: a claim about the sum of a polynomial over the boolean
 * cube is reduced one variable per round.  The prover's round message is
 * the univariate restriction evaluated at {0, 1, ..., deg}; the verifier
 * checks g(0) + g(1) against its running claim and re-binds the claim to
 * g(r) for a fresh challenge r.  Variables bind lowest index first, in the
 * same order fold_once_inplace consumes table bits. */

// Value at x of the degree-(m-1) polynomial through (i, evals[i]), i < m.
Fp extrapolate(const std::vector<Fp>& evals, Fp x);

// Honest round message for sum_x phi(T(x)) given the current dense table:
// deg+1 evaluations of sum_pairs phi((1-s) t0 + s t1) at s = 0..deg.
std::vector<Fp> table_round_message(const std::vector<Fp>& table, uint32_t deg,
                                    const std::function<Fp(Fp)>& phi);

class SumcheckState {
public:
    explicit SumcheckState(Fp claim) : claim_(claim) {}

    // false when g(0) + g(1) does not match the running claim
    bool round(const std::vector<Fp>& evals, Fp challenge);

    Fp claim() const { return claim_; }
    const std::vector<Fp>& point() const { return point_; }

private:
    Fp claim_;
    std::vector<Fp> point_;
};

/* Interactive second-moment protocol: one sum-check over f~(x)^2, deg 2
 * per round, final claim checked against the squared stream fingerprint.
 * The verifier's challenge sequence doubles as the fingerprint point and
 * is fixed by the seed before the stream is read. */
RunResult run_mrs_f2(const Stream& stream, const RunOptions& opt);

/* Interactive distinct-elements protocol for streams promising a maximum
 * frequency of fmax: sum-check over h(f~(x)) where h is the degree-fmax
 * interpolant with h(0) = 0 and h(t) = 1 on 1..fmax.  Round messages
 * carry fmax+1 evaluations. */
RunResult run_bounded_f0(const Stream& stream, uint64_t fmax, const RunOptions& opt);

}  // namespace sips
