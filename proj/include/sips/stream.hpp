#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sips/field.hpp"

namespace sips {

/* Input model: a data stream of (index, delta) updates to a vector that
 * starts at zero.  Every protocol here sees the stream once, in order.
 *
 * Index space by problem:
 *   f2, f0   indices in [0, n), frequency vector a
 *   mvmult   indices in [0, n^2 + n): row-major A first, then x
 *   pmww     indices in [0, n + q): text positions, then pattern positions;
 *            delta is the symbol value, n means wildcard
 */

enum class Problem { F2, F0, MVMult, PMwW };

const char* problem_name(Problem p);
Problem parse_problem(const std::string& s);

struct StreamUpdate {
    uint64_t index;
    int64_t delta;
};

struct Stream {
    uint64_t n = 0;
    std::vector<StreamUpdate> updates;
};

/* Deterministic stream generators, one per problem.
 *   f2:     m updates, uniform index, delta in [-4, 12] \ {0}
 *   f0:     m occurrence updates (+1); if fmax > 0 no item exceeds fmax
 *   mvmult: dense delivery of A then x, small signed values, shuffled
 *           within each part (m is ignored)
 *   pmww:   text over alphabet min(n, 8) with planted pattern occurrences
 *           and occasional wildcards (never in the last pattern slot)
 */
Stream gen_stream(Problem problem, uint64_t n, uint64_t m, uint64_t q, uint64_t seed,
                  uint64_t fmax = 0);

// Replays the whole stream into a dense vector of the given size.
std::vector<int64_t> aggregate(const Stream& s, uint64_t slots);

// Aggregate reduced into the field (indices as above).
std::vector<Fp> aggregate_field(const Stream& s, uint64_t slots);

/* Reference answers, computed the obvious way.  These are the ground truth
 * the protocol tests compare against. */
Fp oracle_f2(const std::vector<int64_t>& a);
uint64_t oracle_f0(const std::vector<int64_t>& a);
// A is n x n row-major, x has length n; returns Ax over the field.
std::vector<Fp> oracle_mvmult(const std::vector<Fp>& ax, uint64_t n);
// Occurrences of pattern in text at offsets [0, n-q]; symbol `wildcard`
// matches anything.
uint64_t oracle_pmww(const std::vector<int64_t>& text, const std::vector<int64_t>& pattern,
                     int64_t wildcard);

/* Binary stream file ("SIPS1"): magic, u64 n, u64 update count, then
 * (u64 index, i64 delta) pairs, all little-endian. */
void save_stream(const Stream& s, const std::string& path);
Stream load_stream(const std::string& path);

}  // namespace sips
