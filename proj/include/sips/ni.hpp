#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sips/protocol.hpp"
#include "sips/stream.hpp"

namespace sips {

/* One-message protocols: the verifier makes one pass over the stream
 * keeping a grid fingerprint, then checks a short prover payload.
 *
 * Grid convention everywhere: index i sits at column x = i mod h,
 * row y = i div h; data cell (x, y) = a[y*h + x].
 */

struct GridShape {
    uint64_t h = 0;        // grid height; payload rows cover [0, 2h)
    uint64_t w = 0;        // grid width, ceil(n / h)
    uint64_t fft_len = 0;  // 0: quadratic prover; else transform length >= 2h
};

// Square-ish grid for the quadratic prover.
GridShape plan_grid_naive(uint64_t n);
// Transform-friendly grid: picks the admissible length minimizing modeled
// prover work (columns * transform cost), h = floor(len / 2).
GridShape plan_grid_fft(uint64_t n);

/* F2: payload is s(X) for X in [0, 2h), where s(X) = sum_y f(X, y)^2 and
 * f extends each grid row polynomially in the column coordinate. */
std::vector<Fp> ni_f2_payload(const std::vector<Fp>& a, const GridShape& g);

RunResult run_ni_f2(const Stream& s, const GridShape& g, const RunOptions& opt);

/* Matrix-vector multiplication.  The prover ships b = Ax; with h > 1 it
 * also ships one 2h-word row block per row so the verifier can keep a
 * width-w fingerprint instead of a length-n one.
 *
 * h = 1 is the minimal-communication corner (payload exactly b, verifier
 * state n + O(1) words); it requires every A update to arrive before any
 * x update, which the standard encoding already guarantees. */
struct MvShape {
    uint64_t n = 0;
    uint64_t h = 1;  // column-grid height; 1 disables row blocks
    uint64_t w = 1;  // ceil(n / h)
};

MvShape plan_mv_shape(uint64_t n, uint32_t alpha_num, uint32_t alpha_den);

// Row blocks for h > 1: blocks[i] holds s_i(X), X in [0, 2h).
std::vector<std::vector<Fp>> ni_mv_row_blocks(const std::vector<Fp>& ax, const MvShape& shape);

RunResult run_ni_mvmult(const Stream& s, const MvShape& shape, const RunOptions& opt);

/* Proof files ("SIPNI1"): header (magic, u8 protocol id), protocol header,
 * u64 word count, then the payload words.
 *   id 1 (f2):     u64 n, u64 h, u64 w
 *   id 2 (mvmult): u64 n, u32 alpha_num, u32 alpha_den, u64 h
 */
struct NiProof {
    uint8_t protocol = 0;  // 1 = f2, 2 = mvmult
    uint64_t n = 0;
    uint64_t h = 0, w = 0;             // f2
    uint32_t alpha_num = 0, alpha_den = 1;  // mvmult
    std::vector<Fp> payload;
};

void save_ni_proof(const NiProof& p, const std::string& path);
NiProof load_ni_proof(const std::string& path);

// Verifier-only runs against a stored payload (no prover side).
RunResult verify_ni_f2_payload(const Stream& s, const GridShape& g,
                               const std::vector<Fp>& payload, uint64_t seed);
RunResult verify_ni_mvmult_payload(const Stream& s, const MvShape& shape,
                                   const std::vector<Fp>& payload, uint64_t seed);

}  // namespace sips
