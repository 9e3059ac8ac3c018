#pragma once

#include <cstdint>
#include <vector>

#include "sips/field.hpp"

namespace sips {

/* DFTs over F_p at any length N dividing p - 1 = 2 * 3^2 * 5^2 * 7 * 11 *
 * 13 * 31 * 41 * 61 * 151 * 331 * 1321.  N splits into pairwise-coprime
 * prime-power components N_1 * ... * N_d, and the transform runs as a
 * d-dimensional DFT with index remapping (Good's mapping on the way in,
 * CRT reconstruction on the way out), so no twiddle corrections are
 * needed between stages.  Each component uses a quadratic-cost table
 * sub-DFT, giving O(N * sum(N_i)) total work.
 */

// Prime-power components of p - 1, pairwise coprime, product = p - 1.
inline constexpr uint64_t kOrderComponents[] = {2, 9, 25, 7, 11, 13, 31, 41, 61, 151, 331, 1321};
// Fixed generator of the multiplicative group.
inline constexpr uint64_t kGroupGenerator = 37;

// All divisors of p - 1 in increasing order (9216 of them).
const std::vector<uint64_t>& transform_lengths();

// Smallest admissible transform length >= min_len.
uint64_t choose_transform_length(uint64_t min_len);

// sum(N_i) over the prime-power components of N; the per-point work factor.
uint64_t transform_cost_factor(uint64_t n);

class TransformPlan {
public:
    explicit TransformPlan(uint64_t n);  // n must divide p - 1

    uint64_t length() const { return n_; }
    const std::vector<uint64_t>& components() const { return comps_; }
    Fp root() const { return root_; }  // principal N-th root of unity used

    // In-place DFT: data[k] <- sum_j data[j] * root^(jk).  Size must be N.
    void forward(std::vector<Fp>& data) const;
    // Inverse transform (root^-1 and 1/N scaling).
    void inverse(std::vector<Fp>& data) const;

    // Circular convolution c[k] = sum_j a[j] * b[(k - j) mod N]; inputs may
    // be shorter than N and are zero-padded.
    std::vector<Fp> convolve(std::vector<Fp> a, std::vector<Fp> b) const;

private:
    void run(std::vector<Fp>& data, const std::vector<std::vector<Fp>>& tables) const;

    uint64_t n_;
    Fp root_;
    Fp inv_n_;
    std::vector<uint64_t> comps_;
    std::vector<uint32_t> in_map_, out_map_;
    // tables[i][j*k mod N_i] pre-evaluated powers of the component root
    std::vector<std::vector<Fp>> fwd_tables_, inv_tables_;
};

}  // namespace sips
