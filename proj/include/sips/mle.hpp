#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sips/field.hpp"

namespace sips {

/* Low-degree extension helpers.  Two flavors are used throughout:
 *
 *  - multilinear extensions over the boolean cube {0,1}^k, with variable
 *    order = bit order of the index, least significant bit first;
 *  - univariate Lagrange extension over an integer domain [0, M).
 */

// chi_index(r) = prod_j (bit_j(index) ? r_j : 1 - r_j)
inline Fp chi_point(uint64_t index, const std::vector<Fp>& r) {
    Fp acc = Fp::raw(1);
    for (size_t j = 0; j < r.size(); ++j)
        acc *= (index >> j) & 1 ? r[j] : Fp::raw(1) - r[j];
    return acc;
}

// eq(a, b) = prod_j (a_j b_j + (1-a_j)(1-b_j)); the MLE of [a == b].
inline Fp eq_points(const std::vector<Fp>& a, const std::vector<Fp>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("eq_points: length mismatch");
    Fp acc = Fp::raw(1);
    Fp one = Fp::raw(1);
    for (size_t j = 0; j < a.size(); ++j) acc *= a[j] * b[j] + (one - a[j]) * (one - b[j]);
    return acc;
}

// All chi values over the cube: out[i] = chi_i(r), built by doubling.
inline std::vector<Fp> chi_table(const std::vector<Fp>& r) {
    std::vector<Fp> t(size_t(1) << r.size());
    t[0] = Fp::raw(1);
    for (size_t j = 0; j < r.size(); ++j) {
        size_t half = size_t(1) << j;
        for (size_t i = half; i-- > 0;) {
            Fp hi = t[i] * r[j];
            t[i + half] = hi;
            t[i] -= hi;
        }
    }
    return t;
}

// Binds the lowest-order variable of a dense table to r, halving it.
inline void fold_once_inplace(std::vector<Fp>& t, Fp r) {
    size_t half = t.size() / 2;
    for (size_t i = 0; i < half; ++i) t[i] = t[2 * i] + r * (t[2 * i + 1] - t[2 * i]);
    t.resize(half);
}

// Multilinear extension of a dense table (size 2^k) at an arbitrary point.
inline Fp mle_eval(std::vector<Fp> table, const std::vector<Fp>& point) {
    if (table.size() != (size_t(1) << point.size()))
        throw std::invalid_argument("mle_eval: table size is not 2^|point|");
    for (Fp r : point) fold_once_inplace(table, r);
    return table[0];
}

/* Streaming fingerprint of the multilinear extension: processes updates
 * (index, delta) one at a time, O(k) field ops each, O(1) extra state. */
class MleFingerprint {
public:
    explicit MleFingerprint(std::vector<Fp> point) : r_(std::move(point)) {}

    void update(uint64_t index, Fp delta) { acc_ += delta * chi_point(index, r_); }
    Fp value() const { return acc_; }
    const std::vector<Fp>& point() const { return r_; }

private:
    std::vector<Fp> r_;
    Fp acc_;
};

/* Univariate Lagrange interpolation over the domain {0, 1, ..., M-1}.
 * The denominator table prod_{x != i} (i - x) is inverted once at
 * construction; after that, evaluating the full basis at a point is one
 * O(M) pass and extending a value vector is a dot product. */
class LagrangeDomain {
public:
    explicit LagrangeDomain(uint64_t m);

    uint64_t size() const { return m_; }

    // basis[i] = chi_i(r), the unique degree-(M-1) polynomial with
    // chi_i(x) = [x == i] on the domain.
    std::vector<Fp> basis_at(Fp r) const;

    // Value at r of the degree-(M-1) extension of vals (|vals| == M).
    Fp extend(const std::vector<Fp>& vals, Fp r) const;

    // 1 / prod_{x != i} (i - x); the weights barycentric evaluation needs.
    const std::vector<Fp>& denominator_inverses() const { return denom_inv_; }

private:
    uint64_t m_;
    std::vector<Fp> denom_inv_;
};

/* Evaluation of the two-variable grid extension used by the grid
 * protocols: data a is laid out a[y*h + x], f(x, y) agrees with it on
 * [0,h) x [0,w), degree h-1 in x and w-1 in y.  O(h*w) reference path. */
Fp grid_lde_eval(const std::vector<Fp>& a, uint64_t h, uint64_t w, Fp x, Fp y);

}  // namespace sips
