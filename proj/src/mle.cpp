#include "sips/mle.hpp"

namespace sips {

LagrangeDomain::LagrangeDomain(uint64_t m) : m_(m) {
    if (m == 0) throw std::invalid_argument("LagrangeDomain: empty domain");
    // denom[i] = prod_{x != i} (i - x) = (-1)^(M-1-i) * i! * (M-1-i)!
    std::vector<Fp> fact(m);
    fact[0] = Fp::raw(1);
    for (uint64_t i = 1; i < m; ++i) fact[i] = fact[i - 1] * Fp(i);
    denom_inv_.resize(m);
    for (uint64_t i = 0; i < m; ++i) {
        Fp d = fact[i] * fact[m - 1 - i];
        if ((m - 1 - i) & 1) d = -d;
        denom_inv_[i] = d;
    }
    fp_batch_inverse(denom_inv_);
}

std::vector<Fp> LagrangeDomain::basis_at(Fp r) const {
    std::vector<Fp> basis(m_);
    uint64_t rv = r.value();
    if (rv < m_) {  // on-domain point: exact indicator, no division
        for (uint64_t i = 0; i < m_; ++i) basis[i] = Fp::raw(i == rv ? 1 : 0);
        return basis;
    }
    // chi_i(r) = W(r) * denom_inv[i] / (r - i), W(r) = prod_x (r - x)
    std::vector<Fp> diff(m_);
    Fp w = Fp::raw(1);
    for (uint64_t i = 0; i < m_; ++i) {
        diff[i] = r - Fp(i);
        w *= diff[i];
    }
    fp_batch_inverse(diff);
    for (uint64_t i = 0; i < m_; ++i) basis[i] = w * denom_inv_[i] * diff[i];
    return basis;
}

Fp LagrangeDomain::extend(const std::vector<Fp>& vals, Fp r) const {
    if (vals.size() != m_) throw std::invalid_argument("LagrangeDomain::extend: size mismatch");
    std::vector<Fp> basis = basis_at(r);
    Fp acc;
    for (uint64_t i = 0; i < m_; ++i) acc += vals[i] * basis[i];
    return acc;
}

Fp grid_lde_eval(const std::vector<Fp>& a, uint64_t h, uint64_t w, Fp x, Fp y) {
    if (a.size() != h * w) throw std::invalid_argument("grid_lde_eval: bad layout");
    LagrangeDomain dx(h), dy(w);
    std::vector<Fp> bx = dx.basis_at(x);
    std::vector<Fp> by = dy.basis_at(y);
    Fp acc;
    for (uint64_t j = 0; j < w; ++j) {
        Fp col;
        for (uint64_t i = 0; i < h; ++i) col += a[j * h + i] * bx[i];
        acc += col * by[j];
    }
    return acc;
}

}  // namespace sips
