#include "sips/pfa.hpp"

#include <algorithm>
#include <stdexcept>

namespace sips {

namespace {

constexpr uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 31, 41, 61, 151, 331, 1321};

void self_check() {
    static bool done = false;
    if (done) return;
    unsigned __int128 prod = 1;
    for (uint64_t c : kOrderComponents) prod *= c;
    if (prod != static_cast<unsigned __int128>(Fp::P - 1))
        throw std::logic_error("order components do not multiply to p-1");
    Fp g(kGroupGenerator);
    if (g.pow(Fp::P - 1) != Fp(1)) throw std::logic_error("generator order check failed");
    for (uint64_t q : kPrimes)
        if (g.pow((Fp::P - 1) / q) == Fp(1))
            throw std::logic_error("generator has non-maximal order");
    done = true;
}

}  // namespace

const std::vector<uint64_t>& transform_lengths() {
    static const std::vector<uint64_t> lengths = [] {
        self_check();
        std::vector<uint64_t> divs = {1};
        for (uint64_t c : kOrderComponents) {
            // c = q^e; extend the divisor set by powers of q
            uint64_t q = c;
            for (uint64_t p : kPrimes)
                if (c % p == 0) q = p;
            size_t base = divs.size();
            uint64_t pw = 1;
            while (pw < c) {
                pw *= q;
                for (size_t i = 0; i < base; ++i) divs.push_back(divs[i] * pw);
            }
        }
        std::sort(divs.begin(), divs.end());
        return divs;
    }();
    return lengths;
}

uint64_t choose_transform_length(uint64_t min_len) {
    const auto& lens = transform_lengths();
    auto it = std::lower_bound(lens.begin(), lens.end(), min_len);
    if (it == lens.end()) throw std::invalid_argument("no admissible transform length that long");
    return *it;
}

uint64_t transform_cost_factor(uint64_t n) {
    if (n == 0 || (Fp::P - 1) % n != 0)
        throw std::invalid_argument("length does not divide p-1");
    uint64_t sum = 0;
    for (uint64_t q : kPrimes) {
        if (n % q) continue;
        uint64_t pw = 1;
        while (n % (pw * q) == 0) pw *= q;
        sum += pw;
        n /= pw;
    }
    if (n != 1) throw std::invalid_argument("length does not divide p-1");
    return sum;
}

TransformPlan::TransformPlan(uint64_t n) : n_(n) {
    self_check();
    if (n == 0 || (Fp::P - 1) % n != 0)
        throw std::invalid_argument("transform length must divide p-1");
    if (n > (1ull << 26)) throw std::invalid_argument("transform length too large to plan");

    root_ = Fp(kGroupGenerator).pow((Fp::P - 1) / n);
    inv_n_ = Fp(n).inv();
    for (uint64_t q : kPrimes) {
        if (n % q) continue;
        uint64_t pw = 1;
        while (n % (pw * q) == 0) pw *= q;
        comps_.push_back(pw);
    }

    // Good's mapping in: index(j_1..j_d) = sum j_i * M_i  (mod N), M_i = N/N_i.
    // CRT mapping out: index(k_1..k_d) = sum k_i * M_i * (M_i^-1 mod N_i)  (mod N).
    size_t d = comps_.size();
    std::vector<uint64_t> in_step(d), out_step(d);
    for (size_t i = 0; i < d; ++i) {
        uint64_t m = n_ / comps_[i];
        in_step[i] = m % n_;
        // u = m^-1 mod comps_[i] by extended Euclid (the modulus is tiny)
        int64_t t0 = 0, t1 = 1;
        int64_t r0 = static_cast<int64_t>(comps_[i]), r1 = static_cast<int64_t>(m % comps_[i]);
        while (r1 != 0) {
            int64_t q = r0 / r1;
            int64_t tmp = t0 - q * t1;
            t0 = t1;
            t1 = tmp;
            tmp = r0 - q * r1;
            r0 = r1;
            r1 = tmp;
        }
        uint64_t u =
            static_cast<uint64_t>(t0 < 0 ? t0 + static_cast<int64_t>(comps_[i]) : t0);
        out_step[i] = static_cast<uint64_t>((static_cast<unsigned __int128>(m) * u) % n_);
    }

    in_map_.resize(n_);
    out_map_.resize(n_);
    std::vector<uint64_t> digit(d, 0);
    uint64_t in_idx = 0, out_idx = 0;
    for (uint64_t t = 0; t < n_; ++t) {
        in_map_[t] = static_cast<uint32_t>(in_idx);
        out_map_[t] = static_cast<uint32_t>(out_idx);
        // odometer over (j_1..j_d), last digit fastest
        for (size_t i = d; i-- > 0;) {
            ++digit[i];
            in_idx += in_step[i];
            if (in_idx >= n_) in_idx -= n_;
            out_idx += out_step[i];
            if (out_idx >= n_) out_idx -= n_;
            if (digit[i] < comps_[i]) break;
            // roll over: subtract comps_[i] steps
            in_idx = (in_idx + n_ - static_cast<uint64_t>(
                                        (static_cast<unsigned __int128>(in_step[i]) * comps_[i]) %
                                        n_)) %
                     n_;
            out_idx = (out_idx + n_ - static_cast<uint64_t>((static_cast<unsigned __int128>(
                                                                out_step[i]) *
                                                            comps_[i]) %
                                                            n_)) %
                      n_;
            digit[i] = 0;
        }
    }

    fwd_tables_.resize(d);
    inv_tables_.resize(d);
    for (size_t i = 0; i < d; ++i) {
        uint64_t c = comps_[i];
        Fp wc = Fp(kGroupGenerator).pow((Fp::P - 1) / c);
        fwd_tables_[i].resize(c);
        inv_tables_[i].resize(c);
        Fp acc = Fp::raw(1);
        for (uint64_t m = 0; m < c; ++m) {
            fwd_tables_[i][m] = acc;
            inv_tables_[i][m == 0 ? 0 : c - m] = acc;
            acc *= wc;
        }
    }
}

void TransformPlan::run(std::vector<Fp>& data, const std::vector<std::vector<Fp>>& tables) const {
    if (data.size() != n_) throw std::invalid_argument("transform size mismatch");
    size_t d = comps_.size();
    std::vector<Fp> work(n_);
    for (uint64_t t = 0; t < n_; ++t) work[t] = data[in_map_[t]];

    std::vector<Fp> x, y;
    uint64_t stride_after = n_;
    for (size_t i = 0; i < d; ++i) {
        uint64_t c = comps_[i];
        stride_after /= c;
        const std::vector<Fp>& tbl = tables[i];
        x.assign(c, Fp());
        y.assign(c, Fp());
        for (uint64_t base = 0; base < n_; base += c * stride_after) {
            for (uint64_t off = 0; off < stride_after; ++off) {
                Fp* slot = work.data() + base + off;
                for (uint64_t t = 0; t < c; ++t) x[t] = slot[t * stride_after];
                for (uint64_t k = 0; k < c; ++k) {
                    Fp acc = x[0];
                    uint64_t idx = 0;
                    for (uint64_t t = 1; t < c; ++t) {
                        idx += k;
                        if (idx >= c) idx -= c;
                        acc += x[t] * tbl[idx];
                    }
                    y[k] = acc;
                }
                for (uint64_t t = 0; t < c; ++t) slot[t * stride_after] = y[t];
            }
        }
    }
    for (uint64_t t = 0; t < n_; ++t) data[out_map_[t]] = work[t];
}

void TransformPlan::forward(std::vector<Fp>& data) const { run(data, fwd_tables_); }

void TransformPlan::inverse(std::vector<Fp>& data) const {
    run(data, inv_tables_);
    for (Fp& v : data) v *= inv_n_;
}

std::vector<Fp> TransformPlan::convolve(std::vector<Fp> a, std::vector<Fp> b) const {
    if (a.size() > n_ || b.size() > n_) throw std::invalid_argument("convolve: input longer than plan");
    a.resize(n_, Fp());
    b.resize(n_, Fp());
    forward(a);
    forward(b);
    for (uint64_t i = 0; i < n_; ++i) a[i] *= b[i];
    inverse(a);
    return a;
}

}  // namespace sips
