#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sips {

/* Arithmetic over F_p with p = 2^61 - 1 (Mersenne), the field every protocol
 * in this library runs over.  Values are kept canonical (< p) at all times.
 * Multiplication widens to unsigned __int128; reduction is two shift/add
 * folds plus a conditional subtract, no division anywhere.
 *
 * Every add/sub/mul/inv bumps a thread-local counter so provers can report
 * field-operation counts; see op_counter() / reset_op_counter().
 */

class Fp {
public:
    static constexpr uint64_t P = 2305843009213693951ull;  // 2^61 - 1

    constexpr Fp() : v_(0) {}
    // Reduces any u64, so Fp(x) is safe for raw integers.
    explicit Fp(uint64_t x) : v_(reduce64(x)) {}

    static Fp from_signed(int64_t x) {
        if (x >= 0) return Fp(static_cast<uint64_t>(x));
        uint64_t m = static_cast<uint64_t>(-(x + 1)) + 1;  // |x| without UB at INT64_MIN
        Fp r(m);
        return Fp::raw(r.v_ == 0 ? 0 : P - r.v_);
    }

    // Wraps a value already known to be canonical.
    static constexpr Fp raw(uint64_t x) {
        Fp r;
        r.v_ = x;
        return r;
    }

    uint64_t value() const { return v_; }
    bool is_zero() const { return v_ == 0; }

    friend Fp operator+(Fp a, Fp b) {
        ++ops_;
        uint64_t s = a.v_ + b.v_;  // < 2p < 2^62, no overflow
        if (s >= P) s -= P;
        return raw(s);
    }
    friend Fp operator-(Fp a, Fp b) {
        ++ops_;
        uint64_t s = a.v_ - b.v_;
        if (a.v_ < b.v_) s += P;
        return raw(s);
    }
    friend Fp operator*(Fp a, Fp b) {
        ++ops_;
        unsigned __int128 w = static_cast<unsigned __int128>(a.v_) * b.v_;
        return raw(reduce128(w));
    }
    Fp operator-() const { return raw(v_ == 0 ? 0 : P - v_); }

    Fp& operator+=(Fp o) { return *this = *this + o; }
    Fp& operator-=(Fp o) { return *this = *this - o; }
    Fp& operator*=(Fp o) { return *this = *this * o; }

    friend bool operator==(Fp a, Fp b) { return a.v_ == b.v_; }
    friend bool operator!=(Fp a, Fp b) { return a.v_ != b.v_; }

    Fp pow(uint64_t e) const {
        Fp base = *this, acc = raw(1);
        while (e) {
            if (e & 1) acc *= base;
            base *= base;
            e >>= 1;
        }
        return acc;
    }

    // Fermat inverse; inv(0) is a caller bug.
    Fp inv() const {
        if (v_ == 0) throw std::domain_error("Fp::inv of zero");
        return pow(P - 2);
    }

    static uint64_t reduce64(uint64_t x) {
        uint64_t r = (x >> 61) + (x & P);
        if (r >= P) r -= P;
        return r;
    }

    static uint64_t reduce128(unsigned __int128 x) {
        // Any 128-bit input: 2^61 == 1 (mod p), so fold in 61-bit limbs.
        unsigned __int128 hi = x >> 61;  // < 2^67, keep wide before masking
        uint64_t r = static_cast<uint64_t>(x & P) + (static_cast<uint64_t>(hi) & P) +
                     static_cast<uint64_t>(hi >> 61);
        r = (r >> 61) + (r & P);
        if (r >= P) r -= P;
        return r;
    }

    static uint64_t op_counter() { return ops_; }
    static void reset_op_counter() { ops_ = 0; }

private:
    uint64_t v_;
    static thread_local uint64_t ops_;
};

inline Fp operator*(uint64_t a, Fp b) { return Fp(a) * b; }

/* 8-byte little-endian wire encoding.  Decoding rejects non-canonical
 * values: anything >= p is a malformed message, not a field element. */

inline void fp_store_le(Fp x, unsigned char out[8]) {
    uint64_t v = x.value();
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline bool fp_load_le(const unsigned char in[8], Fp& out) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[i]) << (8 * i);
    if (v >= Fp::P) return false;
    out = Fp::raw(v);
    return true;
}

// Batch inversion (Montgomery's trick): one inv + 3(n-1) mults.
// Zero entries are left as zero.
inline void fp_batch_inverse(std::vector<Fp>& xs) {
    size_t n = xs.size();
    if (n == 0) return;
    std::vector<Fp> prefix(n);
    Fp run = Fp::raw(1);
    for (size_t i = 0; i < n; ++i) {
        prefix[i] = run;
        if (!xs[i].is_zero()) run *= xs[i];
    }
    Fp inv_run = run.inv();
    for (size_t i = n; i-- > 0;) {
        if (xs[i].is_zero()) continue;
        Fp x = xs[i];
        xs[i] = inv_run * prefix[i];
        inv_run *= x;
    }
}

}  // namespace sips
