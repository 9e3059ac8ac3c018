#include "sips/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <stdexcept>

namespace sips {

namespace {

uint64_t place_bits(const std::vector<int16_t>& bits, uint64_t y) {
    uint64_t idx = 0;
    for (size_t t = 0; t < bits.size(); ++t) {
        uint64_t b;
        if (bits[t] == kBitZero)
            b = 0;
        else if (bits[t] == kBitOne)
            b = 1;
        else
            b = (y >> bits[t]) & 1;
        idx |= b << t;
    }
    return idx;
}

GateGroup make_group(GateKind kind, uint32_t pow_exp, uint32_t free_bits, uint32_t v_out,
                     uint32_t v_in) {
    GateGroup g;
    g.kind = kind;
    g.pow_exp = pow_exp;
    g.free_bits = free_bits;
    g.out_bits.assign(v_out, kBitZero);
    g.in1_bits.assign(v_in, kBitZero);
    g.in2_bits.assign(v_in, kBitZero);
    return g;
}

void tie(std::vector<int16_t>& bits, uint32_t at, uint32_t count, uint32_t first_var) {
    for (uint32_t i = 0; i < count; ++i) bits.at(at + i) = int16_t(first_var + i);
}

void fill_ones(std::vector<int16_t>& bits) {
    std::fill(bits.begin(), bits.end(), kBitOne);
}

// the constant-one slot, rebuilt on every layer as one * one
GateGroup ones_carrier(uint32_t v_out, uint32_t v_in) {
    GateGroup g = make_group(GateKind::Mul, 1, 0, v_out, v_in);
    fill_ones(g.out_bits);
    fill_ones(g.in1_bits);
    fill_ones(g.in2_bits);
    return g;
}

uint32_t top_width_log(const Circuit& c) {
    return c.layers.empty() ? c.v_input : c.layers.back().v_out;
}

void append_layer(Circuit& c, Layer l) {
    l.v_in = top_width_log(c);
    c.layers.push_back(std::move(l));
}

/* Fermat chain mapping x to x^(p-1) elementwise.  Expects the top layer to
 * hold data in [0, 2^k) with the constant one at index 2^(k+1)-1, and
 * leaves a width-2^k layer of 0/1 indicators. */
void append_flt_chain(Circuit& c, uint32_t k, GateSet gs) {
    if (top_width_log(c) != k + 1) throw std::logic_error("flt chain: bad feed width");
    uint32_t v = k + 1;

    auto slot_square = [&](uint32_t vv, int in_slot) {
        // (y, 0) <- square of (y, in_slot)
        GateGroup g = make_group(GateKind::Mul, 1, k, vv, vv);
        tie(g.out_bits, 1, k, 0);
        g.in1_bits[0] = in_slot ? kBitOne : kBitZero;
        tie(g.in1_bits, 1, k, 0);
        g.in2_bits = g.in1_bits;
        return g;
    };

    if (gs == GateSet::Basic) {
        {
            // s1 = x^2 at (y,0), one kept
            Layer l;
            l.v_out = v;
            GateGroup sq = make_group(GateKind::Mul, 1, k, v, v);
            tie(sq.out_bits, 1, k, 0);
            tie(sq.in1_bits, 0, k, 0);
            sq.in2_bits = sq.in1_bits;
            l.groups = {sq, ones_carrier(v, v)};
            append_layer(c, std::move(l));
        }
        {
            // s2 = s1^2 at (y,0); P2 = s1 * 1 at (y,1)
            Layer l;
            l.v_out = v;
            GateGroup seed = make_group(GateKind::Mul, 1, k, v, v);
            seed.out_bits[0] = kBitOne;
            tie(seed.out_bits, 1, k, 0);
            tie(seed.in1_bits, 1, k, 0);
            fill_ones(seed.in2_bits);
            l.groups = {slot_square(v, 0), seed};
            append_layer(c, std::move(l));
        }
        for (int t = 0; t < 58; ++t) {
            // s <- s^2; P <- P * s
            Layer l;
            l.v_out = v;
            GateGroup carry = make_group(GateKind::Mul, 1, k, v, v);
            carry.out_bits[0] = kBitOne;
            tie(carry.out_bits, 1, k, 0);
            carry.in1_bits[0] = kBitOne;
            tie(carry.in1_bits, 1, k, 0);
            tie(carry.in2_bits, 1, k, 0);
            l.groups = {slot_square(v, 0), carry};
            append_layer(c, std::move(l));
        }
        {
            // F = P * s, one indicator per item
            Layer l;
            l.v_out = k;
            GateGroup close = make_group(GateKind::Mul, 1, k, k, v);
            tie(close.out_bits, 0, k, 0);
            close.in1_bits[0] = kBitOne;
            tie(close.in1_bits, 1, k, 0);
            tie(close.in2_bits, 1, k, 0);
            l.groups = {close};
            append_layer(c, std::move(l));
        }
        return;
    }

    // pow8 / pow16: raise to 2^e - 1 first (e = 3 or 4), then a chain of
    // self-wired Pow(2^(e-1)) gates, each one a 2^e-th power
    uint32_t e = (gs == GateSet::Pow8) ? 3 : 4;
    uint32_t steps = (gs == GateSet::Pow8) ? 20 : 15;  // 60 = 3*20 = 4*15
    uint32_t vw = k + 2;
    {
        // a^2 at (y,00), a at (y,01), one
        Layer l;
        l.v_out = vw;
        GateGroup sq = make_group(GateKind::Mul, 1, k, vw, v);
        tie(sq.out_bits, 2, k, 0);
        tie(sq.in1_bits, 0, k, 0);
        sq.in2_bits = sq.in1_bits;
        GateGroup copy = make_group(GateKind::Mul, 1, k, vw, v);
        copy.out_bits[0] = kBitOne;
        tie(copy.out_bits, 2, k, 0);
        tie(copy.in1_bits, 0, k, 0);
        fill_ones(copy.in2_bits);
        l.groups = {sq, copy, ones_carrier(vw, v)};
        append_layer(c, std::move(l));
    }
    auto double_up = [&]() {
        // (y,00) <- (y,00)^2 ; (y,01) <- (y,00)*(y,01) ; one
        Layer l;
        l.v_out = vw;
        GateGroup sq = make_group(GateKind::Mul, 1, k, vw, vw);
        tie(sq.out_bits, 2, k, 0);
        tie(sq.in1_bits, 2, k, 0);
        sq.in2_bits = sq.in1_bits;
        GateGroup mul = make_group(GateKind::Mul, 1, k, vw, vw);
        mul.out_bits[0] = kBitOne;
        tie(mul.out_bits, 2, k, 0);
        tie(mul.in1_bits, 2, k, 0);
        mul.in2_bits[0] = kBitOne;
        tie(mul.in2_bits, 2, k, 0);
        l.groups = {sq, mul, ones_carrier(vw, vw)};
        append_layer(c, std::move(l));
    };
    double_up();                       // a^4, a^3
    if (gs == GateSet::Pow16) double_up();  // a^8, a^7
    {
        // W0 = a^(2^e - 1) at (y,0), one
        Layer l;
        l.v_out = v;
        GateGroup mul = make_group(GateKind::Mul, 1, k, v, vw);
        tie(mul.out_bits, 1, k, 0);
        tie(mul.in1_bits, 2, k, 0);
        mul.in2_bits[0] = kBitOne;
        tie(mul.in2_bits, 2, k, 0);
        l.groups = {mul, ones_carrier(v, vw)};
        append_layer(c, std::move(l));
    }
    uint32_t half = 1u << (e - 1);
    auto w_step = [&](uint32_t vv) {
        // W <- (W*W)^(2^(e-1)) = W^(2^e)
        GateGroup g = make_group(GateKind::Pow, half, k, vv, vv);
        tie(g.out_bits, 1, k, 0);
        tie(g.in1_bits, 1, k, 0);
        g.in2_bits = g.in1_bits;
        return g;
    };
    {
        // W1 at (y,0); Q1 = W0 * one at (y,1)
        Layer l;
        l.v_out = v;
        GateGroup seed = make_group(GateKind::Mul, 1, k, v, v);
        seed.out_bits[0] = kBitOne;
        tie(seed.out_bits, 1, k, 0);
        tie(seed.in1_bits, 1, k, 0);
        fill_ones(seed.in2_bits);
        l.groups = {w_step(v), seed};
        append_layer(c, std::move(l));
    }
    for (uint32_t t = 2; t <= steps; ++t) {
        // W advances, Q <- Q * W
        Layer l;
        l.v_out = v;
        GateGroup acc = make_group(GateKind::Mul, 1, k, v, v);
        acc.out_bits[0] = kBitOne;
        tie(acc.out_bits, 1, k, 0);
        acc.in1_bits[0] = kBitOne;
        tie(acc.in1_bits, 1, k, 0);
        tie(acc.in2_bits, 1, k, 0);
        l.groups = {w_step(v), acc};
        append_layer(c, std::move(l));
    }
    {
        // F = Q^2: Q holds x^(2^60 - 1)
        Layer l;
        l.v_out = k;
        GateGroup close = make_group(GateKind::Mul, 1, k, k, v);
        tie(close.out_bits, 0, k, 0);
        close.in1_bits[0] = kBitOne;
        tie(close.in1_bits, 1, k, 0);
        close.in2_bits = close.in1_bits;
        l.groups = {close};
        append_layer(c, std::move(l));
    }
}

// binary fan-in-2 sum of the top layer's 2^k data slots; carry_one keeps a
// constant-one slot alive above the summed region
void append_add_tree(Circuit& c, uint32_t k, bool carry_one) {
    for (uint32_t t = 0; t < k; ++t) {
        uint32_t v_below = top_width_log(c);
        uint32_t m = k - t;  // data bits below
        Layer l;
        l.v_out = v_below - 1;
        GateGroup pair = make_group(GateKind::Add, 1, m - 1, l.v_out, v_below);
        tie(pair.out_bits, 0, m - 1, 0);
        pair.in1_bits[0] = kBitZero;
        tie(pair.in1_bits, 1, m - 1, 0);
        pair.in2_bits[0] = kBitOne;
        tie(pair.in2_bits, 1, m - 1, 0);
        l.groups = {pair};
        if (carry_one) l.groups.push_back(ones_carrier(l.v_out, v_below));
        append_layer(c, std::move(l));
    }
}

void build_f2(Circuit& c) {
    uint64_t n = c.spec.n;
    uint32_t k = (n <= 1) ? 0 : uint32_t(std::bit_width(n - 1));
    c.nhat = 1ull << k;
    c.v_input = k;
    {
        Layer l;
        l.v_out = k;
        GateGroup sq = make_group(GateKind::Mul, 1, k, k, k);
        tie(sq.out_bits, 0, k, 0);
        tie(sq.in1_bits, 0, k, 0);
        sq.in2_bits = sq.in1_bits;
        l.groups = {sq};
        append_layer(c, std::move(l));
    }
    if (!c.spec.big_sum) append_add_tree(c, k, false);
}

void build_f0(Circuit& c) {
    uint64_t n = c.spec.n;
    uint32_t k = (n <= 1) ? 0 : uint32_t(std::bit_width(n - 1));
    c.nhat = 1ull << k;
    c.v_input = k + 1;
    c.one_slot = (2ull << k) - 1;
    append_flt_chain(c, k, c.spec.gate_set);
    if (!c.spec.big_sum) append_add_tree(c, k, false);
}

void build_mvmult(Circuit& c) {
    uint64_t n = c.spec.n;
    if (n < 4 || (n & (n - 1)) != 0)
        throw std::invalid_argument("mvmult circuit: n must be a power of two, at least 4");
    uint32_t v = uint32_t(std::countr_zero(n));
    c.nhat = n;
    c.v_input = 2 * v + 1;
    c.one_slot = (1ull << c.v_input) - 1;

    // free bits: j = vars [0, v), i = vars [v, 2v)
    {
        Layer l;
        l.v_out = 2 * v + 1;
        GateGroup prod = make_group(GateKind::Mul, 1, 2 * v, l.v_out, c.v_input);
        tie(prod.out_bits, 0, 2 * v, 0);
        tie(prod.in1_bits, 0, 2 * v, 0);            // A[i*n + j]
        tie(prod.in2_bits, 0, v, 0);                // x[j] at n^2 + j
        prod.in2_bits[2 * v] = kBitOne;
        GateGroup carry = make_group(GateKind::Add, 1, v, l.v_out, c.v_input);
        tie(carry.out_bits, 0, v, 0);
        carry.out_bits[2 * v] = kBitOne;            // kept at n^2 + j
        tie(carry.in1_bits, 0, v, 0);               // -b[j] at n^2 + n + j
        carry.in1_bits[v] = kBitOne;
        carry.in1_bits[2 * v] = kBitOne;
        carry.in2_bits[v + 1] = kBitOne;            // dead zero at n^2 + 2n
        carry.in2_bits[2 * v] = kBitOne;
        l.groups = {prod, carry, ones_carrier(l.v_out, c.v_input)};
        append_layer(c, std::move(l));
    }
    for (uint32_t t = 1; t <= v; ++t) {
        // halve the product region; -b and the one ride along in place
        Layer l;
        l.v_out = 2 * v + 1;
        uint32_t m = 2 * v - t;  // data bits after this level
        GateGroup pair = make_group(GateKind::Add, 1, m, l.v_out, l.v_out);
        tie(pair.out_bits, 0, m, 0);
        pair.in1_bits[0] = kBitZero;
        tie(pair.in1_bits, 1, m, 0);
        pair.in2_bits[0] = kBitOne;
        tie(pair.in2_bits, 1, m, 0);
        GateGroup carry = make_group(GateKind::Add, 1, v, l.v_out, l.v_out);
        tie(carry.out_bits, 0, v, 0);
        carry.out_bits[2 * v] = kBitOne;
        carry.in1_bits = carry.out_bits;
        carry.in2_bits[v + 1] = kBitOne;            // dead zero at n^2 + 2n
        carry.in2_bits[2 * v] = kBitOne;
        l.groups = {pair, carry, ones_carrier(l.v_out, l.v_out)};
        append_layer(c, std::move(l));
    }
    {
        // D[y] = (Ax)[y] - b[y]; one at the top, chain-ready
        Layer l;
        l.v_out = v + 1;
        GateGroup comb = make_group(GateKind::Add, 1, v, v + 1, 2 * v + 1);
        tie(comb.out_bits, 0, v, 0);
        tie(comb.in1_bits, 0, v, 0);
        tie(comb.in2_bits, 0, v, 0);
        comb.in2_bits[2 * v] = kBitOne;
        l.groups = {comb, ones_carrier(v + 1, 2 * v + 1)};
        append_layer(c, std::move(l));
    }
    append_flt_chain(c, v, c.spec.gate_set);
    if (!c.spec.big_sum) append_add_tree(c, v, false);
}

void build_pmww(Circuit& c) {
    uint64_t n = c.spec.n, q = c.spec.q;
    if (q == 0 || q > n) throw std::invalid_argument("pmww circuit: need 0 < q <= n");
    uint32_t vo = (n <= 1) ? 0 : uint32_t(std::bit_width(n - 1));
    uint32_t vq = (q <= 1) ? 0 : uint32_t(std::bit_width(q - 1));
    c.nhat = 1ull << vo;
    c.qhat = 1ull << vq;
    if (c.spec.alphabet == 0) c.spec.alphabet = std::min<uint64_t>(n, 8);
    uint64_t a = c.spec.alphabet;
    // largest single term is t*p*(t-p)^2 with t <= a+1, p <= a
    unsigned __int128 worst = (unsigned __int128)(a + 1) * (a + 1) * (a + 1) * a * c.qhat;
    if (worst >= Fp::P)
        throw std::invalid_argument("pmww circuit: alphabet too large for exact counting");
    c.v_input = vo + 2;
    c.one_slot = (4ull << vo) - 1;

    // free bits: k = vars [0, vq), o = vars [vq, vq + vo).  The pair
    // layers get one spare top bit so the one slot stays clear.
    uint32_t vg = vo + vq + 1;
    auto pair_ins = [&](GateGroup& g) {
        g.in1_sum = true;
        g.sum_bits = vo + 1;
        g.o_begin = vq;
        g.o_count = vo;
        g.k_begin = 0;
        g.k_count = vq;
        // text region: bit vo+1 stays 0; pattern at 2*nhat + k
        tie(g.in2_bits, 0, vq, 0);
        g.in2_bits[vo + 1] = kBitOne;
    };
    {
        Layer l;
        l.v_out = vg + 1;
        GateGroup m = make_group(GateKind::Mul, 1, vo + vq, l.v_out, c.v_input);
        tie(m.out_bits, 1, vo + vq, 0);
        pair_ins(m);
        GateGroup s = make_group(GateKind::Add, 1, vo + vq, l.v_out, c.v_input);
        s.out_bits[0] = kBitOne;
        tie(s.out_bits, 1, vo + vq, 0);
        pair_ins(s);
        l.groups = {m, s, ones_carrier(l.v_out, c.v_input)};
        append_layer(c, std::move(l));
    }
    {
        // (g,0) <- S^2 ; (g,1) <- M * one
        Layer l;
        l.v_out = vg + 1;
        GateGroup ssq = make_group(GateKind::Mul, 1, vo + vq, l.v_out, l.v_out);
        tie(ssq.out_bits, 1, vo + vq, 0);
        ssq.in1_bits[0] = kBitOne;
        tie(ssq.in1_bits, 1, vo + vq, 0);
        ssq.in2_bits = ssq.in1_bits;
        GateGroup mc = make_group(GateKind::Mul, 1, vo + vq, l.v_out, l.v_out);
        mc.out_bits[0] = kBitOne;
        tie(mc.out_bits, 1, vo + vq, 0);
        tie(mc.in1_bits, 1, vo + vq, 0);
        fill_ones(mc.in2_bits);
        l.groups = {ssq, mc, ones_carrier(l.v_out, l.v_out)};
        append_layer(c, std::move(l));
    }
    {
        // J = M * S^2 packed at [0, nhat*qhat), one at the top
        Layer l;
        l.v_out = vg;
        GateGroup j = make_group(GateKind::Mul, 1, vo + vq, vg, vg + 1);
        tie(j.out_bits, 0, vo + vq, 0);
        j.in1_bits[0] = kBitOne;
        tie(j.in1_bits, 1, vo + vq, 0);
        tie(j.in2_bits, 1, vo + vq, 0);
        l.groups = {j, ones_carrier(vg, vg + 1)};
        append_layer(c, std::move(l));
    }
    // sum out the k bits, keeping the one for the Fermat chain
    for (uint32_t t = 0; t < vq; ++t) {
        uint32_t v_below = top_width_log(c);
        uint32_t m = vo + vq - t;
        Layer l;
        l.v_out = v_below - 1;
        GateGroup pair = make_group(GateKind::Add, 1, m - 1, l.v_out, v_below);
        tie(pair.out_bits, 0, m - 1, 0);
        pair.in1_bits[0] = kBitZero;
        tie(pair.in1_bits, 1, m - 1, 0);
        pair.in2_bits[0] = kBitOne;
        tie(pair.in2_bits, 1, m - 1, 0);
        l.groups = {pair, ones_carrier(l.v_out, v_below)};
        append_layer(c, std::move(l));
    }
    append_flt_chain(c, vo, c.spec.gate_set);
    if (!c.spec.big_sum) append_add_tree(c, vo, false);
}

Fp chi_index(const std::vector<Fp>& x, uint64_t idx) {
    Fp f(1);
    for (size_t t = 0; t < x.size(); ++t)
        f = f * (((idx >> t) & 1) ? x[t] : Fp(1) - x[t]);
    return f;
}

}  // namespace

uint64_t GateGroup::out_index(uint64_t y) const { return place_bits(out_bits, y); }

uint64_t GateGroup::in1_index(uint64_t y) const {
    if (!in1_sum) return place_bits(in1_bits, y);
    uint64_t o = (y >> o_begin) & ((1ull << o_count) - 1);
    uint64_t k = (y >> k_begin) & ((1ull << k_count) - 1);
    uint64_t high = (place_bits(in1_bits, y) >> sum_bits) << sum_bits;
    return high | (o + k);
}

uint64_t GateGroup::in2_index(uint64_t y) const { return place_bits(in2_bits, y); }

uint64_t Layer::gate_count() const {
    if (!groups.empty()) {
        uint64_t s = 0;
        for (const auto& g : groups) s += g.size();
        return s;
    }
    return explicit_gates.size();
}

uint32_t Layer::pow_exp() const {
    uint32_t e = 0;
    auto take = [&](GateKind k, uint32_t pe) {
        if (k != GateKind::Pow) return;
        if (e != 0 && e != pe) throw std::logic_error("layer mixes pow exponents");
        e = pe;
    };
    for (const auto& g : groups) take(g.kind, g.pow_exp);
    for (const auto& g : explicit_gates) take(g.kind, g.pow_exp);
    return e;
}

uint32_t Layer::omega_round_evals() const {
    uint32_t e = pow_exp();
    return e ? e + 2 : 3;
}

void Layer::for_each_gate(const std::function<void(const GateRec&)>& fn) const {
    if (!groups.empty()) {
        GateRec r;
        for (const auto& g : groups) {
            r.kind = g.kind;
            r.pow_exp = g.pow_exp;
            for (uint64_t y = 0; y < g.size(); ++y) {
                r.out = g.out_index(y);
                r.in1 = g.in1_index(y);
                r.in2 = g.in2_index(y);
                fn(r);
            }
        }
        return;
    }
    for (const auto& r : explicit_gates) fn(r);
}

WiringEval wiring_eval(const Layer& layer, const std::vector<Fp>& p, const std::vector<Fp>& w1,
                       const std::vector<Fp>& w2, bool closed_form) {
    if (p.size() != layer.v_out || w1.size() != layer.v_in || w2.size() != layer.v_in)
        throw std::invalid_argument("wiring_eval: wrong point arity");
    WiringEval ev{Fp(0), Fp(0), Fp(0), Fp(0)};
    auto slot = [&](GateKind k) -> Fp& {
        switch (k) {
            case GateKind::Add: return ev.add;
            case GateKind::Mul: return ev.mult;
            case GateKind::Pow: return ev.pow;
            default: return ev.one;
        }
    };

    if (!closed_form || layer.groups.empty()) {
        layer.for_each_gate([&](const GateRec& g) {
            if (g.kind == GateKind::Const0) return;
            Fp t = chi_index(p, g.out);
            if (g.kind == GateKind::Const1) {
                ev.one = ev.one + t * chi_index(w1, 0) * chi_index(w2, 0);
                return;
            }
            slot(g.kind) = slot(g.kind) + t * chi_index(w1, g.in1) * chi_index(w2, g.in2);
        });
        return ev;
    }

    for (const auto& g : layer.groups) {
        Fp term(1);
        auto coord = [&](int which, uint32_t t) -> const Fp& {
            return which == 0 ? p[t] : (which == 1 ? w1[t] : w2[t]);
        };
        // fixed index bits
        auto consts = [&](const std::vector<int16_t>& bits, int which, uint32_t from) {
            for (uint32_t t = from; t < bits.size(); ++t) {
                if (bits[t] == kBitZero)
                    term = term * (Fp(1) - coord(which, t));
                else if (bits[t] == kBitOne)
                    term = term * coord(which, t);
            }
        };
        consts(g.out_bits, 0, 0);
        consts(g.in1_bits, 1, g.in1_sum ? g.sum_bits : 0);
        consts(g.in2_bits, 2, 0);

        // product over tied coordinates of a free bit, at bit value b
        auto var_side = [&](uint32_t var, uint64_t b) {
            Fp f(1);
            auto scan = [&](const std::vector<int16_t>& bits, int which, uint32_t from) {
                for (uint32_t t = from; t < bits.size(); ++t)
                    if (bits[t] == int16_t(var)) f = f * (b ? coord(which, t) : Fp(1) - coord(which, t));
            };
            scan(g.out_bits, 0, 0);
            scan(g.in1_bits, 1, g.in1_sum ? g.sum_bits : 0);
            scan(g.in2_bits, 2, 0);
            return f;
        };
        auto in_sum = [&](uint32_t var) {
            return g.in1_sum && ((var >= g.o_begin && var < g.o_begin + g.o_count) ||
                                 (var >= g.k_begin && var < g.k_begin + g.k_count));
        };
        for (uint32_t var = 0; var < g.free_bits; ++var)
            if (!in_sum(var)) term = term * (var_side(var, 0) + var_side(var, 1));

        if (g.in1_sum) {
            // carry DP over the bits of o + k: position t consumes bit t of
            // o and of k and must produce bit t of the in1 index
            Fp w[2] = {Fp(1), Fp(0)};
            for (uint32_t t = 0; t < g.sum_bits; ++t) {
                Fp nw[2] = {Fp(0), Fp(0)};
                for (int c = 0; c < 2; ++c) {
                    if (w[c] == Fp(0)) continue;
                    for (int ob = 0; ob < (t < g.o_count ? 2 : 1); ++ob) {
                        Fp fo = (t < g.o_count) ? var_side(g.o_begin + t, ob) : Fp(1);
                        for (int kb = 0; kb < (t < g.k_count ? 2 : 1); ++kb) {
                            Fp fk = (t < g.k_count) ? var_side(g.k_begin + t, kb) : Fp(1);
                            int s = ob + kb + c;
                            Fp f1 = (s & 1) ? w1[t] : Fp(1) - w1[t];
                            nw[s >> 1] = nw[s >> 1] + w[c] * fo * fk * f1;
                        }
                    }
                }
                w[0] = nw[0];
                w[1] = nw[1];
            }
            term = term * w[0];
        }
        slot(g.kind) = slot(g.kind) + term;
    }
    return ev;
}

GateSet parse_gate_set(const std::string& s) {
    if (s == "basic") return GateSet::Basic;
    if (s == "pow8") return GateSet::Pow8;
    if (s == "pow16") return GateSet::Pow16;
    throw std::invalid_argument("unknown gate set: " + s);
}

const char* gate_set_name(GateSet g) {
    switch (g) {
        case GateSet::Basic: return "basic";
        case GateSet::Pow8: return "pow8";
        default: return "pow16";
    }
}

uint64_t Circuit::input_gate_count() const {
    switch (spec.problem) {
        case Problem::F2: return spec.n;
        case Problem::F0: return spec.n + 1;
        case Problem::MVMult: return spec.n * spec.n + 2 * spec.n + 1;
        case Problem::PMwW: return spec.n + spec.q + 1;
    }
    return 0;
}

uint64_t Circuit::total_gates() const {
    uint64_t s = input_gate_count();
    for (const auto& l : layers) s += l.gate_count();
    return s;
}

Circuit build_circuit(const CircuitSpec& spec) {
    if (spec.n == 0) throw std::invalid_argument("build_circuit: n must be positive");
    Circuit c;
    c.spec = spec;
    switch (spec.problem) {
        case Problem::F2: build_f2(c); break;
        case Problem::F0: build_f0(c); break;
        case Problem::MVMult: build_mvmult(c); break;
        case Problem::PMwW: build_pmww(c); break;
    }
    // every layer retires one variable or keeps width; sanity the chaining
    for (size_t i = 1; i < c.layers.size(); ++i)
        if (c.layers[i].v_in != c.layers[i - 1].v_out)
            throw std::logic_error("layer width mismatch");
    if (!spec.big_sum && !c.layers.empty() && c.layers.back().v_out != 0)
        throw std::logic_error("tree did not reach width 1");
    return c;
}

std::vector<Fp> circuit_input_frequencies(const Circuit& c, const std::vector<int64_t>& agg) {
    if (agg.size() != c.spec.n) throw std::invalid_argument("input size mismatch");
    std::vector<Fp> in(c.input_width(), Fp(0));
    for (size_t i = 0; i < agg.size(); ++i) in[i] = Fp::from_signed(agg[i]);
    if (c.one_slot != ~0ull) in[c.one_slot] = Fp(1);
    return in;
}

std::vector<Fp> circuit_input_mv(const Circuit& c, const std::vector<Fp>& ax) {
    uint64_t n = c.spec.n;
    if (ax.size() != n * n + n) throw std::invalid_argument("input size mismatch");
    std::vector<Fp> in(c.input_width(), Fp(0));
    std::copy(ax.begin(), ax.end(), in.begin());
    for (uint64_t i = 0; i < n; ++i) {
        Fp b(0);
        for (uint64_t j = 0; j < n; ++j) b = b + ax[i * n + j] * ax[n * n + j];
        in[n * n + n + i] = -b;
    }
    in[c.one_slot] = Fp(1);
    return in;
}

Fp pm_text_value(const Circuit& c, int64_t symbol) {
    if (symbol == int64_t(c.spec.n)) return Fp(0);  // wildcard
    if (symbol < 0 || uint64_t(symbol) >= c.spec.alphabet)
        throw std::invalid_argument("pmww symbol out of range");
    return Fp(uint64_t(symbol) + 1);
}

Fp pm_pattern_value(const Circuit& c, int64_t symbol) {
    return -pm_text_value(c, symbol);
}

Fp pm_sentinel(const Circuit& c) { return Fp(c.spec.alphabet + 1); }

std::vector<Fp> circuit_input_pm(const Circuit& c, const std::vector<int64_t>& text,
                                 const std::vector<int64_t>& pattern) {
    if (text.size() != c.spec.n || pattern.size() != c.spec.q)
        throw std::invalid_argument("input size mismatch");
    if (pattern.back() == int64_t(c.spec.n))
        throw std::invalid_argument("pmww: pattern must not end with a wildcard");
    std::vector<Fp> in(c.input_width(), Fp(0));
    for (size_t i = 0; i < text.size(); ++i) in[i] = pm_text_value(c, text[i]);
    for (uint64_t i = c.spec.n; i < 2 * c.nhat; ++i) in[i] = pm_sentinel(c);
    for (size_t i = 0; i < pattern.size(); ++i) in[2 * c.nhat + i] = pm_pattern_value(c, pattern[i]);
    in[c.one_slot] = Fp(1);
    return in;
}

Fp Evaluation::top_sum() const {
    Fp s(0);
    for (const Fp& v : values.back()) s = s + v;
    return s;
}

Evaluation evaluate(const Circuit& c, std::vector<Fp> input) {
    if (input.size() != c.input_width()) throw std::invalid_argument("evaluate: bad input width");
    Evaluation ev;
    ev.values.reserve(c.layers.size() + 1);
    ev.values.push_back(std::move(input));
    for (const auto& layer : c.layers) {
        std::vector<Fp> out(1ull << layer.v_out, Fp(0));
        const auto& below = ev.values.back();
        layer.for_each_gate([&](const GateRec& g) {
            switch (g.kind) {
                case GateKind::Add: out[g.out] = below[g.in1] + below[g.in2]; break;
                case GateKind::Mul: out[g.out] = below[g.in1] * below[g.in2]; break;
                case GateKind::Pow: out[g.out] = (below[g.in1] * below[g.in2]).pow(g.pow_exp); break;
                case GateKind::Const1: out[g.out] = Fp(1); break;
                default: break;
            }
        });
        ev.values.push_back(std::move(out));
    }
    return ev;
}

}  // namespace sips
