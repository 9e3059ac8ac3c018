#include "sips/lin.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "sips/mle.hpp"
#include "sips/rng.hpp"
#include "sips/sumcheck.hpp"

namespace sips {

namespace {

constexpr uint8_t kTagClaim = 1;
constexpr uint8_t kTagEvals = 2;
constexpr uint8_t kTagChallenge = 3;

uint32_t side_bits(uint64_t x) { return x <= 1 ? 0 : uint32_t(std::bit_width(x - 1)); }

uint64_t reverse_bits(uint64_t v, uint32_t width) {
    uint64_t r = 0;
    for (uint32_t t = 0; t < width; ++t) r = (r << 1) | ((v >> t) & 1);
    return r;
}

/* One pass over an f0 occurrence stream: cell (item, position) per
 * update.  Position bits sit above item bits. */
template <class CellFn>
void scan_f0(const LinExpression& e, const Stream& s, CellFn&& cell) {
    uint64_t items = uint64_t(1) << e.sums;
    uint64_t locs = uint64_t(1) << (e.d - e.sums);
    for (size_t j = 0; j < s.updates.size(); ++j) {
        const StreamUpdate& u = s.updates[j];
        if (u.index >= s.n) throw std::out_of_range("stream index out of range");
        if (u.delta != 1)
            throw std::invalid_argument("distinct-count streams use unit occurrence updates");
        if (u.index >= items || j >= locs)
            throw std::invalid_argument("stream does not fit the expression");
        cell(u.index | uint64_t(j) << e.sums);
    }
}

/* One pass over a pmww stream.  cell() gets full cube indices; row()
 * gets the bits above the offset field for pattern-side rows, which are
 * carried identically by every offset.  Off-text cells and padded
 * pattern slots are data-independent and emitted after the stream. */
template <class CellFn, class RowFn>
void scan_pm(const LinExpression& e, const Stream& s, CellFn&& cell, RowFn&& row) {
    if (s.n != e.n) throw std::invalid_argument("stream does not fit the expression");
    const uint64_t offs = uint64_t(1) << e.off_bits;
    const uint64_t qhat = uint64_t(1) << e.slot_bits;
    const uint64_t syms = uint64_t(1) << e.sym_bits;
    const uint64_t side = uint64_t(1) << (e.slot_bits + e.sym_bits);
    const uint64_t sentinel = e.alphabet + 1;
    const uint32_t sym_shift = e.off_bits + e.slot_bits;

    for (const StreamUpdate& u : s.updates) {
        if (u.index >= e.n + e.q) throw std::out_of_range("stream index out of range");
        bool wild = u.delta == int64_t(e.n);
        if (!wild && (u.delta < 0 || uint64_t(u.delta) >= e.alphabet))
            throw std::invalid_argument("symbol outside the declared alphabet");
        if (u.index < e.n) {
            // text position: one cell per window placement covering it
            for (uint64_t k = 0; k < qhat && k <= u.index; ++k) {
                uint64_t base = (u.index - k) | k << e.off_bits;
                if (wild)
                    for (uint64_t c = 0; c < syms; ++c) cell(base | c << sym_shift);
                else
                    cell(base | (uint64_t(u.delta) + 1) << sym_shift);
            }
        } else {
            uint64_t k = u.index - e.n;
            if (wild && k + 1 == e.q)
                throw std::invalid_argument("pattern must not end with a wildcard");
            if (wild)
                for (uint64_t c = 0; c < syms; ++c) row(k | c << e.slot_bits | side);
            else
                row(k | (uint64_t(u.delta) + 1) << e.slot_bits | side);
        }
    }
    // off-text placements hold the sentinel symbol on the text side
    for (uint64_t o = 0; o < offs; ++o)
        for (uint64_t k = o >= e.n ? 0 : e.n - o; k < qhat; ++k)
            cell(o | k << e.off_bits | sentinel << sym_shift);
    // padded pattern slots are wildcards
    for (uint64_t k = e.q; k < qhat; ++k)
        for (uint64_t c = 0; c < syms; ++c) row(k | c << e.slot_bits | side);
}

}  // namespace

uint32_t LinExpression::lin_rounds() const {
    uint32_t c = 0;
    for (const LinOp& op : ops) c += op.kind == LinOpKind::Lin;
    return c;
}

uint64_t LinExpression::message_words() const {
    uint64_t w = 1;
    for (const LinOp& op : ops) w += op.kind == LinOpKind::Lin ? 3 : 2;
    return w;
}

LinExpression build_expression(Problem problem, uint64_t n, uint64_t m, uint64_t q,
                               uint64_t alphabet) {
    LinExpression e;
    e.problem = problem;
    e.n = n;
    std::vector<LinOpKind> consume;
    switch (problem) {
        case Problem::F0: {
            if (n == 0) throw std::invalid_argument("build_expression: empty item range");
            e.m = m;
            e.sums = side_bits(n);
            e.d = e.sums + side_bits(m);
            consume.assign(e.d - e.sums, LinOpKind::Or);
            break;
        }
        case Problem::PMwW: {
            if (n == 0 || q == 0 || q > n)
                throw std::invalid_argument("build_expression: need 0 < q <= n");
            if (alphabet == 0) alphabet = std::min<uint64_t>(n, 8);
            e.q = q;
            e.alphabet = alphabet;
            e.off_bits = side_bits(n);
            e.slot_bits = side_bits(q);
            e.sym_bits = uint32_t(std::bit_width(alphabet + 1));
            e.sums = e.off_bits;
            e.d = e.off_bits + e.slot_bits + e.sym_bits + 1;
            consume.assign(e.slot_bits, LinOpKind::And);
            consume.insert(consume.end(), e.sym_bits, LinOpKind::Or);
            consume.push_back(LinOpKind::And);
            break;
        }
        default:
            throw std::invalid_argument("build_expression: no operator form for this problem");
    }
    if (e.d > 60) throw std::invalid_argument("build_expression: cube too large");
    for (uint32_t v = 0; v < e.sums; ++v) e.ops.push_back({LinOpKind::Sum, v});
    for (uint32_t t = 0; t < consume.size(); ++t) {
        uint32_t v = e.sums + t;
        for (uint32_t l = v; l-- > 0;) e.ops.push_back({LinOpKind::Lin, l});
        e.ops.push_back({consume[t], v});
    }
    return e;
}

std::vector<uint64_t> lin_base_keys(const LinExpression& e, const Stream& s) {
    std::vector<uint64_t> keys;
    auto cell = [&](uint64_t key) { keys.push_back(key); };
    if (e.problem == Problem::F0) {
        scan_f0(e, s, cell);
    } else {
        uint64_t offs = uint64_t(1) << e.off_bits;
        scan_pm(e, s, cell, [&](uint64_t hi) {
            for (uint64_t o = 0; o < offs; ++o) keys.push_back(o | hi << e.off_bits);
        });
    }
    for (auto& k : keys) k = reverse_bits(k, e.d);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (auto& k : keys) k = reverse_bits(k, e.d);
    return keys;
}

Fp lin_fingerprint(const LinExpression& e, const Stream& s, const std::vector<Fp>& r) {
    if (r.size() != e.d) throw std::invalid_argument("lin_fingerprint: point arity mismatch");
    Fp acc;
    auto cell = [&](uint64_t key) { acc += chi_point(key, r); };
    if (e.problem == Problem::F0) {
        scan_f0(e, s, cell);
    } else {
        // a pattern row is carried by every offset and the chi weights
        // over a full cube sum to one, so the offset factor drops out
        std::vector<Fp> rhi(r.begin() + e.off_bits, r.end());
        scan_pm(e, s, cell, [&](uint64_t hi) { acc += chi_point(hi, rhi); });
    }
    return acc;
}

void lin_prove(const LinExpression& e, const Stream& s, Endpoint& ep) {
    const uint32_t d = e.d, sums = e.sums;
    const Fp one = Fp::raw(1), two = Fp(2);

    /* Fold the base cells down level by level: level[W] holds the keys
     * of the 0/1 array the protocol works on while variable W-1 is the
     * next one a consuming operator will bind.  Or keeps a low-bit group
     * when either top-bit sibling is present, And when both are.  The
     * bit-reversed sort makes siblings adjacent at every level. */
    std::vector<LinOpKind> consume(d, LinOpKind::Sum);
    for (const LinOp& op : e.ops)
        if (op.kind == LinOpKind::Or || op.kind == LinOpKind::And) consume[op.var] = op.kind;
    std::vector<std::vector<uint64_t>> level(d + 1);
    level[d] = lin_base_keys(e, s);
    for (uint32_t W = d; W > sums; --W) {
        const auto& fine = level[W];
        auto& coarse = level[W - 1];
        uint64_t mask = (uint64_t(1) << (W - 1)) - 1;
        for (size_t i = 0; i < fine.size();) {
            size_t j = i;
            while (j < fine.size() && (fine[j] & mask) == (fine[i] & mask)) ++j;
            if (consume[W - 1] == LinOpKind::Or || j - i == 2) coarse.push_back(fine[i] & mask);
            i = j;
        }
    }

    // working level width per round: Sum rounds run on the fully folded
    // array, everything else on the array of the next consuming operator
    std::vector<uint32_t> width(e.ops.size(), sums);
    uint32_t nextw = d;
    for (size_t i = e.ops.size(); i-- > 0;) {
        if (e.ops[i].kind == LinOpKind::Or || e.ops[i].kind == LinOpKind::And)
            nextw = e.ops[i].var + 1;
        if (e.ops[i].kind != LinOpKind::Sum) width[i] = nextw;
    }

    uint32_t cur = sums;
    std::vector<Fp> w(level[cur].size(), one);  // per-key product over bound variables
    std::vector<Fp> bound(d);
    std::vector<Fp> inv0(d), inv1(d);  // inverses of 1-a, a at block entry

    try {
        ep.send({kTagClaim, {Fp(uint64_t(level[sums].size()))}});
        for (size_t idx = 0; idx < e.ops.size(); ++idx) {
            const LinOp& op = e.ops[idx];
            if (width[idx] != cur) {
                // entering the next consuming operator's block: rebuild the
                // weights over its finer key set and refresh the inverse
                // table (challenges avoid 0 and 1, so these never divide by
                // zero)
                cur = width[idx];
                const auto& keys = level[cur];
                w.assign(keys.size(), one);
                for (size_t i = 0; i < keys.size(); ++i)
                    for (uint32_t t = 0; t + 1 < cur; ++t)
                        w[i] *= (keys[i] >> t) & 1 ? bound[t] : one - bound[t];
                std::vector<Fp> invs;
                for (uint32_t t = 0; t + 1 < cur; ++t) {
                    invs.push_back(one - bound[t]);
                    invs.push_back(bound[t]);
                }
                fp_batch_inverse(invs);
                for (uint32_t t = 0; t + 1 < cur; ++t) {
                    inv0[t] = invs[2 * t];
                    inv1[t] = invs[2 * t + 1];
                }
            }
            const auto& keys = level[cur];

            std::vector<Fp> msg;
            if (op.kind != LinOpKind::Lin) {
                Fp s0, s1;
                for (size_t i = 0; i < keys.size(); ++i)
                    ((keys[i] >> op.var) & 1 ? s1 : s0) += w[i];
                msg = {s0, s1};
            } else {
                /* Unbind variable l.  The message is the linear pass over
                 * unbound weights (Or blocks only) plus, per group of keys
                 * sharing the bits below l, the product of the two top-bit
                 * partial sums scaled by the inverse of the group's shared
                 * low weight. */
                const uint32_t l = op.var;
                const bool orBlock = consume[cur - 1] == LinOpKind::Or;
                const Fp ia0 = inv0[l], ia1 = inv1[l];
                const uint64_t lowmask = (uint64_t(1) << l) - 1;
                Fp m0, m1, m2, lin0, lin1;
                for (size_t i = 0; i < keys.size();) {
                    uint64_t lowv = keys[i] & lowmask;
                    size_t j = i;
                    Fp a00, a01, a10, a11;  // [top bit][bit l] sums
                    while (j < keys.size() && (keys[j] & lowmask) == lowv) {
                        Fp wt = w[j] * ((keys[j] >> l) & 1 ? ia1 : ia0);
                        w[j] = wt;
                        if ((keys[j] >> (cur - 1)) & 1)
                            ((keys[j] >> l) & 1 ? a11 : a10) += wt;
                        else
                            ((keys[j] >> l) & 1 ? a01 : a00) += wt;
                        ++j;
                    }
                    Fp invW = one;
                    for (uint32_t t = 0; t < l; ++t)
                        invW *= (lowv >> t) & 1 ? inv1[t] : inv0[t];
                    Fp q0 = invW * (a00 * a10);
                    Fp q1 = invW * (a01 * a11);
                    Fp q2 = invW * ((two * a01 - a00) * (two * a11 - a10));
                    if (orBlock) {
                        m0 -= q0;
                        m1 -= q1;
                        m2 -= q2;
                        lin0 += a00 + a10;
                        lin1 += a01 + a11;
                    } else {
                        m0 += q0;
                        m1 += q1;
                        m2 += q2;
                    }
                    i = j;
                }
                if (orBlock) {
                    m0 += lin0;
                    m1 += lin1;
                    m2 += two * lin1 - lin0;
                }
                msg = {m0, m1, m2};
            }
            ep.send({kTagEvals, msg});
            if (idx + 1 == e.ops.size()) break;

            Frame ch = ep.recv();
            if (ch.tag != kTagChallenge || ch.words.size() != 1)
                throw TransportError("bad challenge frame");
            Fp a = ch.words[0];
            bound[op.var] = a;
            if (width[idx + 1] == cur)  // else the next block rebuilds anyway
                for (size_t i = 0; i < keys.size(); ++i)
                    w[i] *= (keys[i] >> op.var) & 1 ? a : one - a;
        }
    } catch (const TransportError&) {
        // verifier rejected mid-protocol and hung up
    }
}

RunResult lin_verify_stream(const LinExpression& e, const Stream& s, uint64_t seed,
                            Endpoint& ep) {
    RunResult res;

    // the whole challenge script is fixed up front; each variable's final
    // binding doubles as that coordinate of the fingerprint point
    Rng rng(seed);
    std::vector<Fp> ch(e.ops.size());
    for (auto& x : ch) x = rng.next_field_nontrivial();
    std::vector<Fp> r(e.d);
    for (size_t i = 0; i < e.ops.size(); ++i) r[e.ops[i].var] = ch[i];
    double t0 = monotonic_seconds();
    Fp fr = lin_fingerprint(e, s, r);
    res.cost.verifier_stream_seconds = monotonic_seconds() - t0;

    SpaceMeter meter;
    meter.set("fingerprint", e.d + 1);
    meter.set("bound point", e.d);
    meter.set("claim", 1);

    auto protocol = [&]() -> bool {
        Frame first = ep.recv();
        if (first.tag != kTagClaim || first.words.size() != 1) {
            res.detail = "malformed claim";
            return false;
        }
        res.answer = first.words[0];
        Fp claim = first.words[0];
        std::vector<Fp> bound(e.d);
        const Fp one = Fp::raw(1);
        for (size_t i = 0; i < e.ops.size(); ++i) {
            const LinOp& op = e.ops[i];
            Frame msg = ep.recv();
            meter.set("message", msg.words.size());
            size_t arity = op.kind == LinOpKind::Lin ? 3 : 2;
            if (msg.tag != kTagEvals || msg.words.size() != arity) {
                res.detail = "malformed round message";
                return false;
            }
            Fp s0 = msg.words[0], s1 = msg.words[1], expect;
            switch (op.kind) {
                case LinOpKind::Sum: expect = s0 + s1; break;
                case LinOpKind::Or: expect = s0 + s1 - s0 * s1; break;
                case LinOpKind::And: expect = s0 * s1; break;
                case LinOpKind::Lin:
                    expect = bound[op.var] * s1 + (one - bound[op.var]) * s0;
                    break;
            }
            if (expect != claim) {
                res.detail = "case check failed at round " + std::to_string(i + 1);
                return false;
            }
            claim = extrapolate(msg.words, ch[i]);
            bound[op.var] = ch[i];
            if (i + 1 < e.ops.size()) ep.send({kTagChallenge, {ch[i]}});
        }
        if (claim != fr) {
            res.detail = "final claim does not match the stream fingerprint";
            return false;
        }
        return true;
    };
    try {
        res.accepted = protocol();
    } catch (const TransportError&) {
        res.detail = "transport failure";
    }
    res.cost.verifier_peak_words = meter.peak();
    return res;
}

namespace {

RunResult run_lin(const LinExpression& e, const Stream& s, const RunOptions& opt) {
    Session session(opt.transport, opt.record_transcript);
    RunResult res;
    session.run(
        [&](Endpoint& ep) { lin_prove(e, s, ep); },
        [&](Endpoint& raw) {
            CorruptingEndpoint adv(raw, opt.adversary_word < 0
                                            ? ~0ull
                                            : static_cast<uint64_t>(opt.adversary_word));
            Endpoint& ep = opt.adversary_word < 0 ? raw : static_cast<Endpoint&>(adv);
            res = lin_verify_stream(e, s, opt.seed, ep);
        });
    res.cost.fill_from(session.stats());
    res.cost.prover_field_ops = session.prover_field_ops();
    res.cost.prover_seconds = session.prover_seconds();
    res.cost.verifier_seconds = session.verifier_seconds();
    res.cost.verifier_check_seconds =
        std::max(0.0, res.cost.verifier_seconds - res.cost.verifier_stream_seconds);
    return res;
}

}  // namespace

RunResult run_lin_f0(const Stream& s, const RunOptions& opt) {
    return run_lin(build_expression(Problem::F0, s.n, s.updates.size()), s, opt);
}

RunResult run_lin_pm(const Stream& s, uint64_t q, uint64_t alphabet, const RunOptions& opt) {
    return run_lin(build_expression(Problem::PMwW, s.n, 0, q, alphabet), s, opt);
}

/* ---- grid test oracle ----------------------------------------------- */

namespace {

size_t pow3(uint32_t k) {
    size_t r = 1;
    while (k--) r *= 3;
    return r;
}

}  // namespace

PolyGrid grid_from_cube(const std::vector<Fp>& cube) {
    if (cube.empty() || (cube.size() & (cube.size() - 1)))
        throw std::invalid_argument("grid_from_cube: cube size is not a power of two");
    uint32_t k = uint32_t(std::bit_width(cube.size()) - 1);
    std::vector<Fp> cur = cube;
    size_t g = 1;
    for (uint32_t t = 0; t < k; ++t) {
        size_t rest = cur.size() / (2 * g);
        std::vector<Fp> nxt(3 * g * rest);
        for (size_t ci = 0; ci < rest; ++ci)
            for (size_t gi = 0; gi < g; ++gi) {
                Fp v0 = cur[gi + g * (2 * ci)];
                Fp v1 = cur[gi + g * (2 * ci + 1)];
                nxt[gi + 3 * g * ci] = v0;
                nxt[gi + g + 3 * g * ci] = v1;
                nxt[gi + 2 * g + 3 * g * ci] = v1 + (v1 - v0);
            }
        cur = std::move(nxt);
        g *= 3;
    }
    return {k, std::move(cur)};
}

PolyGrid apply_operator(const LinOp& op, const PolyGrid& g) {
    if (op.var >= g.vars) throw std::invalid_argument("apply_operator: variable index out of range");
    const Fp two = Fp(2);
    if (op.kind != LinOpKind::Lin) {
        if (op.var + 1 != g.vars)
            throw std::invalid_argument("apply_operator: consuming operator must take the top variable");
        size_t p3 = pow3(g.vars - 1);
        PolyGrid out{g.vars - 1, std::vector<Fp>(p3)};
        for (size_t i = 0; i < p3; ++i) {
            Fp v0 = g.values[i], v1 = g.values[i + p3];
            switch (op.kind) {
                case LinOpKind::Sum: out.values[i] = v0 + v1; break;
                case LinOpKind::Or: out.values[i] = v0 + v1 - v0 * v1; break;
                case LinOpKind::And: out.values[i] = v0 * v1; break;
                default: break;
            }
        }
        return out;
    }
    size_t lo = pow3(op.var);
    PolyGrid out{g.vars, std::vector<Fp>(g.values.size())};
    for (size_t hi = 0; hi < g.values.size() / (3 * lo); ++hi)
        for (size_t li = 0; li < lo; ++li) {
            size_t base = li + 3 * lo * hi;
            Fp v0 = g.values[base], v1 = g.values[base + lo];
            out.values[base] = v0;
            out.values[base + lo] = v1;
            out.values[base + 2 * lo] = two * v1 - v0;
        }
    return out;
}

Fp evaluate_expression(const LinExpression& e, const std::vector<Fp>& cube) {
    if (cube.size() != size_t(1) << e.d)
        throw std::invalid_argument("evaluate_expression: cube size does not match the expression");
    PolyGrid g = grid_from_cube(cube);
    for (size_t i = e.ops.size(); i-- > 0;) g = apply_operator(e.ops[i], g);
    return g.values[0];
}

}  // namespace sips
