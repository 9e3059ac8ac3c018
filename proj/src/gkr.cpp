#include "sips/gkr.hpp"

#include <algorithm>
#include <stdexcept>

#include "sips/mle.hpp"
#include "sips/rng.hpp"
#include "sips/sumcheck.hpp"

namespace sips {

namespace {

constexpr uint8_t kTagEvals = 2;
constexpr uint8_t kTagChallenge = 3;
constexpr uint8_t kTagOutput = 4;
constexpr uint8_t kTagVector = 5;
constexpr uint8_t kTagLine = 6;
constexpr size_t kChunkWords = 8;

Fp recv_challenge(Endpoint& ep) {
    Frame f = ep.recv();
    if (f.tag != kTagChallenge || f.words.size() != 1)
        throw TransportError("bad challenge frame");
    return f.words[0];
}

}  // namespace

std::vector<Fp> line_point(const std::vector<Fp>& a, const std::vector<Fp>& b, Fp t) {
    if (a.size() != b.size()) throw std::invalid_argument("line_point: arity mismatch");
    std::vector<Fp> p(a.size());
    for (size_t i = 0; i < a.size(); ++i) p[i] = a[i] + t * (b[i] - a[i]);
    return p;
}

std::vector<Fp> line_restriction(const std::vector<Fp>& table, const std::vector<Fp>& a,
                                 const std::vector<Fp>& b) {
    std::vector<Fp> evals(a.size() + 1);
    for (size_t j = 0; j < evals.size(); ++j)
        evals[j] = mle_eval(table, line_point(a, b, Fp(j)));
    return evals;
}

GkrStructure gkr_structure(const Circuit& c) {
    GkrStructure st;
    st.prover_words = 1;  // output claim
    st.prover_messages = 1;
    if (c.spec.problem == Problem::MVMult) {
        uint64_t n = c.spec.n;
        st.prover_messages += (n + kChunkWords - 1) / kChunkWords;
        st.prover_words += n;
    }
    const Layer& top = c.layers.back();
    if (top.v_out > 0) {
        st.sumcheck_rounds += top.v_out;
        st.prover_words += 3ull * top.v_out;
    }
    for (size_t li = c.layers.size(); li-- > 0;) {
        const Layer& l = c.layers[li];
        st.sumcheck_rounds += l.v_out + 2ull * l.v_in;
        st.prover_words += 3ull * l.v_out + 2ull * l.v_in * l.omega_round_evals();
        st.prover_words += l.v_in + 1;  // line frame
        st.prover_messages += 1;
        if (li > 0) st.verifier_messages += 1;  // line reduction challenge
    }
    st.prover_messages += st.sumcheck_rounds;
    st.verifier_messages += st.sumcheck_rounds;
    st.verifier_words = st.verifier_messages;
    return st;
}

std::vector<Fp> gkr_input_from_stream(const Circuit& c, const Stream& s) {
    switch (c.spec.problem) {
        case Problem::F2:
        case Problem::F0:
            return circuit_input_frequencies(c, aggregate(s, c.spec.n));
        case Problem::MVMult:
            return circuit_input_mv(c, aggregate_field(s, c.spec.n * c.spec.n + c.spec.n));
        case Problem::PMwW: {
            std::vector<int64_t> all = aggregate(s, c.spec.n + c.spec.q);
            std::vector<int64_t> text(all.begin(), all.begin() + c.spec.n);
            std::vector<int64_t> pattern(all.begin() + c.spec.n, all.end());
            return circuit_input_pm(c, text, pattern);
        }
    }
    throw std::logic_error("unknown problem");
}

/* ---- prover ------------------------------------------------------------ */

namespace {

/* One layer's sum-check plus the line reduction.  V holds the values of
 * the layer below (the table the w variables range over); z is the point
 * of the incoming claim and is replaced by the next layer's point. */
void prove_layer(const Layer& L, const std::vector<Fp>& V, std::vector<Fp>& z, Endpoint& ep,
                 bool want_next_point) {
    const uint32_t vo = L.v_out, vi = L.v_in;

    // p rounds: the remaining function is beta~(z,p) * H~(p) where H is
    // this layer's output table, so two dense tables suffice.
    std::vector<Fp> B = chi_table(z);
    std::vector<Fp> H(1ull << vo);
    L.for_each_gate([&](const GateRec& g) {
        switch (g.kind) {
            case GateKind::Add: H[g.out] += V[g.in1] + V[g.in2]; break;
            case GateKind::Mul: H[g.out] += V[g.in1] * V[g.in2]; break;
            case GateKind::Pow: H[g.out] += (V[g.in1] * V[g.in2]).pow(g.pow_exp); break;
            case GateKind::Const1: H[g.out] += Fp::raw(1); break;
            default: break;
        }
    });
    std::vector<Fp> pstar;
    pstar.reserve(vo);
    for (uint32_t t = 0; t < vo; ++t) {
        std::vector<Fp> msg(3);
        for (size_t i = 0; i + 1 < B.size(); i += 2) {
            Fp b = B[i], bs = B[i + 1] - B[i];
            Fp h = H[i], hs = H[i + 1] - H[i];
            msg[0] += b * h;
            b += bs;
            h += hs;
            msg[1] += b * h;
            msg[2] += (b + bs) * (h + hs);
        }
        ep.send({kTagEvals, msg});
        Fp ch = recv_challenge(ep);
        fold_once_inplace(B, ch);
        fold_once_inplace(H, ch);
        pstar.push_back(ch);
    }
    const Fp beta = B[0];

    // flat gate view with incremental chi prefixes for the bound bits
    std::vector<Fp> chiP = chi_table(pstar);
    const size_t cap = L.gate_count();
    std::vector<uint64_t> g_in1, g_in2;
    std::vector<uint8_t> g_kind;
    std::vector<Fp> g_w, g_v2;
    g_in1.reserve(cap);
    g_in2.reserve(cap);
    g_kind.reserve(cap);
    g_w.reserve(cap);
    g_v2.reserve(cap);
    L.for_each_gate([&](const GateRec& g) {
        if (g.kind == GateKind::Const0) return;
        g_in1.push_back(g.in1);
        g_in2.push_back(g.in2);
        g_kind.push_back(uint8_t(g.kind));
        g_w.push_back(beta * chiP[g.out]);
        g_v2.push_back(V[g.in2]);
    });
    const size_t G = g_w.size();
    std::vector<Fp> g_u1(G, Fp::raw(1)), g_u2(G, Fp::raw(1));

    const uint32_t evals = L.omega_round_evals();
    const uint32_t pe = L.pow_exp();
    std::vector<Fp> lin_true(evals), lin_false(evals);
    for (uint32_t s = 0; s < evals; ++s) {
        lin_true[s] = Fp(s);
        lin_false[s] = Fp::raw(1) - Fp(s);
    }

    std::vector<Fp> w1s, w2s;
    w1s.reserve(vi);
    w2s.reserve(vi);
    Fp v1;
    for (int phase = 2; phase <= 3; ++phase) {
        std::vector<Fp> T = V;
        const std::vector<uint64_t>& gin = phase == 2 ? g_in1 : g_in2;
        std::vector<Fp>& bound = phase == 2 ? w1s : w2s;
        std::vector<Fp>& u = phase == 2 ? g_u1 : g_u2;
        for (uint32_t t = 0; t < vi; ++t) {
            std::vector<Fp> msg(evals);
            for (size_t g = 0; g < G; ++g) {
                const uint64_t a = gin[g];
                const size_t lo = size_t(a >> (t + 1)) << 1;
                const Fp e0 = T[lo], step = T[lo | 1] - T[lo];
                Fp base = g_w[g] * g_u1[g];
                if (phase == 3) base *= g_u2[g];
                const bool bit = (a >> t) & 1;
                Fp line = e0;
                for (uint32_t s = 0; s < evals; ++s, line += step) {
                    if (s == uint32_t(bit ? 0 : 1)) continue;  // zero lin factor
                    Fp term;
                    switch (GateKind(g_kind[g])) {
                        case GateKind::Add:
                            term = phase == 2 ? line + g_v2[g] : v1 + line;
                            break;
                        case GateKind::Mul:
                            term = phase == 2 ? line * g_v2[g] : v1 * line;
                            break;
                        case GateKind::Pow:
                            term = (phase == 2 ? line * g_v2[g] : v1 * line).pow(pe);
                            break;
                        default:  // Const1, wired to (0, 0)
                            term = Fp::raw(1);
                            break;
                    }
                    msg[s] += base * (bit ? lin_true[s] : lin_false[s]) * term;
                }
            }
            ep.send({kTagEvals, msg});
            Fp ch = recv_challenge(ep);
            Fp chm = Fp::raw(1) - ch;
            for (size_t g = 0; g < G; ++g) u[g] *= ((gin[g] >> t) & 1) ? ch : chm;
            fold_once_inplace(T, ch);
            bound.push_back(ch);
        }
        if (phase == 2) v1 = T[0];
    }

    ep.send({kTagLine, line_restriction(V, w1s, w2s)});
    if (want_next_point) {
        Fp tstar = recv_challenge(ep);
        z = line_point(w1s, w2s, tstar);
    }
}

}  // namespace

void gkr_prove(const Circuit& c, std::vector<Fp> input, Endpoint& ep) {
    Evaluation ev = evaluate(c, std::move(input));
    try {
        if (c.spec.problem == Problem::MVMult) {
            // deliver the claimed product vector (stored negated in the input)
            const uint64_t n = c.spec.n;
            const std::vector<Fp>& in = ev.values[0];
            for (uint64_t i = 0; i < n; i += kChunkWords) {
                Frame f;
                f.tag = kTagVector;
                for (uint64_t j = i; j < std::min(n, i + kChunkWords); ++j)
                    f.words.push_back(-in[n * n + n + j]);
                ep.send(f);
            }
        }

        const Layer& top = c.layers.back();
        std::vector<Fp> z;
        if (top.v_out > 0) {
            // wide top layer: claim the plain sum and reduce it to a point
            std::vector<Fp> t = ev.values.back();
            Fp total;
            for (Fp v : t) total += v;
            ep.send({kTagOutput, {total}});
            z.reserve(top.v_out);
            for (uint32_t round = 0; round < top.v_out; ++round) {
                std::vector<Fp> msg(3);
                for (size_t i = 0; i + 1 < t.size(); i += 2) {
                    Fp v = t[i], step = t[i + 1] - t[i];
                    msg[0] += v;
                    msg[1] += v + step;
                    msg[2] += v + step + step;
                }
                ep.send({kTagEvals, msg});
                Fp ch = recv_challenge(ep);
                fold_once_inplace(t, ch);
                z.push_back(ch);
            }
        } else {
            ep.send({kTagOutput, {ev.output()}});
        }

        for (size_t li = c.layers.size(); li-- > 0;)
            prove_layer(c.layers[li], ev.values[li], z, ep, li > 0);
    } catch (const TransportError&) {
        // verifier rejected mid-protocol and hung up
    }
}

/* ---- verifier ----------------------------------------------------------- */

namespace {

/* Everything the verifier derives from the seed before any message or
 * stream item arrives.  The challenge order here must match the live loop
 * exactly: big-sum point, then per layer p, w1, w2, line challenge. */
struct CoinScript {
    std::vector<Fp> r;               // final input point
    std::vector<Fp> beta;            // per layer top-first (preprocess only)
    std::vector<WiringEval> wiring;  // per layer top-first (preprocess only)
};

CoinScript replay_coins(const Circuit& c, uint64_t seed, const GkrOptions& gopt) {
    Rng rng(seed);
    CoinScript cs;
    std::vector<Fp> z(c.layers.back().v_out);
    for (auto& x : z) x = rng.next_field();
    for (size_t li = c.layers.size(); li-- > 0;) {
        const Layer& l = c.layers[li];
        std::vector<Fp> p(l.v_out), w1(l.v_in), w2(l.v_in);
        for (auto& x : p) x = rng.next_field();
        for (auto& x : w1) x = rng.next_field();
        for (auto& x : w2) x = rng.next_field();
        if (gopt.preprocess) {
            cs.beta.push_back(eq_points(z, p));
            cs.wiring.push_back(wiring_eval(l, p, w1, w2, gopt.closed_form_wiring));
        }
        z = line_point(w1, w2, rng.next_field());
    }
    cs.r = std::move(z);
    return cs;
}

void ingest_stream(const Circuit& c, const Stream& s, MleFingerprint& fp) {
    switch (c.spec.problem) {
        case Problem::F2:
        case Problem::F0:
            if (s.n != c.spec.n) throw std::invalid_argument("stream size does not match circuit");
            for (const auto& u : s.updates) {
                if (u.index >= s.n) throw std::invalid_argument("update index out of range");
                fp.update(u.index, Fp::from_signed(u.delta));
            }
            break;
        case Problem::MVMult: {
            const uint64_t n = c.spec.n;
            if (s.n != n) throw std::invalid_argument("stream size does not match circuit");
            for (const auto& u : s.updates) {
                if (u.index >= n * n + n)
                    throw std::invalid_argument("update index out of range");
                fp.update(u.index, Fp::from_signed(u.delta));
            }
            break;
        }
        case Problem::PMwW: {
            const uint64_t n = c.spec.n, q = c.spec.q;
            if (s.n != n) throw std::invalid_argument("stream size does not match circuit");
            for (const auto& u : s.updates) {
                if (u.index < n)
                    fp.update(u.index, pm_text_value(c, u.delta));
                else if (u.index < n + q)
                    fp.update(2 * c.nhat + (u.index - n), pm_pattern_value(c, u.delta));
                else
                    throw std::invalid_argument("update index out of range");
            }
            for (uint64_t i = n; i < 2 * c.nhat; ++i) fp.update(i, pm_sentinel(c));
            break;
        }
    }
    if (c.one_slot != ~0ull) fp.update(c.one_slot, Fp::raw(1));
}

}  // namespace

RunResult gkr_verify_stream(const Circuit& c, const Stream& s, uint64_t seed, Endpoint& ep,
                            const GkrOptions& gopt) {
    RunResult res;
    SpaceMeter meter;
    const size_t d = c.layers.size();

    CoinScript script = replay_coins(c, seed, gopt);
    meter.set("fingerprint", script.r.size() + 1);
    meter.set("scalars", 4);
    if (gopt.preprocess) meter.set("wiring table", 5 * d);

    MleFingerprint fp(std::move(script.r));
    Fp b_total;

    auto protocol = [&]() -> bool {
        if (c.spec.problem == Problem::MVMult) {
            const uint64_t n = c.spec.n;
            uint64_t got = 0;
            while (got < n) {
                Frame f = ep.recv();
                meter.set("message", f.words.size());
                if (f.tag != kTagVector || got + f.words.size() > n) {
                    res.detail = "malformed product delivery";
                    return false;
                }
                for (Fp v : f.words) {
                    fp.update(n * n + n + got, -v);
                    b_total += v;
                    ++got;
                }
            }
            res.answer = b_total;
        }
        double t0 = monotonic_seconds();
        ingest_stream(c, s, fp);
        res.cost.verifier_stream_seconds = monotonic_seconds() - t0;

        Frame out = ep.recv();
        if (out.tag != kTagOutput || out.words.size() != 1) {
            res.detail = "malformed output claim";
            return false;
        }
        const Fp claimed = out.words[0];
        if (c.spec.problem == Problem::F2 || c.spec.problem == Problem::F0)
            res.answer = claimed;
        else if (c.spec.problem == Problem::PMwW)
            res.answer = Fp(c.nhat) - claimed;

        Rng rng(seed);
        Fp claim = claimed;
        std::vector<Fp> z;

        const Layer& top = c.layers.back();
        if (top.v_out > 0) {
            SumcheckState sc(claim);
            z.reserve(top.v_out);
            for (uint32_t t = 0; t < top.v_out; ++t) {
                Frame m = ep.recv();
                meter.set("message", m.words.size());
                if (m.tag != kTagEvals || m.words.size() != 3) {
                    res.detail = "malformed round message";
                    return false;
                }
                Fp ch = rng.next_field();
                if (!sc.round(m.words, ch)) {
                    res.detail = "round message inconsistent with running claim";
                    return false;
                }
                ep.send({kTagChallenge, {ch}});
                z.push_back(ch);
            }
            claim = sc.claim();
            meter.set("point", z.size());
        }

        size_t pre = 0;
        for (size_t li = d; li-- > 0;) {
            const Layer& l = c.layers[li];
            const uint32_t evals = l.omega_round_evals();
            SumcheckState sc(claim);
            std::vector<Fp> pstar, w1, w2;
            pstar.reserve(l.v_out);
            w1.reserve(l.v_in);
            w2.reserve(l.v_in);
            for (uint32_t t = 0; t < l.v_out + 2u * l.v_in; ++t) {
                const uint32_t want = t < l.v_out ? 3 : evals;
                Frame m = ep.recv();
                meter.set("message", m.words.size());
                if (m.tag != kTagEvals || m.words.size() != want) {
                    res.detail = "malformed round message";
                    return false;
                }
                Fp ch = rng.next_field();
                if (!sc.round(m.words, ch)) {
                    res.detail = "round message inconsistent with running claim";
                    return false;
                }
                ep.send({kTagChallenge, {ch}});
                (t < l.v_out ? pstar : t < l.v_out + l.v_in ? w1 : w2).push_back(ch);
                meter.set("omegas", pstar.size() + w1.size() + w2.size());
            }

            Frame lf = ep.recv();
            meter.set("line", lf.words.size());
            if (lf.tag != kTagLine || lf.words.size() != l.v_in + 1) {
                res.detail = "malformed line frame";
                return false;
            }
            const Fp v1 = lf.words[0];
            const Fp v2 = lf.words[l.v_in == 0 ? 0 : 1];

            Fp beta;
            WiringEval we;
            if (gopt.preprocess) {
                beta = script.beta[pre];
                we = script.wiring[pre];
                ++pre;
            } else {
                beta = eq_points(z, pstar);
                we = wiring_eval(l, pstar, w1, w2, gopt.closed_form_wiring);
            }
            Fp expect = we.add * (v1 + v2) + we.mult * (v1 * v2) + we.one;
            if (uint32_t pe = l.pow_exp()) expect += we.pow * (v1 * v2).pow(pe);
            expect *= beta;
            if (sc.claim() != expect) {
                res.detail = "wiring check failed";
                return false;
            }

            Fp tstar = rng.next_field();
            claim = extrapolate(lf.words, tstar);
            z = line_point(w1, w2, tstar);
            meter.set("point", z.size());
            if (li > 0) ep.send({kTagChallenge, {tstar}});
        }

        if (claim != fp.value()) {
            res.detail = "final claim does not match input fingerprint";
            return false;
        }
        if (c.spec.problem == Problem::MVMult && claimed != Fp()) {
            res.detail = "claimed product has a nonzero mismatch count";
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

RunResult run_gkr(const Stream& s, const Circuit& c, const RunOptions& opt,
                  const GkrOptions& gopt) {
    Session session(opt.transport, opt.record_transcript);
    RunResult res;
    session.run(
        [&](Endpoint& ep) { gkr_prove(c, gkr_input_from_stream(c, s), ep); },
        [&](Endpoint& raw) {
            CorruptingEndpoint adv(raw, opt.adversary_word < 0
                                            ? ~0ull
                                            : static_cast<uint64_t>(opt.adversary_word));
            Endpoint& ep = opt.adversary_word < 0 ? raw : static_cast<Endpoint&>(adv);
            res = gkr_verify_stream(c, s, opt.seed, ep, gopt);
        });
    res.cost.fill_from(session.stats());
    res.cost.prover_field_ops = session.prover_field_ops();
    res.cost.prover_seconds = session.prover_seconds();
    res.cost.verifier_seconds = session.verifier_seconds();
    res.cost.verifier_check_seconds =
        std::max(0.0, res.cost.verifier_seconds - res.cost.verifier_stream_seconds);
    return res;
}

}  // namespace sips
