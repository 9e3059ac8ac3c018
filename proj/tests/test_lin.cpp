#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "sips/lin.hpp"
#include "sips/mle.hpp"
#include "sips/rng.hpp"

using namespace sips;

namespace {

RunOptions with_seed(uint64_t seed) {
    RunOptions o;
    o.seed = seed;
    return o;
}

Stream f0_stream(uint64_t n, const std::vector<uint64_t>& items) {
    Stream s;
    s.n = n;
    for (uint64_t i : items) s.updates.push_back({i, 1});
    return s;
}

Stream pm_stream(uint64_t n, const std::vector<int64_t>& text,
                 const std::vector<int64_t>& pattern) {
    Stream s;
    s.n = n;
    for (uint64_t i = 0; i < text.size(); ++i) s.updates.push_back({i, text[i]});
    for (uint64_t k = 0; k < pattern.size(); ++k) s.updates.push_back({n + k, pattern[k]});
    return s;
}

std::vector<Fp> dense_cube(const LinExpression& e, const Stream& s) {
    std::vector<Fp> cube(size_t(1) << e.d);
    for (uint64_t k : lin_base_keys(e, s)) cube[k] = Fp::raw(1);
    return cube;
}

uint64_t f0_oracle(const Stream& s) { return oracle_f0(aggregate(s, s.n)); }

uint64_t pm_oracle(const Stream& s, uint64_t q) {
    std::vector<int64_t> all = aggregate(s, s.n + q);
    std::vector<int64_t> text(all.begin(), all.begin() + s.n);
    std::vector<int64_t> pat(all.begin() + s.n, all.end());
    return oracle_pmww(text, pat, int64_t(s.n));
}

// transcript of a run over a manual session, prover frames only
struct Recorded {
    RunResult res;
    std::vector<Frame> prover_frames;
};

Recorded record_run(const LinExpression& e, const Stream& ps, const Stream& vs,
                    uint64_t seed) {
    Session session(TransportKind::Memory, true);
    Recorded out;
    session.run([&](Endpoint& ep) { lin_prove(e, ps, ep); },
                [&](Endpoint& ep) { out.res = lin_verify_stream(e, vs, seed, ep); });
    for (const auto& [dir, frame] : session.transcript().entries)
        if (dir == Dir::ProverToVerifier) out.prover_frames.push_back(frame);
    out.res.cost.fill_from(session.stats());
    return out;
}

uint64_t tri(uint64_t x) { return x * (x + 1) / 2; }

}  // namespace

TEST_CASE("expression schedule matches the closed form") {
    for (auto [n, m] : std::vector<std::pair<uint64_t, uint64_t>>{
             {4, 4}, {2, 2}, {8, 6}, {1, 5}, {16, 1}, {100, 37}}) {
        LinExpression e = build_expression(Problem::F0, n, m);
        CAPTURE(n);
        CAPTURE(m);
        uint64_t lins = e.d == 0 ? 0 : tri(e.d - 1) - (e.sums == 0 ? 0 : tri(e.sums - 1));
        CHECK(e.lin_rounds() == lins);
        CHECK(e.ops.size() == e.lin_rounds() + e.d);  // consuming rounds number d
        CHECK(e.message_words() == 1 + 2 * uint64_t(e.d) + 3 * lins);

        // every consuming operator binds the next variable; the sums come
        // back to back, everything after them is preceded by a full
        // re-linearization of the variables below it
        uint32_t next = 0;
        for (size_t i = 0; i < e.ops.size(); ++i) {
            if (e.ops[i].kind == LinOpKind::Lin) continue;
            CHECK(e.ops[i].var == next);
            if (e.ops[i].kind != LinOpKind::Sum) {
                for (uint32_t back = 0; back < next; ++back) {
                    REQUIRE(i >= 1 + back);
                    CHECK(e.ops[i - 1 - back].kind == LinOpKind::Lin);
                    CHECK(e.ops[i - 1 - back].var == back);
                }
            }
            ++next;
        }
        CHECK(next == e.d);
    }

    LinExpression f = build_expression(Problem::F0, 4, 4);
    CHECK(f.d == 4);
    CHECK(f.sums == 2);
    CHECK(f.ops.size() == 9);

    LinExpression p = build_expression(Problem::PMwW, 8, 0, 3, 0);
    CHECK(p.alphabet == 8);
    CHECK(p.off_bits == 3);
    CHECK(p.slot_bits == 2);
    CHECK(p.sym_bits == 4);  // symbols shift up and an off-text sentinel fits
    CHECK(p.d == 10);
    CHECK(p.sums == 3);
    // consuming kinds after the sums: And over slots, Or over symbols,
    // And over the text/pattern pairing bit
    std::vector<LinOpKind> kinds;
    for (const LinOp& op : p.ops)
        if (op.kind != LinOpKind::Lin && op.var >= p.sums) kinds.push_back(op.kind);
    REQUIRE(kinds.size() == 7);
    CHECK(kinds[0] == LinOpKind::And);
    CHECK(kinds[1] == LinOpKind::And);
    CHECK(kinds[2] == LinOpKind::Or);
    CHECK(kinds[5] == LinOpKind::Or);
    CHECK(kinds[6] == LinOpKind::And);

    CHECK_THROWS_AS(build_expression(Problem::F0, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(build_expression(Problem::PMwW, 4, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_expression(Problem::PMwW, 4, 0, 5), std::invalid_argument);
    CHECK_THROWS_AS(build_expression(Problem::F2, 4, 4), std::invalid_argument);
}

TEST_CASE("operator tables compute the literal semantics") {
    // Or folds (1,1) to 1, And folds (1,0) to 0
    PolyGrid both = grid_from_cube({Fp::raw(1), Fp::raw(1)});
    CHECK(apply_operator({LinOpKind::Or, 0}, both).values[0] == Fp::raw(1));
    CHECK(apply_operator({LinOpKind::And, 0}, both).values[0] == Fp::raw(1));
    PolyGrid mixed = grid_from_cube({Fp::raw(1), Fp()});
    CHECK(apply_operator({LinOpKind::Or, 0}, mixed).values[0] == Fp::raw(1));
    CHECK(apply_operator({LinOpKind::And, 0}, mixed).values[0] == Fp());
    CHECK(apply_operator({LinOpKind::Sum, 0}, mixed).values[0] == Fp::raw(1));

    // linearization fixes nothing on an already multilinear table
    Rng rng(5);
    std::vector<Fp> cube(16);
    for (auto& v : cube) v = rng.next_field();
    PolyGrid g = grid_from_cube(cube);
    for (uint32_t i = 0; i < 4; ++i) {
        PolyGrid h = apply_operator({LinOpKind::Lin, i}, g);
        CHECK(h.values == g.values);
    }

    CHECK_THROWS_AS(apply_operator({LinOpKind::Lin, 4}, g), std::invalid_argument);
    CHECK_THROWS_AS(apply_operator({LinOpKind::Or, 1}, g), std::invalid_argument);
    CHECK_THROWS_AS(grid_from_cube({Fp(), Fp(), Fp()}), std::invalid_argument);
}

TEST_CASE("textbook distinct-count stream accepts with answer three") {
    Stream s = f0_stream(4, {1, 2, 2, 3});
    LinExpression e = build_expression(Problem::F0, 4, 4);
    Recorded rec = record_run(e, s, s, 7);

    CHECK(rec.res.accepted);
    CHECK(rec.res.answer == Fp(3));
    CHECK(rec.res.cost.proof_payload_bytes == 8 * e.message_words());
    CHECK(rec.res.cost.prover_messages == e.ops.size() + 1);
    CHECK(rec.res.cost.verifier_messages == e.ops.size() - 1);

    // claim frame, then per-round arity 2 for Sum/Or and 3 for Lin
    REQUIRE(rec.prover_frames.size() == e.ops.size() + 1);
    CHECK(rec.prover_frames[0].words.size() == 1);
    std::vector<size_t> arity;
    for (size_t i = 1; i < rec.prover_frames.size(); ++i)
        arity.push_back(rec.prover_frames[i].words.size());
    CHECK(arity == std::vector<size_t>{2, 2, 3, 3, 2, 3, 3, 3, 2});

    RunResult res = run_lin_f0(s, with_seed(3));
    CHECK(res.accepted);
    CHECK(res.answer == Fp(3));
}

TEST_CASE("empty stream sends all-zero messages and answer zero") {
    Stream s;
    s.n = 8;
    LinExpression e = build_expression(Problem::F0, 8, 0);
    CHECK(e.d == 3);
    Recorded rec = record_run(e, s, s, 21);
    CHECK(rec.res.accepted);
    CHECK(rec.res.answer == Fp());
    for (const Frame& f : rec.prover_frames)
        for (Fp w : f.words) CHECK(w == Fp());

    CHECK(run_lin_f0(s, with_seed(4)).accepted);
}

TEST_CASE("tiny distinct-count instances match the oracle exhaustively") {
    for (auto [n, m] : std::vector<std::pair<uint64_t, uint64_t>>{{2, 2}, {4, 2}, {2, 3}, {4, 3}}) {
        LinExpression e = build_expression(Problem::F0, n, m);
        uint64_t combos = 1;
        for (uint64_t j = 0; j < m; ++j) combos *= n;
        for (uint64_t code = 0; code < combos; ++code) {
            std::vector<uint64_t> items;
            uint64_t c = code;
            for (uint64_t j = 0; j < m; ++j) {
                items.push_back(c % n);
                c /= n;
            }
            Stream s = f0_stream(n, items);
            uint64_t want = f0_oracle(s);
            CAPTURE(n);
            CAPTURE(m);
            CAPTURE(code);
            CHECK(evaluate_expression(e, dense_cube(e, s)) == Fp(want));
            RunResult res = run_lin_f0(s, with_seed(code + 1));
            CHECK(res.accepted);
            CHECK(res.answer == Fp(want));
        }
    }
}

TEST_CASE("generated distinct-count runs accept across shapes") {
    for (auto [n, m] : std::vector<std::pair<uint64_t, uint64_t>>{
             {8, 8}, {16, 16}, {16, 13}, {5, 9}, {100, 37}, {1, 4}}) {
        for (uint64_t seed = 1; seed <= 3; ++seed) {
            Stream s = gen_stream(Problem::F0, n, m, 0, seed * 31 + n);
            RunResult res = run_lin_f0(s, with_seed(seed));
            CAPTURE(n);
            CAPTURE(m);
            CAPTURE(seed);
            CHECK(res.accepted);
            CHECK(res.answer == Fp(f0_oracle(s)));
            LinExpression e = build_expression(Problem::F0, s.n, s.updates.size());
            CHECK(evaluate_expression(e, dense_cube(e, s)) == res.answer);
        }
    }
}

TEST_CASE("operator prefixes agree with the boolean fold on the cube") {
    Stream s = f0_stream(4, {0, 3, 3, 1});
    LinExpression e = build_expression(Problem::F0, 4, 4);
    std::vector<Fp> cube = dense_cube(e, s);
    PolyGrid g = grid_from_cube(cube);

    std::vector<uint64_t> ref(cube.size());
    for (size_t i = 0; i < cube.size(); ++i) ref[i] = cube[i] == Fp::raw(1) ? 1 : 0;

    // apply innermost first; after every step the grid restricted to 0/1
    // digits must equal the plain boolean computation
    for (size_t i = e.ops.size(); i-- > 0;) {
        const LinOp& op = e.ops[i];
        g = apply_operator(op, g);
        if (op.kind != LinOpKind::Lin) {
            size_t half = ref.size() / 2;
            std::vector<uint64_t> folded(half);
            for (size_t y = 0; y < half; ++y) {
                uint64_t a = ref[y], b = ref[y + half];
                folded[y] = op.kind == LinOpKind::Sum ? a + b
                            : op.kind == LinOpKind::Or ? (a | b)
                                                       : (a & b);
            }
            ref = std::move(folded);
        }
        for (uint64_t v = 0; v < ref.size(); ++v) {
            size_t gi = 0, p3 = 1;
            for (uint32_t t = 0; t < g.vars; ++t, p3 *= 3) gi += ((v >> t) & 1) * p3;
            CHECK(g.values[gi] == Fp(ref[v]));
        }
    }
    CHECK(g.vars == 0);
    CHECK(g.values[0] == Fp(3));
}

TEST_CASE("pattern-matching runs accept with the oracle count") {
    // planted double occurrence with a wildcard slot
    Stream s = pm_stream(8, {0, 7, 2, 0, 1, 2, 0, 5}, {0, 8, 2});
    CHECK(pm_oracle(s, 3) == 2);
    RunResult res = run_lin_pm(s, 3, 0, with_seed(2));
    CHECK(res.accepted);
    CHECK(res.answer == Fp(2));

    // single-symbol corner and the full-window case
    RunResult tiny = run_lin_pm(pm_stream(1, {0}, {0}), 1, 0, with_seed(5));
    CHECK(tiny.accepted);
    CHECK(tiny.answer == Fp(1));
    Stream full = pm_stream(4, {1, 0, 1, 1}, {1, 0, 1, 1});
    RunResult fres = run_lin_pm(full, 4, 0, with_seed(6));
    CHECK(fres.accepted);
    CHECK(fres.answer == Fp(1));

    // wildcards in the text match any pattern symbol
    Stream tw = pm_stream(4, {0, 4, 1, 0}, {0, 1});
    CHECK(pm_oracle(tw, 2) == 2);
    RunResult twres = run_lin_pm(tw, 2, 0, with_seed(8));
    CHECK(twres.accepted);
    CHECK(twres.answer == Fp(2));

    for (auto [n, q] : std::vector<std::pair<uint64_t, uint64_t>>{{9, 2}, {16, 3}, {64, 5}}) {
        for (uint64_t seed = 1; seed <= 3; ++seed) {
            Stream gs = gen_stream(Problem::PMwW, n, 0, q, seed * 17 + q);
            RunResult r = run_lin_pm(gs, q, 0, with_seed(seed));
            CAPTURE(n);
            CAPTURE(q);
            CAPTURE(seed);
            CHECK(r.accepted);
            CHECK(r.answer == Fp(pm_oracle(gs, q)));
        }
    }
}

TEST_CASE("tiny pattern instances match the oracle exhaustively") {
    // n=3, q=2, alphabet 2; symbol 3 is the wildcard; trailing pattern
    // slot may not be a wildcard
    LinExpression e = build_expression(Problem::PMwW, 3, 0, 2, 2);
    uint64_t checked = 0;
    for (uint64_t tcode = 0; tcode < 27; ++tcode) {
        std::vector<int64_t> text(3);
        uint64_t c = tcode;
        for (auto& t : text) {
            t = int64_t(c % 3);
            if (t == 2) t = 3;  // wildcard marker
            c /= 3;
        }
        for (int64_t p0 : {0, 1, 3})
            for (int64_t p1 : {0, 1}) {
                Stream s = pm_stream(3, text, {p0, p1});
                uint64_t want = pm_oracle(s, 2);
                CAPTURE(tcode);
                CAPTURE(p0);
                CAPTURE(p1);
                CHECK(evaluate_expression(e, dense_cube(e, s)) == Fp(want));
                if (checked++ % 7 == 0) {
                    RunResult res = run_lin_pm(s, 2, 2, with_seed(checked));
                    CHECK(res.accepted);
                    CHECK(res.answer == Fp(want));
                }
            }
    }
    CHECK(checked == 162);
}

TEST_CASE("fingerprint equals the dense extension at the same point") {
    Rng rng(29);
    Stream f0s = gen_stream(Problem::F0, 8, 6, 0, 11);
    LinExpression ef = build_expression(Problem::F0, 8, 6);
    std::vector<Fp> r(ef.d);
    for (auto& x : r) x = rng.next_field();
    CHECK(lin_fingerprint(ef, f0s, r) == mle_eval(dense_cube(ef, f0s), r));

    Stream pms = gen_stream(Problem::PMwW, 5, 0, 2, 13);
    LinExpression ep = build_expression(Problem::PMwW, 5, 0, 2, 0);
    std::vector<Fp> rp(ep.d);
    for (auto& x : rp) x = rng.next_field();
    CHECK(lin_fingerprint(ep, pms, rp) == mle_eval(dense_cube(ep, pms), rp));
}

TEST_CASE("overstated answers are rejected in the first round") {
    Stream s = f0_stream(4, {1, 2, 2, 3});
    RunOptions opt = with_seed(9);
    opt.adversary_word = 0;  // bump the claimed count
    RunResult res = run_lin_f0(s, opt);
    CHECK(!res.accepted);
    CHECK(res.detail == "case check failed at round 1");
}

TEST_CASE("every corrupted payload word is rejected") {
    Stream fs = gen_stream(Problem::F0, 8, 6, 0, 3);
    LinExpression fe = build_expression(Problem::F0, 8, 6);
    Stream ps = gen_stream(Problem::PMwW, 4, 0, 2, 3);
    LinExpression pe = build_expression(Problem::PMwW, 4, 0, 2, 0);

    struct Case {
        const Stream& s;
        const LinExpression& e;
        RunResult (*run)(const Stream&, const RunOptions&);
    };
    auto run_f0 = [](const Stream& s, const RunOptions& o) { return run_lin_f0(s, o); };
    auto run_pm = [](const Stream& s, const RunOptions& o) { return run_lin_pm(s, 2, 0, o); };
    for (const Case& c : {Case{fs, fe, +run_f0}, Case{ps, pe, +run_pm}}) {
        RunResult honest = c.run(c.s, with_seed(14));
        REQUIRE(honest.accepted);
        uint64_t words = c.e.message_words();
        REQUIRE(honest.cost.proof_payload_bytes == 8 * words);
        for (uint64_t wi = 0; wi < words; ++wi) {
            RunOptions opt = with_seed(14);
            opt.adversary_word = int64_t(wi);
            RunResult res = c.run(c.s, opt);
            CAPTURE(wi);
            CHECK(!res.accepted);
            CHECK(!res.detail.empty());
        }
    }
}

TEST_CASE("corruption past round four is flagged no earlier than round five") {
    Stream s = gen_stream(Problem::F0, 8, 6, 0, 5);
    LinExpression e = build_expression(Problem::F0, 8, 6);
    // words preceding round 5: the claim plus four round messages
    uint64_t offset = 1;
    for (size_t i = 0; i < 4; ++i) offset += e.ops[i].kind == LinOpKind::Lin ? 3 : 2;
    const std::string prefix = "case check failed at round ";
    for (uint64_t wi = offset; wi < e.message_words(); ++wi) {
        RunOptions opt = with_seed(31);
        opt.adversary_word = int64_t(wi);
        RunResult res = run_lin_f0(s, opt);
        CAPTURE(wi);
        CHECK(!res.accepted);
        if (res.detail.compare(0, prefix.size(), prefix) == 0)
            CHECK(std::stoul(res.detail.substr(prefix.size())) >= 5);
        else
            CHECK(res.detail == "final claim does not match the stream fingerprint");
    }
}

TEST_CASE("mismatched streams fail the fingerprint check") {
    Stream a = gen_stream(Problem::F0, 16, 10, 0, 1);
    Stream b = gen_stream(Problem::F0, 16, 10, 0, 2);
    LinExpression e = build_expression(Problem::F0, 16, 10);
    Recorded rec = record_run(e, a, b, 17);
    CHECK(!rec.res.accepted);
    CHECK(rec.res.detail == "final claim does not match the stream fingerprint");
}

TEST_CASE("socket transport carries the protocol") {
    Stream fs = gen_stream(Problem::F0, 33, 20, 0, 9);
    RunOptions opt = with_seed(12);
    opt.transport = TransportKind::Socket;
    RunResult res = run_lin_f0(fs, opt);
    CHECK(res.accepted);
    CHECK(res.answer == Fp(f0_oracle(fs)));

    Stream ps = gen_stream(Problem::PMwW, 9, 0, 2, 9);
    RunResult pres = run_lin_pm(ps, 2, 0, opt);
    CHECK(pres.accepted);
    CHECK(pres.answer == Fp(pm_oracle(ps, 2)));
}

TEST_CASE("verifier space stays logarithmic in the stream") {
    Stream small = gen_stream(Problem::F0, 64, 32, 0, 7);
    Stream large = gen_stream(Problem::F0, 4096, 512, 0, 7);
    RunResult rs = run_lin_f0(small, with_seed(2));
    RunResult rl = run_lin_f0(large, with_seed(2));
    REQUIRE(rs.accepted);
    REQUIRE(rl.accepted);
    LinExpression el = build_expression(Problem::F0, 4096, 512);
    CHECK(rl.cost.verifier_peak_words <= 2 * uint64_t(el.d) + 8);
    CHECK(rl.cost.verifier_peak_words <= 4 * rs.cost.verifier_peak_words);
}

TEST_CASE("prover work stays near one pass over the pairs per round") {
    Stream s = gen_stream(Problem::F0, 256, 400, 0, 19);
    RunResult res = run_lin_f0(s, with_seed(23));
    REQUIRE(res.accepted);
    LinExpression e = build_expression(Problem::F0, 256, 400);
    uint64_t pairs = uint64_t(1) << (e.d - e.sums);  // padded stream length
    uint64_t budget = pairs * (e.ops.size() + e.d) * (e.d + 30);
    // a dense-table prover would need ~2^d work per round, far past this
    CHECK(res.cost.prover_field_ops <= budget);
}

TEST_CASE("runs are reproducible from the seed") {
    Stream s = gen_stream(Problem::F0, 32, 24, 0, 8);
    RunResult a = run_lin_f0(s, with_seed(77));
    RunResult b = run_lin_f0(s, with_seed(77));
    CHECK(a.accepted == b.accepted);
    CHECK(a.answer == b.answer);
    CHECK(a.cost.proof_payload_bytes == b.cost.proof_payload_bytes);
    RunResult c = run_lin_f0(s, with_seed(78));
    CHECK(c.accepted);
    CHECK(c.answer == a.answer);
}

TEST_CASE("malformed streams are refused") {
    Stream bad = f0_stream(4, {1, 2});
    bad.updates[1].delta = 3;  // not an occurrence update
    CHECK_THROWS(run_lin_f0(bad, with_seed(1)));

    Stream oob = f0_stream(4, {1});
    oob.updates[0].index = 9;
    CHECK_THROWS(run_lin_f0(oob, with_seed(1)));

    Stream sym = pm_stream(4, {0, 1, 0, 1}, {0, 1});
    sym.updates[2].delta = 7;  // outside alphabet, not the wildcard
    CHECK_THROWS(run_lin_pm(sym, 2, 0, with_seed(1)));

    Stream trail = pm_stream(4, {0, 1, 0, 1}, {0, 4});  // pattern ends in wildcard
    CHECK_THROWS(run_lin_pm(trail, 2, 0, with_seed(1)));

    Stream longpat = pm_stream(2, {0, 1}, {0, 1, 0});
    CHECK_THROWS(run_lin_pm(longpat, 3, 0, with_seed(1)));
}
