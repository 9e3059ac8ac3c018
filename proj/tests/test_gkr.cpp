#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "sips/gkr.hpp"
#include "sips/mle.hpp"
#include "sips/rng.hpp"
#include "sips/sumcheck.hpp"

using namespace sips;

namespace {

RunOptions with_seed(uint64_t seed) {
    RunOptions o;
    o.seed = seed;
    return o;
}

Circuit make(Problem p, GateSet g, bool big, uint64_t n, uint64_t q = 0) {
    CircuitSpec spec;
    spec.problem = p;
    spec.gate_set = g;
    spec.big_sum = big;
    spec.n = n;
    spec.q = q;
    return build_circuit(spec);
}

Fp mv_product_sum(const Stream& s, uint64_t n) {
    std::vector<Fp> b = oracle_mvmult(aggregate_field(s, n * n + n), n);
    Fp total;
    for (Fp v : b) total += v;
    return total;
}

Stream pm_stream(uint64_t n, const std::vector<int64_t>& text,
                 const std::vector<int64_t>& pattern) {
    Stream s;
    s.n = n;
    for (uint64_t i = 0; i < text.size(); ++i) s.updates.push_back({i, text[i]});
    for (uint64_t k = 0; k < pattern.size(); ++k) s.updates.push_back({n + k, pattern[k]});
    return s;
}

}  // namespace

TEST_CASE("line restriction matches direct evaluation") {
    Rng rng(11);
    std::vector<Fp> table(8);
    for (auto& v : table) v = rng.next_field();
    std::vector<Fp> a(3), b(3);
    for (auto& v : a) v = rng.next_field();
    for (auto& v : b) v = rng.next_field();

    std::vector<Fp> evals = line_restriction(table, a, b);
    REQUIRE(evals.size() == 4);
    CHECK(evals[0] == mle_eval(table, a));
    CHECK(evals[1] == mle_eval(table, b));
    for (int i = 0; i < 10; ++i) {
        Fp t = rng.next_field();
        CHECK(extrapolate(evals, t) == mle_eval(table, line_point(a, b, t)));
    }

    // degenerate line through a single point
    std::vector<Fp> same = line_restriction(table, a, a);
    for (Fp v : same) CHECK(v == mle_eval(table, a));

    // zero-variable table
    std::vector<Fp> tiny = line_restriction({Fp(42)}, {}, {});
    REQUIRE(tiny.size() == 1);
    CHECK(tiny[0] == Fp(42));

    CHECK_THROWS(line_point({Fp(1)}, {}, Fp(2)));
}

TEST_CASE("second-moment circuit runs accept with the oracle answer") {
    for (GateSet g : {GateSet::Basic, GateSet::Pow8, GateSet::Pow16}) {
        for (uint64_t n : {1, 2, 3, 5, 8, 33, 256}) {
            Stream s = gen_stream(Problem::F2, n, 3 * n + 5, 0, 90 + n);
            Circuit c = make(Problem::F2, g, false, n);
            RunResult res = run_gkr(s, c, with_seed(n + 1));
            INFO(gate_set_name(g), " n=", n, " detail=", res.detail);
            REQUIRE(res.accepted);
            CHECK(res.answer == oracle_f2(aggregate(s, n)));
        }
    }
}

TEST_CASE("distinct-elements circuit runs accept with the oracle answer") {
    for (GateSet g : {GateSet::Basic, GateSet::Pow8, GateSet::Pow16}) {
        for (uint64_t n : {1, 2, 5, 16, 100}) {
            Stream s = gen_stream(Problem::F0, n, 2 * n + 7, 0, 40 + n);
            Circuit c = make(Problem::F0, g, false, n);
            RunResult res = run_gkr(s, c, with_seed(7 * n + 3));
            INFO(gate_set_name(g), " n=", n, " detail=", res.detail);
            REQUIRE(res.accepted);
            CHECK(res.answer == Fp(oracle_f0(aggregate(s, n))));
        }
    }
}

TEST_CASE("matrix-vector circuit runs accept and expose the product sum") {
    for (uint64_t n : {4, 8, 16}) {
        Stream s = gen_stream(Problem::MVMult, n, 0, 0, 60 + n);
        Circuit c = make(Problem::MVMult, GateSet::Basic, false, n);
        RunResult res = run_gkr(s, c, with_seed(n + 2));
        INFO("n=", n, " detail=", res.detail);
        REQUIRE(res.accepted);
        CHECK(res.answer == mv_product_sum(s, n));
    }
}

TEST_CASE("pattern-matching circuit runs accept with the oracle count") {
    // (0, *, 2) over 01201201: offsets 0 and 3 match
    Stream hand = pm_stream(8, {0, 1, 2, 0, 1, 2, 0, 1}, {0, 8, 2});
    Circuit hc = make(Problem::PMwW, GateSet::Basic, false, 8, 3);
    RunResult hr = run_gkr(hand, hc, with_seed(5));
    REQUIRE(hr.accepted);
    CHECK(hr.answer == Fp(2));

    // single-position edge: one symbol of text, pattern equal to it
    Stream one = pm_stream(1, {0}, {0});
    RunResult or1 = run_gkr(one, make(Problem::PMwW, GateSet::Basic, false, 1, 1), with_seed(6));
    REQUIRE(or1.accepted);
    CHECK(or1.answer == Fp(1));

    // window covering the whole text
    Stream full = pm_stream(4, {1, 0, 1, 1}, {1, 0, 1, 1});
    RunResult fr = run_gkr(full, make(Problem::PMwW, GateSet::Basic, false, 4, 4), with_seed(7));
    REQUIRE(fr.accepted);
    CHECK(fr.answer == Fp(1));

    struct Case {
        uint64_t n, q;
    } cases[] = {{9, 2}, {16, 3}, {64, 5}};
    for (auto [n, q] : cases) {
        Stream s = gen_stream(Problem::PMwW, n, n, q, 80 + n);
        std::vector<int64_t> all = aggregate(s, n + q);
        std::vector<int64_t> text(all.begin(), all.begin() + n);
        std::vector<int64_t> pattern(all.begin() + n, all.end());
        uint64_t want = oracle_pmww(text, pattern, int64_t(n));
        Circuit c = make(Problem::PMwW, GateSet::Basic, false, n, q);
        RunResult res = run_gkr(s, c, with_seed(n + q));
        INFO("n=", n, " q=", q, " detail=", res.detail);
        REQUIRE(res.accepted);
        CHECK(res.answer == Fp(want));
    }
}

TEST_CASE("wide-output circuits accept across all problems") {
    Stream f2s = gen_stream(Problem::F2, 33, 120, 0, 1);
    RunResult f2r = run_gkr(f2s, make(Problem::F2, GateSet::Basic, true, 33), with_seed(2));
    REQUIRE(f2r.accepted);
    CHECK(f2r.answer == oracle_f2(aggregate(f2s, 33)));

    RunResult f2p = run_gkr(f2s, make(Problem::F2, GateSet::Pow16, true, 33), with_seed(3));
    REQUIRE(f2p.accepted);
    CHECK(f2p.answer == oracle_f2(aggregate(f2s, 33)));

    Stream f0s = gen_stream(Problem::F0, 16, 50, 0, 4);
    RunResult f0r = run_gkr(f0s, make(Problem::F0, GateSet::Basic, true, 16), with_seed(5));
    REQUIRE(f0r.accepted);
    CHECK(f0r.answer == Fp(oracle_f0(aggregate(f0s, 16))));

    Stream mvs = gen_stream(Problem::MVMult, 4, 0, 0, 6);
    RunResult mvr = run_gkr(mvs, make(Problem::MVMult, GateSet::Basic, true, 4), with_seed(7));
    REQUIRE(mvr.accepted);
    CHECK(mvr.answer == mv_product_sum(mvs, 4));

    Stream pms = gen_stream(Problem::PMwW, 16, 16, 3, 8);
    {
        std::vector<int64_t> all = aggregate(pms, 19);
        std::vector<int64_t> text(all.begin(), all.begin() + 16);
        std::vector<int64_t> pattern(all.begin() + 16, all.end());
        RunResult pmr = run_gkr(pms, make(Problem::PMwW, GateSet::Basic, true, 16, 3), with_seed(9));
        REQUIRE(pmr.accepted);
        CHECK(pmr.answer == Fp(oracle_pmww(text, pattern, 16)));
    }

    // dropping the summation tree trades tree layers for one wide reduction
    Circuit flat = make(Problem::F2, GateSet::Basic, false, 33);
    Circuit wide = make(Problem::F2, GateSet::Basic, true, 33);
    CHECK(wide.layers.back().v_out > 0);
    CHECK(flat.layers.back().v_out == 0);
    CHECK(wide.layers.size() < flat.layers.size());
    CHECK(gkr_structure(wide).sumcheck_rounds < gkr_structure(flat).sumcheck_rounds);
}

TEST_CASE("structure prediction matches measured costs") {
    struct Case {
        Circuit c;
        Stream s;
        uint64_t seed;
    };
    std::vector<Case> cases;
    cases.push_back({make(Problem::F2, GateSet::Basic, false, 64),
                     gen_stream(Problem::F2, 64, 200, 0, 11), 21});
    cases.push_back({make(Problem::F2, GateSet::Pow16, true, 64),
                     gen_stream(Problem::F2, 64, 200, 0, 12), 22});
    cases.push_back({make(Problem::F0, GateSet::Basic, false, 16),
                     gen_stream(Problem::F0, 16, 40, 0, 13), 23});
    cases.push_back({make(Problem::MVMult, GateSet::Basic, false, 8),
                     gen_stream(Problem::MVMult, 8, 0, 0, 14), 24});
    cases.push_back({make(Problem::PMwW, GateSet::Basic, false, 16, 3),
                     gen_stream(Problem::PMwW, 16, 16, 3, 15), 25});
    for (auto& cs : cases) {
        GkrStructure st = gkr_structure(cs.c);
        RunResult res = run_gkr(cs.s, cs.c, with_seed(cs.seed));
        INFO(problem_name(cs.c.spec.problem), " detail=", res.detail);
        REQUIRE(res.accepted);
        CHECK(res.cost.prover_messages == st.prover_messages);
        CHECK(res.cost.verifier_messages == st.verifier_messages);
        CHECK(res.cost.proof_payload_bytes == st.prover_words * 8);
        CHECK(res.cost.challenge_payload_bytes == st.verifier_words * 8);
    }
}

TEST_CASE("wiring evaluation paths and preprocessing agree") {
    struct Case {
        Circuit c;
        Stream s;
    };
    std::vector<Case> cases;
    cases.push_back(
        {make(Problem::MVMult, GateSet::Basic, false, 4), gen_stream(Problem::MVMult, 4, 0, 0, 31)});
    cases.push_back(
        {make(Problem::PMwW, GateSet::Basic, false, 9, 2), gen_stream(Problem::PMwW, 9, 9, 2, 32)});
    cases.push_back(
        {make(Problem::F0, GateSet::Pow8, false, 16), gen_stream(Problem::F0, 16, 40, 0, 33)});
    for (auto& cs : cases) {
        GkrOptions closed;
        GkrOptions generic;
        generic.closed_form_wiring = false;
        GkrOptions pre;
        pre.preprocess = true;
        GkrOptions pregen;
        pregen.closed_form_wiring = false;
        pregen.preprocess = true;

        RunResult a = run_gkr(cs.s, cs.c, with_seed(44), closed);
        RunResult b = run_gkr(cs.s, cs.c, with_seed(44), generic);
        RunResult d = run_gkr(cs.s, cs.c, with_seed(44), pre);
        RunResult e = run_gkr(cs.s, cs.c, with_seed(44), pregen);
        INFO(problem_name(cs.c.spec.problem), " ", a.detail, "/", b.detail, "/", d.detail, "/",
             e.detail);
        REQUIRE(a.accepted);
        REQUIRE(b.accepted);
        REQUIRE(d.accepted);
        REQUIRE(e.accepted);
        CHECK(a.answer == b.answer);
        CHECK(a.answer == d.answer);
        CHECK(a.answer == e.answer);
        CHECK(a.cost.proof_payload_bytes == b.cost.proof_payload_bytes);
        CHECK(a.cost.proof_payload_bytes == d.cost.proof_payload_bytes);
    }
}

TEST_CASE("every corrupted payload word is rejected") {
    struct Case {
        Circuit c;
        Stream s;
    };
    std::vector<Case> cases;
    cases.push_back(
        {make(Problem::F2, GateSet::Basic, false, 8), gen_stream(Problem::F2, 8, 30, 0, 51)});
    cases.push_back(
        {make(Problem::MVMult, GateSet::Basic, false, 4), gen_stream(Problem::MVMult, 4, 0, 0, 52)});
    cases.push_back(
        {make(Problem::PMwW, GateSet::Basic, false, 4, 2), gen_stream(Problem::PMwW, 4, 4, 2, 53)});
    for (auto& cs : cases) {
        uint64_t words = gkr_structure(cs.c).prover_words;
        RunResult honest = run_gkr(cs.s, cs.c, with_seed(99));
        REQUIRE(honest.accepted);
        REQUIRE(honest.cost.proof_payload_bytes == words * 8);
        for (uint64_t w = 0; w < words; ++w) {
            RunOptions opt = with_seed(99);
            opt.adversary_word = int64_t(w);
            RunResult res = run_gkr(cs.s, cs.c, opt);
            INFO(problem_name(cs.c.spec.problem), " word ", w, " detail=", res.detail);
            CHECK_FALSE(res.accepted);
            CHECK_FALSE(res.detail.empty());
        }
    }
}

TEST_CASE("mismatched circuit descriptors are rejected") {
    // the distinct-elements chain differs per gate set, so these circuits
    // genuinely disagree about depth and message arity
    Stream s = gen_stream(Problem::F0, 8, 24, 0, 61);
    Circuit basic = make(Problem::F0, GateSet::Basic, false, 8);
    Circuit pow8 = make(Problem::F0, GateSet::Pow8, false, 8);
    Circuit wide = make(Problem::F0, GateSet::Basic, true, 8);

    auto cross = [&](const Circuit& pc, const Circuit& vc) {
        Session session(TransportKind::Memory, false);
        RunResult res;
        session.run([&](Endpoint& ep) { gkr_prove(pc, gkr_input_from_stream(pc, s), ep); },
                    [&](Endpoint& ep) { res = gkr_verify_stream(vc, s, 62, ep); });
        return res;
    };

    RunResult a = cross(basic, pow8);
    CHECK_FALSE(a.accepted);
    CHECK_FALSE(a.detail.empty());
    RunResult b = cross(pow8, basic);
    CHECK_FALSE(b.accepted);
    RunResult c = cross(basic, wide);
    CHECK_FALSE(c.accepted);
    RunResult d = cross(wide, basic);
    CHECK_FALSE(d.accepted);

    // same circuit, different stream at the verifier
    Stream other = gen_stream(Problem::F0, 8, 24, 0, 63);
    Session session(TransportKind::Memory, false);
    RunResult res;
    session.run([&](Endpoint& ep) { gkr_prove(basic, gkr_input_from_stream(basic, s), ep); },
                [&](Endpoint& ep) { res = gkr_verify_stream(basic, other, 64, ep); });
    CHECK_FALSE(res.accepted);
    CHECK(res.detail == "final claim does not match input fingerprint");
}

TEST_CASE("socket transport carries the circuit protocol") {
    RunOptions opt = with_seed(71);
    opt.transport = TransportKind::Socket;

    Stream f2s = gen_stream(Problem::F2, 33, 100, 0, 72);
    RunResult a = run_gkr(f2s, make(Problem::F2, GateSet::Basic, false, 33), opt);
    REQUIRE(a.accepted);
    CHECK(a.answer == oracle_f2(aggregate(f2s, 33)));

    Stream mvs = gen_stream(Problem::MVMult, 4, 0, 0, 73);
    RunResult b = run_gkr(mvs, make(Problem::MVMult, GateSet::Basic, false, 4), opt);
    REQUIRE(b.accepted);
    CHECK(b.answer == mv_product_sum(mvs, 4));
}

TEST_CASE("verifier space stays logarithmic in the stream size") {
    Stream s = gen_stream(Problem::F2, 4096, 8000, 0, 81);
    Circuit c = make(Problem::F2, GateSet::Basic, false, 4096);
    RunResult res = run_gkr(s, c, with_seed(82));
    REQUIRE(res.accepted);
    CHECK(res.cost.verifier_peak_words <= 64 * 12);

    Stream mvs = gen_stream(Problem::MVMult, 16, 0, 0, 83);
    Circuit mc = make(Problem::MVMult, GateSet::Basic, false, 16);
    RunResult mres = run_gkr(mvs, mc, with_seed(84));
    REQUIRE(mres.accepted);
    CHECK(mres.cost.verifier_peak_words <= 64 * (2 * mc.v_input + 1));
}

TEST_CASE("prover work grows near-linearly with circuit size") {
    auto ops_for = [](uint64_t n) {
        Stream s = gen_stream(Problem::F2, n, 2 * n, 0, n);
        Circuit c = make(Problem::F2, GateSet::Basic, false, n);
        RunResult res = run_gkr(s, c, with_seed(n));
        REQUIRE(res.accepted);
        double slogs = double(c.total_gates()) * std::log2(double(c.total_gates()));
        return double(res.cost.prover_field_ops) / slogs;
    };
    double small = ops_for(1 << 8);
    double large = ops_for(1 << 12);
    CHECK(large / small < 2.5);
    CHECK(small / large < 2.5);
}

TEST_CASE("runs are reproducible from the seed") {
    Stream s = gen_stream(Problem::F0, 32, 90, 0, 91);
    Circuit c = make(Problem::F0, GateSet::Basic, false, 32);
    RunResult a = run_gkr(s, c, with_seed(92));
    RunResult b = run_gkr(s, c, with_seed(92));
    REQUIRE(a.accepted);
    REQUIRE(b.accepted);
    CHECK(a.answer == b.answer);
    CHECK(a.cost.proof_payload_bytes == b.cost.proof_payload_bytes);
    CHECK(a.cost.verifier_peak_words == b.cost.verifier_peak_words);
    CHECK(a.cost.prover_messages == b.cost.prover_messages);
}

TEST_CASE("out-of-range stream updates are refused") {
    Stream s;
    s.n = 4;
    s.updates = {{9, 1}};
    Circuit c = make(Problem::F2, GateSet::Basic, false, 4);
    CHECK_THROWS(run_gkr(s, c, with_seed(93)));
}
