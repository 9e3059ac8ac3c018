#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sips/mle.hpp"
#include "sips/rng.hpp"
#include "sips/sumcheck.hpp"

using namespace sips;

TEST_CASE("extrapolate matches direct interpolation") {
    // quadratic q(x) = 3x^2 + 2x + 7 from its values at 0,1,2
    auto q = [](Fp x) { return Fp(3) * x * x + Fp(2) * x + Fp(7); };
    std::vector<Fp> evals = {q(Fp(0)), q(Fp(1)), q(Fp(2))};
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        Fp x = rng.next_field();
        CHECK(extrapolate(evals, x) == q(x));
    }
    CHECK(extrapolate(evals, Fp(1)) == q(Fp(1)));
    CHECK(extrapolate({Fp(42)}, Fp(999)) == Fp(42));
    CHECK_THROWS(extrapolate({}, Fp(1)));
}

TEST_CASE("round message sums to the claim and folds consistently") {
    Rng rng(7);
    std::vector<Fp> table(16);
    for (auto& v : table) v = rng.next_field();
    auto phi = [](Fp v) { return v * v * v + Fp(5) * v; };  // degree 3

    Fp claim;
    for (Fp v : table) claim += phi(v);
    std::vector<Fp> msg = table_round_message(table, 3, phi);
    REQUIRE(msg.size() == 4);
    CHECK(msg[0] + msg[1] == claim);

    // brute force at each sample point
    for (uint32_t s = 0; s <= 3; ++s) {
        Fp expect;
        for (size_t i = 0; i < table.size(); i += 2)
            expect += phi(table[i] + Fp(s) * (table[i + 1] - table[i]));
        CHECK(msg[s] == expect);
    }

    // the extrapolated message at r equals the claim over the folded table
    Fp r = rng.next_field();
    std::vector<Fp> folded = table;
    fold_once_inplace(folded, r);
    Fp next;
    for (Fp v : folded) next += phi(v);
    CHECK(extrapolate(msg, r) == next);
}

TEST_CASE("verifier state enforces the round invariant") {
    Rng rng(11);
    std::vector<Fp> table(8);
    for (auto& v : table) v = rng.next_field();
    auto phi = [](Fp v) { return v * v; };

    Fp claim;
    for (Fp v : table) claim += phi(v);
    SumcheckState sc(claim);
    while (table.size() > 1) {
        std::vector<Fp> msg = table_round_message(table, 2, phi);
        Fp r = rng.next_field();
        CHECK(sc.round(msg, r));
        fold_once_inplace(table, r);
    }
    CHECK(sc.claim() == phi(table[0]));
    CHECK(sc.point().size() == 3);

    // a message whose endpoints do not add up is refused
    SumcheckState bad(claim);
    std::vector<Fp> msg = {claim, Fp(1), Fp(2)};
    CHECK(!bad.round(msg, Fp(9)));
    CHECK(bad.claim() == claim);
    CHECK(!bad.round({Fp(4)}, Fp(9)));
}

TEST_CASE("second-moment protocol end to end") {
    for (uint64_t n : {1ull, 2ull, 100ull, 1000ull, 4096ull}) {
        Stream s = gen_stream(Problem::F2, n, 3 * n, 0, 1000 + n);
        Fp expect = oracle_f2(aggregate(s, s.n));
        RunOptions opt;
        opt.seed = n + 5;
        RunResult res = run_mrs_f2(s, opt);
        CHECK(res.accepted);
        CHECK(res.answer == expect);
    }
}

TEST_CASE("second-moment protocol over a socket") {
    Stream s = gen_stream(Problem::F2, 300, 900, 0, 71);
    RunOptions opt;
    opt.seed = 13;
    opt.transport = TransportKind::Socket;
    RunResult res = run_mrs_f2(s, opt);
    CHECK(res.accepted);
    CHECK(res.answer == oracle_f2(aggregate(s, s.n)));
}

TEST_CASE("second-moment costs stay logarithmic") {
    Stream s = gen_stream(Problem::F2, 4096, 12000, 0, 73);
    RunOptions opt;
    opt.seed = 29;
    RunResult res = run_mrs_f2(s, opt);
    REQUIRE(res.accepted);
    // 12 rounds of 3 words plus the claim
    CHECK(res.cost.proof_payload_bytes == 8 * (1 + 12 * 3));
    CHECK(res.cost.proof_payload_bytes < 1000);
    CHECK(res.cost.verifier_messages == 12);
    CHECK(res.cost.verifier_peak_words <= 64 * 12);
}

TEST_CASE("second-moment rejects corrupted words") {
    Stream s = gen_stream(Problem::F2, 256, 700, 0, 79);
    // payload is 1 claim word plus 8 rounds of 3 evaluations
    for (uint64_t word : std::vector<uint64_t>{0, 1, 2, 3, 11, 24}) {
        RunOptions opt;
        opt.seed = 31;
        opt.adversary_word = static_cast<int64_t>(word);
        RunResult res = run_mrs_f2(s, opt);
        CHECK(!res.accepted);
        CHECK(!res.detail.empty());
    }
}

TEST_CASE("distinct-elements protocol under the frequency promise") {
    for (uint64_t fmax : {1ull, 2ull, 5ull, 8ull}) {
        Stream s = gen_stream(Problem::F0, 512, 300 + 100 * fmax, 0, 100 + fmax, fmax);
        auto agg = aggregate(s, s.n);
        uint64_t expect = oracle_f0(agg);
        for (int64_t v : agg) REQUIRE(v <= static_cast<int64_t>(fmax));
        RunOptions opt;
        opt.seed = fmax;
        RunResult res = run_bounded_f0(s, fmax, opt);
        CHECK(res.accepted);
        CHECK(res.answer == Fp(expect));
        // rounds carry fmax+1 words each
        CHECK(res.cost.proof_payload_bytes == 8 * (1 + 9 * (fmax + 1)));
    }
    CHECK_THROWS(run_bounded_f0(gen_stream(Problem::F0, 8, 8, 0, 1, 1), 0, RunOptions{}));
}

TEST_CASE("distinct-elements rejects corrupted words") {
    Stream s = gen_stream(Problem::F0, 128, 300, 0, 83, 4);
    for (uint64_t word : std::vector<uint64_t>{0, 2, 17, 35}) {
        RunOptions opt;
        opt.seed = 37;
        opt.adversary_word = static_cast<int64_t>(word);
        RunResult res = run_bounded_f0(s, 4, opt);
        CHECK(!res.accepted);
    }
}

TEST_CASE("protocol runs are reproducible from the seed") {
    Stream s = gen_stream(Problem::F2, 200, 600, 0, 89);
    RunOptions opt;
    opt.seed = 41;
    opt.record_transcript = true;
    RunResult a = run_mrs_f2(s, opt);
    RunResult b = run_mrs_f2(s, opt);
    CHECK(a.accepted);
    CHECK(a.answer == b.answer);
    CHECK(a.cost.proof_payload_bytes == b.cost.proof_payload_bytes);
}
