#include "sips/sumcheck.hpp"

#include <algorithm>
#include <bit>
#include <memory>
#include <stdexcept>

#include "sips/mle.hpp"
#include "sips/rng.hpp"
#include "sips/transport.hpp"

namespace sips {

namespace {

constexpr uint8_t kTagClaim = 1;
constexpr uint8_t kTagEvals = 2;
constexpr uint8_t kTagChallenge = 3;

const LagrangeDomain& domain(size_t m) {
    static thread_local std::vector<std::unique_ptr<LagrangeDomain>> cache;
    if (cache.size() <= m) cache.resize(m + 1);
    if (!cache[m]) cache[m] = std::make_unique<LagrangeDomain>(m);
    return *cache[m];
}

}  // namespace

Fp extrapolate(const std::vector<Fp>& evals, Fp x) {
    if (evals.empty()) throw std::invalid_argument("extrapolate: no evaluations");
    return domain(evals.size()).extend(evals, x);
}

std::vector<Fp> table_round_message(const std::vector<Fp>& table, uint32_t deg,
                                    const std::function<Fp(Fp)>& phi) {
    std::vector<Fp> msg(deg + 1);
    for (size_t i = 0; i + 1 < table.size(); i += 2) {
        Fp cur = table[i];
        Fp step = table[i + 1] - table[i];
        for (uint32_t s = 0; s <= deg; ++s) {
            msg[s] += phi(cur);
            cur += step;
        }
    }
    return msg;
}

bool SumcheckState::round(const std::vector<Fp>& evals, Fp challenge) {
    if (evals.size() < 2) return false;
    if (evals[0] + evals[1] != claim_) return false;
    claim_ = extrapolate(evals, challenge);
    point_.push_back(challenge);
    return true;
}

namespace {

/* Shared runner for the two direct protocols: one sum-check over
 * phi(T~(x)) for a dense frequency table T.  deg is the degree of phi. */
RunResult run_table_sumcheck(const Stream& stream, uint32_t deg,
                             const std::function<Fp(Fp)>& phi, const RunOptions& opt) {
    uint32_t k = stream.n <= 1 ? 0 : uint32_t(std::bit_width(stream.n - 1));
    Session session(opt.transport, opt.record_transcript);
    RunResult res;

    session.run(
        [&](Endpoint& ep) {
            std::vector<Fp> table = aggregate_field(stream, stream.n);
            table.resize(size_t(1) << k, Fp());
            Fp claim;
            for (Fp v : table) claim += phi(v);
            try {
                ep.send({kTagClaim, {claim}});
                for (uint32_t t = 0; t < k; ++t) {
                    ep.send({kTagEvals, table_round_message(table, deg, phi)});
                    Frame ch = ep.recv();
                    if (ch.words.size() != 1) break;
                    fold_once_inplace(table, ch.words[0]);
                }
            } catch (const TransportError&) {
                // verifier rejected mid-protocol and hung up
            }
        },
        [&](Endpoint& raw) {
            CorruptingEndpoint adv(raw, opt.adversary_word < 0
                                            ? ~0ull
                                            : static_cast<uint64_t>(opt.adversary_word));
            Endpoint& ep = opt.adversary_word < 0 ? raw : static_cast<Endpoint&>(adv);

            // the challenge script doubles as the fingerprint point, so it
            // is fixed before the stream is read
            Rng rng(opt.seed);
            std::vector<Fp> r(k);
            for (auto& x : r) x = rng.next_field();
            MleFingerprint fp(r);
            double t0 = monotonic_seconds();
            for (const StreamUpdate& u : stream.updates) {
                if (u.index >= stream.n) throw std::invalid_argument("update index out of range");
                fp.update(u.index, Fp::from_signed(u.delta));
            }
            res.cost.verifier_stream_seconds = monotonic_seconds() - t0;

            SpaceMeter meter;
            meter.set("fingerprint", k + 1);
            meter.set("claim", 1);

            auto protocol = [&]() -> bool {
                Frame first = ep.recv();
                if (first.tag != kTagClaim || first.words.size() != 1) {
                    res.detail = "malformed claim";
                    return false;
                }
                res.answer = first.words[0];
                SumcheckState sc(first.words[0]);
                for (uint32_t t = 0; t < k; ++t) {
                    Frame msg = ep.recv();
                    meter.set("message", msg.words.size());
                    if (msg.tag != kTagEvals || msg.words.size() != deg + 1) {
                        res.detail = "malformed round message";
                        return false;
                    }
                    if (!sc.round(msg.words, r[t])) {
                        res.detail = "round message inconsistent with running claim";
                        return false;
                    }
                    ep.send({kTagChallenge, {r[t]}});
                }
                if (sc.claim() != phi(fp.value())) {
                    res.detail = "final claim does not match fingerprint";
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

RunResult run_mrs_f2(const Stream& stream, const RunOptions& opt) {
    return run_table_sumcheck(stream, 2, [](Fp v) { return v * v; }, opt);
}

RunResult run_bounded_f0(const Stream& stream, uint64_t fmax, const RunOptions& opt) {
    if (fmax == 0) throw std::invalid_argument("bounded_f0: frequency bound must be positive");
    LagrangeDomain dom(fmax + 1);
    std::vector<Fp> hvals(fmax + 1, Fp::raw(1));
    hvals[0] = Fp();
    auto h = [&dom, &hvals](Fp v) { return dom.extend(hvals, v); };
    return run_table_sumcheck(stream, uint32_t(fmax), h, opt);
}

}  // namespace sips
