/* Command-line harness around the protocol library.
 *
 *   gen     write a seeded stream file
 *   run     run a (problem, protocol) pair on a generated or loaded
 *           stream and print one cost row per size
 *   verify  check a stored one-message proof against a stream file
 *
 * Exit codes: 0 ok, 1 a non-adversarial run (or verify) rejected,
 * 2 bad usage or input, 3 an accepted answer disagreed with the oracle.
 */

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sips/circuit.hpp"
#include "sips/gkr.hpp"
#include "sips/lin.hpp"
#include "sips/ni.hpp"
#include "sips/stream.hpp"
#include "sips/sumcheck.hpp"
#include "sips/transport.hpp"

using namespace sips;

namespace {

struct RunConfig {
    Problem problem = Problem::F2;
    std::string protocol = "mrs";
    uint64_t n = 0, m = 0, q = 0, fmax = 0, seed = 1;
    bool m_given = false, q_given = false, fmax_given = false;
    GateSet gate_set = GateSet::Basic;
    bool big_sum = false, gate_set_given = false;
    uint32_t alpha_num = 0, alpha_den = 1;
    bool alpha_given = false;
    TransportKind transport = TransportKind::Memory;
    int64_t adversary = -1;
    std::string stream_file, proof_out;
};

struct Row {
    std::string problem, protocol, gate_set = "-";
    uint64_t n = 0, gates = 0, rounds = 0, comm_bytes = 0, vspace_words = 0;
    double prover_ms = 0, verifier_stream_ms = 0, verifier_check_ms = 0;
    uint64_t answer = 0;
    bool accepted = false;
};

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/* ---- config plumbing -------------------------------------------------- */

TransportKind transport_from(const std::string& s) {
    if (s == "inproc") return TransportKind::Memory;
    return parse_transport(s);
}

void parse_alpha(const std::string& s, RunConfig& cfg) {
    size_t slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            cfg.alpha_num = static_cast<uint32_t>(std::stoul(s));
            cfg.alpha_den = 1;
        } else {
            cfg.alpha_num = static_cast<uint32_t>(std::stoul(s.substr(0, slash)));
            cfg.alpha_den = static_cast<uint32_t>(std::stoul(s.substr(slash + 1)));
        }
    } catch (const std::exception&) {
        throw Usage("--alpha wants an integer or a fraction like 1/3");
    }
    if (cfg.alpha_den == 0 || cfg.alpha_num > cfg.alpha_den)
        throw Usage("--alpha must lie in [0, 1]");
}

void parse_gate_set_flag(const std::string& s, RunConfig& cfg) {
    size_t start = 0;
    bool base_seen = false;
    while (start <= s.size()) {
        size_t plus = s.find('+', start);
        std::string tok = s.substr(start, plus == std::string::npos ? plus : plus - start);
        if (tok == "big-sum") {
            cfg.big_sum = true;
        } else if (!tok.empty()) {
            cfg.gate_set = parse_gate_set(tok);  // throws on unknown names
            base_seen = true;
        }
        if (plus == std::string::npos) break;
        start = plus + 1;
    }
    if (!base_seen && !cfg.big_sum) throw Usage("empty --gate-set");
}

std::vector<uint64_t> parse_sizes(const std::string& s) {
    std::vector<uint64_t> out;
    size_t start = 0;
    while (start < s.size()) {
        size_t comma = s.find(',', start);
        std::string tok = s.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!tok.empty()) {
            try {
                out.push_back(std::stoull(tok));
            } catch (const std::exception&) {
                throw Usage("--n wants comma-separated sizes, got '" + tok + "'");
            }
        }
        start = comma == std::string::npos ? s.size() : comma + 1;
    }
    return out;
}

void validate(const RunConfig& cfg) {
    const Problem p = cfg.problem;
    const std::string& pr = cfg.protocol;
    bool ok = (pr == "ni" && (p == Problem::F2 || p == Problem::MVMult)) ||
              (pr == "ni-fft" && p == Problem::F2) || pr == "gkr" ||
              (pr == "lin" && (p == Problem::F0 || p == Problem::PMwW)) ||
              (pr == "mrs" && p == Problem::F2) || (pr == "bounded-f0" && p == Problem::F0);
    if (!ok)
        throw Usage("protocol " + pr + " does not handle problem " + problem_name(p));
    if (cfg.gate_set_given && pr != "gkr") throw Usage("--gate-set applies to the gkr protocol");
    if (cfg.alpha_given && !(pr == "ni" && p == Problem::MVMult))
        throw Usage("--alpha applies to ni runs on mvmult");
    if (cfg.fmax_given && p != Problem::F0) throw Usage("--fmax applies to f0 streams");
    if (pr == "bounded-f0" && cfg.fmax == 0)
        throw Usage("bounded-f0 needs --fmax of at least 1");
    if (cfg.q_given && p != Problem::PMwW) throw Usage("--q applies to pmww streams");
    if (p == Problem::PMwW && cfg.q == 0) throw Usage("pmww needs --q of at least 1");
    if (!cfg.proof_out.empty() && pr != "ni" && pr != "ni-fft")
        throw Usage("proof files exist for the one-message protocols only");
}

/* ---- oracle cross-check ------------------------------------------------ */

uint64_t slot_count(Problem p, uint64_t n, uint64_t q) {
    switch (p) {
        case Problem::MVMult: return n * n + n;
        case Problem::PMwW: return n + q;
        default: return n;
    }
}

// brute-force answer, computed when the aggregate fits in memory
std::optional<Fp> oracle_answer(Problem p, const Stream& s, uint64_t q) {
    uint64_t slots = slot_count(p, s.n, q);
    if (slots > (1ull << 20)) return std::nullopt;
    switch (p) {
        case Problem::F2: return oracle_f2(aggregate(s, slots));
        case Problem::F0: return Fp(oracle_f0(aggregate(s, slots)));
        case Problem::MVMult: {
            std::vector<Fp> b = oracle_mvmult(aggregate_field(s, slots), s.n);
            Fp total;
            for (Fp v : b) total += v;
            return total;
        }
        case Problem::PMwW: {
            std::vector<int64_t> all = aggregate(s, slots);
            std::vector<int64_t> text(all.begin(), all.begin() + s.n);
            std::vector<int64_t> pat(all.begin() + s.n, all.end());
            return Fp(oracle_pmww(text, pat, static_cast<int64_t>(s.n)));
        }
    }
    return std::nullopt;
}

/* ---- one run ----------------------------------------------------------- */

void save_proof(const RunConfig& cfg, const Stream& s) {
    NiProof p;
    p.n = s.n;
    if (cfg.problem == Problem::F2) {
        GridShape g = cfg.protocol == "ni-fft" ? plan_grid_fft(s.n) : plan_grid_naive(s.n);
        p.protocol = 1;
        p.h = g.h;
        p.w = g.w;
        p.payload = ni_f2_payload(aggregate_field(s, s.n), g);
    } else {
        MvShape shape = plan_mv_shape(s.n, cfg.alpha_num, cfg.alpha_den);
        p.protocol = 2;
        p.h = shape.h;
        p.alpha_num = cfg.alpha_num;
        p.alpha_den = cfg.alpha_den;
        std::vector<Fp> ax = aggregate_field(s, s.n * s.n + s.n);
        if (shape.h == 1) {
            p.payload = oracle_mvmult(ax, s.n);
        } else {
            for (const auto& blk : ni_mv_row_blocks(ax, shape))
                p.payload.insert(p.payload.end(), blk.begin(), blk.end());
        }
    }
    save_ni_proof(p, cfg.proof_out);
}

Row run_one(const RunConfig& cfg) {
    Stream s = cfg.stream_file.empty()
                   ? gen_stream(cfg.problem, cfg.n, cfg.m, cfg.q, cfg.seed, cfg.fmax)
                   : load_stream(cfg.stream_file);

    RunOptions opt;
    opt.seed = cfg.seed;
    opt.transport = cfg.transport;
    opt.adversary_word = cfg.adversary;

    RunResult res;
    uint64_t gates = 0;
    Row row;
    if (cfg.protocol == "ni" || cfg.protocol == "ni-fft") {
        if (cfg.problem == Problem::F2) {
            GridShape g = cfg.protocol == "ni-fft" ? plan_grid_fft(s.n) : plan_grid_naive(s.n);
            res = run_ni_f2(s, g, opt);
        } else {
            res = run_ni_mvmult(s, plan_mv_shape(s.n, cfg.alpha_num, cfg.alpha_den), opt);
        }
        if (!cfg.proof_out.empty()) save_proof(cfg, s);
    } else if (cfg.protocol == "gkr") {
        CircuitSpec spec;
        spec.problem = cfg.problem;
        spec.gate_set = cfg.gate_set;
        spec.big_sum = cfg.big_sum;
        spec.n = s.n;
        spec.q = cfg.q;
        Circuit c = build_circuit(spec);
        gates = c.total_gates();
        row.gate_set = gate_set_name(cfg.gate_set);
        if (cfg.big_sum) row.gate_set += "+big-sum";
        res = run_gkr(s, c, opt);
    } else if (cfg.protocol == "lin") {
        res = cfg.problem == Problem::F0 ? run_lin_f0(s, opt) : run_lin_pm(s, cfg.q, 0, opt);
    } else if (cfg.protocol == "mrs") {
        res = run_mrs_f2(s, opt);
    } else {
        res = run_bounded_f0(s, cfg.fmax, opt);
    }

    if (res.accepted) {
        std::optional<Fp> want = oracle_answer(cfg.problem, s, cfg.q);
        if (want && res.answer != *want)
            throw std::runtime_error("accepted answer " + std::to_string(res.answer.value()) +
                                     " disagrees with the oracle " +
                                     std::to_string(want->value()));
    }

    row.problem = problem_name(cfg.problem);
    row.protocol = cfg.protocol;
    row.n = s.n;
    row.gates = gates;
    row.rounds = res.cost.rounds;
    row.comm_bytes = res.cost.proof_payload_bytes;
    row.vspace_words = res.cost.verifier_peak_words;
    row.prover_ms = res.cost.prover_seconds * 1e3;
    row.verifier_stream_ms = res.cost.verifier_stream_seconds * 1e3;
    row.verifier_check_ms = res.cost.verifier_check_seconds * 1e3;
    row.answer = res.answer.value();
    row.accepted = res.accepted;
    return row;
}

/* ---- table emission ---------------------------------------------------- */

double ms3(double v) { return std::round(v * 1000.0) / 1000.0; }

void emit_csv(const std::vector<Row>& rows) {
    std::printf(
        "problem,protocol,gate_set,n,gates,rounds,comm_bytes,prover_ms,"
        "verifier_stream_ms,verifier_check_ms,vspace_words,answer,accepted\n");
    for (const Row& r : rows)
        std::printf("%s,%s,%s,%llu,%llu,%llu,%llu,%.3f,%.3f,%.3f,%llu,%llu,%s\n",
                    r.problem.c_str(), r.protocol.c_str(), r.gate_set.c_str(),
                    static_cast<unsigned long long>(r.n),
                    static_cast<unsigned long long>(r.gates),
                    static_cast<unsigned long long>(r.rounds),
                    static_cast<unsigned long long>(r.comm_bytes), r.prover_ms,
                    r.verifier_stream_ms, r.verifier_check_ms,
                    static_cast<unsigned long long>(r.vspace_words),
                    static_cast<unsigned long long>(r.answer),
                    r.accepted ? "true" : "false");
}

void emit_json(const std::vector<Row>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Row& r : rows) {
        nlohmann::ordered_json o;
        o["problem"] = r.problem;
        o["protocol"] = r.protocol;
        o["gate_set"] = r.gate_set;
        o["n"] = r.n;
        o["gates"] = r.gates;
        o["rounds"] = r.rounds;
        o["comm_bytes"] = r.comm_bytes;
        o["prover_ms"] = ms3(r.prover_ms);
        o["verifier_stream_ms"] = ms3(r.verifier_stream_ms);
        o["verifier_check_ms"] = ms3(r.verifier_check_ms);
        o["vspace_words"] = r.vspace_words;
        o["answer"] = r.answer;
        o["accepted"] = r.accepted;
        arr.push_back(std::move(o));
    }
    std::printf("%s\n", arr.dump(2).c_str());
}

void emit(const std::string& output, const std::vector<Row>& rows) {
    if (output == "json")
        emit_json(rows);
    else
        emit_csv(rows);
}

/* ---- verify ------------------------------------------------------------ */

int do_verify(const std::string& proof_in, const std::string& stream_file, uint64_t seed,
              const std::string& output) {
    NiProof p = load_ni_proof(proof_in);
    Stream s = load_stream(stream_file);
    RunResult res;
    Problem problem;
    if (p.protocol == 1) {
        problem = Problem::F2;
        GridShape g{p.h, p.w, 0};
        res = verify_ni_f2_payload(s, g, p.payload, seed);
    } else {
        problem = Problem::MVMult;
        MvShape shape = plan_mv_shape(p.n, p.alpha_num, p.alpha_den);
        if (shape.h != p.h) throw Usage("proof shape does not match its alpha");
        res = verify_ni_mvmult_payload(s, shape, p.payload, seed);
    }

    if (res.accepted) {
        std::optional<Fp> want = oracle_answer(problem, s, 0);
        if (want && res.answer != *want) {
            std::fprintf(stderr, "error: accepted answer disagrees with the oracle\n");
            return 3;
        }
    }

    Row row;
    row.problem = problem_name(problem);
    row.protocol = "ni";
    row.n = p.n;
    row.rounds = 1;  // the proof file stands in for the one message
    row.comm_bytes = 8 * p.payload.size();
    row.vspace_words = res.cost.verifier_peak_words;
    row.verifier_stream_ms = res.cost.verifier_stream_seconds * 1e3;
    row.verifier_check_ms = res.cost.verifier_check_seconds * 1e3;
    row.answer = res.answer.value();
    row.accepted = res.accepted;
    emit(output, {row});
    return res.accepted ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming interactive proofs: generate, run, verify"};
    app.require_subcommand(1);

    std::string problem_s = "f2", protocol, transport_s = "inproc", output = "csv";
    std::string n_list, alpha_s, gate_set_s, stream_file, proof_out, proof_in;
    uint64_t m = 0, q = 0, fmax = 0, seed = 1;
    int64_t adversary = -1;
    unsigned jobs = 1;

    CLI::App* gen = app.add_subcommand("gen", "write a seeded stream file");
    gen->add_option("--problem", problem_s, "f2, f0, mvmult, pmww")->required();
    gen->add_option("--n", n_list, "universe size")->required();
    auto* gen_m = gen->add_option("--m", m, "update count (f2/f0; default n)");
    gen->add_option("--q", q, "pmww pattern length");
    gen->add_option("--fmax", fmax, "f0 per-item frequency cap");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--stream-file", stream_file, "output path")->required();

    CLI::App* run = app.add_subcommand("run", "run a protocol and print a cost table");
    run->add_option("--problem", problem_s, "f2, f0, mvmult, pmww")->required();
    run->add_option("--protocol", protocol, "ni, ni-fft, gkr, lin, mrs, bounded-f0")->required();
    auto* run_n = run->add_option("--n", n_list, "comma-separated sizes to sweep");
    auto* run_m = run->add_option("--m", m, "updates per generated stream (default n)");
    auto* run_q = run->add_option("--q", q, "pmww pattern length");
    auto* run_gs = run->add_option("--gate-set", gate_set_s,
                                   "gkr circuit family: basic, pow8, pow16, optionally +big-sum");
    auto* run_alpha = run->add_option("--alpha", alpha_s, "ni mvmult tradeoff, 0..1 fraction");
    auto* run_fmax = run->add_option("--fmax", fmax, "frequency bound (bounded-f0)");
    run->add_option("--seed", seed, "run seed");
    run->add_option("--transport", transport_s, "inproc or socket");
    run->add_option("--stream-file", stream_file, "run on a stored stream");
    run->add_option("--proof-out", proof_out, "store the one-message proof (ni, ni-fft)");
    run->add_option("--adversary", adversary, "corrupt this prover payload word");
    run->add_option("--output", output, "csv or json");
    run->add_option("--jobs", jobs, "worker threads for size sweeps");

    CLI::App* verify = app.add_subcommand("verify", "check a stored proof against a stream");
    verify->add_option("--proof-in", proof_in, "proof path")->required();
    verify->add_option("--stream-file", stream_file, "stream path")->required();
    verify->add_option("--seed", seed, "verifier seed");
    verify->add_option("--output", output, "csv or json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            Problem p = parse_problem(problem_s);
            std::vector<uint64_t> sizes = parse_sizes(n_list);
            if (sizes.size() != 1) throw Usage("gen wants exactly one --n");
            uint64_t n = sizes[0];
            if (p == Problem::PMwW && q == 0) throw Usage("pmww needs --q of at least 1");
            if (gen_m->count() == 0) m = n;
            Stream s = gen_stream(p, n, m, q, seed, fmax);
            save_stream(s, stream_file);
            std::printf("wrote %s: problem=%s n=%llu updates=%zu\n", stream_file.c_str(),
                        problem_name(p), static_cast<unsigned long long>(n),
                        s.updates.size());
            return 0;
        }

        if (verify->parsed()) return do_verify(proof_in, stream_file, seed, output);

        if (output != "csv" && output != "json") throw Usage("--output wants csv or json");
        RunConfig base;
        base.problem = parse_problem(problem_s);
        base.protocol = protocol;
        base.m = m;
        base.m_given = run_m->count() > 0;
        base.q = q;
        base.q_given = run_q->count() > 0;
        base.fmax = fmax;
        base.fmax_given = run_fmax->count() > 0;
        base.seed = seed;
        base.transport = transport_from(transport_s);
        base.adversary = adversary;
        base.stream_file = stream_file;
        base.proof_out = proof_out;
        if (run_gs->count()) {
            base.gate_set_given = true;
            parse_gate_set_flag(gate_set_s, base);
        }
        if (run_alpha->count()) {
            base.alpha_given = true;
            parse_alpha(alpha_s, base);
        }
        validate(base);

        std::vector<RunConfig> configs;
        if (!stream_file.empty()) {
            if (run_n->count()) throw Usage("--stream-file and --n are exclusive");
            configs.push_back(base);
        } else {
            if (!run_n->count()) throw Usage("run wants --n or --stream-file");
            for (uint64_t n : parse_sizes(n_list)) {
                RunConfig cfg = base;
                cfg.n = n;
                if (!cfg.m_given) cfg.m = n;
                configs.push_back(cfg);
            }
        }

        std::vector<Row> rows(configs.size());
        std::exception_ptr first_error;
        std::atomic<size_t> next{0};
        std::mutex error_mu;
        auto worker = [&] {
            for (size_t i; (i = next.fetch_add(1)) < configs.size();) {
                try {
                    rows[i] = run_one(configs[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        };
        size_t nthreads = std::max<size_t>(1, std::min<size_t>(jobs, configs.size()));
        std::vector<std::thread> pool;
        for (size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);

        emit(output, rows);
        for (size_t i = 0; i < rows.size(); ++i)
            if (!rows[i].accepted && configs[i].adversary < 0) return 1;
        return 0;
    } catch (const Usage& e) {
        std::fprintf(stderr, "error: %s (see --help)\n", e.what());
        return 2;
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        if (what.find("disagrees with the oracle") != std::string::npos) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 3;
        }
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
