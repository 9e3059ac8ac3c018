#include "sips/ni.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "sips/mle.hpp"
#include "sips/pfa.hpp"
#include "sips/rng.hpp"

namespace sips {

namespace {
constexpr uint8_t kTagPayload = 1;
constexpr size_t kChunkWords = 8;  // keeps the verifier's receive buffer tiny

void check_shape(uint64_t n, uint64_t h, uint64_t w) {
    if (h == 0 || w == 0 || h * w < n) throw std::invalid_argument("grid does not cover the data");
}
}  // namespace

GridShape plan_grid_naive(uint64_t n) {
    GridShape g;
    g.h = static_cast<uint64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    if (g.h == 0) g.h = 1;
    g.w = (n + g.h - 1) / g.h;
    if (g.w == 0) g.w = 1;
    g.fft_len = 0;
    return g;
}

GridShape plan_grid_fft(uint64_t n) {
    // Model: two length-N transforms per column, 2*N*cost_factor(N) ops
    // each.  Candidate heights stay within a constant factor of sqrt(n)
    // so the verifier keeps its sqrt-ish space/communication tradeoff;
    // within that window we take the cheapest admissible length.
    uint64_t root = static_cast<uint64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    if (root == 0) root = 1;
    uint64_t h_lo = std::max<uint64_t>(1, root / 2);
    uint64_t h_hi = 4 * root + 2;
    const auto& lens = transform_lengths();
    GridShape best;
    unsigned __int128 best_cost = ~static_cast<unsigned __int128>(0);
    for (uint64_t len : lens) {
        uint64_t h = len / 2;
        if (h < h_lo) continue;
        if (h > h_hi) break;
        uint64_t w = (n + h - 1) / h;
        unsigned __int128 cost = static_cast<unsigned __int128>(w + 1) * 4 * len *
                                 transform_cost_factor(len);
        if (cost < best_cost) {
            best_cost = cost;
            best = {h, w, len};
        }
    }
    if (best.h == 0) throw std::logic_error("no admissible transform length found");
    return best;
}

/* ---- F2 prover -------------------------------------------------------- */

static std::vector<Fp> f2_payload_naive(const std::vector<Fp>& a, uint64_t h, uint64_t w) {
    LagrangeDomain dom(h);
    std::vector<Fp> s(2 * h);
    for (uint64_t y = 0; y < w; ++y)
        for (uint64_t x = 0; x < h; ++x) {
            Fp v = a[y * h + x];
            s[x] += v * v;
        }
    for (uint64_t j = h; j < 2 * h; ++j) {
        std::vector<Fp> basis = dom.basis_at(Fp(j));
        for (uint64_t y = 0; y < w; ++y) {
            Fp f;
            const Fp* col = a.data() + y * h;
            for (uint64_t x = 0; x < h; ++x) f += col[x] * basis[x];
            s[j] += f * f;
        }
    }
    return s;
}

static std::vector<Fp> f2_payload_fft(const std::vector<Fp>& a, uint64_t h, uint64_t w,
                                      uint64_t len) {
    if (len < 2 * h) throw std::invalid_argument("transform too short for the grid");
    TransformPlan plan(len);
    LagrangeDomain dom(h);
    const std::vector<Fp>& dinv = dom.denominator_inverses();

    // kernel[d] = 1/d for d in [1, 2h), transformed once
    std::vector<Fp> kernel(len, Fp());
    for (uint64_t d = 1; d < 2 * h; ++d) kernel[d] = Fp(d);
    {
        std::vector<Fp> tail(kernel.begin() + 1, kernel.begin() + 2 * h);
        fp_batch_inverse(tail);
        std::copy(tail.begin(), tail.end(), kernel.begin() + 1);
    }
    plan.forward(kernel);

    // running numerator H[j] = j * (j-1) * ... * (j-h+1) for j in [h, 2h)
    std::vector<Fp> hnum(2 * h, Fp());
    {
        std::vector<Fp> small(h, Fp());
        for (uint64_t t = 1; t < h; ++t) small[t] = Fp(t);
        fp_batch_inverse(small);
        Fp acc = Fp::raw(1);
        for (uint64_t t = 1; t <= h; ++t) acc *= Fp(t);  // h!
        for (uint64_t j = h; j < 2 * h; ++j) {
            hnum[j] = acc;
            if (j + 1 < 2 * h) acc = acc * Fp(j + 1) * small[j + 1 - h];
        }
    }

    std::vector<Fp> s(2 * h);
    std::vector<Fp> buf(len);
    for (uint64_t y = 0; y < w; ++y) {
        const Fp* col = a.data() + y * h;
        std::fill(buf.begin(), buf.end(), Fp());
        for (uint64_t x = 0; x < h; ++x) {
            Fp v = col[x];
            s[x] += v * v;
            buf[x] = v * dinv[x];
        }
        plan.forward(buf);
        for (uint64_t i = 0; i < len; ++i) buf[i] *= kernel[i];
        plan.inverse(buf);
        for (uint64_t j = h; j < 2 * h; ++j) {
            Fp f = hnum[j] * buf[j];
            s[j] += f * f;
        }
    }
    return s;
}

std::vector<Fp> ni_f2_payload(const std::vector<Fp>& a, const GridShape& g) {
    check_shape(a.size(), g.h, g.w);
    std::vector<Fp> padded = a;
    padded.resize(g.h * g.w, Fp());
    return g.fft_len ? f2_payload_fft(padded, g.h, g.w, g.fft_len)
                     : f2_payload_naive(padded, g.h, g.w);
}

/* ---- F2 verifier ------------------------------------------------------ */

namespace {

class NiF2Verifier {
public:
    NiF2Verifier(const GridShape& g, uint64_t n, uint64_t seed)
        : n_(n), h_(g.h), w_(g.w), rng_(seed), dom_h_(g.h), dom_2h_(2 * g.h) {
        check_shape(n, g.h, g.w);
        r_ = rng_.next_field();
        col_basis_ = dom_h_.basis_at(r_);      // immutable domain table
        payload_basis_ = dom_2h_.basis_at(r_);  // immutable domain table
        acc_.assign(w_, Fp());
        meter_.set("challenge", 1);
        meter_.set("fingerprint", w_);
        meter_.set("scalars", 5);
    }

    void consume_stream(const Stream& s) {
        for (const auto& u : s.updates) {
            if (u.index >= n_) throw std::invalid_argument("stream index outside the universe");
            acc_[u.index / h_] += Fp::from_signed(u.delta) * col_basis_[u.index % h_];
        }
    }

    void consume_word(Fp v) {
        if (seen_ >= 2 * h_) {
            overflow_ = true;
            return;
        }
        if (seen_ < h_) answer_ += v;
        s_at_r_ += v * payload_basis_[seen_];
        ++seen_;
    }

    void note_buffer(size_t words) { meter_.set("buffer", words); }

    RunResult finish() {
        RunResult res;
        res.answer = answer_;
        if (overflow_ || seen_ != 2 * h_) {
            res.accepted = false;
            res.detail = "payload length mismatch";
        } else {
            Fp expect;
            for (Fp f : acc_) expect += f * f;
            res.accepted = s_at_r_ == expect;
            if (!res.accepted) res.detail = "payload evaluation does not match fingerprint";
        }
        res.cost.verifier_peak_words = meter_.peak();
        return res;
    }

    uint64_t expected_words() const { return 2 * h_; }

private:
    uint64_t n_, h_, w_;
    Rng rng_;
    LagrangeDomain dom_h_, dom_2h_;
    Fp r_;
    std::vector<Fp> col_basis_, payload_basis_, acc_;
    Fp s_at_r_, answer_;
    uint64_t seen_ = 0;
    bool overflow_ = false;
    SpaceMeter meter_;
};

}  // namespace

RunResult run_ni_f2(const Stream& s, const GridShape& g, const RunOptions& opt) {
    Session session(opt.transport, opt.record_transcript);
    RunResult res;
    session.run(
        [&](Endpoint& ep) {
            std::vector<Fp> a = aggregate_field(s, s.n);
            std::vector<Fp> payload = ni_f2_payload(a, g);
            for (size_t i = 0; i < payload.size(); i += kChunkWords) {
                Frame f;
                f.tag = kTagPayload;
                size_t end = std::min(payload.size(), i + kChunkWords);
                f.words.assign(payload.begin() + i, payload.begin() + end);
                ep.send(f);
            }
        },
        [&](Endpoint& raw) {
            CorruptingEndpoint adv(raw, opt.adversary_word < 0
                                            ? ~0ull
                                            : static_cast<uint64_t>(opt.adversary_word));
            Endpoint& ep = opt.adversary_word < 0 ? raw : static_cast<Endpoint&>(adv);
            NiF2Verifier v(g, s.n, opt.seed);
            double t0 = monotonic_seconds();
            v.consume_stream(s);
            double stream_sec = monotonic_seconds() - t0;
            uint64_t need = v.expected_words();
            uint64_t got = 0;
            try {
                while (got < need) {
                    Frame f = ep.recv();
                    v.note_buffer(f.words.size());
                    for (Fp wv : f.words) v.consume_word(wv);
                    got += f.words.size();
                }
            } catch (const TransportError&) {
                // short payload: fall through, finish() rejects
            }
            res = v.finish();
            res.cost.verifier_stream_seconds = stream_sec;
        });
    res.cost.fill_from(session.stats());
    res.cost.prover_field_ops = session.prover_field_ops();
    res.cost.prover_seconds = session.prover_seconds();
    res.cost.verifier_seconds = session.verifier_seconds();
    res.cost.verifier_check_seconds =
        std::max(0.0, res.cost.verifier_seconds - res.cost.verifier_stream_seconds);
    return res;
}

RunResult verify_ni_f2_payload(const Stream& s, const GridShape& g,
                               const std::vector<Fp>& payload, uint64_t seed) {
    NiF2Verifier v(g, s.n, seed);
    double t0 = monotonic_seconds();
    v.consume_stream(s);
    double t1 = monotonic_seconds();
    for (Fp wv : payload) v.consume_word(wv);
    RunResult res = v.finish();
    double t2 = monotonic_seconds();
    res.cost.verifier_stream_seconds = t1 - t0;
    res.cost.verifier_check_seconds = t2 - t1;
    res.cost.verifier_seconds = t2 - t0;
    return res;
}

/* ---- matrix-vector ---------------------------------------------------- */

MvShape plan_mv_shape(uint64_t n, uint32_t alpha_num, uint32_t alpha_den) {
    if (alpha_den == 0) throw std::invalid_argument("alpha denominator must be positive");
    if (alpha_num > alpha_den) throw std::invalid_argument("alpha must lie in [0, 1]");
    MvShape shape;
    shape.n = n;
    if (alpha_num == 0) {
        shape.h = 1;
        shape.w = n;
        return shape;
    }
    long double a = static_cast<long double>(alpha_num) / alpha_den;
    uint64_t h = static_cast<uint64_t>(
        std::ceil(std::pow(static_cast<long double>(n), a) - 1e-9L));
    shape.h = std::min<uint64_t>(std::max<uint64_t>(h, 2), n);
    shape.w = (n + shape.h - 1) / shape.h;
    return shape;
}

std::vector<std::vector<Fp>> ni_mv_row_blocks(const std::vector<Fp>& ax, const MvShape& sh) {
    uint64_t n = sh.n, h = sh.h, w = sh.w;
    check_shape(n, h, w);
    if (ax.size() != n * n + n) throw std::invalid_argument("mv data size mismatch");
    LagrangeDomain dom(h);
    // extension tables for every target point in [0, 2h)
    std::vector<std::vector<Fp>> basis(2 * h);
    for (uint64_t j = 0; j < 2 * h; ++j) basis[j] = dom.basis_at(Fp(j));

    // x vector on the grid, extended per (target, row-of-grid)
    std::vector<std::vector<Fp>> xext(2 * h, std::vector<Fp>(w, Fp()));
    for (uint64_t j = 0; j < 2 * h; ++j)
        for (uint64_t y = 0; y < w; ++y)
            for (uint64_t x = 0; x < h; ++x) {
                uint64_t col = y * h + x;
                if (col < n) xext[j][y] += ax[n * n + col] * basis[j][x];
            }

    std::vector<std::vector<Fp>> blocks(n, std::vector<Fp>(2 * h, Fp()));
    for (uint64_t i = 0; i < n; ++i) {
        const Fp* row = ax.data() + i * n;
        for (uint64_t j = 0; j < 2 * h; ++j) {
            Fp acc;
            for (uint64_t y = 0; y < w; ++y) {
                Fp u;
                for (uint64_t x = 0; x < h; ++x) {
                    uint64_t col = y * h + x;
                    if (col < n) u += row[col] * basis[j][x];
                }
                acc += u * xext[j][y];
            }
            blocks[i][j] = acc;
        }
    }
    return blocks;
}

namespace {

class NiMvVerifier {
public:
    NiMvVerifier(const MvShape& sh, uint64_t seed)
        : n_(sh.n), h_(sh.h), w_(sh.w), rng_(seed), row_dom_(sh.n), col_dom_(sh.h),
          payload_dom_(2 * sh.h) {
        check_shape(n_, h_, w_);
        r_rows_ = rng_.next_field();
        r_cols_ = rng_.next_field();
        row_basis_ = row_dom_.basis_at(r_rows_);          // immutable
        col_basis_ = col_dom_.basis_at(r_cols_);          // immutable
        payload_basis_ = payload_dom_.basis_at(r_cols_);  // immutable
        f_.assign(w_, Fp());
        if (h_ > 1) xg_.assign(w_, Fp());
        meter_.set("challenges", 2);
        meter_.set("fingerprint", w_ + (h_ > 1 ? w_ : 0));
        meter_.set("scalars", 6);
    }

    void consume_stream(const Stream& s) {
        for (const auto& u : s.updates) {
            Fp d = Fp::from_signed(u.delta);
            if (u.index < n_ * n_) {
                if (h_ == 1 && seen_x_)
                    throw std::invalid_argument(
                        "mvmult with h=1 needs all A updates before any x update");
                uint64_t i = u.index / n_, j = u.index % n_;
                f_[j / h_] += d * row_basis_[i] * col_basis_[j % h_];
            } else if (u.index < n_ * n_ + n_) {
                seen_x_ = true;
                uint64_t j = u.index - n_ * n_;
                if (h_ == 1)
                    sigma_ += d * f_[j];  // A is final here, so this is d * z_j
                else
                    xg_[j / h_] += d * col_basis_[j % h_];
            } else {
                throw std::invalid_argument("stream index outside A and x");
            }
        }
    }

    void consume_word(Fp v) {
        if (h_ == 1) {
            if (seen_ >= n_) {
                overflow_ = true;
                return;
            }
            b_total_ += v;
            check_acc_ += v * row_basis_[seen_];
            ++seen_;
            return;
        }
        uint64_t row = seen_ / (2 * h_), j = seen_ % (2 * h_);
        if (row >= n_) {
            overflow_ = true;
            return;
        }
        if (j < h_) b_total_ += v;  // b_row = sum of the on-grid block values
        row_at_r_ += v * payload_basis_[j];
        if (j == 2 * h_ - 1) {
            check_acc_ += row_basis_[row] * row_at_r_;
            row_at_r_ = Fp();
        }
        ++seen_;
    }

    uint64_t expected_words() const { return h_ == 1 ? n_ : n_ * 2 * h_; }
    void note_buffer(size_t words) { meter_.set("buffer", words); }

    RunResult finish() {
        RunResult res;
        res.answer = b_total_;  // checksum of the delivered b entries
        if (overflow_ || seen_ != expected_words()) {
            res.accepted = false;
            res.detail = "payload length mismatch";
            res.cost.verifier_peak_words = meter_.peak();
            return res;
        }
        Fp expect;
        if (h_ == 1) {
            expect = sigma_;
        } else {
            for (uint64_t y = 0; y < w_; ++y) expect += f_[y] * xg_[y];
        }
        res.accepted = check_acc_ == expect;
        if (!res.accepted) res.detail = "row blocks do not match fingerprint";
        res.cost.verifier_peak_words = meter_.peak();
        return res;
    }

private:
    uint64_t n_, h_, w_;
    Rng rng_;
    LagrangeDomain row_dom_, col_dom_, payload_dom_;
    Fp r_rows_, r_cols_;
    std::vector<Fp> row_basis_, col_basis_, payload_basis_;
    std::vector<Fp> f_, xg_;
    Fp sigma_, check_acc_, b_total_, row_at_r_;
    uint64_t seen_ = 0;
    bool seen_x_ = false, overflow_ = false;
    SpaceMeter meter_;
};

}  // namespace

RunResult run_ni_mvmult(const Stream& s, const MvShape& shape, const RunOptions& opt) {
    Session session(opt.transport, opt.record_transcript);
    RunResult res;
    session.run(
        [&](Endpoint& ep) {
            std::vector<Fp> ax = aggregate_field(s, shape.n * shape.n + shape.n);
            if (shape.h == 1) {
                std::vector<Fp> b = oracle_mvmult(ax, shape.n);
                for (size_t i = 0; i < b.size(); i += kChunkWords) {
                    Frame f;
                    f.tag = kTagPayload;
                    size_t end = std::min(b.size(), i + kChunkWords);
                    f.words.assign(b.begin() + i, b.begin() + end);
                    ep.send(f);
                }
            } else {
                auto blocks = ni_mv_row_blocks(ax, shape);
                for (auto& blk : blocks) ep.send({kTagPayload, blk});
            }
        },
        [&](Endpoint& raw) {
            CorruptingEndpoint adv(raw, opt.adversary_word < 0
                                            ? ~0ull
                                            : static_cast<uint64_t>(opt.adversary_word));
            Endpoint& ep = opt.adversary_word < 0 ? raw : static_cast<Endpoint&>(adv);
            NiMvVerifier v(shape, opt.seed);
            double t0 = monotonic_seconds();
            v.consume_stream(s);
            double stream_sec = monotonic_seconds() - t0;
            uint64_t need = v.expected_words(), got = 0;
            try {
                while (got < need) {
                    Frame f = ep.recv();
                    v.note_buffer(f.words.size());
                    for (Fp wv : f.words) v.consume_word(wv);
                    got += f.words.size();
                }
            } catch (const TransportError&) {
            }
            res = v.finish();
            res.cost.verifier_stream_seconds = stream_sec;
        });
    res.cost.fill_from(session.stats());
    res.cost.prover_field_ops = session.prover_field_ops();
    res.cost.prover_seconds = session.prover_seconds();
    res.cost.verifier_seconds = session.verifier_seconds();
    res.cost.verifier_check_seconds =
        std::max(0.0, res.cost.verifier_seconds - res.cost.verifier_stream_seconds);
    return res;
}

RunResult verify_ni_mvmult_payload(const Stream& s, const MvShape& shape,
                                   const std::vector<Fp>& payload, uint64_t seed) {
    NiMvVerifier v(shape, seed);
    double t0 = monotonic_seconds();
    v.consume_stream(s);
    double t1 = monotonic_seconds();
    for (Fp wv : payload) v.consume_word(wv);
    RunResult res = v.finish();
    double t2 = monotonic_seconds();
    res.cost.verifier_stream_seconds = t1 - t0;
    res.cost.verifier_check_seconds = t2 - t1;
    res.cost.verifier_seconds = t2 - t0;
    return res;
}

/* ---- proof files ------------------------------------------------------ */

namespace {

void put_u64f(FILE* f, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    if (fwrite(b, 1, 8, f) != 8) throw std::runtime_error("proof file: write failed");
}
void put_u32f(FILE* f, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    if (fwrite(b, 1, 4, f) != 4) throw std::runtime_error("proof file: write failed");
}
uint64_t get_u64f(FILE* f) {
    unsigned char b[8];
    if (fread(b, 1, 8, f) != 8) throw std::runtime_error("proof file: truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}
uint32_t get_u32f(FILE* f) {
    unsigned char b[4];
    if (fread(b, 1, 4, f) != 4) throw std::runtime_error("proof file: truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_ni_proof(const NiProof& p, const std::string& path) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    try {
        if (fwrite("SIPNI1", 1, 6, f) != 6) throw std::runtime_error("proof file: write failed");
        if (fwrite(&p.protocol, 1, 1, f) != 1) throw std::runtime_error("proof file: write failed");
        put_u64f(f, p.n);
        if (p.protocol == 1) {
            put_u64f(f, p.h);
            put_u64f(f, p.w);
        } else if (p.protocol == 2) {
            put_u32f(f, p.alpha_num);
            put_u32f(f, p.alpha_den);
            put_u64f(f, p.h);
        } else {
            throw std::invalid_argument("unknown proof protocol id");
        }
        put_u64f(f, p.payload.size());
        for (Fp v : p.payload) {
            unsigned char b[8];
            fp_store_le(v, b);
            if (fwrite(b, 1, 8, f) != 8) throw std::runtime_error("proof file: write failed");
        }
    } catch (...) {
        fclose(f);
        throw;
    }
    fclose(f);
}

NiProof load_ni_proof(const std::string& path) {
    FILE* f = fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    NiProof p;
    try {
        char magic[6];
        if (fread(magic, 1, 6, f) != 6 || memcmp(magic, "SIPNI1", 6) != 0)
            throw std::runtime_error("not a proof file: " + path);
        if (fread(&p.protocol, 1, 1, f) != 1) throw std::runtime_error("proof file: truncated");
        p.n = get_u64f(f);
        if (p.protocol == 1) {
            p.h = get_u64f(f);
            p.w = get_u64f(f);
        } else if (p.protocol == 2) {
            p.alpha_num = get_u32f(f);
            p.alpha_den = get_u32f(f);
            p.h = get_u64f(f);
        } else {
            throw std::runtime_error("unknown proof protocol id");
        }
        uint64_t count = get_u64f(f);
        p.payload.resize(count);
        for (uint64_t i = 0; i < count; ++i) {
            unsigned char b[8];
            if (fread(b, 1, 8, f) != 8) throw std::runtime_error("proof file: truncated");
            if (!fp_load_le(b, p.payload[i]))
                throw std::runtime_error("proof file: non-canonical field element");
        }
    } catch (...) {
        fclose(f);
        throw;
    }
    fclose(f);
    return p;
}

}  // namespace sips
