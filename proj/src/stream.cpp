#include "sips/stream.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "sips/rng.hpp"

namespace sips {

const char* problem_name(Problem p) {
    switch (p) {
        case Problem::F2: return "f2";
        case Problem::F0: return "f0";
        case Problem::MVMult: return "mvmult";
        case Problem::PMwW: return "pmww";
    }
    return "?";
}

Problem parse_problem(const std::string& s) {
    if (s == "f2") return Problem::F2;
    if (s == "f0") return Problem::F0;
    if (s == "mvmult") return Problem::MVMult;
    if (s == "pmww") return Problem::PMwW;
    throw std::invalid_argument("unknown problem: " + s);
}

static void shuffle_updates(std::vector<StreamUpdate>& v, size_t lo, size_t hi, Rng& rng) {
    for (size_t i = hi; i > lo + 1; --i) {
        size_t j = lo + rng.next_below(i - lo);
        std::swap(v[i - 1], v[j]);
    }
}

Stream gen_stream(Problem problem, uint64_t n, uint64_t m, uint64_t q, uint64_t seed,
                  uint64_t fmax) {
    if (n == 0) throw std::invalid_argument("gen_stream: n must be positive");
    Rng rng(seed ^ 0x5354524541u);  // domain-separate from protocol RNGs
    Stream s;
    s.n = n;
    switch (problem) {
        case Problem::F2: {
            s.updates.reserve(m);
            for (uint64_t t = 0; t < m; ++t) {
                int64_t d = static_cast<int64_t>(rng.next_below(17)) - 4;
                if (d == 0) d = 5;
                s.updates.push_back({rng.next_below(n), d});
            }
            break;
        }
        case Problem::F0: {
            if (fmax > 0 && m > n * fmax)
                throw std::invalid_argument("gen_stream: m exceeds n*fmax occurrences");
            std::vector<uint64_t> count(fmax > 0 ? n : 0, 0);
            s.updates.reserve(m);
            for (uint64_t t = 0; t < m; ++t) {
                uint64_t i = rng.next_below(n);
                if (fmax > 0) {
                    while (count[i] >= fmax) i = rng.next_below(n);
                    ++count[i];
                }
                s.updates.push_back({i, 1});
            }
            break;
        }
        case Problem::MVMult: {
            s.updates.reserve(n * n + n);
            for (uint64_t i = 0; i < n * n + n; ++i) {
                int64_t d = static_cast<int64_t>(rng.next_below(101)) - 50;
                s.updates.push_back({i, d});
            }
            shuffle_updates(s.updates, 0, n * n, rng);
            shuffle_updates(s.updates, n * n, s.updates.size(), rng);
            break;
        }
        case Problem::PMwW: {
            if (q == 0 || q > n) throw std::invalid_argument("gen_stream: need 0 < q <= n");
            uint64_t alpha = std::min<uint64_t>(n, 8);
            std::vector<int64_t> text(n), pat(q);
            for (auto& t : text) t = static_cast<int64_t>(rng.next_below(alpha));
            for (uint64_t k = 0; k < q; ++k) {
                // wildcard = n; never in the last slot (occurrences are
                // counted only where the whole pattern lies inside the text)
                if (k + 1 < q && rng.next_below(8) == 0)
                    pat[k] = static_cast<int64_t>(n);
                else
                    pat[k] = static_cast<int64_t>(rng.next_below(alpha));
            }
            uint64_t plants = std::min<uint64_t>(2, n - q + 1);
            for (uint64_t t = 0; t < plants; ++t) {
                uint64_t o = rng.next_below(n - q + 1);
                for (uint64_t k = 0; k < q; ++k)
                    if (pat[k] != static_cast<int64_t>(n)) text[o + k] = pat[k];
            }
            s.updates.reserve(n + q);
            for (uint64_t i = 0; i < n; ++i) s.updates.push_back({i, text[i]});
            for (uint64_t k = 0; k < q; ++k) s.updates.push_back({n + k, pat[k]});
            shuffle_updates(s.updates, 0, s.updates.size(), rng);
            break;
        }
    }
    return s;
}

std::vector<int64_t> aggregate(const Stream& s, uint64_t slots) {
    std::vector<int64_t> a(slots, 0);
    for (const auto& u : s.updates) {
        if (u.index >= slots) throw std::out_of_range("stream index out of range");
        a[u.index] += u.delta;
    }
    return a;
}

std::vector<Fp> aggregate_field(const Stream& s, uint64_t slots) {
    std::vector<Fp> a(slots, Fp::raw(0));
    for (const auto& u : s.updates) {
        if (u.index >= slots) throw std::out_of_range("stream index out of range");
        a[u.index] += Fp::from_signed(u.delta);
    }
    return a;
}

Fp oracle_f2(const std::vector<int64_t>& a) {
    Fp acc;
    for (int64_t v : a) {
        Fp f = Fp::from_signed(v);
        acc += f * f;
    }
    return acc;
}

uint64_t oracle_f0(const std::vector<int64_t>& a) {
    uint64_t c = 0;
    for (int64_t v : a)
        if (v != 0) ++c;
    return c;
}

std::vector<Fp> oracle_mvmult(const std::vector<Fp>& ax, uint64_t n) {
    if (ax.size() != n * n + n) throw std::invalid_argument("oracle_mvmult: bad input size");
    std::vector<Fp> b(n, Fp::raw(0));
    for (uint64_t i = 0; i < n; ++i)
        for (uint64_t j = 0; j < n; ++j) b[i] += ax[i * n + j] * ax[n * n + j];
    return b;
}

uint64_t oracle_pmww(const std::vector<int64_t>& text, const std::vector<int64_t>& pattern,
                     int64_t wildcard) {
    if (pattern.size() > text.size()) return 0;
    uint64_t count = 0;
    for (size_t o = 0; o + pattern.size() <= text.size(); ++o) {
        bool ok = true;
        for (size_t k = 0; k < pattern.size() && ok; ++k) {
            if (pattern[k] == wildcard || text[o + k] == wildcard) continue;
            ok = text[o + k] == pattern[k];
        }
        if (ok) ++count;
    }
    return count;
}

/* ---- file io ------------------------------------------------------- */

namespace {

struct File {
    FILE* f;
    explicit File(FILE* f_) : f(f_) {}
    ~File() {
        if (f) fclose(f);
    }
};

void put_u64(FILE* f, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    if (fwrite(b, 1, 8, f) != 8) throw std::runtime_error("stream file: write failed");
}

uint64_t get_u64(FILE* f) {
    unsigned char b[8];
    if (fread(b, 1, 8, f) != 8) throw std::runtime_error("stream file: truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_stream(const Stream& s, const std::string& path) {
    File fh(fopen(path.c_str(), "wb"));
    if (!fh.f) throw std::runtime_error("cannot open for write: " + path);
    if (fwrite("SIPS1", 1, 5, fh.f) != 5) throw std::runtime_error("stream file: write failed");
    put_u64(fh.f, s.n);
    put_u64(fh.f, s.updates.size());
    for (const auto& u : s.updates) {
        put_u64(fh.f, u.index);
        put_u64(fh.f, static_cast<uint64_t>(u.delta));
    }
}

Stream load_stream(const std::string& path) {
    File fh(fopen(path.c_str(), "rb"));
    if (!fh.f) throw std::runtime_error("cannot open for read: " + path);
    char magic[5];
    if (fread(magic, 1, 5, fh.f) != 5 || memcmp(magic, "SIPS1", 5) != 0)
        throw std::runtime_error("not a stream file: " + path);
    Stream s;
    s.n = get_u64(fh.f);
    uint64_t m = get_u64(fh.f);
    s.updates.reserve(m);
    for (uint64_t t = 0; t < m; ++t) {
        uint64_t idx = get_u64(fh.f);
        int64_t d = static_cast<int64_t>(get_u64(fh.f));
        s.updates.push_back({idx, d});
    }
    return s;
}

}  // namespace sips
