#include "sips/transport.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <thread>

#include <chrono>

namespace sips {

namespace {
constexpr size_t kMaxWords = 1ull << 28;  // 2 GiB of payload; anything above is garbage
}

std::vector<unsigned char> encode_frame(const Frame& f) {
    if (f.words.size() > kMaxWords) throw TransportError("frame too large to encode");
    std::vector<unsigned char> out(5 + 8 * f.words.size());
    out[0] = f.tag;
    uint32_t n = static_cast<uint32_t>(f.words.size());
    for (int i = 0; i < 4; ++i) out[1 + i] = static_cast<unsigned char>(n >> (8 * i));
    for (size_t w = 0; w < f.words.size(); ++w) fp_store_le(f.words[w], &out[5 + 8 * w]);
    return out;
}

size_t decode_frame(const unsigned char* data, size_t len, Frame& out) {
    if (len < 5) return 0;
    uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n |= static_cast<uint32_t>(data[1 + i]) << (8 * i);
    if (n > kMaxWords) throw TransportError("frame word count out of range");
    size_t need = 5 + 8 * static_cast<size_t>(n);
    if (len < need) return 0;
    out.tag = data[0];
    out.words.resize(n);
    for (uint32_t w = 0; w < n; ++w)
        if (!fp_load_le(&data[5 + 8 * w], out.words[w]))
            throw TransportError("non-canonical field element on the wire");
    return need;
}

TransportKind parse_transport(const std::string& s) {
    if (s == "memory") return TransportKind::Memory;
    if (s == "socket") return TransportKind::Socket;
    throw std::invalid_argument("unknown transport: " + s);
}

/* ---- channel internals ---------------------------------------------- */

namespace {

struct FrameQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Frame> q;
    bool closed = false;

    void push(Frame f) {
        {
            std::lock_guard<std::mutex> lk(mu);
            q.push_back(std::move(f));
        }
        cv.notify_one();
    }
    Frame pop() {
        std::unique_lock<std::mutex> lk(mu);
        cv.wait(lk, [&] { return !q.empty() || closed; });
        if (q.empty()) throw TransportError("channel closed");
        Frame f = std::move(q.front());
        q.pop_front();
        return f;
    }
    void close() {
        {
            std::lock_guard<std::mutex> lk(mu);
            closed = true;
        }
        cv.notify_all();
    }
};

struct Shared {
    std::mutex mu;
    ChannelStats stats;
    Transcript transcript;
    bool record;
    bool any = false;
    Dir last = Dir::ProverToVerifier;

    void on_send(Dir d, const Frame& f) {
        std::lock_guard<std::mutex> lk(mu);
        int i = static_cast<int>(d);
        ++stats.messages[i];
        stats.payload_bytes[i] += 8 * f.words.size();
        stats.framed_bytes[i] += 5 + 8 * f.words.size();
        if (!any || last != d) ++stats.rounds;
        any = true;
        last = d;
        if (record) transcript.entries.emplace_back(d, f);
    }
};

ssize_t write_all(int fd, const unsigned char* p, size_t n) {
    size_t done = 0;
    while (done < n) {
        ssize_t r = ::write(fd, p + done, n - done);
        if (r <= 0) return -1;
        done += static_cast<size_t>(r);
    }
    return static_cast<ssize_t>(done);
}

bool read_exact(int fd, unsigned char* p, size_t n) {
    size_t done = 0;
    while (done < n) {
        ssize_t r = ::read(fd, p + done, n - done);
        if (r <= 0) return false;
        done += static_cast<size_t>(r);
    }
    return true;
}

class MemoryEndpoint : public Endpoint {
public:
    MemoryEndpoint(Dir dir, Shared& sh, FrameQueue& in, FrameQueue& out)
        : dir_(dir), sh_(sh), in_(in), out_(out) {}
    void send(const Frame& f) override {
        sh_.on_send(dir_, f);
        out_.push(f);
    }
    Frame recv() override { return in_.pop(); }

private:
    Dir dir_;
    Shared& sh_;
    FrameQueue& in_;
    FrameQueue& out_;
};

class SocketEndpoint : public Endpoint {
public:
    SocketEndpoint(Dir dir, Shared& sh, int fd) : dir_(dir), sh_(sh), fd_(fd) {}
    ~SocketEndpoint() override {
        if (fd_ >= 0) ::close(fd_);
    }
    void send(const Frame& f) override {
        sh_.on_send(dir_, f);
        auto bytes = encode_frame(f);
        if (write_all(fd_, bytes.data(), bytes.size()) < 0)
            throw TransportError("socket write failed");
    }
    Frame recv() override {
        unsigned char head[5];
        if (!read_exact(fd_, head, 5)) throw TransportError("socket closed mid-protocol");
        uint32_t n = 0;
        for (int i = 0; i < 4; ++i) n |= static_cast<uint32_t>(head[1 + i]) << (8 * i);
        if (n > kMaxWords) throw TransportError("frame word count out of range");
        std::vector<unsigned char> body(8 * static_cast<size_t>(n));
        if (!body.empty() && !read_exact(fd_, body.data(), body.size()))
            throw TransportError("socket closed mid-frame");
        Frame f;
        f.tag = head[0];
        f.words.resize(n);
        for (uint32_t w = 0; w < n; ++w)
            if (!fp_load_le(&body[8 * w], f.words[w]))
                throw TransportError("non-canonical field element on the wire");
        return f;
    }
    void shutdown_write() { ::shutdown(fd_, SHUT_WR); }

private:
    Dir dir_;
    Shared& sh_;
    int fd_;
};

}  // namespace

struct Channel::Impl {
    TransportKind kind;
    Shared shared;
    // memory transport
    FrameQueue to_verifier, to_prover;
    // either flavor
    std::unique_ptr<Endpoint> prover_end, verifier_end;
};

Channel::Channel(TransportKind kind, bool record) : impl_(new Impl) {
    impl_->kind = kind;
    impl_->shared.record = record;
    if (kind == TransportKind::Memory) {
        impl_->prover_end.reset(new MemoryEndpoint(Dir::ProverToVerifier, impl_->shared,
                                                   impl_->to_prover, impl_->to_verifier));
        impl_->verifier_end.reset(new MemoryEndpoint(Dir::VerifierToProver, impl_->shared,
                                                     impl_->to_verifier, impl_->to_prover));
    } else {
        int fds[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
            throw TransportError("socketpair failed");
        impl_->prover_end.reset(new SocketEndpoint(Dir::ProverToVerifier, impl_->shared, fds[0]));
        impl_->verifier_end.reset(new SocketEndpoint(Dir::VerifierToProver, impl_->shared, fds[1]));
    }
}

Channel::~Channel() = default;

Endpoint& Channel::prover_end() { return *impl_->prover_end; }
Endpoint& Channel::verifier_end() { return *impl_->verifier_end; }

void Channel::close_prover_end() {
    if (impl_->kind == TransportKind::Memory)
        impl_->to_verifier.close();
    else
        static_cast<SocketEndpoint*>(impl_->prover_end.get())->shutdown_write();
}

void Channel::close_verifier_end() {
    if (impl_->kind == TransportKind::Memory)
        impl_->to_prover.close();
    else
        static_cast<SocketEndpoint*>(impl_->verifier_end.get())->shutdown_write();
}

const ChannelStats& Channel::stats() const { return impl_->shared.stats; }
const Transcript& Channel::transcript() const { return impl_->shared.transcript; }

/* ---- replay / corruption -------------------------------------------- */

size_t ReplayEndpoint::advance(Dir d, size_t from) const {
    while (from < t_.entries.size() && t_.entries[from].first != d) ++from;
    return from;
}

void ReplayEndpoint::send(const Frame& f) {
    send_pos_ = advance(Dir::VerifierToProver, send_pos_);
    if (send_pos_ >= t_.entries.size())
        throw TransportError("replay diverged: extra verifier message");
    const Frame& expect = t_.entries[send_pos_++].second;
    if (expect.tag != f.tag || expect.words.size() != f.words.size())
        throw TransportError("replay diverged: frame shape");
    for (size_t i = 0; i < f.words.size(); ++i)
        if (!(expect.words[i] == f.words[i])) throw TransportError("replay diverged: word value");
}

Frame ReplayEndpoint::recv() {
    recv_pos_ = advance(Dir::ProverToVerifier, recv_pos_);
    if (recv_pos_ >= t_.entries.size()) throw TransportError("replay: transcript exhausted");
    return t_.entries[recv_pos_++].second;
}

bool ReplayEndpoint::exhausted() const {
    return advance(Dir::ProverToVerifier, recv_pos_) == t_.entries.size();
}

Frame CorruptingEndpoint::recv() {
    Frame f = inner_.recv();
    if (!fired_ && target_ >= seen_ && target_ < seen_ + f.words.size()) {
        f.words[target_ - seen_] += Fp(1);
        fired_ = true;
    }
    seen_ += f.words.size();
    return f;
}

/* ---- space meter ------------------------------------------------------ */

void SpaceMeter::set(const std::string& category, uint64_t words) {
    for (auto& c : categories_) {
        if (c.first == category) {
            current_ += words - c.second;
            c.second = words;
            if (current_ > peak_) peak_ = current_;
            return;
        }
    }
    categories_.emplace_back(category, words);
    current_ += words;
    if (current_ > peak_) peak_ = current_;
}

void SpaceMeter::add(const std::string& category, uint64_t words) {
    for (auto& c : categories_) {
        if (c.first == category) {
            c.second += words;
            current_ += words;
            if (current_ > peak_) peak_ = current_;
            return;
        }
    }
    set(category, words);
}

/* ---- session driver -------------------------------------------------- */

double monotonic_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Session::Session(TransportKind kind, bool record) : channel_(kind, record) {}
Session::~Session() = default;

void Session::run(const std::function<void(Endpoint&)>& prover_fn,
                  const std::function<void(Endpoint&)>& verifier_fn) {
    std::exception_ptr prover_error;
    uint64_t ops = 0;
    double psec = 0;
    std::thread prover([&] {
        Fp::reset_op_counter();
        auto t0 = std::chrono::steady_clock::now();
        try {
            prover_fn(channel_.prover_end());
        } catch (...) {
            prover_error = std::current_exception();
        }
        psec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ops = Fp::op_counter();
        channel_.close_prover_end();
    });

    std::exception_ptr verifier_error;
    auto t0 = std::chrono::steady_clock::now();
    try {
        verifier_fn(channel_.verifier_end());
    } catch (...) {
        verifier_error = std::current_exception();
    }
    verifier_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    channel_.close_verifier_end();  // unblock the prover if the verifier bailed early
    prover.join();
    prover_seconds_ = psec;
    prover_ops_ = ops;
    if (prover_error) std::rethrow_exception(prover_error);
    if (verifier_error) std::rethrow_exception(verifier_error);
}

}  // namespace sips
