#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "sips/field.hpp"

namespace sips {

/* Message plumbing between prover and verifier.  A frame is a tagged
 * vector of field elements; on the wire it is
 *
 *     tag (1 byte) | word count (u32 LE) | words (8 bytes LE each)
 *
 * Decoding rejects non-canonical words.  Transport failures raise
 * TransportError; they are unrelated to a verifier rejecting a proof.
 */

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Dir : uint8_t { ProverToVerifier = 0, VerifierToProver = 1 };

struct Frame {
    uint8_t tag = 0;
    std::vector<Fp> words;
};

std::vector<unsigned char> encode_frame(const Frame& f);
// Returns bytes consumed, 0 if more input is needed.  Throws on bad words.
size_t decode_frame(const unsigned char* data, size_t len, Frame& out);

struct ChannelStats {
    uint64_t messages[2] = {0, 0};
    uint64_t payload_bytes[2] = {0, 0};  // 8 * word count
    uint64_t framed_bytes[2] = {0, 0};   // includes tag + length header
    uint64_t rounds = 0;                 // maximal same-direction runs
};

struct Transcript {
    std::vector<std::pair<Dir, Frame>> entries;
};

class Endpoint {
public:
    virtual ~Endpoint() = default;
    virtual void send(const Frame& f) = 0;
    virtual Frame recv() = 0;
};

/* A connected prover/verifier channel.  Memory transport passes frames
 * through in-process queues; Socket transport serializes them through a
 * real socketpair.  Both share the same stats and transcript capture. */
enum class TransportKind { Memory, Socket };

TransportKind parse_transport(const std::string& s);

class Channel {
public:
    explicit Channel(TransportKind kind, bool record = true);
    ~Channel();

    Endpoint& prover_end();
    Endpoint& verifier_end();
    void close_prover_end();    // further verifier recv() fails fast
    void close_verifier_end();  // further prover recv() fails fast

    const ChannelStats& stats() const;
    const Transcript& transcript() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/* Feeds a recorded transcript back to a verifier: recv() returns the
 * recorded prover frames in order, send() checks the verifier's output
 * against the recording and throws TransportError on divergence. */
class ReplayEndpoint : public Endpoint {
public:
    explicit ReplayEndpoint(const Transcript& t) : t_(t) {}
    void send(const Frame& f) override;
    Frame recv() override;
    bool exhausted() const;

private:
    size_t advance(Dir d, size_t from) const;
    const Transcript& t_;
    size_t recv_pos_ = 0;  // cursor over prover frames
    size_t send_pos_ = 0;  // cursor over verifier frames
};

/* Decorator for soundness experiments: adds 1 (mod p) to the word_index-th
 * prover payload word that passes through, counting across frames. */
class CorruptingEndpoint : public Endpoint {
public:
    CorruptingEndpoint(Endpoint& inner, uint64_t word_index)
        : inner_(inner), target_(word_index) {}
    void send(const Frame& f) override { inner_.send(f); }
    Frame recv() override;
    bool fired() const { return fired_; }

private:
    Endpoint& inner_;
    uint64_t target_;
    uint64_t seen_ = 0;
    bool fired_ = false;
};

/* Tracks the verifier's working-set size in 8-byte words.  Counts mutable
 * protocol state (accumulators, bound randomness, buffered messages);
 * immutable precomputed domain tables are deliberately not counted, they
 * depend only on public parameters.  peak() is the high-water mark of the
 * category total. */
class SpaceMeter {
public:
    void set(const std::string& category, uint64_t words);
    void add(const std::string& category, uint64_t words);
    uint64_t current() const { return current_; }
    uint64_t peak() const { return peak_; }

private:
    std::vector<std::pair<std::string, uint64_t>> categories_;
    uint64_t current_ = 0;
    uint64_t peak_ = 0;
};

/* Runs a prover function on a worker thread against one endpoint and a
 * verifier function inline against the other, then joins and exposes the
 * channel stats plus per-side wall time and the prover's field-op count. */
class Session {
public:
    explicit Session(TransportKind kind, bool record = true);
    ~Session();

    void run(const std::function<void(Endpoint&)>& prover_fn,
             const std::function<void(Endpoint&)>& verifier_fn);

    const ChannelStats& stats() const { return channel_.stats(); }
    const Transcript& transcript() const { return channel_.transcript(); }
    double prover_seconds() const { return prover_seconds_; }
    double verifier_seconds() const { return verifier_seconds_; }
    uint64_t prover_field_ops() const { return prover_ops_; }

private:
    Channel channel_;
    double prover_seconds_ = 0, verifier_seconds_ = 0;
    uint64_t prover_ops_ = 0;
};

// Wall-clock reading for the per-phase verifier timings below.
double monotonic_seconds();

/* Aggregate cost report every protocol run fills in. */
struct CostReport {
    uint64_t rounds = 0;
    uint64_t prover_messages = 0;
    uint64_t verifier_messages = 0;
    uint64_t proof_payload_bytes = 0;  // prover-to-verifier words * 8
    uint64_t proof_framed_bytes = 0;
    uint64_t challenge_payload_bytes = 0;
    uint64_t prover_field_ops = 0;
    uint64_t verifier_peak_words = 0;
    double prover_seconds = 0;
    double verifier_seconds = 0;         // whole inline verifier
    double verifier_stream_seconds = 0;  // the pass over the input stream
    double verifier_check_seconds = 0;   // verifier time outside that pass

    void fill_from(const ChannelStats& s) {
        rounds = s.rounds;
        prover_messages = s.messages[0];
        verifier_messages = s.messages[1];
        proof_payload_bytes = s.payload_bytes[0];
        proof_framed_bytes = s.framed_bytes[0];
        challenge_payload_bytes = s.payload_bytes[1];
    }
};

}  // namespace sips
