#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sips/field.hpp"
#include "sips/stream.hpp"

namespace sips {

/* Layered arithmetic circuits with power-of-two layer widths.  A missing
 * gate means that position of the layer is zero.  Gates read the layer
 * below; Pow gates compute (in1 * in2)^exp, so a Pow(4) gate wired to the
 * same input twice is an 8th power.
 *
 * Layers are mostly described as gate *groups*: regular families where
 * the output index and both input indices are bit patterns over a block
 * of free bits (each index bit is constant or copies one free bit).  One
 * shared routine evaluates the wiring predicates of such a group in
 * closed form, and one shared enumerator walks its gates.  Irregular
 * test circuits can use explicit per-gate layers instead.
 */

enum class GateKind : uint8_t { Input, Add, Mul, Pow, Const0, Const1 };

struct GateRec {
    uint64_t out = 0;
    GateKind kind = GateKind::Add;
    uint32_t pow_exp = 1;
    uint64_t in1 = 0, in2 = 0;
};

// Index-bit descriptor: kBitZero / kBitOne, or the id of a free bit.
inline constexpr int16_t kBitZero = -1;
inline constexpr int16_t kBitOne = -2;

struct GateGroup {
    GateKind kind = GateKind::Mul;
    uint32_t pow_exp = 1;
    uint32_t free_bits = 0;
    std::vector<int16_t> out_bits;  // size v_out
    std::vector<int16_t> in1_bits;  // size v_in (ignored below sum_bits when in1_sum)
    std::vector<int16_t> in2_bits;  // size v_in

    /* in1_sum: the low `sum_bits` bits of in1 hold o + k, where o is the
     * integer formed by free bits [o_begin, o_begin + o_count) and k by
     * [k_begin, k_begin + k_count); bits of in1 at or above sum_bits
     * follow in1_bits as usual. */
    bool in1_sum = false;
    uint32_t sum_bits = 0;
    uint32_t o_begin = 0, o_count = 0, k_begin = 0, k_count = 0;

    uint64_t size() const { return 1ull << free_bits; }
    uint64_t out_index(uint64_t y) const;
    uint64_t in1_index(uint64_t y) const;
    uint64_t in2_index(uint64_t y) const;
};

struct Layer {
    uint32_t v_out = 0, v_in = 0;
    std::vector<GateGroup> groups;
    std::vector<GateRec> explicit_gates;  // used when groups is empty

    uint64_t gate_count() const;
    uint32_t pow_exp() const;        // 0 if the layer has no Pow gates
    uint32_t omega_round_evals() const;  // message arity for its in-variable rounds
    void for_each_gate(const std::function<void(const GateRec&)>& fn) const;
};

/* Wiring predicates of one layer, evaluated at (p, w1, w2) where p indexes
 * this layer's outputs and w1/w2 index the layer below. */
struct WiringEval {
    Fp add, mult, pow, one;
};

// closed_form = false re-derives the values by walking every gate; the two
// paths must agree and the tests hold them to that.
WiringEval wiring_eval(const Layer& layer, const std::vector<Fp>& p, const std::vector<Fp>& w1,
                       const std::vector<Fp>& w2, bool closed_form = true);

enum class GateSet { Basic, Pow8, Pow16 };
GateSet parse_gate_set(const std::string& s);
const char* gate_set_name(GateSet g);

struct CircuitSpec {
    Problem problem = Problem::F2;
    GateSet gate_set = GateSet::Basic;
    bool big_sum = false;
    uint64_t n = 0;
    uint64_t q = 0;         // pmww pattern length
    uint64_t alphabet = 0;  // pmww symbol bound; 0 = derive as min(n, 8)
};

struct Circuit {
    CircuitSpec spec;
    uint32_t v_input = 0;
    std::vector<Layer> layers;  // layers[0] reads the input; back() is the top
    uint64_t one_slot = ~0ull;  // input index holding the constant 1, if any
    uint64_t nhat = 0, qhat = 0;

    uint64_t input_width() const { return 1ull << v_input; }
    // live gates including input items (data slots plus the one slot)
    uint64_t total_gates() const;
    uint64_t input_gate_count() const;
    uint64_t depth() const { return layers.size(); }
};

Circuit build_circuit(const CircuitSpec& spec);

/* Dense input vectors for the prover side. */
// f2 / f0: aggregate frequency vector, length n
std::vector<Fp> circuit_input_frequencies(const Circuit& c, const std::vector<int64_t>& agg);
// mvmult: aggregate of the A,x stream (length n^2 + n); b = Ax is computed
// here and stored negated
std::vector<Fp> circuit_input_mv(const Circuit& c, const std::vector<Fp>& ax);
// pmww: raw text and pattern symbols (wildcard = n); pattern stored negated
std::vector<Fp> circuit_input_pm(const Circuit& c, const std::vector<int64_t>& text,
                                 const std::vector<int64_t>& pattern);

// pmww input encoding shared with the streaming verifier
Fp pm_text_value(const Circuit& c, int64_t symbol);     // shift, wildcard to 0
Fp pm_pattern_value(const Circuit& c, int64_t symbol);  // shifted and negated
Fp pm_sentinel(const Circuit& c);

struct Evaluation {
    std::vector<std::vector<Fp>> values;  // values[0] = input, then one per layer
    Fp output() const { return values.back()[0]; }
    Fp top_sum() const;  // sum over the top layer (big-sum circuits)
};

Evaluation evaluate(const Circuit& c, std::vector<Fp> input);

}  // namespace sips
