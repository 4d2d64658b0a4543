#pragma once

#include <random>

#include "biagree/tape.hpp"
#include "biagree/vocab.hpp"

namespace biagree {

using Rng = std::mt19937_64;

// Uniform draw in [0,1) with 53 random bits; avoids the implementation-defined
// behaviour of std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

enum class Direction { kL2R, kR2L };

inline const char* direction_name(Direction d) {
  return d == Direction::kL2R ? "l2r" : "r2l";
}
Direction direction_from_name(const std::string& name);

struct ModelConfig {
  int vocab_size = 0;
  int emb_dim = 32;
  int hidden_dim = 64;
  int attn_dim = 64;
  bool operator==(const ModelConfig&) const = default;
};

// Single-layer GRU encoder + GRU decoder with dot-product attention.
// An R2L model is architecturally identical to an L2R model; the direction
// only controls target-side reversal in sequence_logprob and decoding.
struct DirectionalModel {
  Direction direction = Direction::kL2R;
  ModelConfig config;
  ParamStore params;
};

// Glorot-uniform initialization, r = sqrt(6/(fan_in+fan_out)); the softmax
// output layer starts at zero so a fresh model is uniform over the
// non-reserved vocabulary plus EOS.
DirectionalModel init_model(Direction direction, const ModelConfig& config,
                            Rng& rng);

// Per-source-position context vectors plus precomputed attention keys; node
// ids into the tape that built them.
struct EncoderStates {
  std::vector<int> ctx;
  std::vector<int> keys;
  int summary = -1;
};

struct DecoderState {
  int h = -1;
  const EncoderStates* enc = nullptr;
};

EncoderStates encode(Tape& tape, const DirectionalModel& model,
                     const TokenSequence& x);

DecoderState initial_decoder_state(Tape& tape, const DirectionalModel& model,
                                   const EncoderStates& enc);

struct StepOut {
  int dist = -1;  // distribution over the vocabulary (PAD/BOS masked to 0)
  DecoderState state;
};

StepOut decoder_step(Tape& tape, const DirectionalModel& model,
                     const EncoderStates& enc, int prev_token,
                     const DecoderState& state);

// log P(y|x; theta), natural log, built on the tape so it can be
// differentiated. For an R2L model this is the L2R-style log-prob of
// reverse(y) under the same parameters. include_eos=false scores a
// length-capped sequence that never emitted EOS.
int sequence_logprob_node(Tape& tape, const DirectionalModel& model,
                          const TokenSequence& x, const TokenSequence& y,
                          bool include_eos = true);

double sequence_logprob(const DirectionalModel& model, const TokenSequence& x,
                        const TokenSequence& y, bool include_eos = true);

GradMap sequence_logprob_grad(const DirectionalModel& model,
                              const TokenSequence& x, const TokenSequence& y,
                              bool include_eos = true,
                              double* value = nullptr);

// Value-only convenience for tests: one decoder step's probabilities.
Vec decoder_step_values(const DirectionalModel& model, const TokenSequence& x,
                        const TokenSequence& target_prefix);

}  // namespace biagree
