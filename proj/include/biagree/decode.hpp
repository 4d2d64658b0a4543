#pragma once

#include "biagree/model.hpp"

namespace biagree {

// Tokens are stored in generation order: for an R2L model that is the
// reversed target. natural_order() maps back.
struct Hypothesis {
  TokenSequence tokens;
  double logprob = 0.0;  // sum of emitted-token log-probs (+EOS if finished)
  bool finished = false; // emitted EOS (false: stopped at the length cap)
};

struct NBestList {
  TokenSequence source;
  std::vector<Hypothesis> hyps;  // sorted by rescored value, descending
};

enum class DecodeMode { kGreedy, kBeam, kSample };

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kBeam;
  int beam_size = 8;
  double length_penalty_alpha = 1.0;
  int max_len = 0;  // 0: use 2*|x| + 5
};

int default_max_len(const TokenSequence& x);

// GNMT length penalty ((5+len)/6)^alpha.
double length_penalty(int len, double alpha);

Hypothesis natural_order(const DirectionalModel& model, Hypothesis hyp);

// True (score desc, ties by lexicographic token order) ordering.
bool better_hypothesis(const Hypothesis& a, double score_a,
                       const Hypothesis& b, double score_b);

Hypothesis greedy_decode(const DirectionalModel& model, const TokenSequence& x,
                         const DecodeConfig& cfg);

// Up to beam_size finished-or-capped hypotheses ranked by
// logprob / length_penalty.
NBestList beam_search(const DirectionalModel& model, const TokenSequence& x,
                      const DecodeConfig& cfg);

Hypothesis ancestral_sample(const DirectionalModel& model,
                            const TokenSequence& x, const DecodeConfig& cfg,
                            Rng& rng);

// Argmax over candidates of the joint score
// sequence_logprob(l2r,x,y) + sequence_logprob(r2l,x,y); candidates are in
// natural target order, duplicates collapsed, ties broken lexicographically.
Hypothesis rerank_js(const DirectionalModel& l2r, const DirectionalModel& r2l,
                     const TokenSequence& x,
                     const std::vector<Hypothesis>& candidates);

}  // namespace biagree
