#pragma once

#include "biagree/corpus.hpp"
#include "biagree/decode.hpp"

namespace biagree {

enum class Sampler { kBeamBest, kAncestral };
Sampler sampler_from_name(const std::string& name);
const char* sampler_name(Sampler s);

struct RegularizerConfig {
  double lambda = 1.0;
  int m = 1;                       // candidates per source
  int candidate_beam = 4;
  double filter_threshold = 0.30;  // sentence BLEU must exceed this; < 0 keeps all
  double weight_clip = 5.0;
  Sampler sampler = Sampler::kBeamBest;
  int max_len = 0;                 // candidate length cap; 0 = 2|x|+5
  bool smooth_filter_bleu = true;
};

struct PseudoPair {
  enum class Origin { kHelper, kSelf };
  TokenSequence x;
  TokenSequence y_hat;  // natural target order
  double weight = 1.0;
  Origin origin = Origin::kHelper;
  bool finished = true;  // y_hat emitted EOS (false: length-capped)
};

struct GradientEstimate {
  GradMap total;
  GradMap mle;
  GradMap kl_helper_to_self;  // lambda included
  GradMap kl_self_to_helper;  // lambda included
  double loglik = 0.0;        // batch MLE log-likelihood value
  int pseudo_generated = 0;
  int pseudo_kept = 0;
};

// Gradient of sum log P(y|x;theta) over the batch (ascent direction).
GradientEstimate mle_grad(const DirectionalModel& model,
                          const std::vector<SentencePair>& batch);

// m candidates drawn from the frozen opposite-direction helper, stored in
// natural order with weight 1.
std::vector<PseudoPair> make_pseudo_from_helper(const DirectionalModel& helper,
                                                const TokenSequence& x,
                                                const RegularizerConfig& cfg,
                                                Rng& rng);

// m candidates drawn from the model being trained, weighted with
// clip(log P_helper(y|x) - log P_self(y|x), +-weight_clip).
std::vector<PseudoPair> make_pseudo_from_self(const DirectionalModel& self_model,
                                              const DirectionalModel& helper,
                                              const TokenSequence& x,
                                              const RegularizerConfig& cfg,
                                              Rng& rng);

// Keeps pairs whose sentence BLEU against the reference exceeds threshold.
std::vector<PseudoPair> filter_pseudo(const std::vector<PseudoPair>& pairs,
                                      const TokenSequence& reference,
                                      double threshold, bool smooth = true);

// Three-term approximate gradient of the regularized objective: MLE term plus
// lambda-weighted pseudo-pair terms for both KL directions. The helper is
// frozen; no gradient flows into it.
GradientEstimate rt_grad(const DirectionalModel& self_model,
                         const DirectionalModel& helper,
                         const std::vector<SentencePair>& batch,
                         const RegularizerConfig& cfg, Rng& rng);

// The R2L objective's gradient: same routine with the roles exchanged.
GradientEstimate r2l_objective_grad(const DirectionalModel& r2l_model,
                                    const DirectionalModel& l2r_helper,
                                    const std::vector<SentencePair>& batch,
                                    const RegularizerConfig& cfg, Rng& rng);

}  // namespace biagree
