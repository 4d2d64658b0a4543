#pragma once

#include <map>

#include "biagree/decode.hpp"
#include "biagree/model.hpp"

namespace biagree {

// The complete candidate set for tiny configurations: every sequence over the
// non-reserved vocabulary of length 0..L-1 (EOS-terminated) plus every
// length-L sequence with termination forced, so the set carries probability 1
// under any model.
struct EnumeratedSpace {
  std::vector<TokenSequence> seqs;  // natural order, deduplicated
  std::vector<int> vocab_ids;       // non-reserved ids
  int max_len = 0;

  int index_of(const TokenSequence& y) const;

 private:
  friend EnumeratedSpace enumerate_space(const Vocab& vocab, int max_len);
  std::map<TokenSequence, int> index_;
};

// Guard: sum_k |V|^k must stay <= 10^6.
EnumeratedSpace enumerate_space(const Vocab& vocab, int max_len);

// Probability per sequence, aligned with space.seqs. Sequences shorter than
// max_len carry their EOS-step factor; length-max_len sequences absorb their
// continuation mass (final EOS factor replaced by 1). Entries sum to 1.
// For an R2L model the chain runs over reversed sequences and is mapped back
// to natural order.
using ExactDistribution = std::vector<double>;
ExactDistribution exact_distribution(const DirectionalModel& model,
                                     const TokenSequence& x,
                                     const EnumeratedSpace& space);

// Truncated-space log P(y|x): includes the EOS factor iff |y| < max_len.
double truncated_logprob(const DirectionalModel& model, const TokenSequence& x,
                         const TokenSequence& y, const EnumeratedSpace& space);

// sum p ln(p/q); errors if q lacks support where p > 0.
double exact_kl(const ExactDistribution& p, const ExactDistribution& q);

// The two KL-term gradients of the regularized objective w.r.t. the self
// model's parameters, as exact finite sums over the space (lambda excluded):
//   helper_to_self = -d KL(P_helper || P_self) / d theta_self
//   self_to_helper = -d KL(P_self || P_helper) / d theta_self
struct RegularizerGrads {
  GradMap helper_to_self;
  GradMap self_to_helper;
};
RegularizerGrads exact_regularizer_grad(const DirectionalModel& self_model,
                                        const DirectionalModel& helper,
                                        const TokenSequence& x,
                                        const EnumeratedSpace& space);

enum class SamplerKind { kAncestral, kBeamBest };

// Per-parameter mean, standard error, and z-score of single-draw gradient
// estimates against the exact values, for one KL term and one sampler.
struct TermBias {
  GradMap exact;
  GradMap mean;
  GradMap stderr_;
  double max_abs_z = 0.0;
  int n_resamples = 0;
};

struct BiasReport {
  TermBias ancestral_helper_term;
  TermBias ancestral_self_term;
  TermBias beam_helper_term;
  TermBias beam_self_term;
  double mass_at_cap = 0.0;  // helper-model probability of length-capped seqs
};

BiasReport estimator_bias_report(const DirectionalModel& self_model,
                                 const DirectionalModel& helper,
                                 const TokenSequence& x,
                                 const EnumeratedSpace& space,
                                 int candidate_beam, int n_resamples,
                                 Rng& rng);

std::string render_bias_report(const BiasReport& report);

}  // namespace biagree
