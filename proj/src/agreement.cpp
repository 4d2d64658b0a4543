#include "biagree/agreement.hpp"

#include <algorithm>
#include <stdexcept>

#include "biagree/bleu.hpp"

namespace biagree {

Sampler sampler_from_name(const std::string& name) {
  if (name == "beam-best") return Sampler::kBeamBest;
  if (name == "ancestral") return Sampler::kAncestral;
  throw std::invalid_argument("unknown sampler: " + name);
}

const char* sampler_name(Sampler s) {
  return s == Sampler::kBeamBest ? "beam-best" : "ancestral";
}

GradientEstimate mle_grad(const DirectionalModel& model,
                          const std::vector<SentencePair>& batch) {
  if (batch.empty()) throw std::invalid_argument("mle_grad: empty batch");
  GradientEstimate est{GradMap(model.params), GradMap(model.params),
                       GradMap(model.params), GradMap(model.params)};
  for (const SentencePair& p : batch) {
    double value = 0;
    GradMap g = sequence_logprob_grad(model, p.x, p.y, true, &value);
    est.mle.add_scaled(g, 1.0);
    est.loglik += value;
  }
  est.total.add_scaled(est.mle, 1.0);
  return est;
}

namespace {

std::vector<Hypothesis> draw_candidates(const DirectionalModel& model,
                                        const TokenSequence& x,
                                        const RegularizerConfig& cfg,
                                        Rng& rng) {
  std::vector<Hypothesis> out;
  if (cfg.sampler == Sampler::kBeamBest) {
    DecodeConfig dc;
    dc.mode = DecodeMode::kBeam;
    dc.beam_size = std::max(cfg.candidate_beam, cfg.m);
    dc.length_penalty_alpha = 0.0;  // candidates ranked by raw logprob
    dc.max_len = cfg.max_len;
    NBestList nbest = beam_search(model, x, dc);
    for (int i = 0; i < cfg.m && i < static_cast<int>(nbest.hyps.size()); ++i)
      out.push_back(nbest.hyps[i]);
  } else {
    DecodeConfig dc;
    dc.mode = DecodeMode::kSample;
    dc.max_len = cfg.max_len;
    for (int i = 0; i < cfg.m; ++i)
      out.push_back(ancestral_sample(model, x, dc, rng));
  }
  return out;
}

}  // namespace

std::vector<PseudoPair> make_pseudo_from_helper(const DirectionalModel& helper,
                                                const TokenSequence& x,
                                                const RegularizerConfig& cfg,
                                                Rng& rng) {
  std::vector<PseudoPair> pairs;
  for (const Hypothesis& h : draw_candidates(helper, x, cfg, rng)) {
    Hypothesis nat = natural_order(helper, h);
    PseudoPair p;
    p.x = x;
    p.y_hat = nat.tokens;
    p.weight = 1.0;
    p.origin = PseudoPair::Origin::kHelper;
    p.finished = h.finished;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<PseudoPair> make_pseudo_from_self(
    const DirectionalModel& self_model, const DirectionalModel& helper,
    const TokenSequence& x, const RegularizerConfig& cfg, Rng& rng) {
  std::vector<PseudoPair> pairs;
  for (const Hypothesis& h : draw_candidates(self_model, x, cfg, rng)) {
    Hypothesis nat = natural_order(self_model, h);
    PseudoPair p;
    p.x = x;
    p.y_hat = nat.tokens;
    p.origin = PseudoPair::Origin::kSelf;
    p.finished = h.finished;
    double lp_helper = sequence_logprob(helper, x, p.y_hat, p.finished);
    double lp_self = sequence_logprob(self_model, x, p.y_hat, p.finished);
    p.weight = std::clamp(lp_helper - lp_self, -cfg.weight_clip,
                          cfg.weight_clip);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<PseudoPair> filter_pseudo(const std::vector<PseudoPair>& pairs,
                                      const TokenSequence& reference,
                                      double threshold, bool smooth) {
  std::vector<PseudoPair> kept;
  for (const PseudoPair& p : pairs)
    if (sentence_bleu(p.y_hat, reference, smooth).value > threshold)
      kept.push_back(p);
  return kept;
}

GradientEstimate rt_grad(const DirectionalModel& self_model,
                         const DirectionalModel& helper,
                         const std::vector<SentencePair>& batch,
                         const RegularizerConfig& cfg, Rng& rng) {
  if (self_model.direction == helper.direction)
    throw std::invalid_argument("rt_grad: helper must have the opposite "
                                "direction");
  GradientEstimate est = mle_grad(self_model, batch);
  if (cfg.lambda == 0.0) return est;  // regularizer off: pure MLE path

  for (const SentencePair& p : batch) {
    std::vector<PseudoPair> from_helper =
        make_pseudo_from_helper(helper, p.x, cfg, rng);
    std::vector<PseudoPair> from_self =
        make_pseudo_from_self(self_model, helper, p.x, cfg, rng);
    est.pseudo_generated +=
        static_cast<int>(from_helper.size() + from_self.size());

    from_helper = filter_pseudo(from_helper, p.y, cfg.filter_threshold,
                                cfg.smooth_filter_bleu);
    from_self = filter_pseudo(from_self, p.y, cfg.filter_threshold,
                              cfg.smooth_filter_bleu);
    est.pseudo_kept += static_cast<int>(from_helper.size() + from_self.size());

    for (const PseudoPair& pp : from_helper) {
      GradMap g = sequence_logprob_grad(self_model, pp.x, pp.y_hat,
                                        pp.finished);
      est.kl_helper_to_self.add_scaled(g, cfg.lambda);
    }
    for (const PseudoPair& pp : from_self) {
      GradMap g = sequence_logprob_grad(self_model, pp.x, pp.y_hat,
                                        pp.finished);
      est.kl_self_to_helper.add_scaled(g, cfg.lambda * pp.weight);
    }
  }
  est.total.add_scaled(est.kl_helper_to_self, 1.0);
  est.total.add_scaled(est.kl_self_to_helper, 1.0);
  return est;
}

GradientEstimate r2l_objective_grad(const DirectionalModel& r2l_model,
                                    const DirectionalModel& l2r_helper,
                                    const std::vector<SentencePair>& batch,
                                    const RegularizerConfig& cfg, Rng& rng) {
  return rt_grad(r2l_model, l2r_helper, batch, cfg, rng);
}

}  // namespace biagree
