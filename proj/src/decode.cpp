#include "biagree/decode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace biagree {

int default_max_len(const TokenSequence& x) {
  return 2 * static_cast<int>(x.size()) + 5;
}

double length_penalty(int len, double alpha) {
  return std::pow((5.0 + len) / 6.0, alpha);
}

Hypothesis natural_order(const DirectionalModel& model, Hypothesis hyp) {
  if (model.direction == Direction::kR2L)
    hyp.tokens = reverse_target(hyp.tokens);
  return hyp;
}

bool better_hypothesis(const Hypothesis& a, double score_a,
                       const Hypothesis& b, double score_b) {
  if (score_a != score_b) return score_a > score_b;
  return a.tokens < b.tokens;
}

namespace {

int resolve_max_len(const DecodeConfig& cfg, const TokenSequence& x) {
  return cfg.max_len > 0 ? cfg.max_len : default_max_len(x);
}

int argmax_token(const Vec& dist) {
  int best = -1;
  double bp = -1;
  for (int i = 0; i < dist.size(); ++i)
    if (dist[i] > bp) {  // strict: ties keep the lowest id
      bp = dist[i];
      best = i;
    }
  return best;
}

int sample_token(const Vec& dist, Rng& rng) {
  double r = uniform01(rng);
  double acc = 0;
  int last_positive = -1;
  for (int i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0) continue;
    last_positive = i;
    acc += dist[i];
    if (r < acc) return i;
  }
  return last_positive;  // r landed in the roundoff tail
}

}  // namespace

Hypothesis greedy_decode(const DirectionalModel& model, const TokenSequence& x,
                         const DecodeConfig& cfg) {
  int max_len = resolve_max_len(cfg, x);
  Tape tape;
  EncoderStates enc = encode(tape, model, x);
  DecoderState state = initial_decoder_state(tape, model, enc);
  Hypothesis hyp;
  int prev = Vocab::kBos;
  while (static_cast<int>(hyp.tokens.size()) < max_len) {
    StepOut out = decoder_step(tape, model, enc, prev, state);
    int tok = argmax_token(tape.value(out.dist).vec());
    hyp.logprob += std::log(tape.value(out.dist)[tok]);
    if (tok == Vocab::kEos) {
      hyp.finished = true;
      return hyp;
    }
    hyp.tokens.push_back(tok);
    state = out.state;
    prev = tok;
  }
  return hyp;  // length-capped, no EOS factor
}

Hypothesis ancestral_sample(const DirectionalModel& model,
                            const TokenSequence& x, const DecodeConfig& cfg,
                            Rng& rng) {
  int max_len = resolve_max_len(cfg, x);
  Tape tape;
  EncoderStates enc = encode(tape, model, x);
  DecoderState state = initial_decoder_state(tape, model, enc);
  Hypothesis hyp;
  int prev = Vocab::kBos;
  while (static_cast<int>(hyp.tokens.size()) < max_len) {
    StepOut out = decoder_step(tape, model, enc, prev, state);
    int tok = sample_token(tape.value(out.dist).vec(), rng);
    if (tok == Vocab::kEos) {
      hyp.logprob += std::log(tape.value(out.dist)[tok]);
      hyp.finished = true;
      return hyp;
    }
    hyp.logprob += std::log(tape.value(out.dist)[tok]);
    hyp.tokens.push_back(tok);
    state = out.state;
    prev = tok;
  }
  return hyp;  // length-capped, no EOS factor
}

NBestList beam_search(const DirectionalModel& model, const TokenSequence& x,
                      const DecodeConfig& cfg) {
  if (cfg.beam_size < 1) throw std::invalid_argument("beam_size < 1");
  int max_len = resolve_max_len(cfg, x);

  struct Beam {
    Hypothesis hyp;
    DecoderState state;
    int prev = Vocab::kBos;
  };

  Tape tape;
  EncoderStates enc = encode(tape, model, x);
  std::vector<Beam> live{{Hypothesis{}, initial_decoder_state(tape, model, enc),
                          Vocab::kBos}};
  std::vector<Hypothesis> pool;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Beam> next;
    for (Beam& b : live) {
      StepOut out = decoder_step(tape, model, enc, b.prev, b.state);
      const Vec dist = tape.value(out.dist).vec();
      for (int tok = 0; tok < dist.size(); ++tok) {
        if (dist[tok] <= 0) continue;
        double lp = b.hyp.logprob + std::log(dist[tok]);
        if (tok == Vocab::kEos) {
          Hypothesis done = b.hyp;
          done.logprob = lp;
          done.finished = true;
          pool.push_back(std::move(done));
        } else {
          Beam nb;
          nb.hyp = b.hyp;
          nb.hyp.tokens.push_back(tok);
          nb.hyp.logprob = lp;
          nb.state = out.state;
          nb.prev = tok;
          next.push_back(std::move(nb));
        }
      }
    }
    std::sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) {
      return better_hypothesis(a.hyp, a.hyp.logprob, b.hyp, b.hyp.logprob);
    });
    if (static_cast<int>(next.size()) > cfg.beam_size)
      next.resize(cfg.beam_size);
    live = std::move(next);
  }
  // survivors at the cap become length-capped candidates
  for (Beam& b : live) pool.push_back(std::move(b.hyp));

  // de-duplicate, keeping the higher-scored copy
  std::sort(pool.begin(), pool.end(), [](const Hypothesis& a,
                                         const Hypothesis& b) {
    if (a.tokens != b.tokens) return a.tokens < b.tokens;
    return a.logprob > b.logprob;
  });
  pool.erase(std::unique(pool.begin(), pool.end(),
                         [](const Hypothesis& a, const Hypothesis& b) {
                           return a.tokens == b.tokens;
                         }),
             pool.end());

  auto rescored = [&](const Hypothesis& h) {
    return h.logprob /
           length_penalty(static_cast<int>(h.tokens.size()),
                          cfg.length_penalty_alpha);
  };
  std::sort(pool.begin(), pool.end(),
            [&](const Hypothesis& a, const Hypothesis& b) {
              return better_hypothesis(a, rescored(a), b, rescored(b));
            });
  if (static_cast<int>(pool.size()) > cfg.beam_size)
    pool.resize(cfg.beam_size);

  NBestList out;
  out.source = x;
  out.hyps = std::move(pool);
  return out;
}

Hypothesis rerank_js(const DirectionalModel& l2r, const DirectionalModel& r2l,
                     const TokenSequence& x,
                     const std::vector<Hypothesis>& candidates) {
  if (candidates.empty())
    throw std::invalid_argument("rerank_js: empty candidate set");
  const Hypothesis* best = nullptr;
  double best_score = 0;
  for (const Hypothesis& h : candidates) {
    double score = sequence_logprob(l2r, x, h.tokens, h.finished) +
                   sequence_logprob(r2l, x, h.tokens, h.finished);
    if (!best || better_hypothesis(h, score, *best, best_score)) {
      best = &h;
      best_score = score;
    }
  }
  Hypothesis out = *best;
  out.logprob = best_score;
  return out;
}

}  // namespace biagree
