#include "biagree/oracle.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "biagree/trainlog.hpp"

namespace biagree {

int EnumeratedSpace::index_of(const TokenSequence& y) const {
  auto it = index_.find(y);
  if (it == index_.end())
    throw std::invalid_argument("sequence not in enumerated space");
  return it->second;
}

EnumeratedSpace enumerate_space(const Vocab& vocab, int max_len) {
  if (max_len < 0) throw std::invalid_argument("enumerate_space: max_len < 0");
  EnumeratedSpace space;
  space.max_len = max_len;
  space.vocab_ids = vocab.regular_ids();
  double v = static_cast<double>(space.vocab_ids.size());
  double count = 0;
  double power = 1;
  for (int k = 0; k <= max_len; ++k) {
    count += power;
    power *= v;
    if (count > 1e6)
      throw std::invalid_argument("enumerate_space: space exceeds 10^6 guard");
  }

  std::vector<TokenSequence> frontier{TokenSequence{}};
  for (int k = 0; k <= max_len; ++k) {
    std::vector<TokenSequence> next;
    for (const auto& s : frontier) {
      space.index_[s] = static_cast<int>(space.seqs.size());
      space.seqs.push_back(s);
      if (k < max_len) {
        for (int tok : space.vocab_ids) {
          TokenSequence e = s;
          e.push_back(tok);
          next.push_back(std::move(e));
        }
      }
    }
    frontier = std::move(next);
  }
  return space;
}

ExactDistribution exact_distribution(const DirectionalModel& model,
                                     const TokenSequence& x,
                                     const EnumeratedSpace& space) {
  ExactDistribution probs(space.seqs.size(), 0.0);
  Tape tape;
  EncoderStates enc = encode(tape, model, x);

  // depth-first over prefixes in the model's generation order
  struct Frame {
    TokenSequence prefix;
    DecoderState state;
    int prev;
    double prob;
    int depth;
  };
  std::vector<Frame> stack{{TokenSequence{},
                            initial_decoder_state(tape, model, enc),
                            Vocab::kBos, 1.0, 0}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.depth == space.max_len) {
      probs[space.index_of(f.prefix)] += f.prob;  // termination forced
      continue;
    }
    StepOut out = decoder_step(tape, model, enc, f.prev, f.state);
    const Array& dist = tape.value(out.dist);
    probs[space.index_of(f.prefix)] += f.prob * dist[Vocab::kEos];
    for (int tok : space.vocab_ids) {
      if (dist[tok] <= 0) continue;
      Frame child;
      child.prefix = f.prefix;
      child.prefix.push_back(tok);
      child.state = out.state;
      child.prev = tok;
      child.prob = f.prob * dist[tok];
      child.depth = f.depth + 1;
      stack.push_back(std::move(child));
    }
  }

  if (model.direction == Direction::kR2L) {
    ExactDistribution natural(probs.size());
    for (size_t i = 0; i < space.seqs.size(); ++i)
      natural[i] = probs[space.index_of(reverse_target(space.seqs[i]))];
    return natural;
  }
  return probs;
}

double truncated_logprob(const DirectionalModel& model, const TokenSequence& x,
                         const TokenSequence& y, const EnumeratedSpace& space) {
  bool include_eos = static_cast<int>(y.size()) < space.max_len;
  return sequence_logprob(model, x, y, include_eos);
}

double exact_kl(const ExactDistribution& p, const ExactDistribution& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("exact_kl: distributions on different spaces");
  double kl = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0)
      throw std::invalid_argument("exact_kl: q lacks support where p > 0");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

RegularizerGrads exact_regularizer_grad(const DirectionalModel& self_model,
                                        const DirectionalModel& helper,
                                        const TokenSequence& x,
                                        const EnumeratedSpace& space) {
  ExactDistribution p_self = exact_distribution(self_model, x, space);
  ExactDistribution q_helper = exact_distribution(helper, x, space);

  RegularizerGrads out{GradMap(self_model.params), GradMap(self_model.params)};
  for (size_t i = 0; i < space.seqs.size(); ++i) {
    const TokenSequence& y = space.seqs[i];
    bool include_eos = static_cast<int>(y.size()) < space.max_len;
    GradMap g = sequence_logprob_grad(self_model, x, y, include_eos);
    out.helper_to_self.add_scaled(g, q_helper[i]);
    if (p_self[i] > 0 && q_helper[i] > 0)
      out.self_to_helper.add_scaled(
          g, p_self[i] * std::log(q_helper[i] / p_self[i]));
  }
  return out;
}

namespace {

struct RunningMoments {
  std::vector<Eigen::ArrayXd> sum, sumsq;
  int n = 0;

  explicit RunningMoments(const GradMap& shape) {
    for (int i = 0; i < shape.count(); ++i) {
      sum.push_back(Eigen::ArrayXd::Zero(shape.at(i).size()));
      sumsq.push_back(Eigen::ArrayXd::Zero(shape.at(i).size()));
    }
  }
  void accumulate(const GradMap& g) {
    ++n;
    for (int i = 0; i < static_cast<int>(sum.size()); ++i) {
      sum[i] += g.at(i).data();
      sumsq[i] += g.at(i).data().square();
    }
  }
  TermBias finish(const GradMap& exact) const {
    TermBias tb{exact, exact, exact, 0.0, n};
    for (int i = 0; i < static_cast<int>(sum.size()); ++i) {
      Eigen::ArrayXd mean = sum[i] / n;
      Eigen::ArrayXd var =
          (sumsq[i] / n - mean.square()).max(0.0) * (n > 1 ? n / (n - 1.0) : 0);
      Eigen::ArrayXd se = (var / n).sqrt();
      tb.mean.at(i).data() = mean;
      tb.stderr_.at(i).data() = se;
      Eigen::ArrayXd z =
          (mean - exact.at(i).data()).abs() / se.max(1e-12);
      if (z.size() > 0) tb.max_abs_z = std::max(tb.max_abs_z, z.maxCoeff());
    }
    return tb;
  }
};

GradMap helper_term_draw(const DirectionalModel& self_model,
                         const DirectionalModel& helper, const TokenSequence& x,
                         const EnumeratedSpace& space, const Hypothesis& draw) {
  Hypothesis nat = natural_order(helper, draw);
  return sequence_logprob_grad(self_model, x, nat.tokens, draw.finished);
}

GradMap self_term_draw(const DirectionalModel& self_model,
                       const DirectionalModel& helper, const TokenSequence& x,
                       const EnumeratedSpace& space, const Hypothesis& draw) {
  Hypothesis nat = natural_order(self_model, draw);
  double lp_self = truncated_logprob(self_model, x, nat.tokens, space);
  double lp_helper = truncated_logprob(helper, x, nat.tokens, space);
  GradMap g =
      sequence_logprob_grad(self_model, x, nat.tokens, draw.finished);
  GradMap out(self_model.params);
  out.add_scaled(g, lp_helper - lp_self);
  return out;
}

}  // namespace

BiasReport estimator_bias_report(const DirectionalModel& self_model,
                                 const DirectionalModel& helper,
                                 const TokenSequence& x,
                                 const EnumeratedSpace& space,
                                 int candidate_beam, int n_resamples,
                                 Rng& rng) {
  RegularizerGrads exact = exact_regularizer_grad(self_model, helper, x, space);

  DecodeConfig sample_cfg;
  sample_cfg.mode = DecodeMode::kSample;
  sample_cfg.max_len = space.max_len;

  RunningMoments anc_helper(exact.helper_to_self);
  RunningMoments anc_self(exact.self_to_helper);
  for (int i = 0; i < n_resamples; ++i) {
    Hypothesis hd = ancestral_sample(helper, x, sample_cfg, rng);
    anc_helper.accumulate(helper_term_draw(self_model, helper, x, space, hd));
    Hypothesis sd = ancestral_sample(self_model, x, sample_cfg, rng);
    anc_self.accumulate(self_term_draw(self_model, helper, x, space, sd));
  }

  DecodeConfig beam_cfg;
  beam_cfg.mode = DecodeMode::kBeam;
  beam_cfg.beam_size = candidate_beam;
  beam_cfg.length_penalty_alpha = 0.0;  // raw-logprob best
  beam_cfg.max_len = space.max_len;
  RunningMoments beam_helper(exact.helper_to_self);
  RunningMoments beam_self(exact.self_to_helper);
  Hypothesis helper_best = beam_search(helper, x, beam_cfg).hyps.at(0);
  Hypothesis self_best = beam_search(self_model, x, beam_cfg).hyps.at(0);
  beam_helper.accumulate(
      helper_term_draw(self_model, helper, x, space, helper_best));
  beam_self.accumulate(self_term_draw(self_model, helper, x, space, self_best));

  BiasReport report;
  report.ancestral_helper_term = anc_helper.finish(exact.helper_to_self);
  report.ancestral_self_term = anc_self.finish(exact.self_to_helper);
  report.beam_helper_term = beam_helper.finish(exact.helper_to_self);
  report.beam_self_term = beam_self.finish(exact.self_to_helper);

  ExactDistribution qh = exact_distribution(helper, x, space);
  ExactDistribution ps = exact_distribution(self_model, x, space);
  double mass = 0;
  for (size_t i = 0; i < space.seqs.size(); ++i)
    if (static_cast<int>(space.seqs[i].size()) == space.max_len)
      mass += std::max(qh[i], ps[i]);
  report.mass_at_cap = mass;
  return report;
}

namespace {
void render_term(std::ostringstream& os, const char* name, const TermBias& tb) {
  double max_bias = 0;
  GradMap diff = tb.mean;
  diff.add_scaled(tb.exact, -1.0);
  max_bias = diff.max_abs();
  os << name << "\tn=" << tb.n_resamples << "\tmax_abs_z="
     << format_double(tb.max_abs_z) << "\tmax_abs_bias="
     << format_double(max_bias) << "\n";
}
}  // namespace

std::string render_bias_report(const BiasReport& report) {
  std::ostringstream os;
  os << "term\tstats\n";
  render_term(os, "ancestral.helper_term", report.ancestral_helper_term);
  render_term(os, "ancestral.self_term", report.ancestral_self_term);
  render_term(os, "beam_best.helper_term", report.beam_helper_term);
  render_term(os, "beam_best.self_term", report.beam_self_term);
  os << "mass_at_cap\t" << format_double(report.mass_at_cap) << "\n";
  return os.str();
}

}  // namespace biagree
