// Acceptance gate: one line per criterion, nonzero exit if any fail.
// Optional argv: criterion numbers to run (default all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "biagree/bleu.hpp"
#include "biagree/oracle.hpp"
#include "biagree/train.hpp"

using namespace biagree;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ModelConfig tiny_config(int vocab_size, int emb = 2, int hid = 3) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.emb_dim = emb;
  c.hidden_dim = hid;
  c.attn_dim = hid;
  return c;
}

Vocab make_vocab(int regular) {
  Vocab v;
  for (int i = 0; i < regular; ++i) v.add("w" + std::to_string(i));
  return v;
}

DirectionalModel random_model(Direction dir, const ModelConfig& mc, Rng& rng) {
  DirectionalModel m = init_model(dir, mc, rng);
  for (int i = 0; i < m.params.count(); ++i) {
    Array& a = m.params.at(i);
    for (int j = 0; j < a.size(); ++j) a[j] = 2 * uniform01(rng) - 1;
  }
  return m;
}

TokenSequence random_seq(int len, int vocab_regular, Rng& rng) {
  TokenSequence s(len);
  for (int& t : s)
    t = Vocab::kNumReserved +
        static_cast<int>(uniform01(rng) * vocab_regular);
  return s;
}

bool params_equal(const ParamStore& a, const ParamStore& b) {
  if (a.count() != b.count()) return false;
  for (int i = 0; i < a.count(); ++i)
    if (!(a.at(i).data() == b.at(i).data()).all()) return false;
  return true;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- criterion 1

bool criterion1(std::string& detail) {
  auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int vreg = 2 + static_cast<int>(uniform01(rng) * 3);  // 2..4 regular
    Direction dir = trial % 2 ? Direction::kR2L : Direction::kL2R;
    DirectionalModel m = random_model(dir, tiny_config(3 + vreg), rng);
    TokenSequence x = random_seq(1 + trial % 3, vreg, rng);
    TokenSequence y = random_seq(trial % 4, vreg, rng);
    bool include_eos = trial % 3 != 0 || y.empty();
    if (y.empty()) include_eos = true;

    GradMap g = sequence_logprob_grad(m, x, y, include_eos);
    auto fn = [&](const ParamStore& p) {
      DirectionalModel probe = m;
      probe.params = p;
      return sequence_logprob(probe, x, y, include_eos);
    };
    worst = std::max(worst, finite_diff_check(fn, m.params, g, 1e-5));
  }
  std::ostringstream os;
  os << "max relative error " << worst << " over 20 models, "
     << seconds_since(t0) << "s";
  detail = os.str();
  return worst < 1e-4;
}

// ---------------------------------------------------------------- criterion 2

bool criterion2(std::string& detail) {
  auto t0 = Clock::now();
  Rng rng(202);
  Vocab vocab = make_vocab(3);
  ModelConfig mc = tiny_config(vocab.size());
  DirectionalModel self_model = random_model(Direction::kL2R, mc, rng);
  DirectionalModel helper = random_model(Direction::kR2L, mc, rng);
  int n_params = self_model.params.total_scalars();

  EnumeratedSpace space = enumerate_space(vocab, 3);
  TokenSequence x{3, 4};
  BiasReport rep =
      estimator_bias_report(self_model, helper, x, space, 4, 10000, rng);
  double z1 = rep.ancestral_helper_term.max_abs_z;
  double z2 = rep.ancestral_self_term.max_abs_z;
  std::ostringstream os;
  os << n_params << " params, 10000 resamples, max|z| helper-term " << z1
     << ", self-term " << z2 << ", mass at length cap " << rep.mass_at_cap
     << ", " << seconds_since(t0) << "s";
  detail = os.str();
  return n_params <= 500 && z1 < 4.0 && z2 < 4.0;
}

// ---------------------------------------------------------------- criterion 3

bool criterion3(std::string& detail) {
  double hand = exact_kl({0.5, 0.5}, {0.25, 0.75});
  bool hand_ok = std::abs(hand - 0.143841) < 1e-6;

  Rng rng(303);
  bool self_zero = true, nonneg = true;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + static_cast<int>(uniform01(rng) * 5);
    auto draw = [&]() {
      ExactDistribution d(n);
      double sum = 0;
      for (double& v : d) {
        v = uniform01(rng) + 1e-6;
        sum += v;
      }
      for (double& v : d) v /= sum;
      return d;
    };
    ExactDistribution p = draw(), q = draw();
    if (std::abs(exact_kl(p, p)) > 1e-15) self_zero = false;
    if (exact_kl(p, q) < 0) nonneg = false;
  }
  std::ostringstream os;
  os << "hand case " << hand << " (target 0.143841), KL(p,p)=0 "
     << (self_zero ? "ok" : "VIOLATED") << ", KL>=0 on 1000 pairs "
     << (nonneg ? "ok" : "VIOLATED");
  detail = os.str();
  return hand_ok && self_zero && nonneg;
}

// ---------------------------------------------------------------- criterion 4

Corpus noisy_toy_corpus(unsigned long long seed) {
  TaskSpec spec;
  spec.kind = TaskKind::kNoisyLexicon;
  spec.vocab_size = 3;
  spec.min_len = 2;
  spec.max_len = 4;
  spec.noise_rate = 0.15;
  spec.seed = seed;
  return gen_synthetic(spec, {150, 20, 20});
}

double probe_sym_kl(const Checkpoint& l2r, const Checkpoint& r2l,
                    const Corpus& corpus, const EnumeratedSpace& space,
                    int n_sources) {
  double total = 0;
  int n = std::min<int>(n_sources, static_cast<int>(corpus.dev.size()));
  for (int i = 0; i < n; ++i) {
    ExactDistribution p = exact_distribution(l2r.model, corpus.dev[i].x, space);
    ExactDistribution q = exact_distribution(r2l.model, corpus.dev[i].x, space);
    total += exact_kl(p, q) + exact_kl(q, p);
  }
  return total / n;
}

bool criterion4(std::string& detail) {
  auto t0 = Clock::now();
  int decreased = 0;
  std::ostringstream os;
  for (unsigned long long seed = 1; seed <= 5; ++seed) {
    Corpus corpus = noisy_toy_corpus(seed);
    ModelConfig mc = tiny_config(corpus.vocab.size(), 8, 12);
    TrainConfig tc;
    tc.steps = 400;
    tc.batch_size = 8;
    tc.seed = seed;
    tc.log_every = 0;
    TrainLog log;
    Checkpoint l2r = pretrain_mle(Direction::kL2R, mc, corpus, tc, log);
    TrainConfig tc2 = tc;
    tc2.seed = seed + 100;
    Checkpoint r2l = pretrain_mle(Direction::kR2L, mc, corpus, tc2, log);

    EnumeratedSpace space = enumerate_space(corpus.vocab, 4);
    double before = probe_sym_kl(l2r, r2l, corpus, space, 10);

    RegularizerConfig reg;
    reg.candidate_beam = 2;
    TrainConfig jt = tc;
    jt.steps = 300;
    Checkpoint helper_r2l = r2l, helper_l2r = l2r;
    l2r = train_direction_with_helper(l2r, helper_r2l, corpus, reg, jt, log);
    r2l = train_direction_with_helper(r2l, helper_l2r, corpus, reg, jt, log);
    double after = probe_sym_kl(l2r, r2l, corpus, space, 10);

    if (after < before) ++decreased;
    os << " seed " << seed << ": " << before << " -> " << after << ";";
  }
  os << " decreased in " << decreased << "/5 seeds, " << seconds_since(t0)
     << "s";
  detail = os.str();
  return decreased >= 4;
}

// ---------------------------------------------------------------- criterion 5

struct Task5Result {
  double dev_mle = 0, dev_rt = 0;
  double delta_short = 0, delta_long = 0;  // per-bucket test BLEU deltas
};

Task5Result run_task5_seed(unsigned long long seed) {
  TaskSpec spec;
  spec.kind = TaskKind::kPrefixSuffixAgreement;
  spec.vocab_size = 6;
  spec.min_len = 2;
  spec.max_len = 12;
  spec.noise_rate = 0.05;
  spec.seed = seed;
  Corpus corpus = gen_synthetic(spec, {300, 24, 400});
  ModelConfig mc = tiny_config(corpus.vocab.size(), 16, 24);

  // pretrain both directions to near-convergence; the contrast below only
  // shows once the pure-MLE continuation has mostly plateaued
  TrainConfig tc;
  tc.steps = 3000;
  tc.batch_size = 16;
  tc.seed = seed;
  tc.log_every = 0;
  tc.dev_decode.beam_size = 4;
  TrainLog log;
  Checkpoint l2r = pretrain_mle(Direction::kL2R, mc, corpus, tc, log);
  TrainConfig tc2 = tc;
  tc2.seed = seed + 100;
  Checkpoint r2l = pretrain_mle(Direction::kR2L, mc, corpus, tc2, log);

  // baseline: continue pure MLE for the same extra budget
  Checkpoint mle = l2r;
  RegularizerConfig off;
  off.lambda = 0.0;
  train_phase(mle, nullptr, corpus.train, off, 1000, tc.batch_size, log, 0);

  // agreement-regularized continuation against the frozen opposite model
  RegularizerConfig reg;
  reg.candidate_beam = 4;
  TrainConfig jt = tc;
  jt.steps = 1000;
  Checkpoint rt = train_direction_with_helper(l2r, r2l, corpus, reg, jt, log);

  Task5Result r;
  r.dev_mle = dev_bleu(mle, corpus.dev, tc.dev_decode);
  r.dev_rt = dev_bleu(rt, corpus.dev, tc.dev_decode);

  // greedy test decoding: error compounding over the generated prefix is what
  // the agreement term counteracts, and greedy exposes it most
  DecodeConfig greedy_cfg;
  greedy_cfg.mode = DecodeMode::kGreedy;
  auto decode_test = [&](const Checkpoint& ckpt) {
    std::vector<TokenSequence> out;
    for (const SentencePair& p : corpus.test) {
      Hypothesis h = greedy_decode(ckpt.model, p.x, greedy_cfg);
      out.push_back(natural_order(ckpt.model, h).tokens);
    }
    return out;
  };
  std::vector<TokenSequence> sources, refs;
  for (const SentencePair& p : corpus.test) {
    sources.push_back(p.x);
    refs.push_back(p.y);
  }
  LengthBucketReport rep = bucket_report(
      sources, refs, {{"mle", decode_test(mle)}, {"rt", decode_test(rt)}},
      {0, 5, 9});
  auto bleu_of = [&](int system, int bucket) {
    return rep.bleu[system][bucket] ? rep.bleu[system][bucket]->value : 0.0;
  };
  r.delta_short = bleu_of(1, 0) - bleu_of(0, 0);
  r.delta_long = bleu_of(1, 2) - bleu_of(0, 2);
  return r;
}

bool criterion5(std::string& detail) {
  auto t0 = Clock::now();
  std::vector<double> mle, rt, dshort, dlong;
  std::ostringstream seeds;
  for (unsigned long long seed = 1; seed <= 5; ++seed) {
    Task5Result r = run_task5_seed(seed);
    mle.push_back(r.dev_mle);
    rt.push_back(r.dev_rt);
    dshort.push_back(r.delta_short);
    dlong.push_back(r.delta_long);
    seeds << " seed " << seed << ": dev " << r.dev_mle << "/" << r.dev_rt
          << " dshort " << r.delta_short << " dlong " << r.delta_long << ";";
  }
  double med_mle = median(mle), med_rt = median(rt);
  double med_short = median(dshort), med_long = median(dlong);
  std::ostringstream os;
  os << "median dev BLEU mle " << med_mle << " vs rt " << med_rt
     << "; median test-bucket delta short " << med_short << " long "
     << med_long << ";" << seeds.str() << " " << seconds_since(t0) << "s";
  detail = os.str();
  // med_mle floor guards against a vacuous pass where nothing learned
  return med_mle > 0.2 && med_rt >= med_mle && med_long >= med_short;
}

// ---------------------------------------------------------------- criterion 6

bool criterion6(std::string& detail) {
  Rng rng(606);
  Vocab vocab = make_vocab(3);
  EnumeratedSpace space = enumerate_space(vocab, 3);
  int ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Direction dir = trial % 2 ? Direction::kR2L : Direction::kL2R;
    DirectionalModel m = random_model(dir, tiny_config(vocab.size()), rng);
    TokenSequence x = random_seq(1 + trial % 3, 3, rng);
    ExactDistribution dist = exact_distribution(m, x, space);
    int best = 0;
    for (size_t i = 1; i < dist.size(); ++i)
      if (dist[i] > dist[best] ||
          (dist[i] == dist[best] && space.seqs[i] < space.seqs[best]))
        best = static_cast<int>(i);

    DecodeConfig dc;
    dc.beam_size = static_cast<int>(space.seqs.size());
    dc.length_penalty_alpha = 0.0;
    dc.max_len = space.max_len;
    Hypothesis top = natural_order(m, beam_search(m, x, dc).hyps.at(0));
    if (top.tokens == space.seqs[best] &&
        std::abs(top.logprob - std::log(dist[best])) < 1e-9)
      ++ok;
  }
  detail = std::to_string(ok) + "/50 models match the enumeration argmax";
  return ok == 50;
}

// ---------------------------------------------------------------- criterion 7

bool criterion7(std::string& detail) {
  std::vector<TokenSequence> a{{3, 4, 5, 6}, {7, 8, 9}};
  bool identical_ok = std::abs(corpus_bleu(a, a).value - 1.0) < 1e-12;
  bool disjoint_ok =
      corpus_bleu({{3, 4, 5, 6}}, {{7, 8, 9, 10}}).value == 0.0;
  double bp_case = corpus_bleu({{3, 4}}, {{3, 4, 5}}).value;
  bool bp_ok = std::abs(bp_case - std::exp(-0.5)) < 1e-9;

  std::vector<TokenSequence> hyps{{3, 4, 5}, {6, 7}, {8, 9, 3, 4}};
  std::vector<TokenSequence> refs{{3, 4, 6}, {6, 7}, {8, 3, 3, 4}};
  double base = corpus_bleu(hyps, refs).value;
  std::vector<TokenSequence> hp{hyps[2], hyps[0], hyps[1]};
  std::vector<TokenSequence> rp{refs[2], refs[0], refs[1]};
  bool perm_ok = corpus_bleu(hp, rp).value == base;

  std::ostringstream os;
  os << "identical " << (identical_ok ? "ok" : "BAD") << ", disjoint "
     << (disjoint_ok ? "ok" : "BAD") << ", BP case " << bp_case
     << " (target e^-0.5), permutation " << (perm_ok ? "ok" : "BAD");
  detail = os.str();
  return identical_ok && disjoint_ok && bp_ok && perm_ok;
}

// ---------------------------------------------------------------- criterion 8

bool criterion8(std::string& detail) {
  Rng rng(808);
  Vocab vocab = make_vocab(2);
  EnumeratedSpace space = enumerate_space(vocab, 3);
  int ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    DirectionalModel l2r =
        random_model(Direction::kL2R, tiny_config(vocab.size()), rng);
    DirectionalModel r2l =
        random_model(Direction::kR2L, tiny_config(vocab.size()), rng);
    TokenSequence x = random_seq(1 + trial % 2, 2, rng);

    std::vector<Hypothesis> candidates;
    for (const TokenSequence& y : space.seqs)
      candidates.push_back(
          {y, 0.0, static_cast<int>(y.size()) < space.max_len});
    Hypothesis picked = rerank_js(l2r, r2l, x, candidates);

    ExactDistribution pl = exact_distribution(l2r, x, space);
    ExactDistribution pr = exact_distribution(r2l, x, space);
    int arg = 0;
    for (size_t i = 1; i < space.seqs.size(); ++i) {
      double s = pl[i] * pr[i], sa = pl[arg] * pr[arg];
      if (s > sa || (s == sa && space.seqs[i] < space.seqs[arg]))
        arg = static_cast<int>(i);
    }
    if (picked.tokens == space.seqs[arg]) ++ok;
  }
  detail = std::to_string(ok) + "/20 pairs match the product-argmax";
  return ok == 20;
}

// ---------------------------------------------------------------- criterion 9

bool criterion9(std::string& detail) {
  auto t0 = Clock::now();
  Corpus corpus = noisy_toy_corpus(9);
  ModelConfig mc = tiny_config(corpus.vocab.size(), 8, 12);
  TrainConfig tc;
  tc.steps = 200;
  tc.batch_size = 8;
  tc.seed = 9;
  tc.log_every = 0;
  tc.dev_decode.beam_size = 4;
  TrainLog log;
  Checkpoint l2r = pretrain_mle(Direction::kL2R, mc, corpus, tc, log);
  TrainConfig tc2 = tc;
  tc2.seed = 109;
  Checkpoint r2l = pretrain_mle(Direction::kR2L, mc, corpus, tc2, log);

  JointTrainConfig jc;
  jc.max_iterations = 4;
  jc.steps_per_phase = 120;
  RegularizerConfig reg;
  reg.candidate_beam = 2;
  JointResult res = joint_train(l2r, r2l, corpus, jc, reg, tc);

  auto iters = res.log.events("iteration");
  bool table_ok = iters.size() >= 2;
  std::string table = iteration_log_report(res.log);
  table_ok = table_ok && table.find("Iteration") != std::string::npos &&
             table.find("dev-BLEU-L2R") != std::string::npos;

  // halting: every non-final transition improved at least one direction, and
  // the run either exhausted its budget or its final transition improved none
  bool halt_ok = true;
  auto bleu_at = [&](size_t i, const char* key) {
    return std::stod(TrainLog::get(iters[i], key));
  };
  for (size_t i = 1; i + 1 < iters.size(); ++i) {
    bool improved = bleu_at(i, "dev_bleu_l2r") > bleu_at(i - 1, "dev_bleu_l2r") ||
                    bleu_at(i, "dev_bleu_r2l") > bleu_at(i - 1, "dev_bleu_r2l");
    if (!improved) halt_ok = false;
  }
  if (iters.size() < static_cast<size_t>(jc.max_iterations) + 1) {
    size_t last = iters.size() - 1;
    bool improved =
        bleu_at(last, "dev_bleu_l2r") > bleu_at(last - 1, "dev_bleu_l2r") ||
        bleu_at(last, "dev_bleu_r2l") > bleu_at(last - 1, "dev_bleu_r2l");
    if (improved) halt_ok = false;
  }

  // lambda = 0: regularized path reproduces the MLE continuation bitwise
  RegularizerConfig off;
  off.lambda = 0.0;
  Checkpoint a = l2r, b = l2r;
  TrainLog la, lb;
  train_phase(a, &r2l, corpus.train, off, 60, tc.batch_size, la, 10);
  train_phase(b, nullptr, corpus.train, off, 60, tc.batch_size, lb, 10);
  bool lambda0_ok = params_equal(a.model.params, b.model.params) &&
                    a.rng_state == b.rng_state &&
                    la.serialize() == lb.serialize();

  std::ostringstream os;
  os << iters.size() - 1 << " joint iterations (max " << jc.max_iterations
     << "), table " << (table_ok ? "ok" : "BAD") << ", halting "
     << (halt_ok ? "ok" : "BAD") << ", lambda-0 bitwise "
     << (lambda0_ok ? "ok" : "BAD") << ", " << seconds_since(t0) << "s";
  detail = os.str();
  return table_ok && halt_ok && lambda0_ok;
}

// --------------------------------------------------------------- criterion 10

bool criterion10(std::string& detail) {
  auto t0 = Clock::now();
  auto run_once = [&]() {
    Corpus corpus = noisy_toy_corpus(10);
    ModelConfig mc = tiny_config(corpus.vocab.size(), 8, 12);
    TrainConfig tc;
    tc.steps = 120;
    tc.batch_size = 8;
    tc.seed = 10;
    tc.log_every = 20;
    tc.dev_decode.beam_size = 4;
    TrainLog log;
    Checkpoint l2r = pretrain_mle(Direction::kL2R, mc, corpus, tc, log);
    TrainConfig tc2 = tc;
    tc2.seed = 110;
    Checkpoint r2l = pretrain_mle(Direction::kR2L, mc, corpus, tc2, log);
    JointTrainConfig jc;
    jc.max_iterations = 1;
    jc.steps_per_phase = 40;
    RegularizerConfig reg;
    reg.candidate_beam = 2;
    reg.sampler = Sampler::kAncestral;  // stresses the rng stream
    reg.m = 2;
    JointResult res = joint_train(l2r, r2l, corpus, jc, reg, tc);
    for (const auto& rec : res.log.records()) log.append(rec);
    return log.serialize();
  };
  std::string first = run_once();
  std::string second = run_once();
  std::ostringstream os;
  os << "two identical runs, logs " << (first == second ? "bitwise equal" : "DIFFER")
     << " (" << first.size() << " bytes), " << seconds_since(t0) << "s";
  detail = os.str();
  return first == second;
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* name;
    bool (*fn)(std::string&);
  };
  const Entry entries[] = {
      {1, "log-likelihood gradient vs finite differences", criterion1},
      {2, "sampled estimator unbiasedness vs exact oracle", criterion2},
      {3, "exact KL sanity", criterion3},
      {4, "joint iteration decreases oracle symmetric KL", criterion4},
      {5, "regularized training matches or beats MLE, long-source gain",
       criterion5},
      {6, "exhaustive beam equals enumeration argmax", criterion6},
      {7, "BLEU golden cases", criterion7},
      {8, "joint-score reranking equals product argmax", criterion8},
      {9, "iteration protocol: table, halting, lambda-0 equivalence",
       criterion9},
      {10, "train log determinism", criterion10},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  bool all_ok = true;
  for (const Entry& e : entries) {
    if (!selected.empty() && !selected.count(e.id)) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = e.fn(detail);
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << e.id << ": "
              << e.name << " — " << detail << "\n";
    std::cout.flush();
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
