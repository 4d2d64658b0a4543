#include "biagree/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "biagree/bleu.hpp"
#include "biagree/oracle.hpp"

#include <json.hpp>

namespace biagree {

void adam_step(ParamStore& params, AdamState& state, const AdamConfig& cfg,
               const GradMap& g) {
  ++state.t;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (int i = 0; i < params.count(); ++i) {
    auto& m = state.m.at(i).data();
    auto& v = state.v.at(i).data();
    const auto& grad = g.at(i).data();
    m = cfg.beta1 * m + (1 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1 - cfg.beta2) * grad.square();
    params.at(i).data() +=
        cfg.lr * (m / bc1) / ((v / bc2).sqrt() + cfg.eps);
  }
}

namespace {

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  return rng;
}

}  // namespace

Checkpoint init_checkpoint(Direction direction, const ModelConfig& config,
                           const Vocab& vocab, const AdamConfig& adam,
                           unsigned long long seed) {
  Rng rng(seed);
  Checkpoint ckpt;
  ckpt.model = init_model(direction, config, rng);
  ckpt.vocab = vocab;
  ckpt.opt_config = adam;
  ckpt.opt_state.m = GradMap(ckpt.model.params);
  ckpt.opt_state.v = GradMap(ckpt.model.params);
  ckpt.rng_state = rng_to_string(rng);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["version"] = ckpt.version;
  header["direction"] = direction_name(ckpt.model.direction);
  header["step"] = ckpt.step;
  header["config"] = {{"vocab_size", ckpt.model.config.vocab_size},
                      {"emb_dim", ckpt.model.config.emb_dim},
                      {"hidden_dim", ckpt.model.config.hidden_dim},
                      {"attn_dim", ckpt.model.config.attn_dim}};
  std::vector<std::string> vocab_tokens;
  for (int i = 0; i < ckpt.vocab.size(); ++i)
    vocab_tokens.push_back(ckpt.vocab.token(i));
  header["vocab"] = vocab_tokens;
  header["opt"] = {{"lr", ckpt.opt_config.lr},
                   {"beta1", ckpt.opt_config.beta1},
                   {"beta2", ckpt.opt_config.beta2},
                   {"eps", ckpt.opt_config.eps},
                   {"t", ckpt.opt_state.t}};
  header["rng"] = ckpt.rng_state;

  nlohmann::json blocks = nlohmann::json::array();
  const ParamStore& p = ckpt.model.params;
  for (const char* kind : {"param", "adam_m", "adam_v"}) {
    for (int i = 0; i < p.count(); ++i) {
      blocks.push_back({{"kind", kind},
                        {"name", p.name(i)},
                        {"shape", p.at(i).shape()}});
    }
  }
  header["blocks"] = blocks;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write("BIAGREE1", 8);
  std::string htext = header.dump();
  uint32_t hlen = static_cast<uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), htext.size());
  auto write_block = [&](const Array& a) {
    out.write(reinterpret_cast<const char*>(a.data().data()),
              static_cast<std::streamsize>(a.size() * sizeof(double)));
  };
  for (int i = 0; i < p.count(); ++i) write_block(p.at(i));
  for (int i = 0; i < p.count(); ++i) write_block(ckpt.opt_state.m.at(i));
  for (int i = 0; i < p.count(); ++i) write_block(ckpt.opt_state.v.at(i));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "BIAGREE1")
    throw std::runtime_error("bad checkpoint magic in " + path);
  uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw std::runtime_error("truncated checkpoint header in " + path);
  nlohmann::json header = nlohmann::json::parse(htext);

  Checkpoint ckpt;
  ckpt.version = header.at("version").get<int>();
  ckpt.step = header.at("step").get<long>();
  ckpt.model.direction =
      direction_from_name(header.at("direction").get<std::string>());
  const auto& c = header.at("config");
  ckpt.model.config = {c.at("vocab_size").get<int>(),
                       c.at("emb_dim").get<int>(),
                       c.at("hidden_dim").get<int>(),
                       c.at("attn_dim").get<int>()};
  auto vocab_tokens = header.at("vocab").get<std::vector<std::string>>();
  for (size_t i = Vocab::kNumReserved; i < vocab_tokens.size(); ++i)
    ckpt.vocab.add(vocab_tokens[i]);
  const auto& o = header.at("opt");
  ckpt.opt_config = {o.at("lr").get<double>(), o.at("beta1").get<double>(),
                     o.at("beta2").get<double>(), o.at("eps").get<double>()};
  ckpt.opt_state.t = o.at("t").get<long>();
  ckpt.rng_state = header.at("rng").get<std::string>();

  // materialize blocks in header-declared order
  std::vector<std::pair<std::string, Array>> loaded;
  for (const auto& b : header.at("blocks")) {
    auto shape = b.at("shape").get<std::vector<int>>();
    Array a = Array::zeros(shape);
    in.read(reinterpret_cast<char*>(a.data().data()),
            static_cast<std::streamsize>(a.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint data in " + path);
    loaded.emplace_back(b.at("kind").get<std::string>() + ":" +
                            b.at("name").get<std::string>(),
                        std::move(a));
  }
  size_t idx = 0;
  auto take = [&](const std::string& kind, const std::string& name) {
    if (idx >= loaded.size() || loaded[idx].first != kind + ":" + name)
      throw std::runtime_error("checkpoint block order mismatch in " + path);
    return std::move(loaded[idx++].second);
  };
  std::vector<std::string> names;
  for (const auto& b : header.at("blocks"))
    if (b.at("kind") == "param") names.push_back(b.at("name"));
  for (const auto& n : names) ckpt.model.params.add(n, take("param", n));
  ckpt.opt_state.m = GradMap(ckpt.model.params);
  ckpt.opt_state.v = GradMap(ckpt.model.params);
  for (size_t i = 0; i < names.size(); ++i)
    ckpt.opt_state.m.at(static_cast<int>(i)) = take("adam_m", names[i]);
  for (size_t i = 0; i < names.size(); ++i)
    ckpt.opt_state.v.at(static_cast<int>(i)) = take("adam_v", names[i]);
  return ckpt;
}

void train_phase(Checkpoint& ckpt, const Checkpoint* helper,
                 const std::vector<SentencePair>& pairs,
                 const RegularizerConfig& reg, int steps, int batch_size,
                 TrainLog& log, int log_every) {
  if (pairs.empty()) throw std::invalid_argument("train_phase: empty corpus");
  Rng rng = rng_from_string(ckpt.rng_state);
  bool use_helper = helper != nullptr && reg.lambda != 0.0;

  for (int step = 0; step < steps; ++step) {
    std::vector<SentencePair> batch;
    for (int i = 0; i < batch_size; ++i)
      batch.push_back(
          pairs[static_cast<size_t>(uniform01(rng) * pairs.size())]);

    GradientEstimate est =
        use_helper ? rt_grad(ckpt.model, helper->model, batch, reg, rng)
                   : mle_grad(ckpt.model, batch);
    if (!std::isfinite(est.loglik) || !est.total.all_finite())
      throw std::runtime_error("non-finite loss at step " +
                               std::to_string(ckpt.step) + " (phase step " +
                               std::to_string(step) + ")");
    adam_step(ckpt.model.params, ckpt.opt_state, ckpt.opt_config, est.total);
    ++ckpt.step;

    if (log_every > 0 && (step % log_every == 0 || step + 1 == steps)) {
      TrainLog::Record rec{{"event", "step"},
                           {"step", std::to_string(ckpt.step)},
                           {"loglik", format_double(est.loglik)},
                           {"kl1_norm",
                            format_double(est.kl_helper_to_self.max_abs())},
                           {"kl2_norm",
                            format_double(est.kl_self_to_helper.max_abs())}};
      if (use_helper) {
        rec.emplace_back("pseudo_generated",
                         std::to_string(est.pseudo_generated));
        rec.emplace_back("pseudo_kept", std::to_string(est.pseudo_kept));
        double keep_rate =
            est.pseudo_generated > 0
                ? static_cast<double>(est.pseudo_kept) / est.pseudo_generated
                : 0.0;
        rec.emplace_back("keep_rate", format_double(keep_rate));
      }
      log.append(rec);
    }
  }
  ckpt.rng_state = rng_to_string(rng);
}

double dev_bleu(const Checkpoint& ckpt, const std::vector<SentencePair>& dev,
                const DecodeConfig& decode_cfg) {
  std::vector<TokenSequence> hyps, refs;
  for (const SentencePair& p : dev) {
    Hypothesis h = beam_search(ckpt.model, p.x, decode_cfg).hyps.at(0);
    hyps.push_back(natural_order(ckpt.model, h).tokens);
    refs.push_back(p.y);
  }
  return corpus_bleu(hyps, refs).value;
}

Checkpoint pretrain_mle(Direction direction, const ModelConfig& config,
                        const Corpus& corpus, const TrainConfig& tc,
                        TrainLog& log) {
  Checkpoint ckpt = init_checkpoint(direction, config, corpus.vocab, tc.adam,
                                    tc.seed);
  RegularizerConfig off;
  off.lambda = 0.0;
  train_phase(ckpt, nullptr, corpus.train, off, tc.steps, tc.batch_size, log,
              tc.log_every);
  log.append({{"event", "pretrain_done"},
              {"direction", direction_name(direction)},
              {"dev_bleu",
               format_double(dev_bleu(ckpt, corpus.dev, tc.dev_decode))}});
  return ckpt;
}

Checkpoint train_direction_with_helper(const Checkpoint& self_ckpt,
                                       const Checkpoint& helper_ckpt,
                                       const Corpus& corpus,
                                       const RegularizerConfig& reg,
                                       const TrainConfig& tc, TrainLog& log) {
  if (self_ckpt.model.direction == helper_ckpt.model.direction)
    throw std::invalid_argument("helper direction must be opposite");
  Checkpoint ckpt = self_ckpt;
  train_phase(ckpt, &helper_ckpt, corpus.train, reg, tc.steps, tc.batch_size,
              log, tc.log_every);
  return ckpt;
}

namespace {

double oracle_probe_kl(const Checkpoint& l2r, const Checkpoint& r2l,
                       const Corpus& corpus, const JointTrainConfig& jc) {
  EnumeratedSpace space =
      enumerate_space(corpus.vocab, jc.kl_probe_max_len);
  int n = std::min<int>(jc.kl_probe_sources,
                        static_cast<int>(corpus.dev.size()));
  double total = 0;
  for (int i = 0; i < n; ++i) {
    ExactDistribution p = exact_distribution(l2r.model, corpus.dev[i].x, space);
    ExactDistribution q = exact_distribution(r2l.model, corpus.dev[i].x, space);
    total += exact_kl(p, q) + exact_kl(q, p);
  }
  return n > 0 ? total / n : 0.0;
}

}  // namespace

JointResult joint_train(Checkpoint l2r, Checkpoint r2l, const Corpus& corpus,
                        const JointTrainConfig& jc, const RegularizerConfig& reg,
                        const TrainConfig& tc) {
  JointResult res;
  double bleu_l2r = dev_bleu(l2r, corpus.dev, tc.dev_decode);
  double bleu_r2l = dev_bleu(r2l, corpus.dev, tc.dev_decode);
  auto log_iteration = [&](int iter) {
    TrainLog::Record rec{{"event", "iteration"},
                         {"iter", std::to_string(iter)},
                         {"dev_bleu_l2r", format_double(bleu_l2r)},
                         {"dev_bleu_r2l", format_double(bleu_r2l)}};
    if (jc.kl_probe_sources > 0)
      rec.emplace_back("oracle_sym_kl",
                       format_double(oracle_probe_kl(l2r, r2l, corpus, jc)));
    res.log.append(rec);
  };
  log_iteration(0);

  for (int iter = 1; iter <= jc.max_iterations; ++iter) {
    Checkpoint helper_r2l = r2l;  // iteration-start helpers, frozen
    Checkpoint helper_l2r = l2r;
    train_phase(l2r, &helper_r2l, corpus.train, reg, jc.steps_per_phase,
                tc.batch_size, res.log, tc.log_every);
    train_phase(r2l, &helper_l2r, corpus.train, reg, jc.steps_per_phase,
                tc.batch_size, res.log, tc.log_every);
    double new_l2r = dev_bleu(l2r, corpus.dev, tc.dev_decode);
    double new_r2l = dev_bleu(r2l, corpus.dev, tc.dev_decode);
    bool improved = new_l2r > bleu_l2r || new_r2l > bleu_r2l;
    bleu_l2r = new_l2r;
    bleu_r2l = new_r2l;
    log_iteration(iter);
    if (!improved) break;
  }
  res.l2r = std::move(l2r);
  res.r2l = std::move(r2l);
  return res;
}

std::vector<SentencePair> back_translate_augment(
    const Checkpoint& target_to_source,
    const std::vector<TokenSequence>& monolingual_targets,
    std::vector<SentencePair> corpus, const DecodeConfig& decode_cfg) {
  for (const TokenSequence& y : monolingual_targets) {
    Hypothesis h =
        beam_search(target_to_source.model, y, decode_cfg).hyps.at(0);
    SentencePair p;
    p.x = natural_order(target_to_source.model, h).tokens;
    p.y = y;
    p.provenance = Provenance::kSyntheticBt;
    corpus.push_back(std::move(p));
  }
  return corpus;
}

}  // namespace biagree
