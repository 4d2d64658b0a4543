#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "biagree/bleu.hpp"
#include "biagree/config.hpp"
#include "biagree/oracle.hpp"
#include "biagree/train.hpp"

namespace fs = std::filesystem;
using namespace biagree;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExperimentConfig build_config(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
  try {
    ExperimentConfig cfg = config_path.empty()
                               ? ExperimentConfig()
                               : ExperimentConfig::load(config_path);
    for (const std::string& kv : overrides) cfg.apply_override(kv);
    return cfg;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

fs::path run_dir(const ExperimentConfig& cfg) {
  fs::path dir = fs::path(cfg.get("out_dir")) / cfg.run_name();
  fs::create_directories(dir);
  std::ofstream out(dir / "config.resolved");
  out << cfg.resolved();
  return dir;
}

// One writer per run directory.
class LockFile {
 public:
  explicit LockFile(const fs::path& dir) : path_(dir / "lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw std::runtime_error("run directory is locked (" + path_.string() +
                               " exists); remove it if no other run is active");
    std::fclose(f);
  }
  ~LockFile() { std::error_code ec; fs::remove(path_, ec); }

 private:
  fs::path path_;
};

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p))
    throw std::runtime_error(p.string() +
                             " already exists; pass --force to overwrite");
}

TaskSpec task_spec(const ExperimentConfig& cfg) {
  TaskSpec spec;
  spec.kind = task_kind_from_name(cfg.get("task.kind"));
  spec.vocab_size = cfg.get_int("task.vocab_size");
  spec.min_len = cfg.get_int("task.min_len");
  spec.max_len = cfg.get_int("task.max_len");
  spec.noise_rate = cfg.get_double("task.noise_rate");
  spec.seed = cfg.get_seed();
  return spec;
}

Corpus make_corpus(const ExperimentConfig& cfg) {
  SplitSizes sizes{cfg.get_int("task.train"), cfg.get_int("task.dev"),
                   cfg.get_int("task.test")};
  return gen_synthetic(task_spec(cfg), sizes);
}

ModelConfig model_config(const ExperimentConfig& cfg, const Vocab& vocab) {
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.emb_dim = cfg.get_int("model.emb_dim");
  mc.hidden_dim = cfg.get_int("model.hidden_dim");
  mc.attn_dim = cfg.get_int("model.attn_dim");
  return mc;
}

AdamConfig adam_config(const ExperimentConfig& cfg) {
  return {cfg.get_double("opt.lr"), cfg.get_double("opt.beta1"),
          cfg.get_double("opt.beta2"), cfg.get_double("opt.eps")};
}

DecodeConfig decode_config(const ExperimentConfig& cfg) {
  DecodeConfig dc;
  const std::string& mode = cfg.get("decode.mode");
  if (mode == "greedy")
    dc.mode = DecodeMode::kGreedy;
  else if (mode == "beam")
    dc.mode = DecodeMode::kBeam;
  else if (mode == "sample")
    dc.mode = DecodeMode::kSample;
  else
    throw UsageError("unknown decode.mode: " + mode);
  dc.beam_size = cfg.get_int("decode.beam_size");
  dc.length_penalty_alpha = cfg.get_double("decode.length_penalty_alpha");
  dc.max_len = cfg.get_int("decode.max_len");
  return dc;
}

TrainConfig train_config(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.steps = cfg.get_int("train.steps");
  tc.batch_size = cfg.get_int("train.batch_size");
  tc.adam = adam_config(cfg);
  tc.seed = cfg.get_seed();
  tc.log_every = cfg.get_int("train.log_every");
  return tc;
}

RegularizerConfig reg_config(const ExperimentConfig& cfg) {
  RegularizerConfig reg;
  reg.lambda = cfg.get_double("reg.lambda");
  reg.m = cfg.get_int("reg.m");
  reg.candidate_beam = cfg.get_int("reg.candidate_beam");
  reg.filter_threshold = cfg.get_double("reg.filter_threshold");
  reg.weight_clip = cfg.get_double("reg.weight_clip");
  reg.sampler = sampler_from_name(cfg.get("reg.sampler"));
  reg.max_len = cfg.get_int("reg.max_len");
  reg.smooth_filter_bleu = cfg.get_bool("reg.smooth_filter_bleu");
  return reg;
}

void append_log(const TrainLog& log, const fs::path& path) {
  std::ofstream out(path, std::ios::app);
  out << log.serialize();
}

std::vector<TokenSequence> read_token_lines(const std::string& path,
                                            const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<TokenSequence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<std::string> toks = split_tokens(line);
    TokenSequence ids;
    for (const std::string& t : toks) {
      int id = vocab.id(t);
      if (id < 0)
        throw std::runtime_error("unknown token '" + t + "' on line " +
                                 std::to_string(lineno) + " of " + path);
      ids.push_back(id);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<TokenSequence> source_lines(const ExperimentConfig& cfg,
                                        const Vocab& vocab) {
  const std::string& input = cfg.get("paths.input");
  if (!input.empty()) return read_token_lines(input, vocab);
  Corpus corpus = make_corpus(cfg);
  if (!(corpus.vocab == vocab))
    throw std::runtime_error(
        "checkpoint vocabulary does not match the configured task; pass "
        "paths.input or fix the task settings");
  std::vector<TokenSequence> out;
  for (const SentencePair& p : corpus.test) out.push_back(p.x);
  return out;
}

std::string render_tokens(const Vocab& vocab, const TokenSequence& ids) {
  std::ostringstream os;
  std::vector<std::string> toks = vocab.decode(ids);
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) os << " ";
    os << toks[i];
  }
  return os.str();
}

Checkpoint load_required_ckpt(const ExperimentConfig& cfg,
                              const std::string& key) {
  const std::string& path = cfg.get(key);
  if (path.empty()) throw UsageError("set " + key + " for this subcommand");
  return load_checkpoint(path);
}

std::vector<int> bucket_edges(const ExperimentConfig& cfg) {
  std::vector<int> edges;
  std::istringstream is(cfg.get("eval.bucket_edges"));
  std::string part;
  while (std::getline(is, part, ',')) edges.push_back(std::stoi(part));
  return edges;
}

int cmd_gen_data(const ExperimentConfig& cfg) {
  fs::path dir = run_dir(cfg);
  LockFile lock(dir);
  Corpus corpus = make_corpus(cfg);
  fs::path data = dir / "data";
  fs::create_directories(data);
  corpus.vocab.save((data / "vocab.txt").string());
  save_parallel(corpus.train, (data / "train.src").string(),
                (data / "train.tgt").string(), corpus.vocab);
  save_parallel(corpus.dev, (data / "dev.src").string(),
                (data / "dev.tgt").string(), corpus.vocab);
  save_parallel(corpus.test, (data / "test.src").string(),
                (data / "test.tgt").string(), corpus.vocab);
  std::cout << data.string() << "\n";
  return 0;
}

int cmd_train_mle(const ExperimentConfig& cfg, bool force) {
  fs::path dir = run_dir(cfg);
  LockFile lock(dir);
  Corpus corpus = make_corpus(cfg);
  Direction direction = direction_from_name(cfg.get("train.direction"));
  fs::path ckpt_path = dir / (std::string(direction_name(direction)) + ".ckpt");
  refuse_overwrite(ckpt_path, force);

  TrainConfig tc = train_config(cfg);
  TrainLog log;
  Checkpoint ckpt = pretrain_mle(direction, model_config(cfg, corpus.vocab),
                                 corpus, tc, log);
  save_checkpoint(ckpt, ckpt_path.string());
  append_log(log, dir / "train.log");

  auto done = log.events("pretrain_done");
  std::cout << "checkpoint\t" << ckpt_path.string() << "\n"
            << "dev_bleu\t" << TrainLog::get(done.back(), "dev_bleu") << "\n";
  return 0;
}

int cmd_train_rt(const ExperimentConfig& cfg, bool force) {
  fs::path dir = run_dir(cfg);
  LockFile lock(dir);
  Corpus corpus = make_corpus(cfg);
  fs::path l2r_path = dir / "l2r.ckpt";
  fs::path r2l_path = dir / "r2l.ckpt";
  refuse_overwrite(l2r_path, force);
  refuse_overwrite(r2l_path, force);

  TrainConfig tc = train_config(cfg);
  TrainLog log;
  Checkpoint l2r, r2l;
  if (!cfg.get("paths.l2r_ckpt").empty() ||
      !cfg.get("paths.r2l_ckpt").empty()) {
    l2r = load_required_ckpt(cfg, "paths.l2r_ckpt");
    r2l = load_required_ckpt(cfg, "paths.r2l_ckpt");
  } else {
    ModelConfig mc = model_config(cfg, corpus.vocab);
    l2r = pretrain_mle(Direction::kL2R, mc, corpus, tc, log);
    TrainConfig tc_r2l = tc;
    tc_r2l.seed = tc.seed + 1;
    r2l = pretrain_mle(Direction::kR2L, mc, corpus, tc_r2l, log);
  }

  JointTrainConfig jc;
  jc.max_iterations = cfg.get_int("joint.max_iterations");
  jc.steps_per_phase = cfg.get_int("joint.steps_per_phase");
  jc.kl_probe_sources = cfg.get_int("joint.kl_probe_sources");
  jc.kl_probe_max_len = cfg.get_int("joint.kl_probe_max_len");

  JointResult res = joint_train(std::move(l2r), std::move(r2l), corpus, jc,
                                reg_config(cfg), tc);
  for (const auto& rec : res.log.records()) log.append(rec);
  save_checkpoint(res.l2r, l2r_path.string());
  save_checkpoint(res.r2l, r2l_path.string());
  append_log(log, dir / "train.log");

  std::cout << iteration_log_report(res.log);
  return 0;
}

int cmd_translate(const ExperimentConfig& cfg) {
  Checkpoint ckpt = load_required_ckpt(cfg, "paths.ckpt");
  DecodeConfig dc = decode_config(cfg);
  Rng rng(cfg.get_seed());
  for (const TokenSequence& x : source_lines(cfg, ckpt.vocab)) {
    Hypothesis h;
    switch (dc.mode) {
      case DecodeMode::kGreedy:
        h = greedy_decode(ckpt.model, x, dc);
        break;
      case DecodeMode::kBeam:
        h = beam_search(ckpt.model, x, dc).hyps.at(0);
        break;
      case DecodeMode::kSample:
        h = ancestral_sample(ckpt.model, x, dc, rng);
        break;
    }
    std::cout << render_tokens(ckpt.vocab,
                               natural_order(ckpt.model, h).tokens)
              << "\n";
  }
  return 0;
}

int cmd_rerank_js(const ExperimentConfig& cfg) {
  Checkpoint l2r = load_required_ckpt(cfg, "paths.l2r_ckpt");
  Checkpoint r2l = load_required_ckpt(cfg, "paths.r2l_ckpt");
  if (!(l2r.vocab == r2l.vocab))
    throw std::runtime_error("checkpoints use different vocabularies");
  DecodeConfig dc = decode_config(cfg);
  for (const TokenSequence& x : source_lines(cfg, l2r.vocab)) {
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& h : beam_search(l2r.model, x, dc).hyps)
      candidates.push_back(natural_order(l2r.model, h));
    for (const Hypothesis& h : beam_search(r2l.model, x, dc).hyps)
      candidates.push_back(natural_order(r2l.model, h));
    Hypothesis best = rerank_js(l2r.model, r2l.model, x, candidates);
    std::cout << render_tokens(l2r.vocab, best.tokens) << "\n";
  }
  return 0;
}

// Text-mode scoring: token strings mapped through a throwaway dictionary.
std::vector<TokenSequence> intern_lines(const std::string& path, bool lowercase,
                                        std::map<std::string, int>& dict) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<TokenSequence> out;
  std::string line;
  while (std::getline(in, line)) {
    TokenSequence ids;
    for (const std::string& t : split_tokens(line, lowercase)) {
      auto [it, ignored] = dict.emplace(t, static_cast<int>(dict.size()));
      ids.push_back(it->second);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

int cmd_bleu(const std::string& hyp_path, const std::string& ref_path,
             bool sentence, bool smooth, bool lowercase) {
  std::map<std::string, int> dict;
  std::vector<TokenSequence> hyps = intern_lines(hyp_path, lowercase, dict);
  std::vector<TokenSequence> refs = intern_lines(ref_path, lowercase, dict);
  if (sentence) {
    if (hyps.size() != refs.size())
      throw std::runtime_error("line count mismatch");
    for (size_t i = 0; i < hyps.size(); ++i)
      std::cout << format_double(100 *
                                 sentence_bleu(hyps[i], refs[i], smooth).value)
                << "\n";
    return 0;
  }
  BleuScore s = corpus_bleu(hyps, refs, smooth);
  std::cout << "bleu\t" << format_double(100 * s.value) << "\n";
  for (int n = 0; n < kBleuMaxOrder; ++n)
    std::cout << "p" << n + 1 << "\t"
              << (s.order_included[n] ? format_double(s.precisions[n]) : "n/a")
              << "\n";
  std::cout << "bp\t" << format_double(s.brevity_penalty) << "\n"
            << "candidate_len\t" << s.candidate_len << "\n"
            << "reference_len\t" << s.reference_len << "\n";
  return 0;
}

int cmd_bucket_report(const ExperimentConfig& cfg) {
  Corpus corpus = make_corpus(cfg);
  DecodeConfig dc = decode_config(cfg);
  std::vector<std::pair<std::string, std::vector<TokenSequence>>> systems;

  Checkpoint l2r, r2l;
  bool have_l2r = !cfg.get("paths.l2r_ckpt").empty();
  bool have_r2l = !cfg.get("paths.r2l_ckpt").empty();
  if (!have_l2r && !have_r2l)
    throw UsageError("set paths.l2r_ckpt and/or paths.r2l_ckpt");
  auto decode_system = [&](const Checkpoint& ckpt) {
    std::vector<TokenSequence> out;
    for (const SentencePair& p : corpus.test) {
      Hypothesis h = beam_search(ckpt.model, p.x, dc).hyps.at(0);
      out.push_back(natural_order(ckpt.model, h).tokens);
    }
    return out;
  };
  if (have_l2r) {
    l2r = load_required_ckpt(cfg, "paths.l2r_ckpt");
    systems.emplace_back("l2r", decode_system(l2r));
  }
  if (have_r2l) {
    r2l = load_required_ckpt(cfg, "paths.r2l_ckpt");
    systems.emplace_back("r2l", decode_system(r2l));
  }
  if (have_l2r && have_r2l) {
    std::vector<TokenSequence> reranked;
    for (const SentencePair& p : corpus.test) {
      std::vector<Hypothesis> candidates;
      for (const Hypothesis& h : beam_search(l2r.model, p.x, dc).hyps)
        candidates.push_back(natural_order(l2r.model, h));
      for (const Hypothesis& h : beam_search(r2l.model, p.x, dc).hyps)
        candidates.push_back(natural_order(r2l.model, h));
      reranked.push_back(
          rerank_js(l2r.model, r2l.model, p.x, candidates).tokens);
    }
    systems.emplace_back("rerank-js", reranked);
  }

  std::vector<TokenSequence> sources, refs;
  for (const SentencePair& p : corpus.test) {
    sources.push_back(p.x);
    refs.push_back(p.y);
  }
  std::cout << render_bucket_report(
      bucket_report(sources, refs, systems, bucket_edges(cfg)));
  return 0;
}

int cmd_oracle_check(const ExperimentConfig& cfg) {
  Vocab vocab;
  int v = cfg.get_int("oracle.vocab_size");
  for (int i = 0; i < v; ++i) vocab.add("w" + std::to_string(i));

  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.emb_dim = 2;
  mc.hidden_dim = 3;
  mc.attn_dim = 3;
  Rng rng(cfg.get_seed());
  auto random_model = [&](Direction dir) {
    DirectionalModel m = init_model(dir, mc, rng);
    for (int i = 0; i < m.params.count(); ++i) {
      Array& a = m.params.at(i);
      for (int j = 0; j < a.size(); ++j) a[j] = 2 * uniform01(rng) - 1;
    }
    return m;
  };
  DirectionalModel self_model = random_model(Direction::kL2R);
  DirectionalModel helper = random_model(Direction::kR2L);

  EnumeratedSpace space = enumerate_space(vocab, cfg.get_int("oracle.max_len"));
  TokenSequence x{Vocab::kNumReserved};
  if (v > 1) x.push_back(Vocab::kNumReserved + 1);
  BiasReport report = estimator_bias_report(
      self_model, helper, x, space, cfg.get_int("oracle.candidate_beam"),
      cfg.get_int("oracle.resamples"), rng);
  std::cout << render_bias_report(report);
  return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
  fs::path dir = fs::path(cfg.get("out_dir")) / cfg.run_name();
  fs::path log_path = dir / "train.log";
  if (!fs::exists(log_path))
    throw std::runtime_error("no train log at " + log_path.string());
  TrainLog log = TrainLog::load(log_path.string());
  try {
    std::cout << iteration_log_report(log);
  } catch (const std::invalid_argument&) {
    auto done = log.events("pretrain_done");
    if (done.empty()) throw std::runtime_error("train log has no results yet");
    for (const auto& rec : done)
      std::cout << TrainLog::get(rec, "direction") << "\tdev_bleu\t"
                << TrainLog::get(rec, "dev_bleu") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional-agreement sequence training toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  bool force = false;
  app.add_option("-c,--config", config_path, "key = value config file");
  app.add_option("--set", overrides, "override, key=value; repeatable");
  app.add_flag("--force", force, "overwrite existing artifacts");

  auto* gen_data = app.add_subcommand("gen-data", "write the synthetic corpus");
  auto* train_mle = app.add_subcommand("train-mle", "likelihood pretraining");
  auto* train_rt =
      app.add_subcommand("train-rt", "joint bidirectional training");
  auto* translate = app.add_subcommand("translate", "decode source lines");
  auto* rerank = app.add_subcommand("rerank-js",
                                    "joint-score reranking of n-best lists");
  auto* bleu = app.add_subcommand("bleu", "score hypothesis against reference");
  auto* bucket =
      app.add_subcommand("bucket-report", "per-source-length BLEU table");
  auto* oracle =
      app.add_subcommand("oracle-check", "gradient-estimator bias report");
  auto* report = app.add_subcommand("report", "summarize a run's train log");

  std::string hyp_path, ref_path;
  bool sentence = false, smooth = false, lowercase = false;
  bleu->add_option("--hyp", hyp_path, "hypothesis file")->required();
  bleu->add_option("--ref", ref_path, "reference file")->required();
  bleu->add_flag("--sentence", sentence, "per-line smoothed scores");
  bleu->add_flag("--smooth", smooth, "add-one smoothing for orders >= 2");
  bleu->add_flag("--lowercase", lowercase, "case-insensitive scoring");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ExperimentConfig cfg = build_config(config_path, overrides);
    if (gen_data->parsed()) return cmd_gen_data(cfg);
    if (train_mle->parsed()) return cmd_train_mle(cfg, force);
    if (train_rt->parsed()) return cmd_train_rt(cfg, force);
    if (translate->parsed()) return cmd_translate(cfg);
    if (rerank->parsed()) return cmd_rerank_js(cfg);
    if (bleu->parsed())
      return cmd_bleu(hyp_path, ref_path, sentence, smooth, lowercase);
    if (bucket->parsed()) return cmd_bucket_report(cfg);
    if (oracle->parsed()) return cmd_oracle_check(cfg);
    if (report->parsed()) return cmd_report(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
