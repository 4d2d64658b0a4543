#include "biagree/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace biagree {

const std::vector<std::pair<std::string, std::string>>&
ExperimentConfig::defaults() {
  static const std::vector<std::pair<std::string, std::string>> kDefaults = {
      {"seed", "1"},
      {"out_dir", "runs"},
      {"task.kind", "prefix-suffix-agreement"},
      {"task.vocab_size", "12"},
      {"task.min_len", "4"},
      {"task.max_len", "20"},
      {"task.noise_rate", "0.1"},
      {"task.train", "400"},
      {"task.dev", "50"},
      {"task.test", "50"},
      {"model.emb_dim", "32"},
      {"model.hidden_dim", "64"},
      {"model.attn_dim", "64"},
      {"opt.lr", "0.001"},
      {"opt.beta1", "0.9"},
      {"opt.beta2", "0.999"},
      {"opt.eps", "1e-8"},
      {"train.direction", "l2r"},
      {"train.steps", "2000"},
      {"train.batch_size", "16"},
      {"train.log_every", "100"},
      {"reg.lambda", "1"},
      {"reg.m", "1"},
      {"reg.candidate_beam", "4"},
      {"reg.filter_threshold", "0.30"},
      {"reg.weight_clip", "5"},
      {"reg.sampler", "beam-best"},
      {"reg.smooth_filter_bleu", "true"},
      {"reg.max_len", "0"},
      {"joint.max_iterations", "3"},
      {"joint.steps_per_phase", "2000"},
      {"joint.kl_probe_sources", "0"},
      {"joint.kl_probe_max_len", "3"},
      {"decode.mode", "beam"},
      {"decode.beam_size", "8"},
      {"decode.length_penalty_alpha", "1.0"},
      {"decode.max_len", "0"},
      {"eval.bucket_edges", "0,8,12,16"},
      {"oracle.vocab_size", "3"},
      {"oracle.max_len", "3"},
      {"oracle.resamples", "2000"},
      {"oracle.candidate_beam", "4"},
      {"paths.l2r_ckpt", ""},
      {"paths.r2l_ckpt", ""},
      {"paths.ckpt", ""},
      {"paths.input", ""},
  };
  return kDefaults;
}

ExperimentConfig::ExperimentConfig() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not key = value");
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::apply_override(const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override is not key=value: " + kv);
  set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!values_.count(key))
    throw std::invalid_argument("unknown config key: " + key);
  values_[key] = value;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("unknown config key: " + key);
  return it->second;
}

int ExperimentConfig::get_int(const std::string& key) const {
  return std::stoi(get(key));
}
long ExperimentConfig::get_long(const std::string& key) const {
  return std::stol(get(key));
}
double ExperimentConfig::get_double(const std::string& key) const {
  return std::stod(get(key));
}
bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key " + key + " is not a bool: " + v);
}
unsigned long long ExperimentConfig::get_seed() const {
  return std::stoull(get("seed"));
}

std::string ExperimentConfig::resolved() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
  return os.str();
}

std::string ExperimentConfig::hash() const {
  unsigned long long h = 14695981039346656037ULL;
  for (const auto& [k, v] : values_) {
    if (k == "seed") continue;
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << (h & 0xffffffffULL);
  std::string s = os.str();
  while (s.size() < 8) s = "0" + s;
  return s;
}

std::string ExperimentConfig::run_name() const {
  return hash() + "-s" + get("seed");
}

}  // namespace biagree
