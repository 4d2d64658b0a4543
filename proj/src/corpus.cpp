#include "biagree/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace biagree {

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "copy") return TaskKind::kCopy;
  if (name == "reverse") return TaskKind::kReverse;
  if (name == "prefix-suffix-agreement")
    return TaskKind::kPrefixSuffixAgreement;
  if (name == "noisy-lexicon") return TaskKind::kNoisyLexicon;
  throw std::invalid_argument("unknown task kind: " + name);
}

const char* task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::kCopy: return "copy";
    case TaskKind::kReverse: return "reverse";
    case TaskKind::kPrefixSuffixAgreement: return "prefix-suffix-agreement";
    case TaskKind::kNoisyLexicon: return "noisy-lexicon";
  }
  return "?";
}

std::vector<int> task_lexicon(const TaskSpec& spec, const Vocab& vocab) {
  std::vector<int> lex(vocab.size());
  for (int i = 0; i < vocab.size(); ++i) lex[i] = i;
  std::vector<int> regular = vocab.regular_ids();
  Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  // Fisher-Yates over the regular ids
  for (int i = static_cast<int>(regular.size()) - 1; i > 0; --i) {
    int j = static_cast<int>(uniform01(rng) * (i + 1));
    std::swap(regular[i], regular[j]);
  }
  std::vector<int> sorted = vocab.regular_ids();
  for (size_t i = 0; i < sorted.size(); ++i) lex[sorted[i]] = regular[i];
  return lex;
}

namespace {

int rand_regular(const Vocab& v, Rng& rng) {
  return Vocab::kNumReserved +
         static_cast<int>(uniform01(rng) * v.num_regular());
}

SentencePair gen_pair(const TaskSpec& spec, const Vocab& vocab,
                      const std::vector<int>& lexicon, Rng& rng) {
  int len = spec.min_len +
            static_cast<int>(uniform01(rng) * (spec.max_len - spec.min_len + 1));
  SentencePair p;
  p.x.resize(len);
  for (int& t : p.x) t = rand_regular(vocab, rng);
  switch (spec.kind) {
    case TaskKind::kCopy:
      p.y = p.x;
      break;
    case TaskKind::kReverse:
      p.y = reverse_target(p.x);
      break;
    case TaskKind::kPrefixSuffixAgreement:
      p.y = p.x;
      for (int i = 0; i + 1 < len; ++i)
        if (uniform01(rng) < spec.noise_rate) p.y[i] = rand_regular(vocab, rng);
      p.y.back() = lexicon[p.x.front()];
      break;
    case TaskKind::kNoisyLexicon:
      p.y.resize(len);
      for (int i = 0; i < len; ++i)
        p.y[i] = uniform01(rng) < spec.noise_rate ? rand_regular(vocab, rng)
                                                  : lexicon[p.x[i]];
      break;
  }
  return p;
}

}  // namespace

Corpus gen_synthetic(const TaskSpec& spec, const SplitSizes& sizes) {
  if (sizes.train < 0 || sizes.dev < 0 || sizes.test < 0)
    throw std::invalid_argument("gen_synthetic: negative split size");
  if (spec.min_len < 1 || spec.max_len < spec.min_len)
    throw std::invalid_argument("gen_synthetic: bad length range");
  int min_vocab =
      (spec.kind == TaskKind::kPrefixSuffixAgreement ||
       spec.kind == TaskKind::kNoisyLexicon)
          ? 2
          : 1;
  if (spec.vocab_size < min_vocab)
    throw std::invalid_argument("gen_synthetic: vocab too small for task kind");

  Corpus c;
  for (int i = 0; i < spec.vocab_size; ++i)
    c.vocab.add("w" + std::to_string(i));
  std::vector<int> lexicon = task_lexicon(spec, c.vocab);

  Rng rng(spec.seed);
  std::set<std::pair<TokenSequence, TokenSequence>> train_set;
  for (int i = 0; i < sizes.train; ++i) {
    SentencePair p = gen_pair(spec, c.vocab, lexicon, rng);
    train_set.insert({p.x, p.y});
    c.train.push_back(std::move(p));
  }
  auto fill_heldout = [&](std::vector<SentencePair>& split, int n) {
    int attempts = 0;
    while (static_cast<int>(split.size()) < n) {
      if (++attempts > 1000 * (n + 1))
        throw std::runtime_error(
            "gen_synthetic: cannot generate held-out pairs disjoint from "
            "train; enlarge the task");
      SentencePair p = gen_pair(spec, c.vocab, lexicon, rng);
      if (train_set.count({p.x, p.y})) continue;
      split.push_back(std::move(p));
    }
  };
  fill_heldout(c.dev, sizes.dev);
  fill_heldout(c.test, sizes.test);
  return c;
}

std::vector<SentencePair> load_parallel(const std::string& src_path,
                                        const std::string& tgt_path,
                                        const Vocab& vocab) {
  std::ifstream src(src_path), tgt(tgt_path);
  if (!src) throw std::runtime_error("cannot open " + src_path);
  if (!tgt) throw std::runtime_error("cannot open " + tgt_path);
  std::vector<SentencePair> pairs;
  std::string sline, tline;
  int lineno = 0;
  while (true) {
    bool got_s = static_cast<bool>(std::getline(src, sline));
    bool got_t = static_cast<bool>(std::getline(tgt, tline));
    if (!got_s && !got_t) break;
    if (got_s != got_t)
      throw std::runtime_error("line count mismatch between " + src_path +
                               " and " + tgt_path);
    ++lineno;
    SentencePair p;
    auto encode_line = [&](const std::string& line) {
      std::istringstream is(line);
      TokenSequence ids;
      std::string tok;
      while (is >> tok) {
        int id = vocab.id(tok);
        if (id < 0)
          throw std::runtime_error("unknown token '" + tok + "' on line " +
                                   std::to_string(lineno));
        ids.push_back(id);
      }
      return ids;
    };
    p.x = encode_line(sline);
    p.y = encode_line(tline);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_parallel(const std::vector<SentencePair>& pairs,
                   const std::string& src_path, const std::string& tgt_path,
                   const Vocab& vocab) {
  std::ofstream src(src_path), tgt(tgt_path);
  if (!src) throw std::runtime_error("cannot write " + src_path);
  if (!tgt) throw std::runtime_error("cannot write " + tgt_path);
  auto write_line = [&](std::ofstream& out, const TokenSequence& ids) {
    for (size_t i = 0; i < ids.size(); ++i) {
      if (i) out << " ";
      out << vocab.token(ids[i]);
    }
    out << "\n";
  };
  for (const auto& p : pairs) {
    write_line(src, p.x);
    write_line(tgt, p.y);
  }
}

}  // namespace biagree
