#pragma once

#include <string>
#include <vector>

#include "biagree/model.hpp"
#include "biagree/vocab.hpp"

namespace biagree {

enum class TaskKind { kCopy, kReverse, kPrefixSuffixAgreement, kNoisyLexicon };

TaskKind task_kind_from_name(const std::string& name);
const char* task_kind_name(TaskKind k);

struct TaskSpec {
  TaskKind kind = TaskKind::kCopy;
  int vocab_size = 10;   // non-reserved tokens
  int min_len = 4;
  int max_len = 20;
  double noise_rate = 0.0;
  unsigned long long seed = 0;
};

enum class Provenance { kReal, kSyntheticBt, kPseudo };

struct SentencePair {
  TokenSequence x;
  TokenSequence y;
  Provenance provenance = Provenance::kReal;
  bool operator==(const SentencePair& o) const {
    return x == o.x && y == o.y;
  }
};

struct Corpus {
  Vocab vocab;
  std::vector<SentencePair> train;
  std::vector<SentencePair> dev;
  std::vector<SentencePair> test;
};

struct SplitSizes {
  int train = 0;
  int dev = 0;
  int test = 0;
};

// Deterministic synthetic corpus; dev/test are disjoint from train at the
// sentence-pair level. The prefix-suffix-agreement kind makes the final
// target token a lexicon function of the first source token, so an early
// decoding error corrupts the suffix.
Corpus gen_synthetic(const TaskSpec& spec, const SplitSizes& sizes);

// The token-rewrite lexicon a task spec induces (identity for copy/reverse).
std::vector<int> task_lexicon(const TaskSpec& spec, const Vocab& vocab);

// Parallel text IO: one sentence per line, space-separated tokens, paired
// .src/.tgt files. Unknown tokens are an error naming the line number.
std::vector<SentencePair> load_parallel(const std::string& src_path,
                                        const std::string& tgt_path,
                                        const Vocab& vocab);
void save_parallel(const std::vector<SentencePair>& pairs,
                   const std::string& src_path, const std::string& tgt_path,
                   const Vocab& vocab);

}  // namespace biagree
