#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biagree/trainlog.hpp"
#include "biagree/vocab.hpp"

namespace biagree {

constexpr int kBleuMaxOrder = 4;

struct BleuScore {
  double value = 0.0;  // in [0,1]; reports display x100
  double precisions[kBleuMaxOrder] = {0, 0, 0, 0};
  bool order_included[kBleuMaxOrder] = {false, false, false, false};
  double brevity_penalty = 1.0;
  long candidate_len = 0;
  long reference_len = 0;
};

// Standard BLEU-4: clipped modified n-gram precisions aggregated over the
// corpus, BP = min(1, exp(1 - r/c)). Orders with zero candidate n-grams are
// excluded from the geometric mean. smooth adds one to numerator and
// denominator of orders >= 2 (order 1 stays unsmoothed).
BleuScore corpus_bleu(const std::vector<TokenSequence>& hypotheses,
                      const std::vector<TokenSequence>& references,
                      bool smooth = false);

BleuScore sentence_bleu(const TokenSequence& hypothesis,
                        const TokenSequence& reference, bool smooth = true);

struct LengthBucketReport {
  std::vector<int> edges;  // bucket i covers [edges[i], edges[i+1])
  std::vector<std::string> systems;
  std::vector<std::vector<std::optional<BleuScore>>> bleu;  // [system][bucket]
  std::vector<long> counts;  // per bucket, over sources
};

// Per-bucket corpus BLEU keyed on source length. edges must be increasing and
// start at 0; a final implicit bucket extends to infinity.
LengthBucketReport bucket_report(
    const std::vector<TokenSequence>& sources,
    const std::vector<TokenSequence>& references,
    const std::vector<std::pair<std::string, std::vector<TokenSequence>>>&
        systems,
    const std::vector<int>& edges);

std::string render_bucket_report(const LengthBucketReport& report);

// Per-iteration dev BLEU table from a train log.
std::string iteration_log_report(const TrainLog& log);

// Whitespace tokenization for text-mode scoring; optional lowercasing.
std::vector<std::string> split_tokens(const std::string& line,
                                      bool lowercase = false);

}  // namespace biagree
