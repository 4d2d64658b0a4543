#include "biagree/bleu.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace biagree {

namespace {

using NgramCounts = std::map<TokenSequence, long>;

NgramCounts count_ngrams(const TokenSequence& s, int n) {
  NgramCounts counts;
  for (int i = 0; i + n <= static_cast<int>(s.size()); ++i)
    ++counts[TokenSequence(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace

BleuScore corpus_bleu(const std::vector<TokenSequence>& hypotheses,
                      const std::vector<TokenSequence>& references,
                      bool smooth) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("corpus_bleu: line count mismatch");
  if (hypotheses.empty())
    throw std::invalid_argument("corpus_bleu: empty corpus");

  BleuScore score;
  long matched[kBleuMaxOrder] = {0, 0, 0, 0};
  long total[kBleuMaxOrder] = {0, 0, 0, 0};
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const TokenSequence& hyp = hypotheses[i];
    const TokenSequence& ref = references[i];
    score.candidate_len += static_cast<long>(hyp.size());
    score.reference_len += static_cast<long>(ref.size());
    for (int n = 1; n <= kBleuMaxOrder; ++n) {
      NgramCounts hc = count_ngrams(hyp, n);
      NgramCounts rc = count_ngrams(ref, n);
      for (const auto& [ng, c] : hc) {
        auto it = rc.find(ng);
        matched[n - 1] += std::min(c, it == rc.end() ? 0L : it->second);
        total[n - 1] += c;
      }
    }
  }

  double log_prec_sum = 0.0;
  bool zero_precision = false;
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    if (total[n - 1] <= 0) continue;  // no candidate n-grams: order excluded
    double num = static_cast<double>(matched[n - 1]);
    double den = static_cast<double>(total[n - 1]);
    if (smooth && n >= 2) {
      num += 1;
      den += 1;
    }
    score.order_included[n - 1] = true;
    score.precisions[n - 1] = num / den;
    if (num <= 0)
      zero_precision = true;
    else
      log_prec_sum += std::log(num / den) / kBleuMaxOrder;
  }

  if (score.candidate_len < score.reference_len && score.candidate_len > 0)
    score.brevity_penalty =
        std::exp(1.0 - static_cast<double>(score.reference_len) /
                           static_cast<double>(score.candidate_len));
  if (score.candidate_len == 0 || zero_precision)
    score.value = 0.0;
  else
    score.value = score.brevity_penalty * std::exp(log_prec_sum);
  return score;
}

BleuScore sentence_bleu(const TokenSequence& hypothesis,
                        const TokenSequence& reference, bool smooth) {
  return corpus_bleu({hypothesis}, {reference}, smooth);
}

LengthBucketReport bucket_report(
    const std::vector<TokenSequence>& sources,
    const std::vector<TokenSequence>& references,
    const std::vector<std::pair<std::string, std::vector<TokenSequence>>>&
        systems,
    const std::vector<int>& edges) {
  if (sources.size() != references.size())
    throw std::invalid_argument("bucket_report: source/reference mismatch");
  for (const auto& [name, hyps] : systems)
    if (hyps.size() != sources.size())
      throw std::invalid_argument("bucket_report: system " + name +
                                  " is not aligned with the test set");
  if (edges.empty() || edges.front() != 0 ||
      !std::is_sorted(edges.begin(), edges.end()))
    throw std::invalid_argument("bucket_report: edges must start at 0 and "
                                "increase");

  int nbuckets = static_cast<int>(edges.size());
  auto bucket_of = [&](int len) {
    int b = 0;
    while (b + 1 < nbuckets && len >= edges[b + 1]) ++b;
    return b;
  };

  LengthBucketReport rep;
  rep.edges = edges;
  rep.counts.assign(nbuckets, 0);
  std::vector<std::vector<size_t>> members(nbuckets);
  for (size_t i = 0; i < sources.size(); ++i) {
    int b = bucket_of(static_cast<int>(sources[i].size()));
    ++rep.counts[b];
    members[b].push_back(i);
  }

  for (const auto& [name, hyps] : systems) {
    rep.systems.push_back(name);
    std::vector<std::optional<BleuScore>> row(nbuckets);
    for (int b = 0; b < nbuckets; ++b) {
      if (members[b].empty()) continue;  // BLEU undefined for empty buckets
      std::vector<TokenSequence> h, r;
      for (size_t i : members[b]) {
        h.push_back(hyps[i]);
        r.push_back(references[i]);
      }
      row[b] = corpus_bleu(h, r);
    }
    rep.bleu.push_back(std::move(row));
  }
  return rep;
}

std::string render_bucket_report(const LengthBucketReport& rep) {
  std::ostringstream os;
  os << "bucket\tcount";
  for (const auto& s : rep.systems) os << "\t" << s;
  os << "\n";
  for (size_t b = 0; b < rep.edges.size(); ++b) {
    os << "[" << rep.edges[b] << ",";
    if (b + 1 < rep.edges.size())
      os << rep.edges[b + 1];
    else
      os << "inf";
    os << ")\t" << rep.counts[b];
    for (size_t s = 0; s < rep.systems.size(); ++s) {
      os << "\t";
      if (rep.bleu[s][b])
        os << std::fixed << std::setprecision(2) << 100 * rep.bleu[s][b]->value;
      else
        os << "n/a";
    }
    os << "\n";
  }
  return os.str();
}

std::string iteration_log_report(const TrainLog& log) {
  auto rows = log.events("iteration");
  if (rows.empty())
    throw std::invalid_argument("iteration_log_report: log has no iterations");
  std::ostringstream os;
  os << std::left << std::setw(12) << "Iteration" << std::setw(14)
     << "dev-BLEU-L2R" << std::setw(14) << "dev-BLEU-R2L" << "\n";
  for (const auto& rec : rows) {
    os << std::left << std::setw(12) << TrainLog::get(rec, "iter")
       << std::setw(14) << std::fixed << std::setprecision(2)
       << 100 * std::stod(TrainLog::get(rec, "dev_bleu_l2r")) << std::setw(14)
       << 100 * std::stod(TrainLog::get(rec, "dev_bleu_r2l")) << "\n";
  }
  return os.str();
}

std::vector<std::string> split_tokens(const std::string& line, bool lowercase) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    if (lowercase)
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char c) { return std::tolower(c); });
    out.push_back(tok);
  }
  return out;
}

}  // namespace biagree
