#include "biagree/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace biagree {

TokenSequence reverse_target(const TokenSequence& y) {
  return TokenSequence(y.rbegin(), y.rend());
}

Vocab::Vocab() : tokens_{"<pad>", "<bos>", "<eos>"} {}

int Vocab::add(const std::string& token) {
  int existing = id(token);
  if (existing >= 0) return existing;
  tokens_.push_back(token);
  return size() - 1;
}

int Vocab::id(const std::string& token) const {
  for (int i = 0; i < size(); ++i)
    if (tokens_[i] == token) return i;
  return -1;
}

const std::string& Vocab::token(int id) const {
  if (!valid_id(id)) throw std::out_of_range("token id out of range");
  return tokens_[id];
}

std::vector<int> Vocab::regular_ids() const {
  std::vector<int> ids;
  for (int i = kNumReserved; i < size(); ++i) ids.push_back(i);
  return ids;
}

TokenSequence Vocab::encode(const std::vector<std::string>& words) const {
  TokenSequence ids;
  ids.reserve(words.size());
  for (const auto& w : words) {
    int i = id(w);
    if (i < 0) throw std::invalid_argument("unknown token: " + w);
    ids.push_back(i);
  }
  return ids;
}

std::vector<std::string> Vocab::decode(const TokenSequence& ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int i : ids) words.push_back(token(i));
  return words;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocab file: " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocab file: " + path);
  Vocab v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= kNumReserved) continue;  // reserved lines
    if (!line.empty()) v.add(line);
  }
  return v;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& streams,
                  int cap) {
  std::map<std::string, long> freq;
  for (const auto& s : streams)
    for (const auto& w : s) ++freq[w];
  std::vector<std::pair<std::string, long>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  for (const auto& [tok, n] : entries) {
    (void)n;
    if (cap > 0 && v.num_regular() >= cap) break;
    v.add(tok);
  }
  return v;
}

}  // namespace biagree
