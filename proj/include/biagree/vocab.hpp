#pragma once

#include <string>
#include <vector>

namespace biagree {

// Token ids; no BOS/EOS framing stored, consumers add it.
using TokenSequence = std::vector<int>;

TokenSequence reverse_target(const TokenSequence& y);

// Closed vocabulary: bijection token string <-> contiguous id.
// Ids 0,1,2 are reserved (PAD, BOS, EOS) and never produced by generators.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kNumReserved = 3;

  Vocab();

  int add(const std::string& token);  // returns id (existing or new)
  int id(const std::string& token) const;  // -1 if absent
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  int num_regular() const { return size() - kNumReserved; }
  bool valid_id(int id) const { return id >= 0 && id < size(); }

  std::vector<int> regular_ids() const;

  TokenSequence encode(const std::vector<std::string>& words) const;  // throws on unknown
  std::vector<std::string> decode(const TokenSequence& ids) const;

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
};

// Frequency-descending id assignment after the reserved ids; ties broken by
// lexicographic token order. cap limits the number of non-reserved entries
// (0 = unlimited).
Vocab build_vocab(const std::vector<std::vector<std::string>>& streams,
                  int cap = 0);

}  // namespace biagree
