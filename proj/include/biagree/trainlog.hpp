#pragma once

#include <map>
#include <string>
#include <vector>

namespace biagree {

// Append-only event log; one key=value record per line.
class TrainLog {
 public:
  using Record = std::vector<std::pair<std::string, std::string>>;

  void append(const Record& rec) { records_.push_back(rec); }
  const std::vector<Record>& records() const { return records_; }

  std::vector<Record> events(const std::string& event_name) const;
  static std::string get(const Record& rec, const std::string& key);

  std::string serialize() const;
  static TrainLog parse(const std::string& text);
  void save(const std::string& path) const;
  static TrainLog load(const std::string& path);

 private:
  std::vector<Record> records_;
};

std::string format_double(double v);  // shortest round-trip formatting

}  // namespace biagree
