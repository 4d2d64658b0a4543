#pragma once

#include <map>
#include <string>
#include <vector>

namespace biagree {

// Flat key=value experiment configuration with dotted sections. Every key has
// a stated default; unknown keys are rejected.
class ExperimentConfig {
 public:
  ExperimentConfig();  // defaults only

  static ExperimentConfig load(const std::string& path);
  void apply_override(const std::string& key_equals_value);  // "key=value"
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  long get_long(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  unsigned long long get_seed() const;

  // Canonical serialization: sorted "key = value" lines.
  std::string resolved() const;
  // FNV-1a over the resolved text minus the seed line.
  std::string hash() const;
  // "<hash8>-s<seed>"
  std::string run_name() const;

  static const std::vector<std::pair<std::string, std::string>>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace biagree
