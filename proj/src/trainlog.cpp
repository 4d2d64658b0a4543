#include "biagree/trainlog.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace biagree {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return {buf, end};
}

std::vector<TrainLog::Record> TrainLog::events(
    const std::string& event_name) const {
  std::vector<Record> out;
  for (const auto& r : records_)
    if (!r.empty() && r.front().first == "event" &&
        r.front().second == event_name)
      out.push_back(r);
  return out;
}

std::string TrainLog::get(const Record& rec, const std::string& key) {
  for (const auto& [k, v] : rec)
    if (k == key) return v;
  throw std::invalid_argument("train log record has no key: " + key);
}

std::string TrainLog::serialize() const {
  std::ostringstream os;
  for (const auto& rec : records_) {
    bool first = true;
    for (const auto& [k, v] : rec) {
      if (!first) os << " ";
      os << k << "=" << v;
      first = false;
    }
    os << "\n";
  }
  return os.str();
}

TrainLog TrainLog::parse(const std::string& text) {
  TrainLog log;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Record rec;
    std::istringstream ls(line);
    std::string field;
    while (ls >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("malformed train log field: " + field);
      rec.emplace_back(field.substr(0, eq), field.substr(eq + 1));
    }
    log.append(rec);
  }
  return log;
}

void TrainLog::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write train log: " + path);
  out << serialize();
}

TrainLog TrainLog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read train log: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

}  // namespace biagree
