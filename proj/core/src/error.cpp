#include "timesplit/error.hpp"

#include <sstream>

namespace timesplit {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : ValidationError(what + " (byte " + std::to_string(offset) + ")"), offset_(offset) {}

namespace {
std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream out;
  out << problems.size() << " config problem" << (problems.size() == 1 ? "" : "s") << ":";
  for (const auto& p : problems) out << "\n  - " << p;
  return out.str();
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace timesplit
