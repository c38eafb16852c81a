#include "timesplit/month_date.hpp"

#include <charconv>
#include <cstdio>

#include "timesplit/error.hpp"

namespace timesplit {

std::string MonthDate::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

std::optional<MonthDate> MonthDate::try_parse(std::string_view text) {
  // Fixed format YYYY-MM (4 digit year, 2 digit month).
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  MonthDate d;
  auto r1 = std::from_chars(text.data(), text.data() + 4, d.year);
  auto r2 = std::from_chars(text.data() + 5, text.data() + 7, d.month);
  if (r1.ec != std::errc{} || r1.ptr != text.data() + 4) return std::nullopt;
  if (r2.ec != std::errc{} || r2.ptr != text.data() + 7) return std::nullopt;
  if (!d.valid()) return std::nullopt;
  return d;
}

MonthDate MonthDate::parse(std::string_view text) {
  auto d = try_parse(text);
  if (!d) {
    throw ValidationError("invalid month date '" + std::string(text) +
                          "' (expected YYYY-MM with year 1800..2200)");
  }
  return *d;
}

MonthDate MonthDate::from_month_index(int index) {
  MonthDate d;
  d.year = index / 12;
  d.month = index % 12 + 1;
  return d;
}

}  // namespace timesplit
