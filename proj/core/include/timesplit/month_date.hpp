#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace timesplit {

// A calendar month. Market entry, approval, and publication dates are all
// recorded at month resolution, and the time split thresholds on this type.
struct MonthDate {
  int year = 1970;
  int month = 1;  // 1..12

  friend auto operator<=>(const MonthDate&, const MonthDate&) = default;

  // Monotone index; the difference of two indices is a signed month lag.
  int month_index() const { return year * 12 + (month - 1); }

  bool valid() const {
    return year >= 1800 && year <= 2200 && month >= 1 && month <= 12;
  }

  std::string to_string() const;  // "YYYY-MM"

  // Parses "YYYY-MM"; throws ValidationError on malformed or out-of-range input.
  static MonthDate parse(std::string_view text);
  static std::optional<MonthDate> try_parse(std::string_view text);

  static MonthDate from_month_index(int index);
};

// later - earlier, in whole months.
inline int months_between(MonthDate later, MonthDate earlier) {
  return later.month_index() - earlier.month_index();
}

}  // namespace timesplit
