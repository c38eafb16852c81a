#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace timesplit::csv {

// Comma-separated, UTF-8, first row is the header. Strings follow RFC 4180
// quoting; numeric cells are written unquoted.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table parse(std::string_view text, const std::string& source_name = "<string>");
Table read_file(const std::filesystem::path& path);

std::string escape_field(std::string_view field);
std::string serialize(const Table& table);
void write_file(const std::filesystem::path& path, const Table& table);

// 17 significant digits; round-trips every finite double exactly.
std::string format_double(double v);

// Empty cells and the literal NaN (case-insensitive) mark missing values;
// anything else must be a numeric literal.
std::optional<double> parse_cell(std::string_view cell, const std::string& source_name,
                                 std::size_t row, std::size_t col);

}  // namespace timesplit::csv
