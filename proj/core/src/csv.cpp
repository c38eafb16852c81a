#include "timesplit/csv.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "timesplit/error.hpp"

namespace timesplit::csv {

namespace {

bool needs_quoting(std::string_view field) {
  if (field.empty()) return false;
  if (field.front() == ' ' || field.back() == ' ') return true;
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

}  // namespace

Table parse(std::string_view text, const std::string& source_name) {
  Table table;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (table.header.empty() && table.rows.empty()) {
      table.header = std::move(row);
    } else {
      if (row.size() != table.header.size()) {
        throw ValidationError(source_name + ": row " + std::to_string(table.rows.size() + 1) +
                              " has " + std::to_string(row.size()) + " fields, header has " +
                              std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(row));
    }
    row.clear();
    row_started = false;
  };

  while (i < n) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw ParseError(source_name + ": quote inside unquoted field", i);
        in_quotes = true;
        row_started = true;
        ++i;
        break;
      case ',':
        end_field();
        row_started = true;
        ++i;
        break;
      case '\r':
        if (i + 1 < n && text[i + 1] == '\n') ++i;
        end_row();
        ++i;
        break;
      case '\n':
        end_row();
        ++i;
        break;
      default:
        field.push_back(c);
        row_started = true;
        ++i;
        break;
    }
  }
  if (in_quotes) throw ParseError(source_name + ": unterminated quoted field", n);
  if (row_started || !field.empty() || !row.empty()) end_row();
  if (table.header.empty()) throw ValidationError(source_name + ": empty file (no header row)");
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::string escape_field(std::string_view field) {
  if (!needs_quoting(field)) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string serialize(const Table& table) {
  std::string out;
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += escape_field(row[i]);
    }
    out.push_back('\n');
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  return out;
}

void write_file(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << serialize(table);
  if (!out) throw Error("write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  assert(res.ec == std::errc{});
  return std::string(buf, res.ptr);
}

std::optional<double> parse_cell(std::string_view cell, const std::string& source_name,
                                 std::size_t row, std::size_t col) {
  if (cell.empty()) return std::nullopt;
  if (cell.size() == 3 && (cell[0] == 'n' || cell[0] == 'N') && (cell[1] == 'a' || cell[1] == 'A') &&
      (cell[2] == 'n' || cell[2] == 'N')) {
    return std::nullopt;
  }
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && cell.front() == '+') ++first;  // from_chars rejects a leading '+'
  auto res = std::from_chars(first, last, value, std::chars_format::general);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ValidationError(source_name + ": non-numeric cell '" + std::string(cell) + "' at row " +
                          std::to_string(row + 1) + ", column " + std::to_string(col + 1));
  }
  return value;
}

}  // namespace timesplit::csv
