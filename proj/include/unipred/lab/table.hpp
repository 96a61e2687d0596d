#pragma once

// Result tables and their CSV form: '#'-prefixed metadata lines, a header
// row, then data rows. Floats are written with 17 significant digits.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "unipred/errors.hpp"

namespace unipred::lab {

using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw DomainError("row width differs from column count");
    rows.push_back(std::move(row));
  }
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw DomainError("no column " + name);
  }
  double number(std::size_t row, const std::string& name) const {
    const Cell& c = rows.at(row).at(column(name));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    throw DomainError("column " + name + " is not numeric");
  }
  std::string meta_value(const std::string& key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return v;
    throw DomainError("no metadata key " + key);
  }

  friend bool operator==(const ResultTable& a, const ResultTable& b) {
    if (a.metadata != b.metadata || a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
    for (std::size_t r = 0; r < a.rows.size(); ++r)
      for (std::size_t c = 0; c < a.rows[r].size(); ++c) {
        const auto& x = a.rows[r][c];
        const auto& y = b.rows[r][c];
        if (x.index() != y.index()) return false;
        if (const auto* dx = std::get_if<double>(&x)) {
          const double dy = std::get<double>(y);
          if (!(*dx == dy || (std::isnan(*dx) && std::isnan(dy)))) return false;
        } else if (x != y) {
          return false;
        }
      }
    return true;
  }
};

/// 17 significant digits; always carries a '.', exponent, or special name
/// so that it reads back as a float.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline Cell parse_cell(const std::string& s, bool quoted) {
  if (quoted || s.empty()) return s;
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ec == std::errc() && p == s.data() + s.size()) return i;
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double d = 0.0;
  auto [q, ec2] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec2 == std::errc() && q == s.data() + s.size()) return d;
  return s;
}

}  // namespace detail

/// Quotes fields containing separators, and strings that would otherwise
/// read back as numbers.
inline std::string quote_field(const std::string& s) {
  const bool plain = s.find_first_of(",\"\n\r") == std::string::npos;
  if (plain && std::holds_alternative<std::string>(detail::parse_cell(s, false))) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return quote_field(std::get<std::string>(c));
}

inline std::string to_csv(const ResultTable& t) {
  std::string out;
  for (const auto& [k, v] : t.metadata) out += "# " + k + "=" + v + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + quote_field(t.columns[i]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += "\n";
  }
  return out;
}

inline void emit_csv(const ResultTable& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto s = to_csv(t);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

namespace detail {

// Splits one CSV record; `quoted` reports which fields were quoted.
inline std::vector<std::string> split_record(const std::string& line, std::vector<bool>& quoted) {
  std::vector<std::string> fields(1);
  quoted.assign(1, false);
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      quoted.back() = true;
    } else if (c == ',') {
      fields.emplace_back();
      quoted.push_back(false);
    } else {
      fields.back() += c;
    }
  }
  if (in_quotes) throw IoError("unterminated quoted field");
  return fields;
}


}  // namespace detail

inline ResultTable from_csv(const std::string& text) {
  ResultTable t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  // Quoted fields may span lines; join until quotes balance.
  auto next_record = [&](std::string& rec) {
    if (!std::getline(in, rec)) return false;
    auto quotes = [](const std::string& s) { return std::count(s.begin(), s.end(), '"'); };
    while (quotes(rec) % 2 == 1) {
      std::string more;
      if (!std::getline(in, more)) throw IoError("unterminated quoted field");
      rec += "\n" + more;
    }
    return true;
  };
  std::vector<bool> quoted;
  while (next_record(line)) {
    if (!header && line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("bad metadata line");
      t.meta(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    if (!header) {
      t.columns = detail::split_record(line, quoted);
      if (t.columns.size() == 1 && t.columns[0].empty()) t.columns.clear();
      header = true;
      continue;
    }
    const auto fields = detail::split_record(line, quoted);
    std::vector<Cell> row;
    for (std::size_t i = 0; i < fields.size(); ++i) row.push_back(detail::parse_cell(fields[i], quoted[i]));
    t.add_row(std::move(row));
  }
  return t;
}

inline ResultTable parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

}  // namespace unipred::lab
