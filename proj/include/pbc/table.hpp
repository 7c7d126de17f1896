#pragma once

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbc/error.hpp"
#include "pbc/overloaded.hpp"

namespace pbc {

using Cell = std::variant<std::int64_t, double, std::string>;

/// Column-named table of results (sweep rows, pricing summaries, paths).
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    detail::require(row.size() == columns.size(), "table: row width does not match columns");
    rows.push_back(std::move(row));
  }

  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

enum class TableFormat { Csv, Json };

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

namespace detail {

inline bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

inline bool parse_int64(std::string_view text, std::int64_t& out) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

/// Doubles always carry a '.', exponent, or non-digit so they never read
/// back as integers.
inline std::string format_table_double(double value) {
  std::string s = format_double(value);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_quote_if_needed(const std::string& s) {
  return s.find_first_of(",\"\n\r") == std::string::npos ? s : csv_quote(s);
}

struct CsvField {
  std::string text;
  bool quoted = false;
};

/// Splits one CSV line; supports double-quoted fields without embedded newlines.
inline std::vector<CsvField> split_csv_line(std::string_view line) {
  std::vector<CsvField> fields(1);
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().text += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        fields.back().text += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      fields.back().quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().text += c;
    }
  }
  return fields;
}

inline bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline Cell parse_cell(const CsvField& field) {
  if (field.quoted) return field.text;
  const std::string& text = field.text;
  std::int64_t i = 0;
  if (parse_int64(text, i)) return i;
  double d = 0.0;
  if (parse_double(text, d)) return d;
  return text;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing: " +
                  std::error_code(errno, std::generic_category()).message());
  }
  return out;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "': " +
                  std::error_code(errno, std::generic_category()).message());
  }
  return in;
}

}  // namespace detail

inline void write_csv(const ResultTable& table, std::ostream& out) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ',';
    out << detail::csv_quote_if_needed(table.columns[c]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      std::visit(detail::Overloaded{
                     [&](std::int64_t v) { out << v; },
                     [&](double v) { out << detail::format_table_double(v); },
                     [&](const std::string& v) { out << detail::csv_quote(v); },
                 },
                 row[c]);
    }
    out << '\n';
  }
}

inline nlohmann::ordered_json to_json(const ResultTable& table) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit([&](const auto& v) { obj[table.columns[c]] = v; }, row[c]);
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

inline void write_json(const ResultTable& table, std::ostream& out) {
  out << to_json(table).dump(2) << '\n';
}

/// Writes a table as CSV (header always present) or as a JSON array of
/// row objects.
inline void export_results(const ResultTable& table, TableFormat format, std::ostream& out) {
  if (format == TableFormat::Csv) {
    write_csv(table, out);
  } else {
    write_json(table, out);
  }
  if (!out) throw IoError("write failed: " + std::error_code(errno, std::generic_category()).message());
}

inline void export_results(const ResultTable& table, TableFormat format,
                           const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  export_results(table, format, out);
  out.close();
  if (!out) throw IoError("closing '" + path.string() + "' failed");
}

inline ResultTable read_csv_table(std::istream& in) {
  ResultTable table;
  std::string line;
  if (!detail::read_line(in, line)) throw ParseError(1, "", "missing header");
  for (auto& f : detail::split_csv_line(line)) table.columns.push_back(std::move(f.text));
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != table.columns.size()) {
      throw ParseError(line_no, "", "expected " + std::to_string(table.columns.size()) +
                                        " fields, got " + std::to_string(fields.size()));
    }
    std::vector<Cell> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(detail::parse_cell(f));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline ResultTable from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_array()) throw ParseError(1, "", "expected a JSON array of row objects");
  ResultTable table;
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    if (!obj.is_object()) throw ParseError(r + 1, "", "row is not an object");
    if (r == 0) {
      for (const auto& [key, value] : obj.items()) table.columns.push_back(key);
    }
    if (obj.size() != table.columns.size()) throw ParseError(r + 1, "", "row keys differ from first row");
    std::vector<Cell> row;
    for (const auto& name : table.columns) {
      if (!obj.contains(name)) throw ParseError(r + 1, name, "missing key");
      const auto& v = obj.at(name);
      if (v.is_number_integer()) {
        row.emplace_back(v.get<std::int64_t>());
      } else if (v.is_number_float()) {
        row.emplace_back(v.get<double>());
      } else if (v.is_string()) {
        row.emplace_back(v.get<std::string>());
      } else {
        throw ParseError(r + 1, name, "unsupported JSON value");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline ResultTable read_json_table(std::istream& in) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, "", e.what());
  }
  return from_json(doc);
}

}  // namespace pbc
