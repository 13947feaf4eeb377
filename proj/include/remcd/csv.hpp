#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "remcd/error.hpp"

namespace remcd {

/// Minimal RFC-4180-style CSV support: comma separator, double-quote
/// quoting. Lines starting with '#' are treated as comments and skipped
/// (the CLI embeds its resolved config in such a line).
namespace csv {

inline std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) os << ',';
    os << quote_if_needed(fields[i]);
  }
  os << '\n';
}

inline std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  if (in_quotes) {
    raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unterminated quote");
  }
  out.push_back(field);
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row
};

inline Table read(std::istream& is) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_line(line, line_no);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(t.header.size()) + " fields, got " +
                                       std::to_string(fields.size()));
    }
    t.line_numbers.push_back(line_no);
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) raise(ErrorCode::ParseError, "empty CSV: missing header");
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCode::ParseError, "cannot open " + path);
  return read(f);
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": not an integer: '" + s + "'");
  }
}

}  // namespace csv
}  // namespace remcd
