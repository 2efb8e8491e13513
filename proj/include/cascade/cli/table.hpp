#pragma once

// String-celled tables with a fixed numeric format and CSV round trip.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/error.hpp"

namespace cascade::cli {

/// 12 significant digits; "inf"/"-inf" for infinities; NaN marks a
/// clipped point and becomes an empty cell.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Inverse of format_number (empty cell -> NaN).
inline double parse_number(std::string_view cell) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  const std::string s(cell);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw Error(ErrorKind::invalid_parameter, "not a number: '" + s + "'");
  return v;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }

  void add_numeric_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    rows.push_back(std::move(cells));
  }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw Error(ErrorKind::invalid_parameter, "no column '" + std::string(name) + "'");
  }

  std::vector<double> numeric_column(std::string_view name) const {
    const std::size_t k = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(parse_number(r.at(k)));
    return out;
  }
};

namespace detail {

inline bool needs_quotes(std::string_view cell) {
  return cell.find_first_of(",\"\n") != std::string_view::npos;
}

inline void write_cell(std::ostream& os, std::string_view cell) {
  if (!needs_quotes(cell)) {
    os << cell;
    return;
  }
  os << '"';
  for (char ch : cell) {
    if (ch == '"') os << '"';
    os << ch;
  }
  os << '"';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cells.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.emplace_back();
    } else {
      cells.back() += ch;
    }
  }
  return cells;
}

}  // namespace detail

/// Header row first (always, even with no data rows), "\n" line endings.
inline void write_csv(std::ostream& os, const Table& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      detail::write_cell(os, cells[i]);
    }
    os << '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
}

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::io, "empty CSV input");
  t.columns = detail::split_csv_line(line);
  while (std::getline(is, line)) {
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.columns.size()) {
      throw Error(ErrorKind::io, "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) throw Error(ErrorKind::io, "write to '" + path + "' failed");
}

inline Table read_csv_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open '" + path + "' for reading");
  return read_csv(f);
}

}  // namespace cascade::cli
