#ifndef HEALTHSIM_CSV_HPP
#define HEALTHSIM_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "healthsim/error.hpp"

namespace healthsim::csv {

/// In-memory CSV table: a header row plus string cells. Quoted fields
/// (RFC 4180 style, "" as an escaped quote) are supported.
class Table {
 public:
  Table() = default;
  Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows,
        std::string source = "<memory>")
      : header_(std::move(header)), rows_(std::move(rows)), source_(std::move(source)) {}

  const std::vector<std::string>& header() const { return header_; }
  size_t n_rows() const { return rows_.size(); }
  size_t n_cols() const { return header_.size(); }
  const std::string& source() const { return source_; }

  std::optional<size_t> find(std::string_view name) const {
    for (size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    return std::nullopt;
  }
  bool has(std::string_view name) const { return find(name).has_value(); }

  size_t col(std::string_view name) const {
    auto c = find(name);
    if (!c) throw ValidationError(source_ + ": missing required column '" + std::string(name) + "'");
    return *c;
  }

  const std::string& cell(size_t row, size_t col) const { return rows_.at(row).at(col); }

  double number(size_t row, size_t col) const;
  long long integer(size_t row, size_t col) const;
  bool is_missing(size_t row, size_t col) const {
    const auto& s = cell(row, col);
    return s.empty() || s == "NA";
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::string source_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline Table parse(std::string_view text, std::string source = "<memory>") {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (line.front() == '#') continue;
    auto fields = detail::split_line(line);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size())
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  if (header.empty()) throw ValidationError(source + ": empty CSV (no header row)");
  return Table(std::move(header), std::move(rows), std::move(source));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Table read(const std::string& path) { return parse(read_file(path), path); }

inline double parse_number(std::string_view s, std::string_view what) {
  if (s == "Inf" || s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-Inf" || s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError(std::string(what) + ": '" + std::string(s) + "' is not a number");
  return v;
}

inline double Table::number(size_t row, size_t c) const {
  return parse_number(cell(row, c), source_ + " column '" + header_.at(c) + "' row " + std::to_string(row + 1));
}

inline long long Table::integer(size_t row, size_t c) const {
  const auto& s = cell(row, c);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // Accept integral reals such as "1.0".
    double d = number(row, c);
    if (d != std::floor(d))
      throw ValidationError(source_ + " column '" + header_.at(c) + "' row " + std::to_string(row + 1) +
                            ": '" + s + "' is not an integer");
    return static_cast<long long>(d);
  }
  return v;
}

/// Shortest round-trip text for a double, in fixed notation for moderate
/// magnitudes; "Inf"/"-Inf"/"NaN" for non-finite.
inline std::string format(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[400];
  const double a = std::abs(v);
  const bool fixed = a == 0 || (a >= 1e-5 && a < 1e15);
  auto [ptr, ec] = fixed ? std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed)
                         : std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Buffered CSV writer with a fixed header.
class Writer {
 public:
  Writer(const std::string& path, std::vector<std::string> header)
      : out_(path, std::ios::binary), n_cols_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_row(header);
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    static_assert(sizeof...(Ts) > 0);
    size_t i = 0;
    ((put(cells, i++)), ...);
    out_ << '\n';
  }

  void write_row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) put(cells[i], i);
    out_ << '\n';
  }

 private:
  void sep(size_t i) {
    if (i > 0) out_ << ',';
  }
  void put(const std::string& s, size_t i) {
    sep(i);
    if (s.find_first_of(",\"\n") != std::string::npos) {
      out_ << '"';
      for (char c : s) {
        if (c == '"') out_ << '"';
        out_ << c;
      }
      out_ << '"';
    } else {
      out_ << s;
    }
  }
  void put(const char* s, size_t i) { put(std::string(s), i); }
  void put(double v, size_t i) {
    sep(i);
    out_ << format(v);
  }
  template <typename I>
    requires std::is_integral_v<I>
  void put(I v, size_t i) {
    sep(i);
    out_ << v;
  }

  std::ofstream out_;
  size_t n_cols_;
};

}  // namespace healthsim::csv

#endif  // HEALTHSIM_CSV_HPP
