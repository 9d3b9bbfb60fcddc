#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "aif/errors.hpp"

namespace aif::csv {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ContractViolation("csv: not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ContractViolation("csv: not an integer: '" + std::string(s) + "'");
  }
  return v;
}

/// Fields never contain commas or quotes in this project's tables, so rows are
/// written and split verbatim.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& field(std::string_view s) {
    sep();
    out_ << s;
    return *this;
  }
  Writer& field(double v) { return field(std::string_view(format_double(v))); }
  Writer& field(int v) { return field(std::string_view(std::to_string(v))); }
  Writer& field(long long v) { return field(std::string_view(std::to_string(v))); }
  Writer& field(std::size_t v) { return field(std::string_view(std::to_string(v))); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    (field(values), ...);
    end_row();
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostream& out_;
  bool first_ = true;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ContractViolation("csv: missing column '" + std::string(name) + "'");
  }
};

inline std::vector<std::string> split(std::string_view line, char delim = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline Table read(std::istream& in) {
  Table t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ContractViolation("csv: row has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

}  // namespace aif::csv
