#pragma once

// Minimal CSV plumbing for the comma-separated tables this project reads
// and writes. Fields never contain commas or quotes, so no quoting is done.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "peninsula/error.hpp"

namespace peninsula::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Shortest round-trip representation; stable across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

// Reads a headed CSV. The header must match `expected` column names exactly
// (extra trailing columns are rejected too).
class Reader {
 public:
  Reader(std::istream& in, std::vector<std::string> expected) : in_(in) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!trim(line).empty()) break;
    }
    auto header = split(line);
    if (header != expected) {
      std::string want;
      for (auto& c : expected) want += (want.empty() ? "" : ",") + c;
      throw ParseError(line_no_, "expected CSV header '" + want + "'");
    }
    columns_ = expected.size();
  }

  // Next non-blank row; nullopt at EOF. Column count is enforced.
  std::optional<std::vector<std::string>> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      auto fields = split(line);
      if (fields.size() != columns_) {
        throw ParseError(line_no_, "expected " + std::to_string(columns_) + " columns, got " +
                                       std::to_string(fields.size()));
      }
      return fields;
    }
    return std::nullopt;
  }

  std::size_t line() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
  std::size_t columns_ = 0;
};

}  // namespace peninsula::csv
