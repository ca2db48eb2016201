// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Small text helpers shared by the CSV readers and writers.

#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fedgraph/errors.hpp"

namespace fedgraph::detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Iterates LF-separated lines, tracking 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : rest_(text) {}

  bool next(std::string_view& line) {
    if (done_) return false;
    const auto pos = rest_.find('\n');
    if (pos == std::string_view::npos) {
      line = rest_;
      done_ = true;
      if (line.empty()) return false;
    } else {
      line = rest_.substr(0, pos);
      rest_.remove_prefix(pos + 1);
      if (rest_.empty()) done_ = true;
    }
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no_;
    return true;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::string_view rest_;
  std::size_t line_no_ = 0;
  bool done_ = false;
};

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::size_t parse_index(std::string_view field, std::size_t line) {
  field = trim(field);
  std::size_t value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("expected a non-negative integer, got '" + std::string(field) + "'",
                     line);
  }
  return value;
}

inline double parse_real(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("expected a real number, got '" + std::string(field) + "'", line);
  }
  return value;
}

// Parses a metadata line of the form "# key=value key2=value2".
inline std::map<std::string, std::string, std::less<>> parse_metadata(
    std::string_view line, std::size_t line_no) {
  line = trim(line);
  if (line.empty() || line.front() != '#') {
    throw ParseError("expected a '# key=value' metadata line", line_no);
  }
  line.remove_prefix(1);
  std::map<std::string, std::string, std::less<>> out;
  std::istringstream words{std::string(line)};
  std::string word;
  while (words >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError("malformed metadata entry '" + word + "'", line_no);
    }
    out[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return out;
}

inline std::size_t parse_metadata_count(std::string_view line, std::string_view key,
                                        std::size_t line_no) {
  const auto meta = parse_metadata(line, line_no);
  const auto it = meta.find(key);
  if (it == meta.end()) {
    throw ParseError("metadata line lacks '" + std::string(key) + "='", line_no);
  }
  return parse_index(it->second, line_no);
}

// Shortest representation that round-trips exactly.
inline std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace fedgraph::detail
