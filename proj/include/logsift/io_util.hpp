#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "logsift/types.hpp"
#include "logsift/version.hpp"

namespace logsift {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? std::filesystem::path(".")
                                          : path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) usage_error("cannot write file: " + path.string());
  out << text;
  if (!out) usage_error("write failed: " + path.string());
}

/// Splits the first `max_fields - 1` commas; the final element keeps the raw
/// remainder, so free-text content fields may contain commas.
inline std::vector<std::string_view> split_csv(std::string_view line,
                                               std::size_t max_fields) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (fields.size() + 1 < max_fields) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) break;
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  fields.push_back(line.substr(start));
  return fields;
}

inline std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename Int>
inline std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || s.empty()) return std::nullopt;
  return value;
}

inline std::optional<double> parse_double(std::string_view s) {
  double value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    return std::nullopt;
  return value;
}

/// Shortest decimal that round-trips the double; keeps exports reproducible.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return std::string(buf);
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return std::string(buf);
}

/// 64-bit FNV-1a, used for config digests in provenance headers.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

/// First line of every exported text artifact. Contains no wall-clock data,
/// so identical configs rerun to identical bytes.
struct Provenance {
  std::string config_digest;
  std::uint64_t seed = 0;

  std::string comment_line() const {
    std::ostringstream os;
    os << "# " << kToolName << " " << kVersion << " config=" << config_digest
       << " seed=" << seed << "\n";
    return os.str();
  }
};

} // namespace logsift
