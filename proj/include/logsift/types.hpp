#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace logsift {

/// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind : int {
  usage = 2,   // bad configuration, unusable arguments, missing paths
  data = 3,    // unusable input data (empty corpus, missing labels, ...)
  numeric = 4, // non-finite values, diverged training
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void usage_error(const std::string& what) {
  throw Error(ErrorKind::usage, what);
}
[[noreturn]] inline void data_error(const std::string& what) {
  throw Error(ErrorKind::data, what);
}
[[noreturn]] inline void numeric_error(const std::string& what) {
  throw Error(ErrorKind::numeric, what);
}

/// Ground-truth verdict for a log line.
enum class Truth : std::uint8_t { normal = 0, abnormal = 1 };

/// One log line. `index` is the 0-based ordinal in the originating file;
/// rejected lines leave gaps, so indices are unique and strictly increasing
/// but not necessarily contiguous.
struct LogMessage {
  std::size_t index = 0;
  std::int64_t timestamp_ms = 0;
  std::string source;
  std::string content;
  std::optional<Truth> truth;

  bool operator==(const LogMessage&) const = default;
};

using Corpus = std::vector<LogMessage>;

inline std::size_t count_abnormal(const Corpus& corpus) {
  std::size_t n = 0;
  for (const auto& m : corpus)
    if (m.truth == Truth::abnormal) ++n;
  return n;
}

inline bool has_truth_labels(const Corpus& corpus) {
  for (const auto& m : corpus)
    if (m.truth.has_value()) return true;
  return false;
}

} // namespace logsift
