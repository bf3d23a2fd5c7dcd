#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "logsift/io_util.hpp"
#include "logsift/types.hpp"

namespace logsift {

/// A monitoring alert; the anchor of one labeling window.
struct FailureEvent {
  std::int64_t timestamp_ms = 0;
  std::string tag;

  bool operator==(const FailureEvent&) const = default;
};

enum class WeakLabel : std::uint8_t { positive = 0, unknown = 1 };

/// One training sample. Initially entries are 1:1 with corpus lines;
/// rebalancing may duplicate or drop unknown-class entries, so the same line
/// can appear more than once.
struct WeakEntry {
  std::size_t line = 0;                // position in the corpus vector
  WeakLabel label = WeakLabel::positive;
  std::vector<std::uint32_t> windows;  // ids of the failure windows covering it
};

struct WeakLabeledDataset {
  double delta_ms = 0.0;
  std::size_t n_windows = 0;
  std::vector<WeakEntry> entries;
  bool no_failures_warning = false;

  std::size_t count(WeakLabel l) const {
    std::size_t n = 0;
    for (const auto& e : entries)
      if (e.label == l) ++n;
    return n;
  }

  /// |P| / (|P| + |U|) over the entries.
  double positive_ratio() const {
    if (entries.empty()) return 0.0;
    return static_cast<double>(count(WeakLabel::positive)) /
           static_cast<double>(entries.size());
  }
};

enum class WindowSide { symmetric, before };

/// Marks every line inside a failure window as unknown (U) and everything
/// else positive (P). Symmetric windows are the closed interval
/// [t_f - delta, t_f + delta]; `before` windows cover [t_f - delta, t_f).
/// Lines keep the ids of all covering windows. Window ids follow failures
/// sorted by (timestamp, tag), so the result is independent of input order.
inline WeakLabeledDataset assign_pu_labels(const Corpus& corpus,
                                           std::vector<FailureEvent> failures,
                                           double delta_ms,
                                           WindowSide side = WindowSide::symmetric) {
  if (delta_ms <= 0.0) usage_error("delta must be > 0");
  for (std::size_t i = 1; i < corpus.size(); ++i)
    if (corpus[i].timestamp_ms < corpus[i - 1].timestamp_ms)
      data_error("corpus timestamps must be non-decreasing");

  WeakLabeledDataset ds;
  ds.delta_ms = delta_ms;
  ds.entries.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) ds.entries[i].line = i;
  if (failures.empty()) {
    ds.no_failures_warning = true;
    return ds;
  }

  std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) {
    return a.timestamp_ms != b.timestamp_ms ? a.timestamp_ms < b.timestamp_ms
                                            : a.tag < b.tag;
  });
  ds.n_windows = failures.size();

  std::vector<std::int64_t> ts(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) ts[i] = corpus[i].timestamp_ms;

  for (std::size_t w = 0; w < failures.size(); ++w) {
    const double tf = static_cast<double>(failures[w].timestamp_ms);
    const double lo = tf - delta_ms;
    const double hi = side == WindowSide::symmetric ? tf + delta_ms : tf;
    auto first = std::lower_bound(ts.begin(), ts.end(), lo,
                                  [](std::int64_t t, double v) { return t < v; });
    for (auto it = first; it != ts.end(); ++it) {
      const double t = static_cast<double>(*it);
      if (side == WindowSide::symmetric ? t > hi : t >= hi) break;
      auto& e = ds.entries[static_cast<std::size_t>(it - ts.begin())];
      e.label = WeakLabel::unknown;
      e.windows.push_back(static_cast<std::uint32_t>(w));
    }
  }
  return ds;
}

/// Rebuilds evaluation-style failure lists: one event per truth-abnormal line
/// at that line's timestamp.
inline std::vector<FailureEvent> failures_from_truth(const Corpus& corpus) {
  if (!has_truth_labels(corpus))
    data_error("corpus carries no ground-truth labels");
  std::vector<FailureEvent> events;
  for (const auto& m : corpus)
    if (m.truth == Truth::abnormal) events.push_back({m.timestamp_ms, ""});
  if (events.empty())
    data_error("corpus has no abnormal lines to derive failures from");
  return events;
}

inline std::string export_failures_csv(const std::vector<FailureEvent>& failures) {
  std::ostringstream os;
  os << "timestamp_ms,tag\n";
  for (const auto& f : failures) os << f.timestamp_ms << ',' << f.tag << '\n';
  return os.str();
}

inline std::vector<FailureEvent> parse_failures_csv(
    const std::vector<std::string>& lines) {
  std::vector<FailureEvent> out;
  bool header_seen = false;
  for (const auto& line : lines) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "timestamp_ms,tag")
        data_error("failure list: expected header 'timestamp_ms,tag'");
      header_seen = true;
      continue;
    }
    auto fields = split_csv(line, 2);
    auto ts = parse_int<std::int64_t>(fields[0]);
    if (!ts) data_error("failure list: bad timestamp '" + std::string(fields[0]) + "'");
    out.push_back({*ts, std::string(fields.size() > 1 ? fields[1] : "")});
  }
  if (!header_seen) data_error("failure list: empty file");
  return out;
}

inline std::string export_weak_labels_csv(const WeakLabeledDataset& ds,
                                          const Corpus& corpus) {
  std::ostringstream os;
  os << "index,weak_label,window_ids\n";
  for (const auto& e : ds.entries) {
    os << corpus[e.line].index << ','
       << (e.label == WeakLabel::positive ? 'P' : 'U') << ',';
    for (std::size_t k = 0; k < e.windows.size(); ++k) {
      if (k) os << ';';
      os << e.windows[k];
    }
    os << '\n';
  }
  return os.str();
}

} // namespace logsift
