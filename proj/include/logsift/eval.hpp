#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "logsift/types.hpp"

namespace logsift {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

struct EvalMetrics {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::string> flags; // zero-denominator notes
};

/// Confusion counts and precision/recall/F1 with Abnormal as the positive
/// class. Zero denominators yield 0 and a flag instead of NaN.
inline EvalMetrics evaluate_labels(const std::vector<Truth>& truth,
                                   const std::vector<Truth>& predicted) {
  if (truth.size() != predicted.size() || truth.empty())
    data_error("evaluate_labels: truth and prediction must cover the same "
               "non-empty line set");
  EvalMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Truth::abnormal;
    const bool p = predicted[i] == Truth::abnormal;
    if (t && p)
      ++m.counts.tp;
    else if (!t && p)
      ++m.counts.fp;
    else if (t && !p)
      ++m.counts.fn;
    else
      ++m.counts.tn;
  }
  if (m.counts.tp + m.counts.fp == 0)
    m.flags.push_back("precision-zero-denominator");
  else
    m.precision = static_cast<double>(m.counts.tp) /
                  static_cast<double>(m.counts.tp + m.counts.fp);
  if (m.counts.tp + m.counts.fn == 0)
    m.flags.push_back("recall-zero-denominator");
  else
    m.recall = static_cast<double>(m.counts.tp) /
               static_cast<double>(m.counts.tp + m.counts.fn);
  if (m.precision + m.recall == 0.0)
    m.flags.push_back("f1-zero-denominator");
  else
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline nlohmann::json metrics_to_json(const EvalMetrics& m) {
  return {{"tp", m.counts.tp},     {"fp", m.counts.fp},
          {"tn", m.counts.tn},     {"fn", m.counts.fn},
          {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1},            {"flags", m.flags}};
}

} // namespace logsift
