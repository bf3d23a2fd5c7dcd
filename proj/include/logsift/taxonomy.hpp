#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "logsift/parse.hpp"
#include "logsift/types.hpp"

namespace logsift {

/// Corpus partition into normal and abnormal line positions.
struct LabeledSplit {
  std::set<std::size_t> normal;
  std::set<std::size_t> abnormal;

  bool is_abnormal(std::size_t line) const { return abnormal.count(line) > 0; }
  std::size_t size() const { return normal.size() + abnormal.size(); }
};

/// Builds the split from ground truth; every line must carry a label.
inline LabeledSplit split_from_truth(const Corpus& corpus) {
  LabeledSplit split;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].truth)
      data_error("line " + std::to_string(corpus[i].index) +
                 " has no ground-truth label");
    if (*corpus[i].truth == Truth::abnormal)
      split.abnormal.insert(i);
    else
      split.normal.insert(i);
  }
  return split;
}

struct AnomalyScores {
  std::size_t origin = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

enum class AttributeScope { global, slot };

struct TaxonomyConfig {
  std::size_t context_before = 10;
  std::size_t context_after = 0;
  AttributeScope attribute_scope = AttributeScope::global;
};

/// Occurrence tables built in one counting pass; scoring afterwards is pure.
class ScoreTables {
public:
  ScoreTables(const ParsedCorpus& parsed, const LabeledSplit& split,
              AttributeScope scope = AttributeScope::global) {
    const std::size_t n = parsed.line_template.size();
    if (split.size() != n)
      data_error("labeled split does not cover the corpus");
    for (std::size_t i = 0; i < n; ++i) {
      const bool abn = split.is_abnormal(i);
      bump(template_counts_[parsed.line_template[i]], abn);

      // A line counts once per distinct attribute value it contains.
      std::set<std::string> distinct;
      for (std::size_t s = 0; s < parsed.attributes[i].values.size(); ++s) {
        std::string key = parsed.attributes[i].values[s];
        if (scope == AttributeScope::slot)
          key = std::to_string(parsed.line_template[i]) + ":" +
                std::to_string(s) + ":" + key;
        distinct.insert(std::move(key));
      }
      for (const auto& key : distinct) bump(value_counts_[key], abn);

      bump(context_counts_[parsed.contexts[i].neighbor_ids], abn);
    }
    scope_ = scope;
  }

  /// Template anomaly score: abnormal occurrences of template x over all its
  /// occurrences.
  double template_score(int template_id) const {
    auto it = template_counts_.find(template_id);
    if (it == template_counts_.end() ||
        it->second.abnormal + it->second.normal == 0)
      data_error("template " + std::to_string(template_id) +
                 " has no occurrences");
    return ratio(it->second);
  }

  /// Attribute anomaly score: the worst per-value ratio across the line's
  /// attribute set; 0 when the line has no attributes.
  double attribute_score(const AttributeSet& attrs, int template_id) const {
    double best = 0.0;
    for (std::size_t s = 0; s < attrs.values.size(); ++s) {
      std::string key = attrs.values[s];
      if (scope_ == AttributeScope::slot)
        key = std::to_string(template_id) + ":" + std::to_string(s) + ":" + key;
      auto it = value_counts_.find(key);
      if (it == value_counts_.end()) continue;
      best = std::max(best, ratio(it->second));
    }
    return best;
  }

  /// Contextual anomaly score: abnormal share among lines with an equal
  /// neighbor-template set.
  double context_score(const ContextKey& key) const {
    auto it = context_counts_.find(key.neighbor_ids);
    if (it == context_counts_.end()) return 0.0;
    return ratio(it->second);
  }

private:
  struct Counts {
    std::size_t abnormal = 0;
    std::size_t normal = 0;
  };

  static void bump(Counts& c, bool abnormal) {
    if (abnormal)
      ++c.abnormal;
    else
      ++c.normal;
  }

  static double ratio(const Counts& c) {
    return static_cast<double>(c.abnormal) /
           static_cast<double>(c.abnormal + c.normal);
  }

  std::map<int, Counts> template_counts_;
  std::map<std::string, Counts> value_counts_;
  std::map<std::vector<int>, Counts> context_counts_;
  AttributeScope scope_ = AttributeScope::global;
};

inline std::vector<AnomalyScores> score_corpus(const ParsedCorpus& parsed,
                                               const LabeledSplit& split,
                                               AttributeScope scope =
                                                   AttributeScope::global) {
  ScoreTables tables(parsed, split, scope);
  std::vector<AnomalyScores> scores(parsed.line_template.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i].origin = i;
    scores[i].alpha = tables.template_score(parsed.line_template[i]);
    scores[i].beta =
        tables.attribute_score(parsed.attributes[i], parsed.line_template[i]);
    scores[i].gamma = tables.context_score(parsed.contexts[i]);
  }
  return scores;
}

/// Per-threshold distribution of anomaly kinds over the abnormal lines.
/// Kinds are non-exclusive, so percentages may sum above 100.
struct TaxonomyReport {
  double threshold = 0.0;
  std::size_t abnormal_total = 0;
  std::size_t template_count = 0;
  std::size_t attribute_count = 0;
  std::size_t contextual_count = 0;
  std::size_t unclassified_count = 0;
  std::vector<std::size_t> unclassified_lines;
  bool empty_abnormal_flag = false;

  double pct(std::size_t n) const {
    return abnormal_total == 0
               ? 0.0
               : 100.0 * static_cast<double>(n) /
                     static_cast<double>(abnormal_total);
  }
};

inline TaxonomyReport classify(const std::vector<AnomalyScores>& scores,
                               const LabeledSplit& split, double threshold) {
  if (!(threshold > 0.0) || threshold > 1.0)
    usage_error("classification threshold must be in (0,1]");
  TaxonomyReport report;
  report.threshold = threshold;
  report.abnormal_total = split.abnormal.size();
  report.empty_abnormal_flag = split.abnormal.empty();
  for (std::size_t line : split.abnormal) {
    const auto& s = scores[line];
    bool any = false;
    if (s.alpha >= threshold) {
      ++report.template_count;
      any = true;
    }
    if (s.beta >= threshold) {
      ++report.attribute_count;
      any = true;
    }
    if (s.gamma >= threshold) {
      ++report.contextual_count;
      any = true;
    }
    if (!any) {
      ++report.unclassified_count;
      report.unclassified_lines.push_back(line);
    }
  }
  return report;
}

inline std::string export_taxonomy_csv(const std::vector<TaxonomyReport>& reports) {
  std::ostringstream os;
  os << "threshold,type,count,percentage\n";
  for (const auto& r : reports) {
    auto row = [&](std::string_view type, std::size_t count) {
      os << format_double(r.threshold) << ',' << type << ',' << count << ','
         << format_fixed(r.pct(count), 4) << '\n';
    };
    row("template", r.template_count);
    row("attribute", r.attribute_count);
    row("contextual", r.contextual_count);
    row("unclassified", r.unclassified_count);
    if (r.empty_abnormal_flag)
      os << "# flag threshold=" << format_double(r.threshold)
         << ": empty abnormal set, percentages degenerate\n";
  }
  return os.str();
}

} // namespace logsift
