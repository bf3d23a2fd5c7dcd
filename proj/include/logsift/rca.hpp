#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "logsift/io_util.hpp"
#include "logsift/rng.hpp"
#include "logsift/types.hpp"
#include "logsift/weaklabel.hpp"

namespace logsift {

/// Per-window service-occurrence counts. The dimension is the number of
/// distinct sources over the whole corpus; the source axis is ordered
/// lexicographically.
struct WindowVector {
  std::uint32_t window_id = 0;
  std::vector<double> counts;
  std::size_t line_count = 0;
  bool empty_warning = false;
};

struct RcaConfig {
  double distance_threshold = 0.5; // cosine-distance cut for merging
  bool binary_vectors = false;     // presence instead of counts
  std::size_t top_n = 3;
};

inline std::vector<std::string> unique_sources(const Corpus& corpus) {
  std::vector<std::string> sources;
  for (const auto& m : corpus) sources.push_back(m.source);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  return sources;
}

inline std::vector<WindowVector> vectorize_windows(const WeakLabeledDataset& ds,
                                                   const Corpus& corpus,
                                                   bool binary = false) {
  if (ds.n_windows == 0) data_error("dataset has no failure windows");
  const auto sources = unique_sources(corpus);
  std::map<std::string, std::size_t> source_axis;
  for (std::size_t i = 0; i < sources.size(); ++i) source_axis[sources[i]] = i;

  std::vector<WindowVector> vectors(ds.n_windows);
  for (std::size_t w = 0; w < ds.n_windows; ++w) {
    vectors[w].window_id = static_cast<std::uint32_t>(w);
    vectors[w].counts.assign(sources.size(), 0.0);
  }
  for (const auto& e : ds.entries) {
    if (e.label != WeakLabel::unknown) continue;
    const std::size_t axis = source_axis.at(corpus[e.line].source);
    for (std::uint32_t w : e.windows) {
      auto& vec = vectors[w];
      if (binary)
        vec.counts[axis] = 1.0;
      else
        vec.counts[axis] += 1.0;
      ++vec.line_count;
    }
  }
  for (auto& v : vectors) v.empty_warning = v.line_count == 0;
  return vectors;
}

struct Clustering {
  std::vector<std::size_t> assignment;          // window_id -> cluster id
  std::vector<std::vector<std::uint32_t>> members; // per cluster, window ids
  std::vector<std::size_t> line_counts;         // per cluster, total lines
};

namespace detail {

inline double cosine_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 0.0; // two empty windows look alike
  if (na == 0.0 || nb == 0.0) return 1.0;
  double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  cos = std::min(1.0, std::max(-1.0, cos));
  return 1.0 - cos;
}

} // namespace detail

/// Average-linkage agglomerative clustering over cosine distance, cut at the
/// configured threshold; no cluster count is supplied. Deterministic: ties
/// merge the lexicographically smallest pair, and final cluster ids are
/// ordered by each cluster's smallest window id, which also makes the
/// partition stable under permutation of the input vectors.
inline Clustering cluster_windows(const std::vector<WindowVector>& vectors,
                                  const RcaConfig& cfg = {}) {
  if (vectors.empty()) data_error("cluster_windows: no window vectors");
  const std::size_t n = vectors.size();

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i][j] = dist[j][i] =
          detail::cosine_distance(vectors[i].counts, vectors[j].counts);

  struct Group {
    std::vector<std::uint32_t> windows;
    bool alive = true;
  };
  std::vector<Group> groups(n);
  for (std::size_t i = 0; i < n; ++i)
    groups[i].windows = {vectors[i].window_id};

  // Lance-Williams update for average linkage on the active-group distance
  // matrix.
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!groups[i].alive) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!groups[j].alive) continue;
        if (dist[i][j] < best) {
          best = dist[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n || best > cfg.distance_threshold) break;
    const double wi = static_cast<double>(groups[bi].windows.size());
    const double wj = static_cast<double>(groups[bj].windows.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!groups[k].alive || k == bi || k == bj) continue;
      dist[bi][k] = dist[k][bi] =
          (wi * dist[bi][k] + wj * dist[bj][k]) / (wi + wj);
    }
    groups[bi].windows.insert(groups[bi].windows.end(),
                              groups[bj].windows.begin(),
                              groups[bj].windows.end());
    groups[bj].alive = false;
  }

  // Stable ids: clusters ordered by their smallest member window id.
  std::vector<std::vector<std::uint32_t>> members;
  for (auto& g : groups) {
    if (!g.alive) continue;
    std::sort(g.windows.begin(), g.windows.end());
    members.push_back(std::move(g.windows));
  }
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  Clustering out;
  out.members = std::move(members);
  out.assignment.assign(n, 0);
  out.line_counts.assign(out.members.size(), 0);
  std::map<std::uint32_t, std::size_t> lines_by_window;
  for (const auto& v : vectors) lines_by_window[v.window_id] = v.line_count;
  for (std::size_t c = 0; c < out.members.size(); ++c)
    for (std::uint32_t w : out.members[c]) {
      out.assignment[w] = c;
      out.line_counts[c] += lines_by_window[w];
    }
  return out;
}

struct BalancePlan {
  struct Entry {
    std::size_t cluster = 0;
    std::size_t size = 0;   // current log-line count
    double target = 0.0;    // affine image of size onto [max/2, max]
  };
  std::vector<Entry> entries;
};

/// Normalizes cluster sizes onto [max/2, max]: the smallest cluster maps to
/// max/2, the largest stays at max. Equal sizes are left untouched (the
/// formula degenerates to 0/0 and there is nothing to balance).
inline BalancePlan target_sizes(const Clustering& clustering) {
  if (clustering.members.empty()) data_error("target_sizes: no clusters");
  const auto& sizes = clustering.line_counts;
  const double mn = static_cast<double>(
      *std::min_element(sizes.begin(), sizes.end()));
  const double mx = static_cast<double>(
      *std::max_element(sizes.begin(), sizes.end()));
  BalancePlan plan;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double size = static_cast<double>(sizes[c]);
    double target;
    if (mx == mn)
      target = size;
    else
      target = (size - mn) / (mx - mn) * (mx - mx / 2.0) + mx / 2.0;
    plan.entries.push_back({c, sizes[c], target});
  }
  return plan;
}

/// Resamples the unknown-class entries of each cluster to round(target):
/// seeded duplication when growing, seeded uniform removal when shrinking.
/// Positive entries pass through untouched. An entry covered by several
/// windows follows its first window's cluster.
inline WeakLabeledDataset rebalance(const WeakLabeledDataset& ds,
                                    const Clustering& clustering,
                                    const BalancePlan& plan,
                                    std::uint64_t seed) {
  if (plan.entries.size() != clustering.members.size())
    usage_error("rebalance: plan does not cover every cluster");
  WeakLabeledDataset out;
  out.delta_ms = ds.delta_ms;
  out.n_windows = ds.n_windows;
  out.no_failures_warning = ds.no_failures_warning;

  std::vector<std::vector<WeakEntry>> per_cluster(clustering.members.size());
  for (const auto& e : ds.entries) {
    if (e.label == WeakLabel::positive) {
      out.entries.push_back(e);
    } else {
      if (e.windows.empty())
        data_error("rebalance: unknown entry without a window id");
      per_cluster[clustering.assignment[e.windows.front()]].push_back(e);
    }
  }

  Rng rng(seed);
  for (std::size_t c = 0; c < per_cluster.size(); ++c) {
    auto& bucket = per_cluster[c];
    const auto target = static_cast<std::size_t>(
        std::llround(plan.entries[c].target));
    if (bucket.empty()) continue;
    if (target == bucket.size()) {
      for (auto& e : bucket) out.entries.push_back(std::move(e));
      continue;
    }
    if (target > bucket.size()) {
      std::vector<WeakEntry> grown = bucket;
      for (std::size_t k = bucket.size(); k < target; ++k)
        grown.push_back(bucket[rng.next_below(bucket.size())]);
      for (auto& e : grown) out.entries.push_back(std::move(e));
    } else {
      std::vector<std::size_t> keep(bucket.size());
      for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
      rng.shuffle(keep);
      keep.resize(target);
      std::sort(keep.begin(), keep.end());
      for (std::size_t i : keep) out.entries.push_back(bucket[i]);
    }
  }

  std::sort(out.entries.begin(), out.entries.end(),
            [](const WeakEntry& a, const WeakEntry& b) {
              return a.line < b.line;
            });
  return out;
}

struct RankedLine {
  std::size_t line = 0;
  double z_norm = 0.0;
};

struct WindowRanking {
  std::uint32_t window_id = 0;
  std::vector<RankedLine> top;
  bool truncated_warning = false; // top_n exceeded the window size
};

/// Per window, the top_n unknown-class lines by anomaly score, descending;
/// ties break toward the earlier timestamp, then the lower index.
inline std::vector<WindowRanking> rank_root_causes(
    const WeakLabeledDataset& ds, const Corpus& corpus,
    const std::vector<double>& z_norms, std::size_t top_n) {
  if (top_n == 0) usage_error("rank_root_causes: top_n must be >= 1");
  if (z_norms.size() != corpus.size())
    data_error("rank_root_causes: scores do not cover the corpus");
  std::vector<WindowRanking> rankings(ds.n_windows);
  for (std::size_t w = 0; w < ds.n_windows; ++w)
    rankings[w].window_id = static_cast<std::uint32_t>(w);

  std::vector<std::vector<std::size_t>> window_lines(ds.n_windows);
  for (const auto& e : ds.entries)
    if (e.label == WeakLabel::unknown)
      for (std::uint32_t w : e.windows) window_lines[w].push_back(e.line);

  for (std::size_t w = 0; w < ds.n_windows; ++w) {
    auto& lines = window_lines[w];
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
    std::sort(lines.begin(), lines.end(), [&](std::size_t a, std::size_t b) {
      if (z_norms[a] != z_norms[b]) return z_norms[a] > z_norms[b];
      if (corpus[a].timestamp_ms != corpus[b].timestamp_ms)
        return corpus[a].timestamp_ms < corpus[b].timestamp_ms;
      return a < b;
    });
    auto& r = rankings[w];
    r.truncated_warning = top_n > lines.size();
    const std::size_t take = std::min(top_n, lines.size());
    for (std::size_t k = 0; k < take; ++k)
      r.top.push_back({lines[k], z_norms[lines[k]]});
  }
  return rankings;
}

inline std::string export_clusters_csv(const Clustering& clustering) {
  std::ostringstream os;
  os << "window_id,cluster_id\n";
  for (std::size_t w = 0; w < clustering.assignment.size(); ++w)
    os << w << ',' << clustering.assignment[w] << '\n';
  return os.str();
}

inline std::string export_plan_csv(const BalancePlan& plan) {
  std::ostringstream os;
  os << "cluster_id,size,target\n";
  for (const auto& e : plan.entries)
    os << e.cluster << ',' << e.size << ',' << format_double(e.target) << '\n';
  return os.str();
}

inline nlohmann::json rankings_to_json(const std::vector<WindowRanking>& rankings,
                                       const Corpus& corpus) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& r : rankings) {
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& line : r.top)
      lines.push_back({{"index", corpus[line.line].index},
                       {"z_norm", line.z_norm},
                       {"content", corpus[line.line].content}});
    nlohmann::json w = {{"window_id", r.window_id},
                        {"lines", std::move(lines)}};
    if (r.truncated_warning) w["truncated"] = true;
    windows.push_back(std::move(w));
  }
  return windows;
}

} // namespace logsift
