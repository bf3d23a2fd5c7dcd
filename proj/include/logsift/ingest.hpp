#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "logsift/io_util.hpp"
#include "logsift/rng.hpp"
#include "logsift/types.hpp"
#include "logsift/weaklabel.hpp"

namespace logsift {

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

enum class CorpusFormat { supercomputer, csv };

struct LoadOptions {
  CorpusFormat format = CorpusFormat::csv;
  // Supercomputer format: whitespace field holding the epoch-seconds
  // timestamp. The public corpora differ, hence configurable.
  std::size_t timestamp_field = 1;
  // Keep only the first N raw data lines (0 = all). Truncation happens on raw
  // lines, before any validity filtering.
  std::size_t head = 0;
};

struct RejectedLine {
  std::size_t line_no = 0; // 0-based position in the file
  std::string reason;
};

struct LoadResult {
  Corpus messages;
  std::vector<RejectedLine> rejects;
};

inline std::string export_rejects_report(const std::vector<RejectedLine>& rejects) {
  std::ostringstream os;
  for (const auto& r : rejects) os << r.line_no << '\t' << r.reason << '\n';
  return os.str();
}

inline constexpr std::string_view kCorpusCsvHeader =
    "index,timestamp_ms,source,truth,content";

namespace detail {

inline std::optional<Truth> truth_from_field(std::string_view f,
                                             bool& bad) {
  bad = false;
  if (f.empty()) return std::nullopt;
  if (f == "0") return Truth::normal;
  if (f == "1") return Truth::abnormal;
  bad = true;
  return std::nullopt;
}

} // namespace detail

/// Loads a labeled corpus. Malformed lines are recorded in the rejects list
/// and skipped; they never abort the load. An empty result is an error.
inline LoadResult load_labeled_logs(const std::vector<std::string>& lines,
                                    const LoadOptions& opts) {
  LoadResult result;
  std::int64_t last_ts = std::numeric_limits<std::int64_t>::min();
  std::size_t last_index = 0;
  bool any_index = false;

  auto reject = [&](std::size_t line_no, std::string reason) {
    result.rejects.push_back({line_no, std::move(reason)});
  };

  if (opts.format == CorpusFormat::supercomputer) {
    if (opts.timestamp_field < 1)
      usage_error("timestamp_field must be >= 1 (field 0 is the label)");
    std::size_t seen = 0;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (opts.head && seen >= opts.head) break;
      ++seen;
      const std::string& raw = lines[ln];
      if (raw.empty()) {
        reject(ln, "empty line");
        continue;
      }
      auto fields = split_whitespace(raw);
      if (fields.size() < opts.timestamp_field + 1) {
        reject(ln, "too few fields");
        continue;
      }
      auto secs = parse_int<std::int64_t>(fields[opts.timestamp_field]);
      if (!secs) {
        reject(ln, "unparsable timestamp '" +
                       std::string(fields[opts.timestamp_field]) + "'");
        continue;
      }
      const std::int64_t ts = *secs * 1000;
      if (ts < last_ts) {
        reject(ln, "timestamp out of order");
        continue;
      }
      // Content is everything after the timestamp field, original spacing
      // preserved.
      const char* ts_end = fields[opts.timestamp_field].data() +
                           fields[opts.timestamp_field].size();
      std::string_view rest(ts_end, raw.data() + raw.size() - ts_end);
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t'))
        rest.remove_prefix(1);

      LogMessage msg;
      msg.index = ln;
      msg.timestamp_ms = ts;
      msg.source = "";
      msg.content = std::string(rest);
      msg.truth = fields[0] == "-" ? Truth::normal : Truth::abnormal;
      last_ts = ts;
      result.messages.push_back(std::move(msg));
    }
  } else {
    bool header_seen = false;
    std::size_t seen = 0;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      const std::string& raw = lines[ln];
      if (!raw.empty() && raw[0] == '#') continue;
      if (!header_seen) {
        if (raw != kCorpusCsvHeader)
          data_error("CSV corpus: expected header '" +
                     std::string(kCorpusCsvHeader) + "'");
        header_seen = true;
        continue;
      }
      if (opts.head && seen >= opts.head) break;
      ++seen;
      auto fields = split_csv(raw, 5);
      if (fields.size() != 5) {
        reject(ln, "too few fields");
        continue;
      }
      auto index = parse_int<std::size_t>(fields[0]);
      auto ts = parse_int<std::int64_t>(fields[1]);
      bool bad_truth = false;
      auto truth = detail::truth_from_field(fields[3], bad_truth);
      if (!index || !ts || bad_truth) {
        reject(ln, "unparsable row");
        continue;
      }
      if (any_index && *index <= last_index) {
        reject(ln, "index out of order");
        continue;
      }
      if (*ts < last_ts) {
        reject(ln, "timestamp out of order");
        continue;
      }
      LogMessage msg;
      msg.index = *index;
      msg.timestamp_ms = *ts;
      msg.source = std::string(fields[2]);
      msg.content = std::string(fields[4]);
      msg.truth = truth;
      last_index = *index;
      any_index = true;
      last_ts = *ts;
      result.messages.push_back(std::move(msg));
    }
    if (!header_seen) data_error("CSV corpus: empty file");
  }

  if (result.messages.empty())
    data_error("no usable log lines" +
               std::string(result.rejects.empty() ? "" : " (all rejected)"));
  return result;
}

inline LoadResult load_labeled_logs(const std::filesystem::path& path,
                                    const LoadOptions& opts) {
  if (!std::filesystem::exists(path))
    usage_error("input file does not exist: " + path.string());
  return load_labeled_logs(read_lines(path), opts);
}

inline std::string export_corpus_csv(const Corpus& corpus) {
  std::ostringstream os;
  os << kCorpusCsvHeader << '\n';
  for (const auto& m : corpus) {
    os << m.index << ',' << m.timestamp_ms << ',' << m.source << ',';
    if (m.truth) os << (m.truth == Truth::abnormal ? '1' : '0');
    os << ',' << m.content << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

enum class AnomalyKind { template_anomaly, attribute_anomaly, contextual_anomaly };

inline std::string_view anomaly_kind_name(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::template_anomaly: return "template";
    case AnomalyKind::attribute_anomaly: return "attribute";
    case AnomalyKind::contextual_anomaly: return "contextual";
  }
  return "?";
}

inline std::optional<AnomalyKind> anomaly_kind_from_name(std::string_view s) {
  if (s == "template") return AnomalyKind::template_anomaly;
  if (s == "attribute") return AnomalyKind::attribute_anomaly;
  if (s == "contextual") return AnomalyKind::contextual_anomaly;
  return std::nullopt;
}

struct ManifestEntry {
  std::size_t index = 0;
  AnomalyKind kind = AnomalyKind::template_anomaly;

  bool operator==(const ManifestEntry&) const = default;
};

/// Which injected line is which anomaly kind; the oracle for every synthetic
/// experiment.
struct GroundTruthManifest {
  std::vector<ManifestEntry> entries;

  std::size_t count(AnomalyKind k) const {
    std::size_t n = 0;
    for (const auto& e : entries)
      if (e.kind == k) ++n;
    return n;
  }
};

inline std::string export_manifest(const GroundTruthManifest& manifest) {
  std::ostringstream os;
  for (const auto& e : manifest.entries)
    os << e.index << ',' << anomaly_kind_name(e.kind) << '\n';
  return os.str();
}

inline GroundTruthManifest parse_manifest(const std::vector<std::string>& lines) {
  GroundTruthManifest m;
  for (const auto& line : lines) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line, 2);
    auto idx = parse_int<std::size_t>(fields[0]);
    auto kind = fields.size() > 1 ? anomaly_kind_from_name(fields[1])
                                  : std::nullopt;
    if (!idx || !kind) data_error("manifest: unparsable entry '" + line + "'");
    m.entries.push_back({*idx, *kind});
  }
  return m;
}

/// A content pattern for the generator: a skeleton whose "<*>" positions are
/// filled from per-slot value pools. `anomalous_slot_values` feed attribute
/// anomalies and must be disjoint from the normal pools.
struct SyntheticTemplate {
  std::vector<std::string> skeleton; // "<*>" marks a slot
  std::vector<std::vector<std::string>> slot_values;
  std::vector<std::vector<std::string>> anomalous_slot_values;

  std::size_t slot_count() const {
    std::size_t n = 0;
    for (const auto& t : skeleton)
      if (t == "<*>") ++n;
    return n;
  }
};

struct AnomalyMix {
  double template_frac = 1.0;
  double attribute_frac = 0.0;
  double contextual_frac = 0.0;
};

struct SyntheticSpec {
  std::size_t n_lines = 1000;
  std::vector<SyntheticTemplate> vocab;
  double anomaly_rate = 0.0;
  AnomalyMix mix;
  double base_period_ms = 300.0;
  std::uint64_t seed = 1;

  // Corpus texture. Lines come in single-template runs so that context keys
  // are informative; contextual anomalies are injected as permuted windows
  // inside a run and need min_run > contextual_window.
  std::size_t min_run = 60;
  std::size_t max_run = 80;
  std::size_t n_sources = 8;
  std::size_t contextual_window = 48;
};

/// Eight service-style templates with slot pools, enough for every anomaly
/// kind. Slot values avoid separators and large plain numbers so they survive
/// token normalization unchanged.
inline std::vector<SyntheticTemplate> default_vocab() {
  auto nodes = std::vector<std::string>{"wally001", "wally002", "wally003",
                                        "wally004", "wally005", "wally006"};
  auto bad_nodes = std::vector<std::string>{"wally909", "wally910"};
  auto services = std::vector<std::string>{"mail", "printer", "auth", "dns"};
  auto bad_services = std::vector<std::string>{"ghostd", "rogue"};
  auto packages = std::vector<std::string>{"pkg-alpha", "pkg-beta", "pkg-gamma"};
  auto bad_packages = std::vector<std::string>{"pkg-zz99"};
  auto hosts = std::vector<std::string>{"hostA", "hostB", "hostC", "hostD"};
  auto bad_hosts = std::vector<std::string>{"hostX666"};
  auto users = std::vector<std::string>{"alice", "bob", "carol", "dave"};
  auto bad_users = std::vector<std::string>{"mallory"};
  auto volumes = std::vector<std::string>{"vol1", "vol2", "vol3"};
  auto states = std::vector<std::string>{"clean", "synced", "verified"};
  auto bad_states = std::vector<std::string>{"shredded"};
  auto levels = std::vector<std::string>{"low", "medium", "high"};
  auto bad_levels = std::vector<std::string>{"critical999"};

  std::vector<SyntheticTemplate> vocab;
  vocab.push_back({{"Start", "<*>", "service", "at", "node", "<*>"},
                   {services, nodes},
                   {bad_services, bad_nodes}});
  vocab.push_back({{"Stop", "<*>", "service", "at", "node", "<*>"},
                   {services, nodes},
                   {bad_services, bad_nodes}});
  vocab.push_back({{"Receive", "package", "<*>", "from", "host", "<*>"},
                   {packages, hosts},
                   {bad_packages, bad_hosts}});
  vocab.push_back({{"Send", "package", "<*>", "to", "host", "<*>"},
                   {packages, hosts},
                   {bad_packages, bad_hosts}});
  vocab.push_back({{"User", "<*>", "login", "from", "<*>"},
                   {users, hosts},
                   {bad_users, bad_hosts}});
  vocab.push_back({{"Disk", "check", "on", "volume", "<*>", "status", "<*>"},
                   {volumes, states},
                   {{}, bad_states}});
  vocab.push_back({{"Network", "probe", "<*>", "latency", "<*>"},
                   {hosts, levels},
                   {{}, bad_levels}});
  vocab.push_back({{"Heartbeat", "from", "<*>"}, {nodes}, {bad_nodes}});
  return vocab;
}

namespace detail {

inline std::vector<std::vector<std::string>> abnormal_skeletons() {
  return {
      {"kernelguard", "trap", "unrecoverable", "fault"},
      {"watchdog", "forced", "reset", "sequence"},
      {"memcheck", "corruption", "detected", "halting", "unit"},
      {"busfabric", "parity", "storm", "isolated"},
  };
}

inline std::set<std::string> normal_token_pool(const SyntheticSpec& spec) {
  std::set<std::string> pool;
  for (const auto& t : spec.vocab) {
    for (const auto& tok : t.skeleton)
      if (tok != "<*>") pool.insert(tok);
    for (const auto& vals : t.slot_values)
      for (const auto& v : vals) pool.insert(v);
  }
  return pool;
}

inline void validate_spec(const SyntheticSpec& spec) {
  if (spec.n_lines == 0) usage_error("synthetic spec: n_lines must be > 0");
  if (spec.vocab.empty()) usage_error("synthetic spec: vocab must not be empty");
  if (spec.anomaly_rate < 0.0 || spec.anomaly_rate > 1.0)
    usage_error("synthetic spec: anomaly_rate must be in [0,1]");
  const double sum = spec.mix.template_frac + spec.mix.attribute_frac +
                     spec.mix.contextual_frac;
  if (spec.mix.template_frac < 0 || spec.mix.attribute_frac < 0 ||
      spec.mix.contextual_frac < 0 || std::abs(sum - 1.0) > 1e-9)
    usage_error("synthetic spec: mix fractions must be non-negative and sum to 1");
  if (spec.base_period_ms <= 0.0)
    usage_error("synthetic spec: base_period_ms must be > 0");
  if (spec.min_run < 2 || spec.max_run < spec.min_run)
    usage_error("synthetic spec: bad run bounds");
  for (const auto& t : spec.vocab) {
    if (t.skeleton.empty()) usage_error("synthetic spec: empty skeleton");
    if (t.slot_values.size() != t.slot_count())
      usage_error("synthetic spec: slot pools do not match slot count");
    if (!t.anomalous_slot_values.empty() &&
        t.anomalous_slot_values.size() != t.slot_count())
      usage_error("synthetic spec: anomalous slot pools do not match slot count");
    for (const auto& pool : t.slot_values)
      if (pool.empty()) usage_error("synthetic spec: empty slot value pool");
  }
  const bool wants_attr =
      spec.anomaly_rate > 0.0 && spec.mix.attribute_frac > 0.0;
  if (wants_attr) {
    bool ok = false;
    for (const auto& t : spec.vocab) {
      const auto& pools = t.anomalous_slot_values;
      for (const auto& pool : pools)
        if (!pool.empty()) ok = true;
    }
    if (!ok)
      usage_error("synthetic spec: attribute anomalies requested but no "
                  "skeleton has an anomalous slot pool");
  }
  const bool wants_ctx =
      spec.anomaly_rate > 0.0 && spec.mix.contextual_frac > 0.0;
  if (wants_ctx) {
    if (spec.vocab.size() < 4)
      usage_error("synthetic spec: contextual anomalies need >= 4 vocab "
                  "templates");
    if (spec.min_run <= spec.contextual_window)
      usage_error("synthetic spec: contextual anomalies need min_run > "
                  "contextual_window");
  }
}

inline std::string render_line(const SyntheticTemplate& t, Rng& rng) {
  std::ostringstream os;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < t.skeleton.size(); ++i) {
    if (i) os << ' ';
    if (t.skeleton[i] == "<*>")
      os << rng.pick(t.slot_values[slot++]);
    else
      os << t.skeleton[i];
  }
  return os.str();
}

} // namespace detail

struct SyntheticResult {
  Corpus corpus;
  GroundTruthManifest manifest;
};

/// Generates a corpus of single-template runs with exponential inter-arrival
/// times and injects the requested anomaly mix:
///   - template anomalies replace lines with skeletons absent from the vocab,
///   - attribute anomalies reuse a vocab skeleton with one slot drawn from
///     its anomalous pool,
///   - contextual anomalies permute a window of a run by interleaving lines
///     of an unrelated vocab template.
/// Identical specs (including seed) produce byte-identical output.
inline SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  detail::validate_spec(spec);
  Rng rng(spec.seed);
  const std::size_t n = spec.n_lines;
  const std::size_t n_templates = spec.vocab.size();

  SyntheticResult result;
  result.corpus.resize(n);

  // Timeline.
  std::int64_t t = 1'600'000'000'000LL;
  for (std::size_t i = 0; i < n; ++i) {
    t += static_cast<std::int64_t>(
        std::llround(rng.exponential(spec.base_period_ms)));
    result.corpus[i].index = i;
    result.corpus[i].timestamp_ms = t;
    result.corpus[i].truth = Truth::normal;
  }

  // Runs of a single template, template index cycling so adjacent runs use
  // consecutive vocab entries.
  struct Run {
    std::size_t tmpl;
    std::size_t start;
    std::size_t len;
  };
  std::vector<Run> runs;
  {
    std::size_t pos = 0, run_idx = 0;
    while (pos < n) {
      const std::size_t span = spec.max_run > spec.min_run
                                   ? spec.min_run +
                                         rng.next_below(spec.max_run - spec.min_run + 1)
                                   : spec.min_run;
      const std::size_t len = std::min(span, n - pos);
      runs.push_back({run_idx % n_templates, pos, len});
      pos += len;
      ++run_idx;
    }
  }
  std::vector<std::size_t> line_tmpl(n);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (std::size_t i = runs[r].start; i < runs[r].start + runs[r].len; ++i) {
      line_tmpl[i] = runs[r].tmpl;
      result.corpus[i].source =
          "svc" + std::to_string(r % spec.n_sources);
      result.corpus[i].content =
          detail::render_line(spec.vocab[runs[r].tmpl], rng);
    }
  }

  // Anomaly budget, split by mix with largest-remainder rounding.
  const auto n_anom = static_cast<std::size_t>(
      std::llround(spec.anomaly_rate * static_cast<double>(n)));
  std::size_t budget[3] = {0, 0, 0};
  {
    const double frac[3] = {spec.mix.template_frac, spec.mix.attribute_frac,
                            spec.mix.contextual_frac};
    double rem[3];
    std::size_t total = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = frac[k] * static_cast<double>(n_anom);
      budget[k] = static_cast<std::size_t>(exact);
      rem[k] = exact - static_cast<double>(budget[k]);
      total += budget[k];
    }
    while (total < n_anom) {
      int best = 0;
      for (int k = 1; k < 3; ++k)
        if (rem[k] > rem[best]) best = k;
      ++budget[best];
      rem[best] = -1.0;
      ++total;
    }
  }

  std::vector<bool> occupied(n, false);
  auto mark = [&](std::size_t i, AnomalyKind kind) {
    occupied[i] = true;
    result.corpus[i].truth = Truth::abnormal;
    result.manifest.entries.push_back({i, kind});
  };

  // Contextual windows: inside one run of template t, replace a window with
  // an interleave of intruder template u (u not adjacent to t in the cycle)
  // and freshly drawn t lines. Every window line is anomalous by context
  // while both templates stay ordinary vocabulary.
  if (budget[2] > 0) {
    std::size_t remaining = budget[2];
    std::vector<std::size_t> candidates(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) candidates[r] = r;
    rng.shuffle(candidates);
    std::size_t cursor = 0;
    while (remaining > 0) {
      const std::size_t want = std::min(remaining, spec.contextual_window);
      std::size_t run_id = runs.size();
      while (cursor < candidates.size()) {
        const Run& r = runs[candidates[cursor]];
        if (r.len >= want + 2) {
          run_id = candidates[cursor];
          ++cursor;
          break;
        }
        ++cursor;
      }
      if (run_id == runs.size())
        data_error("synthetic spec: corpus too small for requested "
                   "contextual anomaly budget");
      const Run& run = runs[run_id];
      const std::size_t t_idx = run.tmpl;
      std::vector<std::size_t> intruders;
      for (std::size_t u = 0; u < n_templates; ++u) {
        const std::size_t prev = (t_idx + n_templates - 1) % n_templates;
        const std::size_t next = (t_idx + 1) % n_templates;
        if (u != t_idx && u != prev && u != next) intruders.push_back(u);
      }
      const std::size_t u_idx = rng.pick(intruders);
      const std::size_t offset =
          1 + rng.next_below(run.len - want - 1);
      for (std::size_t k = 0; k < want; ++k) {
        const std::size_t i = run.start + offset + k;
        const std::size_t src = k % 2 == 0 ? u_idx : t_idx;
        result.corpus[i].content = detail::render_line(spec.vocab[src], rng);
        mark(i, AnomalyKind::contextual_anomaly);
      }
      remaining -= want;
    }
  }

  auto draw_free_index = [&]() {
    for (std::size_t attempt = 0; attempt < 64 * n; ++attempt) {
      const auto i = static_cast<std::size_t>(rng.next_below(n));
      if (!occupied[i]) return i;
    }
    data_error("synthetic spec: anomaly budget exceeds free lines");
  };

  // Template anomalies: whole-line replacements whose skeletons never occur
  // in the normal pool.
  if (budget[0] > 0) {
    auto skeletons = detail::abnormal_skeletons();
    const auto normal_tokens = detail::normal_token_pool(spec);
    for (auto& sk : skeletons)
      for (auto& tok : sk)
        while (normal_tokens.count(tok)) tok += "x";
    for (std::size_t k = 0; k < budget[0]; ++k) {
      const std::size_t i = draw_free_index();
      const auto& sk = skeletons[rng.next_below(skeletons.size())];
      std::ostringstream os;
      for (std::size_t j = 0; j < sk.size(); ++j) {
        if (j) os << ' ';
        os << sk[j];
      }
      result.corpus[i].content = os.str();
      mark(i, AnomalyKind::template_anomaly);
    }
  }

  // Attribute anomalies: same skeleton as the surrounding run, every slot
  // that has an abnormal-only pool draws from it.
  if (budget[1] > 0) {
    for (std::size_t k = 0; k < budget[1]; ++k) {
      const std::size_t i = draw_free_index();
      std::size_t tmpl_idx = line_tmpl[i];
      auto eligible = [&](std::size_t idx) {
        for (const auto& pool : spec.vocab[idx].anomalous_slot_values)
          if (!pool.empty()) return true;
        return false;
      };
      if (!eligible(tmpl_idx)) {
        for (std::size_t cand = 0; cand < n_templates; ++cand)
          if (eligible(cand)) {
            tmpl_idx = cand;
            break;
          }
      }
      const auto& tmpl = spec.vocab[tmpl_idx];
      std::ostringstream os;
      std::size_t slot = 0;
      for (std::size_t j = 0; j < tmpl.skeleton.size(); ++j) {
        if (j) os << ' ';
        if (tmpl.skeleton[j] == "<*>") {
          if (slot < tmpl.anomalous_slot_values.size() &&
              !tmpl.anomalous_slot_values[slot].empty())
            os << rng.pick(tmpl.anomalous_slot_values[slot]);
          else
            os << rng.pick(tmpl.slot_values[slot]);
          ++slot;
        } else {
          os << tmpl.skeleton[j];
        }
      }
      result.corpus[i].content = os.str();
      mark(i, AnomalyKind::attribute_anomaly);
    }
  }

  std::sort(result.manifest.entries.begin(), result.manifest.entries.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return result;
}

// ---------------------------------------------------------------------------
// Root-cause scenarios
// ---------------------------------------------------------------------------

struct RcaScenarioSpec {
  std::size_t n_background_lines = 12000;
  std::vector<SyntheticTemplate> vocab; // empty => default_vocab()
  std::size_t n_causes = 3;
  std::size_t failures_per_cause = 20;
  // Bursts dense enough that a window's count vector is dominated by the
  // cause services rather than whichever background service happens by.
  std::size_t cause_lines_per_failure = 8;
  std::size_t services_per_cause = 3;
  std::size_t n_background_sources = 8;
  double delta_ms = 1000.0;
  // Sparse enough background that a window's vector is not hijacked by the
  // single service whose session the failure happens to interrupt.
  double base_period_ms = 800.0;
  std::uint64_t seed = 1;
  std::size_t min_run = 60;
  std::size_t max_run = 80;
};

struct RcaFailureRecord {
  std::size_t failure_idx = 0;
  std::size_t cause = 0;
  std::int64_t failure_ts = 0;
  std::vector<std::size_t> planted_lines; // corpus indices of root-cause lines
};

struct RcaScenario {
  Corpus corpus;
  std::vector<FailureEvent> failures;
  std::vector<RcaFailureRecord> records;
};

inline std::string export_rca_manifest(const std::vector<RcaFailureRecord>& recs) {
  std::ostringstream os;
  os << "failure_idx,cause,failure_ts,planted_lines\n";
  for (const auto& r : recs) {
    os << r.failure_idx << ',' << r.cause << ',' << r.failure_ts << ',';
    for (std::size_t k = 0; k < r.planted_lines.size(); ++k) {
      if (k) os << ';';
      os << r.planted_lines[k];
    }
    os << '\n';
  }
  return os.str();
}

/// Background traffic plus failure bursts: each failure plants root-cause
/// lines from one of `n_causes` signatures, every signature owning a disjoint
/// service set and its own message skeleton. Cause lines fall in
/// [t_f - delta, t_f), i.e. inside a before-window of the failure.
inline RcaScenario generate_rca_scenario(const RcaScenarioSpec& spec) {
  if (spec.n_causes == 0 || spec.failures_per_cause == 0 ||
      spec.cause_lines_per_failure == 0)
    usage_error("rca scenario: counts must be positive");
  if (spec.delta_ms <= 0 || spec.base_period_ms <= 0)
    usage_error("rca scenario: delta and base period must be > 0");

  SyntheticSpec bg;
  bg.n_lines = spec.n_background_lines;
  bg.vocab = spec.vocab.empty() ? default_vocab() : spec.vocab;
  bg.anomaly_rate = 0.0;
  bg.base_period_ms = spec.base_period_ms;
  bg.seed = derive_seed(spec.seed, "rca-background");
  bg.min_run = spec.min_run;
  bg.max_run = spec.max_run;
  bg.n_sources = spec.n_background_sources;
  Corpus background = generate_synthetic(bg).corpus;

  const std::size_t n_failures = spec.n_causes * spec.failures_per_cause;
  const std::int64_t t_begin = background.front().timestamp_ms;
  const std::int64_t t_end = background.back().timestamp_ms;
  const double spacing = static_cast<double>(t_end - t_begin) /
                         static_cast<double>(n_failures + 1);
  if (spacing < 5.0 * spec.delta_ms)
    usage_error("rca scenario: background too short for the failure count");

  Rng rng(derive_seed(spec.seed, "rca-causes"));

  // Cause message skeletons; first tokens are unique and absent from the
  // background vocabulary.
  std::vector<std::vector<std::string>> cause_skeletons;
  for (std::size_t c = 0; c < spec.n_causes; ++c)
    cause_skeletons.push_back({"rootcause" + std::to_string(c), "pipeline",
                               "stall", "segment", "s" + std::to_string(c)});

  struct Pending {
    LogMessage msg;
    std::size_t failure_idx;
  };
  std::vector<Pending> cause_lines;
  RcaScenario out;

  for (std::size_t f = 0; f < n_failures; ++f) {
    const std::size_t cause = f % spec.n_causes;
    const double jitter = rng.uniform(-0.1, 0.1) * spacing;
    const auto tf = static_cast<std::int64_t>(
        std::llround(static_cast<double>(t_begin) +
                     spacing * static_cast<double>(f + 1) + jitter));
    out.failures.push_back({tf, "cause" + std::to_string(cause)});
    RcaFailureRecord rec;
    rec.failure_idx = f;
    rec.cause = cause;
    rec.failure_ts = tf;
    out.records.push_back(rec);

    const std::size_t L = spec.cause_lines_per_failure;
    for (std::size_t j = 0; j < L; ++j) {
      const double frac =
          L > 1 ? 0.9 - 0.7 * static_cast<double>(j) / static_cast<double>(L - 1)
                : 0.5;
      LogMessage msg;
      msg.timestamp_ms =
          tf - static_cast<std::int64_t>(std::llround(spec.delta_ms * frac));
      msg.source = "cause" + std::to_string(cause) + "-svc" +
                   std::to_string(j % spec.services_per_cause);
      std::ostringstream os;
      const auto& sk = cause_skeletons[cause];
      for (std::size_t k = 0; k < sk.size(); ++k) {
        if (k) os << ' ';
        os << sk[k];
      }
      msg.content = os.str();
      msg.truth = Truth::abnormal;
      cause_lines.push_back({std::move(msg), f});
    }
  }

  // Merge by timestamp; background wins ties so cause bursts stay contiguous.
  out.corpus.reserve(background.size() + cause_lines.size());
  std::size_t bi = 0, ci = 0;
  while (bi < background.size() || ci < cause_lines.size()) {
    const bool take_bg =
        ci >= cause_lines.size() ||
        (bi < background.size() &&
         background[bi].timestamp_ms <= cause_lines[ci].msg.timestamp_ms);
    if (take_bg) {
      out.corpus.push_back(std::move(background[bi++]));
    } else {
      out.records[cause_lines[ci].failure_idx].planted_lines.push_back(
          out.corpus.size());
      out.corpus.push_back(std::move(cause_lines[ci++].msg));
    }
  }
  for (std::size_t i = 0; i < out.corpus.size(); ++i) out.corpus[i].index = i;
  return out;
}

} // namespace logsift
