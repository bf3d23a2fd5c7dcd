#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "logsift/eval.hpp"
#include "logsift/ingest.hpp"
#include "logsift/io_util.hpp"
#include "logsift/parse.hpp"
#include "logsift/pumodel.hpp"
#include "logsift/rca.hpp"
#include "logsift/taxonomy.hpp"
#include "logsift/types.hpp"
#include "logsift/weaklabel.hpp"

namespace logsift {

struct GenerateConfig {
  std::string mode = "synthetic"; // or "rca"
  SyntheticSpec spec;
  RcaScenarioSpec rca;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  std::size_t threads = 1;

  std::filesystem::path input_path;
  CorpusFormat input_format = CorpusFormat::csv;
  std::size_t timestamp_field = 1;
  std::size_t head = 0;

  MinerConfig miner;

  TaxonomyConfig taxonomy;
  std::vector<double> taxonomy_thresholds = {0.6, 0.7, 0.8, 0.9, 1.0};
  bool taxonomy_per_line = false;

  std::vector<double> deltas_ms = {1000.0};
  std::filesystem::path failures_path;

  ModelConfig model;

  RcaConfig rca;
  double rca_delta_ms = 1000.0;
  WindowSide rca_window_side = WindowSide::before;

  GenerateConfig generate;

  std::filesystem::path predictions_path;

  Provenance provenance() const {
    return Provenance{to_hex(fnv1a64(to_json().dump())), seed};
  }

  nlohmann::json to_json() const;
};

namespace cfgdetail {

inline std::vector<SyntheticTemplate> vocab_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "default") return default_vocab();
    usage_error("generate.vocab: unknown preset '" + j.get<std::string>() + "'");
  }
  std::vector<SyntheticTemplate> vocab;
  for (const auto& t : j) {
    SyntheticTemplate st;
    st.skeleton = t.at("skeleton").get<std::vector<std::string>>();
    st.slot_values =
        t.value("slot_values", std::vector<std::vector<std::string>>{});
    st.anomalous_slot_values = t.value(
        "anomalous_slot_values", std::vector<std::vector<std::string>>{});
    vocab.push_back(std::move(st));
  }
  return vocab;
}

inline nlohmann::json vocab_to_json(const std::vector<SyntheticTemplate>& vocab) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : vocab)
    arr.push_back({{"skeleton", t.skeleton},
                   {"slot_values", t.slot_values},
                   {"anomalous_slot_values", t.anomalous_slot_values}});
  return arr;
}

} // namespace cfgdetail

inline nlohmann::json PipelineConfig::to_json() const {
  return {
      {"seed", seed},
      {"output_dir", output_dir.string()},
      {"threads", threads},
      {"input",
       {{"path", input_path.string()},
        {"format",
         input_format == CorpusFormat::csv ? "csv" : "supercomputer"},
        {"timestamp_field", timestamp_field},
        {"head", head}}},
      {"parse",
       {{"tree_depth", miner.tree_depth},
        {"similarity_threshold", miner.similarity_threshold},
        {"max_children", miner.max_children}}},
      {"taxonomy",
       {{"context_before", taxonomy.context_before},
        {"context_after", taxonomy.context_after},
        {"attribute_scope",
         taxonomy.attribute_scope == AttributeScope::global ? "global" : "slot"},
        {"thresholds", taxonomy_thresholds},
        {"per_line", taxonomy_per_line}}},
      {"weaklabel",
       {{"deltas_ms", deltas_ms}, {"failures_path", failures_path.string()}}},
      {"model", model_config_to_json(model)},
      {"rca",
       {{"delta_ms", rca_delta_ms},
        {"window_side",
         rca_window_side == WindowSide::before ? "before" : "symmetric"},
        {"distance_threshold", rca.distance_threshold},
        {"binary_vectors", rca.binary_vectors},
        {"top_n", rca.top_n}}},
      {"generate",
       {{"mode", generate.mode},
        {"n_lines", generate.spec.n_lines},
        {"anomaly_rate", generate.spec.anomaly_rate},
        {"mix",
         {{"template", generate.spec.mix.template_frac},
          {"attribute", generate.spec.mix.attribute_frac},
          {"contextual", generate.spec.mix.contextual_frac}}},
        {"base_period_ms", generate.spec.base_period_ms},
        {"min_run", generate.spec.min_run},
        {"max_run", generate.spec.max_run},
        {"n_sources", generate.spec.n_sources},
        {"contextual_window", generate.spec.contextual_window},
        {"vocab", cfgdetail::vocab_to_json(generate.spec.vocab)},
        {"n_background_lines", generate.rca.n_background_lines},
        {"n_causes", generate.rca.n_causes},
        {"failures_per_cause", generate.rca.failures_per_cause},
        {"cause_lines_per_failure", generate.rca.cause_lines_per_failure},
        {"services_per_cause", generate.rca.services_per_cause},
        {"rca_delta_ms", generate.rca.delta_ms},
        {"rca_base_period_ms", generate.rca.base_period_ms}}},
      {"evaluate", {{"predictions_path", predictions_path.string()}}}};
}

/// Parses a config document; unknown keys are ignored, missing keys keep
/// their defaults.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.generate.spec.vocab = default_vocab();
  cfg.seed = j.value("seed", cfg.seed);
  cfg.output_dir = j.value("output_dir", cfg.output_dir.string());
  cfg.threads = std::max<std::size_t>(1, j.value("threads", cfg.threads));

  if (j.contains("input")) {
    const auto& in = j["input"];
    cfg.input_path = in.value("path", std::string{});
    const std::string fmt = in.value("format", "csv");
    if (fmt == "csv")
      cfg.input_format = CorpusFormat::csv;
    else if (fmt == "supercomputer")
      cfg.input_format = CorpusFormat::supercomputer;
    else
      usage_error("input.format must be 'csv' or 'supercomputer'");
    cfg.timestamp_field = in.value("timestamp_field", cfg.timestamp_field);
    cfg.head = in.value("head", cfg.head);
  }
  if (j.contains("parse")) {
    const auto& p = j["parse"];
    cfg.miner.tree_depth = p.value("tree_depth", cfg.miner.tree_depth);
    cfg.miner.similarity_threshold =
        p.value("similarity_threshold", cfg.miner.similarity_threshold);
    cfg.miner.max_children = p.value("max_children", cfg.miner.max_children);
  }
  if (j.contains("taxonomy")) {
    const auto& t = j["taxonomy"];
    cfg.taxonomy.context_before =
        t.value("context_before", cfg.taxonomy.context_before);
    cfg.taxonomy.context_after =
        t.value("context_after", cfg.taxonomy.context_after);
    const std::string scope = t.value("attribute_scope", "global");
    if (scope == "global")
      cfg.taxonomy.attribute_scope = AttributeScope::global;
    else if (scope == "slot")
      cfg.taxonomy.attribute_scope = AttributeScope::slot;
    else
      usage_error("taxonomy.attribute_scope must be 'global' or 'slot'");
    cfg.taxonomy_thresholds =
        t.value("thresholds", cfg.taxonomy_thresholds);
    cfg.taxonomy_per_line = t.value("per_line", cfg.taxonomy_per_line);
    if (cfg.taxonomy_thresholds.empty())
      usage_error("taxonomy.thresholds must not be empty");
    for (double tau : cfg.taxonomy_thresholds)
      if (!(tau > 0.0) || tau > 1.0)
        usage_error("taxonomy thresholds must be in (0,1]");
  }
  if (j.contains("weaklabel")) {
    const auto& w = j["weaklabel"];
    cfg.deltas_ms = w.value("deltas_ms", cfg.deltas_ms);
    cfg.failures_path = w.value("failures_path", std::string{});
    if (cfg.deltas_ms.empty()) usage_error("weaklabel.deltas_ms must not be empty");
    for (double d : cfg.deltas_ms)
      if (!(d > 0.0)) usage_error("weaklabel deltas must be > 0");
  }
  if (j.contains("model")) cfg.model = model_config_from_json(j["model"]);
  if (j.contains("rca")) {
    const auto& r = j["rca"];
    cfg.rca_delta_ms = r.value("delta_ms", cfg.rca_delta_ms);
    const std::string side = r.value("window_side", "before");
    if (side == "before")
      cfg.rca_window_side = WindowSide::before;
    else if (side == "symmetric")
      cfg.rca_window_side = WindowSide::symmetric;
    else
      usage_error("rca.window_side must be 'before' or 'symmetric'");
    cfg.rca.distance_threshold =
        r.value("distance_threshold", cfg.rca.distance_threshold);
    cfg.rca.binary_vectors = r.value("binary_vectors", cfg.rca.binary_vectors);
    cfg.rca.top_n = r.value("top_n", cfg.rca.top_n);
  }
  if (j.contains("generate")) {
    const auto& g = j["generate"];
    cfg.generate.mode = g.value("mode", cfg.generate.mode);
    if (cfg.generate.mode != "synthetic" && cfg.generate.mode != "rca")
      usage_error("generate.mode must be 'synthetic' or 'rca'");
    auto& spec = cfg.generate.spec;
    spec.n_lines = g.value("n_lines", spec.n_lines);
    spec.anomaly_rate = g.value("anomaly_rate", spec.anomaly_rate);
    if (g.contains("mix")) {
      const auto& m = g["mix"];
      spec.mix.template_frac = m.value("template", 0.0);
      spec.mix.attribute_frac = m.value("attribute", 0.0);
      spec.mix.contextual_frac = m.value("contextual", 0.0);
    }
    spec.base_period_ms = g.value("base_period_ms", spec.base_period_ms);
    spec.min_run = g.value("min_run", spec.min_run);
    spec.max_run = g.value("max_run", spec.max_run);
    spec.n_sources = g.value("n_sources", spec.n_sources);
    spec.contextual_window =
        g.value("contextual_window", spec.contextual_window);
    if (g.contains("vocab"))
      spec.vocab = cfgdetail::vocab_from_json(g["vocab"]);
    auto& rs = cfg.generate.rca;
    rs.n_background_lines = g.value("n_background_lines", rs.n_background_lines);
    rs.n_causes = g.value("n_causes", rs.n_causes);
    rs.failures_per_cause = g.value("failures_per_cause", rs.failures_per_cause);
    rs.cause_lines_per_failure =
        g.value("cause_lines_per_failure", rs.cause_lines_per_failure);
    rs.services_per_cause = g.value("services_per_cause", rs.services_per_cause);
    rs.delta_ms = g.value("rca_delta_ms", rs.delta_ms);
    rs.base_period_ms = g.value("rca_base_period_ms", rs.base_period_ms);
    rs.vocab = spec.vocab;
  }
  if (j.contains("evaluate"))
    cfg.predictions_path = j["evaluate"].value("predictions_path", std::string{});
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    usage_error("config file does not exist: " + path.string());
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    usage_error("config parse error in " + path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j);
}

namespace pipedetail {

inline void write_artifact(const PipelineConfig& cfg, const std::string& name,
                           const std::string& body) {
  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir / name,
                  cfg.provenance().comment_line() + body);
}

inline void write_json_artifact(const PipelineConfig& cfg,
                                const std::string& name, nlohmann::json j) {
  const auto prov = cfg.provenance();
  j["provenance"] = {{"tool", std::string(kToolName) + " " + std::string(kVersion)},
                     {"config_digest", prov.config_digest},
                     {"seed", prov.seed}};
  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir / name, j.dump(2) + "\n");
}

inline LoadResult load_input(const PipelineConfig& cfg) {
  if (cfg.input_path.empty()) usage_error("input.path is not configured");
  LoadOptions opts;
  opts.format = cfg.input_format;
  opts.timestamp_field = cfg.timestamp_field;
  opts.head = cfg.head;
  return load_labeled_logs(cfg.input_path, opts);
}

inline void write_rejects(const PipelineConfig& cfg, const LoadResult& loaded) {
  if (!loaded.rejects.empty())
    write_artifact(cfg, "rejects.txt", export_rejects_report(loaded.rejects));
}

inline std::vector<TokenSequence> normalized_sequences(const Corpus& corpus) {
  std::vector<TokenSequence> seqs;
  seqs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    seqs.push_back(normalize(tokenize(corpus[i].content, i)));
  return seqs;
}

inline std::vector<FailureEvent> resolve_failures(const PipelineConfig& cfg,
                                                  const Corpus& corpus) {
  if (!cfg.failures_path.empty()) {
    if (!std::filesystem::exists(cfg.failures_path))
      usage_error("failures file does not exist: " + cfg.failures_path.string());
    return parse_failures_csv(read_lines(cfg.failures_path));
  }
  return failures_from_truth(corpus);
}

inline bool fully_labeled(const Corpus& corpus) {
  for (const auto& m : corpus)
    if (!m.truth) return false;
  return !corpus.empty();
}

inline std::vector<Truth> truth_vector(const Corpus& corpus) {
  std::vector<Truth> t(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) t[i] = *corpus[i].truth;
  return t;
}

inline std::string delta_tag(double delta) {
  if (delta == std::floor(delta) && std::abs(delta) < 1e15)
    return std::to_string(static_cast<long long>(delta));
  return format_double(delta);
}

} // namespace pipedetail

/// `generate`: synthetic corpus + ground-truth manifest (and, in rca mode,
/// the failure list and cause manifest).
inline void run_generate(const PipelineConfig& cfg) {
  using namespace pipedetail;
  if (cfg.generate.mode == "synthetic") {
    SyntheticSpec spec = cfg.generate.spec;
    spec.seed = derive_seed(cfg.seed, "generate");
    const SyntheticResult result = generate_synthetic(spec);
    write_artifact(cfg, "corpus.csv", export_corpus_csv(result.corpus));
    write_artifact(cfg, "manifest.csv", export_manifest(result.manifest));
  } else {
    RcaScenarioSpec spec = cfg.generate.rca;
    spec.seed = derive_seed(cfg.seed, "generate");
    const RcaScenario scenario = generate_rca_scenario(spec);
    write_artifact(cfg, "corpus.csv", export_corpus_csv(scenario.corpus));
    write_artifact(cfg, "failures.csv", export_failures_csv(scenario.failures));
    write_artifact(cfg, "rca_manifest.csv",
                   export_rca_manifest(scenario.records));
  }
}

/// `parse`: template table and parsed-corpus exports.
inline void run_parse(const PipelineConfig& cfg) {
  using namespace pipedetail;
  const LoadResult loaded = load_input(cfg);
  write_rejects(cfg, loaded);
  const ParsedCorpus parsed =
      parse_corpus(loaded.messages, cfg.miner, cfg.taxonomy.context_before,
                   cfg.taxonomy.context_after);
  write_artifact(cfg, "templates.tsv", export_template_table(parsed.templates));
  write_artifact(cfg, "parsed.csv",
                 export_parsed_corpus(loaded.messages, parsed));
}

/// `taxonomy`: one anomaly-type report per threshold, plus optional per-line
/// scores.
inline void run_taxonomy(const PipelineConfig& cfg) {
  using namespace pipedetail;
  const LoadResult loaded = load_input(cfg);
  write_rejects(cfg, loaded);
  const ParsedCorpus parsed =
      parse_corpus(loaded.messages, cfg.miner, cfg.taxonomy.context_before,
                   cfg.taxonomy.context_after);
  const LabeledSplit split = split_from_truth(loaded.messages);
  const auto scores =
      score_corpus(parsed, split, cfg.taxonomy.attribute_scope);
  for (double tau : cfg.taxonomy_thresholds) {
    const TaxonomyReport report = classify(scores, split, tau);
    write_artifact(cfg, "taxonomy_" + format_double(tau) + ".csv",
                   export_taxonomy_csv({report}));
  }
  if (cfg.taxonomy_per_line) {
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& s : scores)
      lines.push_back({{"index", loaded.messages[s.origin].index},
                       {"alpha", s.alpha},
                       {"beta", s.beta},
                       {"gamma", s.gamma},
                       {"abnormal", split.is_abnormal(s.origin)}});
    write_json_artifact(cfg, "taxonomy_scores.json", {{"lines", std::move(lines)}});
  }
}

/// `label`: weak labels, trained checkpoint, scores and (when ground truth is
/// available) metrics, for every configured delta.
inline void run_label(const PipelineConfig& cfg) {
  using namespace pipedetail;
  const LoadResult loaded = load_input(cfg);
  write_rejects(cfg, loaded);
  const Corpus& corpus = loaded.messages;
  const auto sequences = normalized_sequences(corpus);
  const auto failures = resolve_failures(cfg, corpus);

  for (std::size_t di = 0; di < cfg.deltas_ms.size(); ++di) {
    const double delta = cfg.deltas_ms[di];
    const std::string tag = delta_tag(delta);
    const WeakLabeledDataset ds =
        assign_pu_labels(corpus, failures, delta, WindowSide::symmetric);
    if (ds.no_failures_warning)
      std::cerr << "warning: no failures; all lines are P and training would "
                   "be degenerate\n";
    write_artifact(cfg, "weak_labels_" + tag + ".csv",
                   export_weak_labels_csv(ds, corpus));

    ModelConfig mc = cfg.model;
    mc.seed = derive_seed(cfg.seed, "train", di);
    const TrainedModel model = train_pu_model(sequences, ds, mc);
    if (model.log.diverged)
      numeric_error("training diverged for delta " + tag +
                    "; last-good checkpoint kept in memory only");
    write_json_artifact(cfg, "checkpoint_" + tag + ".json",
                        checkpoint_to_json(model));

    const auto z_norms = score_lines(model, sequences, cfg.threads);
    const auto labels = assign_labels(z_norms, model.q, mc);
    write_artifact(cfg, "scores_" + tag + ".csv",
                   export_scores_csv(corpus, z_norms, labels));

    if (fully_labeled(corpus)) {
      const EvalMetrics metrics = evaluate_labels(truth_vector(corpus), labels);
      write_json_artifact(cfg, "metrics_" + tag + ".json",
                          metrics_to_json(metrics));
    } else {
      std::cerr << "notice: ground truth incomplete; evaluation skipped for "
                   "delta "
                << tag << "\n";
    }
  }
}

/// `rca`: window clustering, balancing plan, rebalanced training and ranked
/// root-cause lines per window.
inline void run_rca(const PipelineConfig& cfg) {
  using namespace pipedetail;
  const LoadResult loaded = load_input(cfg);
  write_rejects(cfg, loaded);
  const Corpus& corpus = loaded.messages;
  const auto sequences = normalized_sequences(corpus);
  const auto failures = resolve_failures(cfg, corpus);

  const WeakLabeledDataset ds =
      assign_pu_labels(corpus, failures, cfg.rca_delta_ms, cfg.rca_window_side);
  if (ds.n_windows == 0) data_error("rca: no failure windows to analyze");
  write_artifact(cfg, "weak_labels_rca.csv", export_weak_labels_csv(ds, corpus));

  const auto vectors = vectorize_windows(ds, corpus, cfg.rca.binary_vectors);
  for (const auto& v : vectors)
    if (v.empty_warning)
      std::cerr << "warning: window " << v.window_id << " covers no lines\n";
  const Clustering clustering = cluster_windows(vectors, cfg.rca);
  const BalancePlan plan = target_sizes(clustering);
  write_artifact(cfg, "clusters.csv", export_clusters_csv(clustering));
  write_artifact(cfg, "plan.csv", export_plan_csv(plan));

  const WeakLabeledDataset balanced =
      rebalance(ds, clustering, plan, derive_seed(cfg.seed, "rebalance"));
  ModelConfig mc = cfg.model;
  mc.seed = derive_seed(cfg.seed, "rca-train");
  const TrainedModel model = train_pu_model(sequences, balanced, mc);
  if (model.log.diverged) numeric_error("rca training diverged");

  const auto z_norms = score_lines(model, sequences, cfg.threads);
  const auto rankings = rank_root_causes(ds, corpus, z_norms, cfg.rca.top_n);
  for (const auto& r : rankings)
    if (r.truncated_warning)
      std::cerr << "warning: window " << r.window_id
                << " holds fewer than top_n lines\n";
  write_json_artifact(cfg, "ranked_causes.json",
                      {{"windows", rankings_to_json(rankings, corpus)}});
}

/// `evaluate`: compare a scores export against ground truth.
inline void run_evaluate(const PipelineConfig& cfg) {
  using namespace pipedetail;
  const LoadResult loaded = load_input(cfg);
  const Corpus& corpus = loaded.messages;
  if (!fully_labeled(corpus))
    data_error("evaluate: corpus is not fully ground-truth labeled");
  if (cfg.predictions_path.empty())
    usage_error("evaluate.predictions_path is not configured");
  if (!std::filesystem::exists(cfg.predictions_path))
    usage_error("predictions file does not exist: " +
                cfg.predictions_path.string());

  std::map<std::size_t, Truth> predicted;
  bool header_seen = false;
  for (const auto& line : read_lines(cfg.predictions_path)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "index,z_norm,label")
        data_error("predictions: expected header 'index,z_norm,label'");
      header_seen = true;
      continue;
    }
    const auto fields = split_csv(line, 3);
    const auto idx = parse_int<std::size_t>(fields[0]);
    if (!idx || fields.size() != 3)
      data_error("predictions: unparsable row '" + line + "'");
    predicted[*idx] =
        fields[2] == "1" ? Truth::abnormal : Truth::normal;
  }

  std::vector<Truth> truth, pred;
  for (const auto& m : corpus) {
    auto it = predicted.find(m.index);
    if (it == predicted.end())
      data_error("predictions: line " + std::to_string(m.index) + " missing");
    truth.push_back(*m.truth);
    pred.push_back(it->second);
  }
  if (predicted.size() != corpus.size())
    data_error("predictions: line set does not match the corpus");
  write_json_artifact(cfg, "metrics.json",
                      metrics_to_json(evaluate_labels(truth, pred)));
}

} // namespace logsift
