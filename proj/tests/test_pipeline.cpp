#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "logsift/pipeline.hpp"

using namespace logsift;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json base_config(const fs::path& dir) {
  return {
      {"seed", 77},
      {"output_dir", (dir / "out").string()},
      {"input", {{"path", (dir / "out" / "corpus.csv").string()},
                 {"format", "csv"}}},
      {"generate",
       {{"mode", "synthetic"},
        {"n_lines", 600},
        {"anomaly_rate", 0.05},
        {"mix", {{"template", 0.6}, {"attribute", 0.4}, {"contextual", 0.0}}},
        {"base_period_ms", 250.0},
        {"min_run", 25},
        {"max_run", 35}}},
      {"model",
       {{"max_len", 10},
        {"embed_dim", 16},
        {"hidden_dim", 32},
        {"n_layers", 1},
        {"n_heads", 2},
        {"dropout_rate", 0.1},
        {"batch_size", 64},
        {"epochs", 2},
        {"learning_rate", 1e-3},
        {"weight_decay", 5e-5}}}};
}

} // namespace

TEST_CASE("generate then parse produces the expected artifacts", "[pipeline]") {
  const auto dir = testutil::temp_dir("genparse");
  const auto cfg = pipeline_config_from_json(base_config(dir));
  run_generate(cfg);
  REQUIRE(fs::exists(dir / "out" / "corpus.csv"));
  REQUIRE(fs::exists(dir / "out" / "manifest.csv"));
  run_parse(cfg);
  REQUIRE(fs::exists(dir / "out" / "templates.tsv"));
  REQUIRE(fs::exists(dir / "out" / "parsed.csv"));
  // provenance comment heads every artifact
  REQUIRE(slurp(dir / "out" / "templates.tsv").rfind("# logsift ", 0) == 0);
}

TEST_CASE("missing input fails fast with a usage error naming the path",
          "[pipeline]") {
  const auto dir = testutil::temp_dir("missing");
  auto j = base_config(dir);
  j["input"]["path"] = (dir / "nope.csv").string();
  const auto cfg = pipeline_config_from_json(j);
  try {
    run_parse(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    REQUIRE(e.exit_code() == 2);
    REQUIRE(std::string(e.what()).find("nope.csv") != std::string::npos);
  }
}

TEST_CASE("reruns are byte-identical", "[pipeline]") {
  const auto dir = testutil::temp_dir("rerun");
  const auto cfg = pipeline_config_from_json(base_config(dir));
  run_generate(cfg);
  run_parse(cfg);
  run_taxonomy(cfg);
  const auto first_templates = slurp(dir / "out" / "templates.tsv");
  const auto first_report = slurp(dir / "out" / "taxonomy_0.7.csv");
  run_generate(cfg);
  run_parse(cfg);
  run_taxonomy(cfg);
  REQUIRE(slurp(dir / "out" / "templates.tsv") == first_templates);
  REQUIRE(slurp(dir / "out" / "taxonomy_0.7.csv") == first_report);
}

TEST_CASE("taxonomy threshold list can be overridden", "[pipeline]") {
  const auto dir = testutil::temp_dir("tauover");
  auto j = base_config(dir);
  j["taxonomy"] = {{"thresholds", {0.5}}, {"per_line", true}};
  const auto cfg = pipeline_config_from_json(j);
  run_generate(cfg);
  run_taxonomy(cfg);
  REQUIRE(fs::exists(dir / "out" / "taxonomy_0.5.csv"));
  REQUIRE_FALSE(fs::exists(dir / "out" / "taxonomy_0.6.csv"));
  const auto scores =
      nlohmann::json::parse(slurp(dir / "out" / "taxonomy_scores.json"));
  REQUIRE(scores["lines"].size() == 600);
  REQUIRE(scores["lines"][0].contains("alpha"));
}

TEST_CASE("label emits weak labels, checkpoint, scores and metrics",
          "[pipeline]") {
  const auto dir = testutil::temp_dir("label");
  auto j = base_config(dir);
  j["weaklabel"] = {{"deltas_ms", {1000.0}}};
  const auto cfg = pipeline_config_from_json(j);
  run_generate(cfg);
  run_label(cfg);
  REQUIRE(fs::exists(dir / "out" / "weak_labels_1000.csv"));
  REQUIRE(fs::exists(dir / "out" / "checkpoint_1000.json"));
  REQUIRE(fs::exists(dir / "out" / "scores_1000.csv"));
  const auto metrics =
      nlohmann::json::parse(slurp(dir / "out" / "metrics_1000.json"));
  REQUIRE(metrics.contains("f1"));
  REQUIRE(metrics.contains("provenance"));
}

TEST_CASE("label without ground truth skips evaluation", "[pipeline]") {
  const auto dir = testutil::temp_dir("notruth");
  auto j = base_config(dir);
  const auto cfg = pipeline_config_from_json(j);
  run_generate(cfg);

  // strip the truth column and supply failures explicitly
  auto lines = read_lines(dir / "out" / "corpus.csv");
  std::string stripped;
  std::vector<FailureEvent> failures;
  for (const auto& line : lines) {
    if (line.empty() || line[0] == '#' || line == kCorpusCsvHeader) {
      stripped += line + "\n";
      continue;
    }
    const auto fields = split_csv(line, 5);
    if (fields[3] == "1")
      failures.push_back({*parse_int<std::int64_t>(fields[1]), ""});
    stripped += std::string(fields[0]) + "," + std::string(fields[1]) + "," +
                std::string(fields[2]) + ",," + std::string(fields[4]) + "\n";
  }
  write_text_file(dir / "unlabeled.csv", stripped);
  write_text_file(dir / "failures.csv", export_failures_csv(failures));

  auto j2 = base_config(dir);
  j2["input"]["path"] = (dir / "unlabeled.csv").string();
  j2["weaklabel"] = {{"deltas_ms", {1000.0}},
                     {"failures_path", (dir / "failures.csv").string()}};
  const auto cfg2 = pipeline_config_from_json(j2);
  run_label(cfg2);
  REQUIRE(fs::exists(dir / "out" / "scores_1000.csv"));
  REQUIRE_FALSE(fs::exists(dir / "out" / "metrics_1000.json"));
}

TEST_CASE("evaluate compares a scores export against truth", "[pipeline]") {
  const auto dir = testutil::temp_dir("evaluate");
  auto j = base_config(dir);
  const auto cfg = pipeline_config_from_json(j);
  run_generate(cfg);
  run_label(cfg);
  auto j2 = base_config(dir);
  j2["evaluate"] = {
      {"predictions_path", (dir / "out" / "scores_1000.csv").string()}};
  run_evaluate(pipeline_config_from_json(j2));
  const auto metrics =
      nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
  REQUIRE(metrics.contains("f1"));
}

TEST_CASE("rca pipeline exports clusters, plan and rankings", "[pipeline]") {
  const auto dir = testutil::temp_dir("rca");
  nlohmann::json j = {
      {"seed", 5},
      {"output_dir", (dir / "out").string()},
      {"input", {{"path", (dir / "out" / "corpus.csv").string()},
                 {"format", "csv"}}},
      {"generate",
       {{"mode", "rca"},
        {"n_background_lines", 2500},
        {"n_causes", 3},
        {"failures_per_cause", 4},
        {"cause_lines_per_failure", 5},
        {"rca_base_period_ms", 400.0}}},
      {"weaklabel",
       {{"failures_path", (dir / "out" / "failures.csv").string()}}},
      {"rca", {{"delta_ms", 1000.0}, {"top_n", 3}}},
      {"model",
       {{"max_len", 10},
        {"embed_dim", 16},
        {"hidden_dim", 32},
        {"n_layers", 1},
        {"n_heads", 2},
        {"batch_size", 128},
        {"epochs", 3},
        {"learning_rate", 3e-3}}}};
  const auto cfg = pipeline_config_from_json(j);
  run_generate(cfg);
  REQUIRE(fs::exists(dir / "out" / "failures.csv"));
  REQUIRE(fs::exists(dir / "out" / "rca_manifest.csv"));
  run_rca(cfg);
  REQUIRE(fs::exists(dir / "out" / "clusters.csv"));
  REQUIRE(fs::exists(dir / "out" / "plan.csv"));
  const auto ranked =
      nlohmann::json::parse(slurp(dir / "out" / "ranked_causes.json"));
  REQUIRE(ranked.contains("windows"));
  REQUIRE(ranked["windows"].size() == 12);
  for (const auto& w : ranked["windows"])
    REQUIRE(w["lines"].size() == 3);
}

TEST_CASE("config errors carry usage exit codes", "[pipeline]") {
  nlohmann::json j = {{"taxonomy", {{"thresholds", {1.5}}}}};
  try {
    pipeline_config_from_json(j);
    FAIL("expected an error");
  } catch (const Error& e) {
    REQUIRE(e.exit_code() == 2);
  }
}

TEST_CASE("cli binary maps errors to exit codes", "[pipeline]") {
  const auto dir = testutil::temp_dir("cli");
  // missing config file -> usage error 2
  const std::string cmd = std::string(LOGSIFT_BIN) + " parse --config " +
                          (dir / "absent.json").string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WEXITSTATUS(rc) == 2);

  // happy path: generate into a fresh directory
  write_text_file(dir / "cfg.json", base_config(dir).dump(2));
  const std::string gen = std::string(LOGSIFT_BIN) + " generate --config " +
                          (dir / "cfg.json").string() + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(gen.c_str())) == 0);
  REQUIRE(fs::exists(dir / "out" / "corpus.csv"));
}
