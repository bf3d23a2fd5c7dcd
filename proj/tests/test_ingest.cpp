#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "helpers.hpp"
#include "logsift/ingest.hpp"
#include "logsift/parse.hpp"

using namespace logsift;

TEST_CASE("supercomputer format: dash label means normal", "[ingest]") {
  LoadOptions opts;
  opts.format = CorpusFormat::supercomputer;
  const auto result = load_labeled_logs(
      std::vector<std::string>{"- 1117838570 2005.06.03 R02-M1-N0 APPUNAVAIL msg"},
      opts);
  REQUIRE(result.messages.size() == 1);
  REQUIRE(result.messages[0].truth == Truth::normal);
  REQUIRE(result.messages[0].timestamp_ms == 1117838570000LL);
  REQUIRE(result.messages[0].content == "2005.06.03 R02-M1-N0 APPUNAVAIL msg");
  REQUIRE(result.rejects.empty());
}

TEST_CASE("supercomputer format: any other label is abnormal", "[ingest]") {
  LoadOptions opts;
  opts.format = CorpusFormat::supercomputer;
  const auto result = load_labeled_logs(
      std::vector<std::string>{"KERNDTLB 1117838570 kernel on fire",
                               "- 1117838571 all quiet"},
      opts);
  REQUIRE(result.messages[0].truth == Truth::abnormal);
  REQUIRE(result.messages[1].truth == Truth::normal);
}

TEST_CASE("csv loader maps truth column {0,1,''}", "[ingest]") {
  const auto result = load_labeled_logs(
      {std::string(kCorpusCsvHeader), "0,1000,svcA,0,hello world",
       "1,2000,svcB,1,bad things, with a comma", "2,3000,svcA,,unlabeled"},
      LoadOptions{});
  REQUIRE(result.messages.size() == 3);
  REQUIRE(result.messages[0].truth == Truth::normal);
  REQUIRE(result.messages[1].truth == Truth::abnormal);
  REQUIRE(result.messages[1].content == "bad things, with a comma");
  REQUIRE_FALSE(result.messages[2].truth.has_value());
}

TEST_CASE("malformed lines are rejected without aborting", "[ingest]") {
  LoadOptions opts;
  opts.format = CorpusFormat::supercomputer;
  const auto result = load_labeled_logs(
      {"- 1117838570 fine", "- not_a_timestamp broken", "-",
       "- 1117838500 goes backwards", "- 1117838600 fine too"},
      opts);
  REQUIRE(result.messages.size() == 2);
  REQUIRE(result.rejects.size() == 3);
  REQUIRE(result.rejects[0].line_no == 1);
  REQUIRE(result.rejects[1].line_no == 2);
  REQUIRE(result.rejects[2].reason == "timestamp out of order");
  // indices keep the raw file positions
  REQUIRE(result.messages[1].index == 4);
}

TEST_CASE("empty or fully rejected input is an error", "[ingest]") {
  LoadOptions sc;
  sc.format = CorpusFormat::supercomputer;
  REQUIRE_THROWS_AS(load_labeled_logs(std::vector<std::string>{}, sc), Error);
  REQUIRE_THROWS_AS(load_labeled_logs(std::vector<std::string>{"", ""}, sc),
                    Error);
  REQUIRE_THROWS_AS(
      load_labeled_logs(std::vector<std::string>{std::string(kCorpusCsvHeader)},
                        LoadOptions{}),
      Error);
}

TEST_CASE("head keeps only the first raw lines", "[ingest]") {
  LoadOptions opts;
  opts.head = 2;
  const auto result = load_labeled_logs(
      {std::string(kCorpusCsvHeader), "0,1000,a,0,x", "1,2000,a,0,y",
       "2,3000,a,0,z"},
      opts);
  REQUIRE(result.messages.size() == 2);
}

TEST_CASE("csv round-trip reproduces the corpus", "[ingest]") {
  const auto synth = generate_synthetic(testutil::small_spec(9, 400, 0.05));
  const auto text = export_corpus_csv(synth.corpus);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  const auto reloaded = load_labeled_logs(lines, LoadOptions{});
  REQUIRE(reloaded.rejects.empty());
  REQUIRE(reloaded.messages == synth.corpus);
}

TEST_CASE("generator is byte-identical per seed", "[ingest]") {
  const auto spec = testutil::small_spec(
      17, 600, 0.08, AnomalyMix{0.5, 0.3, 0.2});
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  REQUIRE(export_corpus_csv(a.corpus) == export_corpus_csv(b.corpus));
  REQUIRE(export_manifest(a.manifest) == export_manifest(b.manifest));
  auto other = spec;
  other.seed = 18;
  REQUIRE(export_corpus_csv(generate_synthetic(other).corpus) !=
          export_corpus_csv(a.corpus));
}

TEST_CASE("zero anomaly rate gives an empty manifest", "[ingest]") {
  const auto result = generate_synthetic(testutil::small_spec(3, 300, 0.0));
  REQUIRE(result.manifest.entries.empty());
  REQUIRE(count_abnormal(result.corpus) == 0);
}

TEST_CASE("anomaly count matches the configured rate", "[ingest]") {
  const auto result = generate_synthetic(testutil::small_spec(4, 1000, 0.05));
  REQUIRE(result.manifest.entries.size() == 50);
  // label conservation
  REQUIRE(count_abnormal(result.corpus) == result.manifest.entries.size());
}

TEST_CASE("timestamps are non-decreasing and indices strictly increase",
          "[ingest]") {
  const auto result = generate_synthetic(testutil::small_spec(5, 500, 0.1));
  for (std::size_t i = 1; i < result.corpus.size(); ++i) {
    REQUIRE(result.corpus[i].timestamp_ms >=
            result.corpus[i - 1].timestamp_ms);
    REQUIRE(result.corpus[i].index > result.corpus[i - 1].index);
  }
}

TEST_CASE("template anomalies use skeletons outside the normal pool",
          "[ingest]") {
  const auto spec = testutil::small_spec(6, 800, 0.05, AnomalyMix{1, 0, 0});
  const auto result = generate_synthetic(spec);
  REQUIRE_FALSE(result.manifest.entries.empty());
  // collect every token the normal vocabulary can emit
  std::set<std::string> normal_tokens;
  for (const auto& t : spec.vocab) {
    for (const auto& tok : t.skeleton)
      if (tok != "<*>") normal_tokens.insert(tok);
    for (const auto& pool : t.slot_values)
      for (const auto& v : pool) normal_tokens.insert(v);
  }
  for (const auto& e : result.manifest.entries) {
    REQUIRE(e.kind == AnomalyKind::template_anomaly);
    const auto seq = tokenize(result.corpus[e.index].content);
    for (const auto& tok : seq.tokens)
      REQUIRE(normal_tokens.count(tok) == 0);
  }
}

TEST_CASE("attribute anomalies draw pooled slots from the anomalous pool",
          "[ingest]") {
  const auto spec = testutil::small_spec(7, 800, 0.04, AnomalyMix{0, 1, 0});
  const auto result = generate_synthetic(spec);
  std::set<std::string> bad_values;
  for (const auto& t : spec.vocab)
    for (const auto& pool : t.anomalous_slot_values)
      for (const auto& v : pool) bad_values.insert(v);
  for (const auto& e : result.manifest.entries) {
    REQUIRE(e.kind == AnomalyKind::attribute_anomaly);
    const auto seq = tokenize(result.corpus[e.index].content);
    bool has_bad = false;
    for (const auto& tok : seq.tokens)
      if (bad_values.count(tok)) has_bad = true;
    REQUIRE(has_bad);
  }
}

TEST_CASE("incompatible mixes are rejected", "[ingest]") {
  auto spec = testutil::small_spec(8, 200, 0.1, AnomalyMix{0, 1, 0});
  spec.vocab = {{{"fixed", "message", "body"}, {}, {}}}; // no slots
  REQUIRE_THROWS_AS(generate_synthetic(spec), Error);

  auto ctx = testutil::small_spec(8, 200, 0.1, AnomalyMix{0, 0, 1});
  ctx.vocab.resize(3); // contextual injection needs >= 4 templates
  REQUIRE_THROWS_AS(generate_synthetic(ctx), Error);

  auto bad_mix = testutil::small_spec(8, 200, 0.1);
  bad_mix.mix = AnomalyMix{0.5, 0.2, 0.2};
  REQUIRE_THROWS_AS(generate_synthetic(bad_mix), Error);
}

TEST_CASE("manifest text round-trips", "[ingest]") {
  const auto result = generate_synthetic(
      testutil::small_spec(10, 600, 0.06, AnomalyMix{0.4, 0.3, 0.3}));
  const auto text = export_manifest(result.manifest);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  const auto parsed = parse_manifest(lines);
  REQUIRE(parsed.entries == result.manifest.entries);
}

TEST_CASE("rca scenario plants disjoint cause signatures", "[ingest]") {
  RcaScenarioSpec spec;
  spec.n_background_lines = 3000;
  spec.failures_per_cause = 4;
  spec.base_period_ms = 400.0;
  spec.seed = 21;
  const auto scenario = generate_rca_scenario(spec);
  REQUIRE(scenario.failures.size() == 12);
  REQUIRE(scenario.records.size() == 12);
  for (const auto& rec : scenario.records) {
    REQUIRE(rec.planted_lines.size() == spec.cause_lines_per_failure);
    for (std::size_t line : rec.planted_lines) {
      REQUIRE(scenario.corpus[line].truth == Truth::abnormal);
      // planted lines sit strictly inside the before-window
      const auto ts = scenario.corpus[line].timestamp_ms;
      REQUIRE(ts >= rec.failure_ts - 1000);
      REQUIRE(ts < rec.failure_ts);
      REQUIRE(scenario.corpus[line].source.rfind(
                  "cause" + std::to_string(rec.cause), 0) == 0);
    }
  }
  for (std::size_t i = 1; i < scenario.corpus.size(); ++i)
    REQUIRE(scenario.corpus[i].timestamp_ms >=
            scenario.corpus[i - 1].timestamp_ms);
}
