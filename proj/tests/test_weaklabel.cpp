#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "helpers.hpp"
#include "logsift/ingest.hpp"
#include "logsift/weaklabel.hpp"

using namespace logsift;

namespace {

Corpus corpus_at(const std::vector<std::int64_t>& timestamps) {
  Corpus corpus;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    LogMessage m;
    m.index = i;
    m.timestamp_ms = timestamps[i];
    m.content = "line " + std::to_string(i);
    m.truth = Truth::normal;
    corpus.push_back(std::move(m));
  }
  return corpus;
}

std::set<std::size_t> unknown_lines(const WeakLabeledDataset& ds) {
  std::set<std::size_t> u;
  for (const auto& e : ds.entries)
    if (e.label == WeakLabel::unknown) u.insert(e.line);
  return u;
}

} // namespace

TEST_CASE("closed window membership", "[weaklabel]") {
  const auto corpus = corpus_at({98'500, 99'500, 100'500, 102'000});
  const auto ds = assign_pu_labels(corpus, {{100'000, ""}}, 1000.0);
  REQUIRE(unknown_lines(ds) == std::set<std::size_t>{1, 2});
  REQUIRE(ds.n_windows == 1);
  REQUIRE(ds.entries[1].windows == std::vector<std::uint32_t>{0});
}

TEST_CASE("window edges are inclusive", "[weaklabel]") {
  const auto corpus = corpus_at({99'000, 101'000, 101'001});
  const auto ds = assign_pu_labels(corpus, {{100'000, ""}}, 1000.0);
  REQUIRE(unknown_lines(ds) == std::set<std::size_t>{0, 1});
}

TEST_CASE("no failures yields an all-P dataset with a warning", "[weaklabel]") {
  const auto corpus = corpus_at({1, 2, 3});
  const auto ds = assign_pu_labels(corpus, {}, 500.0);
  REQUIRE(ds.no_failures_warning);
  REQUIRE(unknown_lines(ds).empty());
  REQUIRE(ds.count(WeakLabel::positive) == 3);
}

TEST_CASE("delta must be positive and timestamps ordered", "[weaklabel]") {
  const auto corpus = corpus_at({1, 2});
  REQUIRE_THROWS_AS(assign_pu_labels(corpus, {}, 0.0), Error);
  auto bad = corpus;
  bad[1].timestamp_ms = 0;
  REQUIRE_THROWS_AS(assign_pu_labels(bad, {{1, ""}}, 10.0), Error);
}

TEST_CASE("overlapping windows keep distinct ids", "[weaklabel]") {
  const auto corpus = corpus_at({1000, 1400, 1800});
  const auto ds =
      assign_pu_labels(corpus, {{1200, "a"}, {1600, "b"}}, 500.0);
  REQUIRE(ds.entries[1].windows == std::vector<std::uint32_t>{0, 1});
  REQUIRE(ds.entries[0].windows == std::vector<std::uint32_t>{0});
  REQUIRE(ds.entries[2].windows == std::vector<std::uint32_t>{1});
}

TEST_CASE("labels are independent of failure ordering", "[weaklabel]") {
  const auto corpus =
      corpus_at({1000, 2000, 3000, 4000, 5000, 6000, 7000});
  std::vector<FailureEvent> failures = {{5500, "x"}, {1500, "y"}, {3100, "z"}};
  const auto a = assign_pu_labels(corpus, failures, 600.0);
  std::reverse(failures.begin(), failures.end());
  const auto b = assign_pu_labels(corpus, failures, 600.0);
  REQUIRE(export_weak_labels_csv(a, corpus) ==
          export_weak_labels_csv(b, corpus));
}

TEST_CASE("before windows exclude the failure instant", "[weaklabel]") {
  const auto corpus = corpus_at({99'000, 99'999, 100'000, 100'500});
  const auto ds =
      assign_pu_labels(corpus, {{100'000, ""}}, 1000.0, WindowSide::before);
  REQUIRE(unknown_lines(ds) == std::set<std::size_t>{0, 1});
}

TEST_CASE("U grows monotonically with delta", "[weaklabel]") {
  const auto synth = generate_synthetic(testutil::small_spec(71, 800, 0.05));
  Rng rng(99);
  const auto t0 = synth.corpus.front().timestamp_ms;
  const auto t1 = synth.corpus.back().timestamp_ms;
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<FailureEvent> failures;
    const std::size_t n_fail = 1 + rng.next_below(6);
    for (std::size_t f = 0; f < n_fail; ++f)
      failures.push_back(
          {t0 + static_cast<std::int64_t>(
                    rng.next_below(static_cast<std::uint64_t>(t1 - t0))),
           ""});
    const double d1 = 200.0 + rng.uniform(0, 800);
    const double d2 = d1 + rng.uniform(0, 2000);
    const auto u1 = unknown_lines(assign_pu_labels(synth.corpus, failures, d1));
    const auto u2 = unknown_lines(assign_pu_labels(synth.corpus, failures, d2));
    REQUIRE(std::includes(u2.begin(), u2.end(), u1.begin(), u1.end()));
  }
}

TEST_CASE("failures_from_truth places one event per abnormal line",
          "[weaklabel]") {
  auto corpus = corpus_at({5000, 7000, 9000});
  corpus[0].truth = Truth::abnormal;
  corpus[2].truth = Truth::abnormal;
  const auto events = failures_from_truth(corpus);
  REQUIRE(events.size() == 2);
  REQUIRE(events[0].timestamp_ms == 5000);
  REQUIRE(events[1].timestamp_ms == 9000);
}

TEST_CASE("failures_from_truth rejects unusable corpora", "[weaklabel]") {
  auto all_normal = corpus_at({1, 2});
  REQUIRE_THROWS_AS(failures_from_truth(all_normal), Error);
  auto unlabeled = corpus_at({1, 2});
  unlabeled[0].truth.reset();
  unlabeled[1].truth.reset();
  REQUIRE_THROWS_AS(failures_from_truth(unlabeled), Error);
}

TEST_CASE("synthetic corpora give one failure per manifest entry",
          "[weaklabel]") {
  const auto synth = generate_synthetic(testutil::small_spec(81, 900, 0.05));
  const auto events = failures_from_truth(synth.corpus);
  REQUIRE(events.size() == synth.manifest.entries.size());
}

TEST_CASE("evaluation datasets keep every abnormal line inside U",
          "[weaklabel]") {
  const auto synth = generate_synthetic(
      testutil::small_spec(82, 1200, 0.06, AnomalyMix{0.6, 0.4, 0.0}));
  const auto events = failures_from_truth(synth.corpus);
  for (double delta : {1.0, 1000.0, 5000.0}) {
    const auto ds = assign_pu_labels(synth.corpus, events, delta);
    const auto u = unknown_lines(ds);
    for (const auto& e : synth.manifest.entries) REQUIRE(u.count(e.index) == 1);
  }
}

TEST_CASE("failure csv round-trips", "[weaklabel]") {
  std::vector<FailureEvent> failures = {{1000, "diskfail"}, {2000, ""}};
  const auto text = export_failures_csv(failures);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(parse_failures_csv(lines) == failures);
}

TEST_CASE("weak label export format", "[weaklabel]") {
  const auto corpus = corpus_at({1000, 1100});
  const auto ds = assign_pu_labels(corpus, {{1050, ""}}, 60.0);
  REQUIRE(export_weak_labels_csv(ds, corpus) ==
          "index,weak_label,window_ids\n0,U,0\n1,U,0\n");
}
