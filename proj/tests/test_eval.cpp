#include <catch2/catch_amalgamated.hpp>

#include "logsift/eval.hpp"
#include "logsift/rng.hpp"

using namespace logsift;

namespace {

std::vector<Truth> truths(const std::string& pattern) {
  std::vector<Truth> out;
  for (char c : pattern)
    out.push_back(c == '1' ? Truth::abnormal : Truth::normal);
  return out;
}

} // namespace

TEST_CASE("perfect prediction scores f1 = 1", "[eval]") {
  const auto m = evaluate_labels(truths("00110"), truths("00110"));
  REQUIRE(m.f1 == 1.0);
  REQUIRE(m.precision == 1.0);
  REQUIRE(m.recall == 1.0);
  REQUIRE(m.flags.empty());
}

TEST_CASE("tp=8 fp=2 fn=2 gives 0.8 across the board", "[eval]") {
  const std::vector<Truth> truth = truths("11111111" "00" "11" "000");
  const std::vector<Truth> pred  = truths("11111111" "11" "00" "000");
  const auto m = evaluate_labels(truth, pred);
  REQUIRE(m.counts.tp == 8);
  REQUIRE(m.counts.fp == 2);
  REQUIRE(m.counts.fn == 2);
  REQUIRE(m.counts.tn == 3);
  REQUIRE(m.precision == Catch::Approx(0.8));
  REQUIRE(m.recall == Catch::Approx(0.8));
  REQUIRE(m.f1 == Catch::Approx(0.8));
}

TEST_CASE("all-normal prediction on mixed truth is flagged", "[eval]") {
  const auto m = evaluate_labels(truths("0101"), truths("0000"));
  REQUIRE(m.recall == 0.0);
  REQUIRE(m.f1 == 0.0);
  REQUIRE_FALSE(m.flags.empty());
}

TEST_CASE("mismatched line sets are rejected", "[eval]") {
  REQUIRE_THROWS_AS(evaluate_labels(truths("01"), truths("0")), Error);
  REQUIRE_THROWS_AS(evaluate_labels({}, {}), Error);
}

TEST_CASE("confusion total covers the corpus", "[eval]") {
  const auto m = evaluate_labels(truths("0110101"), truths("1110001"));
  REQUIRE(m.counts.total() == 7);
}

TEST_CASE("swapping predictions swaps tp/fp and tn/fn", "[eval]") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Truth> truth, pred;
    for (int i = 0; i < 40; ++i) {
      truth.push_back(rng.next_below(2) ? Truth::abnormal : Truth::normal);
      pred.push_back(rng.next_below(2) ? Truth::abnormal : Truth::normal);
    }
    std::vector<Truth> flipped;
    for (Truth t : pred)
      flipped.push_back(t == Truth::abnormal ? Truth::normal : Truth::abnormal);
    const auto a = evaluate_labels(truth, pred);
    const auto b = evaluate_labels(truth, flipped);
    REQUIRE(a.counts.tp == b.counts.fn);
    REQUIRE(a.counts.fp == b.counts.tn);
    REQUIRE(a.counts.tn == b.counts.fp);
    REQUIRE(a.counts.fn == b.counts.tp);
  }
}

TEST_CASE("f1 sits between min(P,R) and 2*min(P,R)", "[eval]") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Truth> truth, pred;
    for (int i = 0; i < 60; ++i) {
      truth.push_back(rng.next_below(3) == 0 ? Truth::abnormal : Truth::normal);
      pred.push_back(rng.next_below(3) == 0 ? Truth::abnormal : Truth::normal);
    }
    const auto m = evaluate_labels(truth, pred);
    if (m.flags.empty()) {
      const double lo = std::min(m.precision, m.recall);
      REQUIRE(m.f1 >= lo - 1e-12);
      REQUIRE(m.f1 <= 2.0 * lo + 1e-12);
    }
  }
}

TEST_CASE("metrics serialize with flags", "[eval]") {
  const auto j = metrics_to_json(evaluate_labels(truths("01"), truths("00")));
  REQUIRE(j.contains("f1"));
  REQUIRE(j["tp"] == 0);
  REQUIRE(j["flags"].is_array());
}
