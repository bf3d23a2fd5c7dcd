#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "logsift/ingest.hpp"
#include "logsift/parse.hpp"
#include "logsift/types.hpp"

namespace testutil {

inline logsift::Corpus make_corpus(const std::vector<std::string>& contents,
                                   std::int64_t step_ms = 1000) {
  logsift::Corpus corpus;
  for (std::size_t i = 0; i < contents.size(); ++i) {
    logsift::LogMessage m;
    m.index = i;
    m.timestamp_ms = 1'000'000 + static_cast<std::int64_t>(i) * step_ms;
    m.source = "svc" + std::to_string(i % 3);
    m.content = contents[i];
    m.truth = logsift::Truth::normal;
    corpus.push_back(std::move(m));
  }
  return corpus;
}

inline logsift::SyntheticSpec small_spec(std::uint64_t seed, std::size_t n,
                                         double rate,
                                         logsift::AnomalyMix mix = {1, 0, 0}) {
  logsift::SyntheticSpec spec;
  spec.n_lines = n;
  spec.vocab = logsift::default_vocab();
  spec.anomaly_rate = rate;
  spec.mix = mix;
  spec.base_period_ms = 250.0;
  spec.seed = seed;
  spec.min_run = 25;
  spec.max_run = 35;
  spec.contextual_window = 12;
  return spec;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("logsift_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace testutil
