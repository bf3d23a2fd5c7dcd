#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "logsift/encoder.hpp"
#include "logsift/parse.hpp"
#include "logsift/rng.hpp"
#include "logsift/types.hpp"
#include "logsift/weaklabel.hpp"

namespace logsift {

/// Token table frozen after one pass over the training corpus. The special
/// ids are fixed; unseen tokens map to [UNK] at inference time.
struct Vocabulary {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kCls = 1;
  static constexpr std::int32_t kUnk = 2;
  static constexpr std::int32_t kHex = 3;
  static constexpr std::int32_t kNum = 4;

  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::int32_t> index;

  static Vocabulary build(const std::vector<TokenSequence>& corpus) {
    Vocabulary v;
    for (const char* s : {"[PAD]", "[CLS]", "[UNK]", "[HEX]", "[NUM]"})
      v.add(s);
    for (const auto& seq : corpus)
      for (const auto& tok : seq.tokens) v.add(tok);
    return v;
  }

  static Vocabulary from_tokens(std::vector<std::string> toks) {
    Vocabulary v;
    for (auto& t : toks) v.add(std::move(t));
    return v;
  }

  std::int32_t id(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnk : it->second;
  }

  std::size_t size() const { return tokens.size(); }

private:
  void add(std::string tok) {
    if (index.count(tok)) return;
    index.emplace(tok, static_cast<std::int32_t>(tokens.size()));
    tokens.push_back(std::move(tok));
  }
};

/// [CLS]-prefixed, truncated to max_len, right-padded with [PAD].
inline std::vector<std::int32_t> build_input(const TokenSequence& seq,
                                             const Vocabulary& vocab,
                                             std::size_t max_len) {
  if (max_len < 2) usage_error("build_input: max_len must be >= 2");
  std::vector<std::int32_t> ids(max_len, Vocabulary::kPad);
  ids[0] = Vocabulary::kCls;
  const std::size_t n = std::min(seq.tokens.size(), max_len - 1);
  for (std::size_t t = 0; t < n; ++t) ids[t + 1] = vocab.id(seq.tokens[t]);
  return ids;
}

inline IdMatrix build_id_matrix(const std::vector<TokenSequence>& corpus,
                                const Vocabulary& vocab, std::size_t max_len) {
  IdMatrix ids(static_cast<Eigen::Index>(corpus.size()),
               static_cast<Eigen::Index>(max_len));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto row = build_input(corpus[i], vocab, max_len);
    for (std::size_t t = 0; t < max_len; ++t)
      ids(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = row[t];
  }
  return ids;
}

inline void check_q(double q) {
  if (!(q > 0.0) || !(q < 1.0))
    data_error("q ratio must lie in (0,1); the weak-label split is degenerate");
}

/// Mean over the batch of (1-y)*||z||^2 + y*q^2/max(||z||, eps), with y = 1
/// for unknown-class lines.
inline double pu_loss(const std::vector<double>& z_norms,
                      const std::vector<WeakLabel>& labels, double q) {
  if (z_norms.empty() || z_norms.size() != labels.size())
    usage_error("pu_loss: batch must be non-empty with matching labels");
  check_q(q);
  double total = 0.0;
  for (std::size_t i = 0; i < z_norms.size(); ++i) {
    if (labels[i] == WeakLabel::positive)
      total += z_norms[i] * z_norms[i];
    else
      total += q * q / std::max(z_norms[i], kNormEpsilon);
  }
  return total / static_cast<double>(z_norms.size());
}

/// Loss plus dLoss/dz for a batch of z vectors.
inline double pu_loss_grad(const Mat& z, const std::vector<WeakLabel>& labels,
                           double q, Mat& dz) {
  check_q(q);
  const Eigen::Index B = z.rows();
  if (B == 0 || static_cast<std::size_t>(B) != labels.size())
    usage_error("pu_loss_grad: batch/label mismatch");
  const double m = static_cast<double>(B);
  dz.resize(B, z.cols());
  double total = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const double s = z.row(b).norm();
    if (labels[static_cast<std::size_t>(b)] == WeakLabel::positive) {
      total += s * s;
      dz.row(b) = (2.0 / m) * z.row(b);
    } else {
      const double sc = std::max(s, kNormEpsilon);
      total += q * q / sc;
      if (s > kNormEpsilon)
        dz.row(b) = (-q * q / (m * s * s * s)) * z.row(b);
      else
        dz.row(b).setZero();
    }
  }
  return total / m;
}

struct TrainingLog {
  std::vector<double> epoch_mean_loss;
  double q = 0.0;
  std::size_t steps = 0;
  bool diverged = false;
};

struct TrainedModel {
  ModelConfig cfg;
  Vocabulary vocab;
  EncoderTensors params;
  double q = 0.0;
  TrainingLog log;
};

/// Trains the encoder on the weak labels. Deterministic for a fixed config:
/// init, shuffling and dropout all draw from seeds derived from cfg.seed.
/// A non-finite loss rolls the parameters back to the last epoch boundary and
/// stops training with the diverged flag set.
inline TrainedModel train_pu_model(const std::vector<TokenSequence>& normalized,
                                   const WeakLabeledDataset& dataset,
                                   ModelConfig cfg) {
  cfg.validate();
  const std::size_t n_pos = dataset.count(WeakLabel::positive);
  const std::size_t n_unk = dataset.entries.size() - n_pos;
  if (n_pos == 0 || n_unk == 0)
    data_error("training needs both P and U lines");
  for (const auto& e : dataset.entries)
    if (e.line >= normalized.size())
      data_error("weak-label entry points outside the corpus");

  TrainedModel model;
  model.cfg = cfg;
  model.vocab = Vocabulary::build(normalized);
  model.q = static_cast<double>(n_pos) / static_cast<double>(n_pos + n_unk);
  check_q(model.q);
  model.log.q = model.q;

  const IdMatrix all_ids = build_id_matrix(normalized, model.vocab, cfg.max_len);
  const Mat positions = sinusoidal_positions(cfg.max_len, cfg.embed_dim);
  model.params =
      init_params(cfg, model.vocab.size(), derive_seed(cfg.seed, "init"));
  AdamW optimizer(cfg, model.vocab.size());
  EncoderTensors grads = make_tensors(cfg, model.vocab.size());

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));

  std::vector<std::size_t> order(dataset.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  nn::ForwardCache cache;
  const auto zero_grads = [&]() {
    for_each_tensor(grads, [](const std::string&, Mat& m) { m.setZero(); });
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const EncoderTensors snapshot = model.params;
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;

    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t count =
          std::min(cfg.batch_size, order.size() - start);
      IdMatrix batch(static_cast<Eigen::Index>(count),
                     static_cast<Eigen::Index>(cfg.max_len));
      std::vector<WeakLabel> labels(count);
      for (std::size_t b = 0; b < count; ++b) {
        const auto& entry = dataset.entries[order[start + b]];
        batch.row(static_cast<Eigen::Index>(b)) =
            all_ids.row(static_cast<Eigen::Index>(entry.line));
        labels[b] = entry.label;
      }

      zero_grads();
      const Mat& z = encoder_forward(model.params, cfg, batch, positions,
                                     /*train_mode=*/true, &dropout_rng, cache);
      Mat dz;
      const double loss = pu_loss_grad(z, labels, model.q, dz);
      if (!std::isfinite(loss)) {
        model.params = snapshot;
        model.log.diverged = true;
        return model;
      }
      encoder_backward(model.params, cfg, batch, cache, dz, grads);
      optimizer.step(model.params, grads);
      epoch_loss += loss * static_cast<double>(count);
      epoch_count += count;
      ++model.log.steps;
    }
    model.log.epoch_mean_loss.push_back(epoch_loss /
                                        static_cast<double>(epoch_count));
  }
  return model;
}

/// Anomaly scores ||z|| for every line, in corpus order. Inference over the
/// frozen model is pure per line, so the chunks may be scored on multiple
/// threads without affecting the result.
inline std::vector<double> score_lines(const TrainedModel& model,
                                       const std::vector<TokenSequence>& normalized,
                                       std::size_t threads = 1) {
  const IdMatrix all_ids =
      build_id_matrix(normalized, model.vocab, model.cfg.max_len);
  const Mat positions =
      sinusoidal_positions(model.cfg.max_len, model.cfg.embed_dim);
  std::vector<double> norms(normalized.size(), 0.0);

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    nn::ForwardCache cache;
    for (std::size_t start = lo; start < hi;
         start += model.cfg.batch_size) {
      const std::size_t count = std::min(model.cfg.batch_size, hi - start);
      const IdMatrix batch = all_ids.middleRows(
          static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count));
      const Mat& z = encoder_forward(model.params, model.cfg, batch, positions,
                                     /*train_mode=*/false, nullptr, cache);
      for (std::size_t b = 0; b < count; ++b) {
        const double s = z.row(static_cast<Eigen::Index>(b)).norm();
        if (!std::isfinite(s))
          numeric_error("non-finite activation while scoring line " +
                        std::to_string(start + b));
        norms[start + b] = s;
      }
    }
  };

  if (threads <= 1 || normalized.size() < 2 * model.cfg.batch_size) {
    run_range(0, normalized.size());
  } else {
    const std::size_t n_threads =
        std::min<std::size_t>(threads, 1 + (normalized.size() - 1) /
                                               model.cfg.batch_size);
    std::vector<std::thread> pool;
    const std::size_t chunk =
        (normalized.size() + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(normalized.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return norms;
}

/// Default decision rule: the crossover point where the two loss branches
/// meet, ||z||^2 = q^2/||z||, i.e. tau = q^(2/3).
inline double decision_threshold(double q, const ModelConfig& cfg) {
  if (cfg.threshold_mode == "fixed") return cfg.fixed_threshold;
  check_q(q);
  return std::cbrt(q * q);
}

inline std::vector<Truth> assign_labels(const std::vector<double>& z_norms,
                                        double q, const ModelConfig& cfg) {
  const double tau = decision_threshold(q, cfg);
  std::vector<Truth> out(z_norms.size());
  for (std::size_t i = 0; i < z_norms.size(); ++i)
    out[i] = z_norms[i] >= tau ? Truth::abnormal : Truth::normal;
  return out;
}

inline std::string export_scores_csv(const Corpus& corpus,
                                     const std::vector<double>& z_norms,
                                     const std::vector<Truth>& labels) {
  std::ostringstream os;
  os << "index,z_norm,label\n";
  for (std::size_t i = 0; i < corpus.size(); ++i)
    os << corpus[i].index << ',' << format_double(z_norms[i]) << ','
       << (labels[i] == Truth::abnormal ? 1 : 0) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {{"max_len", cfg.max_len},
          {"embed_dim", cfg.embed_dim},
          {"hidden_dim", cfg.hidden_dim},
          {"n_layers", cfg.n_layers},
          {"n_heads", cfg.n_heads},
          {"dropout_rate", cfg.dropout_rate},
          {"batch_size", cfg.batch_size},
          {"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"seed", cfg.seed},
          {"threshold_mode", cfg.threshold_mode},
          {"fixed_threshold", cfg.fixed_threshold}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.max_len = j.value("max_len", cfg.max_len);
  cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.n_layers = j.value("n_layers", cfg.n_layers);
  cfg.n_heads = j.value("n_heads", cfg.n_heads);
  cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threshold_mode = j.value("threshold_mode", cfg.threshold_mode);
  cfg.fixed_threshold = j.value("fixed_threshold", cfg.fixed_threshold);
  cfg.validate();
  return cfg;
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(const TrainedModel& model) {
  nlohmann::json tensors;
  for_each_tensor(const_cast<EncoderTensors&>(model.params),
                  [&](const std::string& name, Mat& m) {
                    std::vector<double> data;
                    data.reserve(static_cast<std::size_t>(m.size()));
                    for (Eigen::Index r = 0; r < m.rows(); ++r)
                      for (Eigen::Index c = 0; c < m.cols(); ++c)
                        data.push_back(m(r, c));
                    tensors[name] = {{"rows", m.rows()},
                                     {"cols", m.cols()},
                                     {"data", std::move(data)}};
                  });
  return {{"format", "logsift-checkpoint"},
          {"version", kCheckpointVersion},
          {"config", model_config_to_json(model.cfg)},
          {"q", model.q},
          {"vocab", model.vocab.tokens},
          {"training_log",
           {{"epoch_mean_loss", model.log.epoch_mean_loss},
            {"steps", model.log.steps},
            {"diverged", model.log.diverged}}},
          {"tensors", std::move(tensors)}};
}

inline TrainedModel checkpoint_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j["version"].get<int>() != kCheckpointVersion)
    data_error("checkpoint: missing or unsupported version");
  if (j.value("format", "") != "logsift-checkpoint")
    data_error("checkpoint: unrecognized format field");
  TrainedModel model;
  model.cfg = model_config_from_json(j.at("config"));
  model.q = j.at("q").get<double>();
  model.vocab =
      Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  if (j.contains("training_log")) {
    const auto& tl = j["training_log"];
    model.log.epoch_mean_loss =
        tl.value("epoch_mean_loss", std::vector<double>{});
    model.log.steps = tl.value("steps", std::size_t{0});
    model.log.diverged = tl.value("diverged", false);
    model.log.q = model.q;
  }
  model.params = make_tensors(model.cfg, model.vocab.size());
  const auto& tensors = j.at("tensors");
  for_each_tensor(model.params, [&](const std::string& name, Mat& m) {
    const auto& t = tensors.at(name);
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    if (rows != m.rows() || cols != m.cols())
      data_error("checkpoint: tensor shape mismatch for " + name);
    const auto data = t.at("data").get<std::vector<double>>();
    if (data.size() != static_cast<std::size_t>(m.size()))
      data_error("checkpoint: tensor size mismatch for " + name);
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[idx++];
  });
  return model;
}

} // namespace logsift
