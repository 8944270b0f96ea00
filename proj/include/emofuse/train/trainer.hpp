#pragma once

#include <map>
#include <random>

#include "emofuse/dataio/folds.hpp"
#include "emofuse/train/metrics.hpp"

namespace emofuse {

struct Hyper {
  double lr = 1e-5;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 50;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
  }
};

/// Per-epoch log entry. Epoch 0 describes the freshly initialized model.
struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean cross-entropy over the training split
  double validation_ua = 0.0;
  std::size_t steps = 0;
  double grad_norm_mean = 0.0;  // before clipping
  double grad_norm_max = 0.0;
  double clipped_norm_max = 0.0;  // after clipping
  std::size_t clipped_steps = 0;
};

template <typename T>
struct FoldResult {
  std::size_t fold = 0;
  FusionModel<T> best_model;
  std::size_t best_epoch = 0;
  double best_validation_ua = 0.0;
  std::vector<EpochRecord> history;
  Metrics test_metrics;
};

template <typename T>
void check_widths(const ModelConfig& config,
                  std::span<const SegmentRecord> records) {
  for (const auto& r : records) {
    if (r.h_p.cols() != config.d_model || r.h_s.cols() != config.d_model) {
      throw ShapeError("segment " + r.id + " has widths " +
                       std::to_string(r.h_p.cols()) + "/" +
                       std::to_string(r.h_s.cols()) + " but d_model is " +
                       std::to_string(config.d_model));
    }
  }
}

/// Converts records to model inputs, aligning H_p once per segment when the
/// architecture needs it.
template <typename T>
std::vector<Example<T>> build_examples(std::span<const SegmentRecord> records,
                                       const ModelConfig& config) {
  check_widths<T>(config, records);
  std::vector<Example<T>> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto ex = make_example(Matrix<T>::cast(r.h_p), Matrix<T>::cast(r.h_s),
                           std::span<const std::uint32_t>(r.char_lengths),
                           static_cast<std::size_t>(r.label), config);
    ex.id = r.id;
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
std::vector<const Example<T>*> select_examples(
    std::span<const Example<T>> examples, std::span<const std::string> ids) {
  std::map<std::string_view, const Example<T>*> by_id;
  for (const auto& ex : examples) by_id[ex.id] = &ex;
  std::vector<const Example<T>*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::invalid_argument("unknown segment id " + id);
    out.push_back(it->second);
  }
  return out;
}

inline std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold,
                               std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

template <typename T>
double mean_loss(const FusionModel<T>& model,
                 std::span<const Example<T>* const> split) {
  double sum = 0.0;
  ForwardCache<T> cache;
  for (const auto* ex : split) {
    const auto probs = forward(model, *ex, cache);
    sum += static_cast<double>(cross_entropy(std::span<const T>(probs), ex->label));
  }
  return sum / static_cast<double>(split.size());
}

/// Mini-batch Adam with global-norm clipping. After every epoch the model is
/// scored on the validation split and the snapshot with the highest
/// validation UA is kept (earliest epoch on ties, the initial model counts as
/// epoch 0). Test metrics come from that snapshot.
template <typename T>
FoldResult<T> train_fold(const ModelConfig& config, const Hyper& hyper,
                         std::span<const Example<T>> examples,
                         const FoldSplit& split, std::size_t fold) {
  hyper.validate();
  const auto train = select_examples(examples, std::span<const std::string>(split.train));
  const auto val = select_examples(examples, std::span<const std::string>(split.validation));
  const auto test = select_examples(examples, std::span<const std::string>(split.test));
  if (train.empty() || val.empty() || test.empty()) {
    throw std::invalid_argument("fold " + std::to_string(fold) +
                                " has an empty train, validation or test split");
  }
  using Batch = std::span<const Example<T>* const>;

  FoldResult<T> result;
  result.fold = fold;
  FusionModel<T> model = init_params<T>(config, fold_seed(hyper.seed, fold, 0));
  std::mt19937_64 shuffle_rng(fold_seed(hyper.seed, fold, 1));
  AdamState<T> adam(model.params());
  const AdamConfig adam_cfg{hyper.lr, 0.9, 0.999, 1e-8};

  EpochRecord init;
  init.train_loss = mean_loss(model, Batch(train));
  init.validation_ua = evaluate(model, Batch(val)).ua;
  result.history.push_back(init);
  result.best_model = model;
  result.best_validation_ua = init.validation_ua;

  std::vector<const Example<T>*> order = train;
  for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t n = std::min(hyper.batch_size, order.size() - start);
      LossAndGrads<T> lg;
      try {
        lg = model_grad(model, Batch(order.data() + start, n));
      } catch (const NumericError& e) {
        throw NumericError("fold " + std::to_string(fold) + " epoch " +
                           std::to_string(epoch) + " step " +
                           std::to_string(rec.steps) + ": " + e.what());
      }
      auto grads = lg.grads.params();
      const auto clip = clip_global_norm(grads, hyper.clip_norm);
      adam_step(model.params(), grads, adam, adam_cfg);
      ++rec.steps;
      rec.grad_norm_mean += clip.norm_before;
      rec.grad_norm_max = std::max(rec.grad_norm_max, clip.norm_before);
      rec.clipped_norm_max = std::max(rec.clipped_norm_max, clip.norm_after);
      if (clip.norm_before > hyper.clip_norm) ++rec.clipped_steps;
    }
    rec.grad_norm_mean /= static_cast<double>(std::max<std::size_t>(rec.steps, 1));
    rec.train_loss = mean_loss(model, Batch(train));
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("fold " + std::to_string(fold) + " epoch " +
                         std::to_string(epoch) + ": non-finite training loss");
    }
    rec.validation_ua = evaluate(model, Batch(val)).ua;
    result.history.push_back(rec);
    if (rec.validation_ua > result.best_validation_ua) {
      result.best_validation_ua = rec.validation_ua;
      result.best_epoch = epoch;
      result.best_model = model;
    }
  }
  result.test_metrics = evaluate(result.best_model, Batch(test));
  return result;
}

template <typename T>
FoldResult<T> train_fold(const ModelConfig& config, const Hyper& hyper,
                         std::span<const SegmentRecord> bundle, std::size_t fold,
                         const FoldPlan& plan) {
  if (fold >= plan.folds.size()) {
    throw std::invalid_argument("fold " + std::to_string(fold) + " out of range");
  }
  const auto examples = build_examples<T>(bundle, config);
  return train_fold<T>(config, hyper, std::span<const Example<T>>(examples),
                       plan.folds[fold], fold);
}

}  // namespace emofuse
