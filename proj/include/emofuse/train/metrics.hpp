#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "emofuse/fusion/model.hpp"

namespace emofuse {

struct Prediction {
  std::string id;
  std::size_t truth = 0;
  std::size_t predicted = 0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Confusion matrix (rows = true class, columns = predicted class), per-class
/// recall and Unweighted Accuracy, the unweighted mean of the recalls.
struct Metrics {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> confusion{};
  std::array<double, kNumClasses> recall{};
  std::array<bool, kNumClasses> present{};
  double ua = 0.0;
  // Set when a class has no segments; UA then averages the present classes.
  bool partial = false;
  std::vector<Prediction> predictions;

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& row : confusion) {
      for (auto v : row) n += v;
    }
    return n;
  }
};

inline void finalize_metrics(Metrics& m) {
  double sum = 0.0;
  std::size_t n_present = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::uint64_t row = 0;
    for (auto v : m.confusion[c]) row += v;
    m.present[c] = row > 0;
    m.recall[c] = row > 0 ? static_cast<double>(m.confusion[c][c]) /
                                static_cast<double>(row)
                          : 0.0;
    if (row > 0) {
      sum += m.recall[c];
      ++n_present;
    }
  }
  m.partial = n_present < kNumClasses;
  m.ua = n_present > 0 ? sum / static_cast<double>(n_present) : 0.0;
}

inline Metrics metrics_from_predictions(std::vector<Prediction> preds) {
  Metrics m;
  for (const auto& p : preds) {
    if (p.truth >= kNumClasses || p.predicted >= kNumClasses) {
      throw std::out_of_range("class index out of range in prediction " + p.id);
    }
    ++m.confusion[p.truth][p.predicted];
  }
  m.predictions = std::move(preds);
  finalize_metrics(m);
  return m;
}

/// Argmax predictions (ties to the lowest class index) over `segments`.
template <typename T>
Metrics evaluate(const FusionModel<T>& model,
                 std::span<const Example<T>* const> segments) {
  if (segments.empty()) throw std::invalid_argument("evaluate: no segments");
  std::vector<Prediction> preds;
  preds.reserve(segments.size());
  ForwardCache<T> cache;
  for (const auto* ex : segments) {
    const auto probs = forward(model, *ex, cache);
    preds.push_back({ex->id, ex->label, argmax(std::span<const T>(probs))});
  }
  return metrics_from_predictions(std::move(preds));
}

/// Pools fold outputs: confusions are summed and recalls and UA recomputed
/// from the pooled matrix.
inline Metrics combine_folds(std::span<const Metrics> folds) {
  Metrics pooled;
  std::set<std::string> seen;
  for (const auto& f : folds) {
    for (const auto& p : f.predictions) {
      if (!seen.insert(p.id).second) {
        throw std::invalid_argument("combine_folds: segment " + p.id +
                                    " appears in more than one fold");
      }
      pooled.predictions.push_back(p);
    }
    for (std::size_t r = 0; r < kNumClasses; ++r) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        pooled.confusion[r][c] += f.confusion[r][c];
      }
    }
  }
  finalize_metrics(pooled);
  return pooled;
}

}  // namespace emofuse
