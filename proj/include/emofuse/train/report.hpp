#pragma once

#include <json.hpp>

#include "emofuse/dataio/folds.hpp"
#include "emofuse/dataio/model_file.hpp"
#include "emofuse/dataio/record.hpp"
#include "emofuse/train/trainer.hpp"

namespace emofuse {

/// Metrics in the column order ANG, FEA, NEU, POS, Total. Recalls of absent
/// classes are null.
inline nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json recall = nlohmann::json::object();
  nlohmann::json row = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::string name(kEmotionNames[c]);
    if (m.present[c]) {
      recall[name] = m.recall[c];
      row.push_back(100.0 * m.recall[c]);
    } else {
      recall[name] = nullptr;
      row.push_back(nullptr);
    }
  }
  row.push_back(100.0 * m.ua);
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& r : m.confusion) confusion.push_back(r);
  return {
      {"columns", {"ANG", "FEA", "NEU", "POS", "Total"}},
      {"row_percent", row},
      {"recall", recall},
      {"ua", m.ua},
      {"partial", m.partial},
      {"n_segments", m.total()},
      {"confusion", confusion},
  };
}

inline nlohmann::json epoch_to_json(const EpochRecord& e) {
  return {
      {"epoch", e.epoch},
      {"train_loss", e.train_loss},
      {"validation_ua", e.validation_ua},
      {"steps", e.steps},
      {"grad_norm_mean", e.grad_norm_mean},
      {"grad_norm_max", e.grad_norm_max},
      {"clipped_norm_max", e.clipped_norm_max},
      {"clipped_steps", e.clipped_steps},
  };
}

inline nlohmann::json hyper_to_json(const Hyper& h) {
  return {
      {"lr", h.lr},
      {"batch_size", h.batch_size},
      {"max_epochs", h.max_epochs},
      {"clip_norm", h.clip_norm},
      {"seed", h.seed},
  };
}

inline nlohmann::json plan_to_json(const FoldPlan& plan) {
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    const auto& f = plan.folds[i];
    folds.push_back({{"fold", i},
                     {"train", f.train},
                     {"validation", f.validation},
                     {"test", f.test}});
  }
  return {{"k", plan.k},
          {"seed", plan.seed},
          {"speaker_groups", plan.speaker_groups},
          {"folds", folds}};
}

inline FoldPlan plan_from_json(const nlohmann::json& j) {
  FoldPlan plan;
  plan.k = j.at("k").get<std::size_t>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.speaker_groups =
      j.at("speaker_groups").get<std::vector<std::vector<std::string>>>();
  for (const auto& f : j.at("folds")) {
    plan.folds.push_back({f.at("train").get<std::vector<std::string>>(),
                          f.at("validation").get<std::vector<std::string>>(),
                          f.at("test").get<std::vector<std::string>>()});
  }
  return plan;
}

template <typename T>
nlohmann::json fold_to_json(const FoldResult<T>& r) {
  return {{"fold", r.fold},
          {"best_epoch", r.best_epoch},
          {"best_validation_ua", r.best_validation_ua},
          {"test", metrics_to_json(r.test_metrics)}};
}

/// Pooled metrics plus the plain mean of the fold UAs.
inline nlohmann::json combined_to_json(std::span<const Metrics> folds) {
  auto j = metrics_to_json(combine_folds(folds));
  double mean = 0.0;
  for (const auto& f : folds) mean += f.ua;
  j["mean_fold_ua"] = folds.empty() ? 0.0 : mean / static_cast<double>(folds.size());
  return j;
}

}  // namespace emofuse
