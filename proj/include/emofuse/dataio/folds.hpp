#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "emofuse/dataio/record.hpp"

namespace emofuse {

struct FoldSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Speaker-disjoint k-way plan. Fold i tests on speaker group i, validates on
/// group (i + 1) mod k and trains on the remaining groups.
struct FoldPlan {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> speaker_groups;
  std::vector<FoldSplit> folds;
};

inline FoldPlan make_folds(std::span<const SegmentRecord> records,
                           std::size_t k = 5, std::uint64_t seed = 0) {
  if (k < 3) throw std::invalid_argument("need k >= 3 folds");
  std::set<std::string> unique;
  for (const auto& r : records) unique.insert(r.speaker_id);
  if (unique.size() < k) {
    throw std::invalid_argument("only " + std::to_string(unique.size()) +
                                " speakers for " + std::to_string(k) + " folds");
  }
  std::vector<std::string> speakers(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  std::shuffle(speakers.begin(), speakers.end(), rng);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.speaker_groups.resize(k);
  std::map<std::string, std::size_t> group_of;
  const std::size_t base = speakers.size() / k;
  const std::size_t extra = speakers.size() % k;
  std::size_t pos = 0;
  for (std::size_t g = 0; g < k; ++g) {
    const std::size_t n = base + (g < extra ? 1 : 0);
    for (std::size_t j = 0; j < n; ++j, ++pos) {
      plan.speaker_groups[g].push_back(speakers[pos]);
      group_of[speakers[pos]] = g;
    }
  }

  plan.folds.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t val_group = (i + 1) % k;
    auto& f = plan.folds[i];
    for (const auto& r : records) {
      const std::size_t g = group_of.at(r.speaker_id);
      if (g == i) {
        f.test.push_back(r.id);
      } else if (g == val_group) {
        f.validation.push_back(r.id);
      } else {
        f.train.push_back(r.id);
      }
    }
  }
  return plan;
}

}  // namespace emofuse
