#pragma once

#include <random>

#include "emofuse/fusion/model.hpp"
#include "emofuse/numkit/gradcheck.hpp"

namespace emofuse {

struct GradCheckCase {
  Architecture architecture = Architecture::SymmetricCrossAttn;
  AlignmentMethod alignment = AlignmentMethod::Subwords;
  std::size_t d_model = 8;
  std::size_t n_heads = 2;
  std::size_t n_subwords = 3;
  std::size_t n_frames = 7;
  std::size_t batch = 2;
  std::uint64_t seed = 1;
};

/// Random 64-bit instance of `c`: model with randomized weights and biases
/// plus a small batch of Gaussian inputs.
inline std::pair<FusionModel<double>, std::vector<Example<double>>>
make_gradcheck_instance(const GradCheckCase& c) {
  ModelConfig cfg;
  cfg.architecture = c.architecture;
  cfg.alignment = c.alignment;
  cfg.d_model = c.d_model;
  cfg.n_heads = c.n_heads;
  auto model = init_params<double>(cfg, c.seed);
  std::mt19937_64 rng(c.seed ^ 0x5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& h : model.heads) {
    for (auto& b : h.b) b = 0.5 * normal(rng);
  }
  std::vector<Example<double>> batch;
  for (std::size_t i = 0; i < c.batch; ++i) {
    Matrix<double> hp(c.n_frames, c.d_model);
    Matrix<double> hs(c.n_subwords, c.d_model);
    for (auto& v : hp.flat()) v = normal(rng);
    for (auto& v : hs.flat()) v = normal(rng);
    std::vector<std::uint32_t> chars(c.n_subwords);
    for (auto& ch : chars) ch = 1 + static_cast<std::uint32_t>(rng() % 5);
    batch.push_back(make_example(std::move(hp), std::move(hs),
                                 std::span<const std::uint32_t>(chars),
                                 static_cast<std::size_t>(rng() % kNumClasses), cfg));
  }
  return {std::move(model), std::move(batch)};
}

/// Analytic gradients of the mean batch loss against central differences.
inline GradCheckResult run_gradcheck(const GradCheckCase& c, double h = 1e-5) {
  auto [model, batch] = make_gradcheck_instance(c);
  const std::span<const Example<double>> view(batch);
  auto analytic = model_grad(model, view);
  // forward passes only, independent of the backward code
  auto loss = [&] {
    double sum = 0.0;
    for (const auto& ex : batch) sum += example_loss(model, ex);
    return sum / static_cast<double>(batch.size());
  };
  auto numeric = finite_diff_grad<double>(loss, model.params(), h);
  return compare_gradients(to_grad_arrays(analytic.grads.params()), numeric);
}

}  // namespace emofuse
