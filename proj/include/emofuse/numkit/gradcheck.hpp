#pragma once

#include <concepts>
#include <type_traits>

#include "emofuse/numkit/optim.hpp"

namespace emofuse {

using GradArrays = std::vector<std::vector<double>>;

/// Central-difference gradient of a scalar function of a parameter set.
/// `f` is re-evaluated after each in-place perturbation of `params`; every
/// coordinate is restored before moving on. 64-bit only.
template <typename T, std::invocable F>
GradArrays finite_diff_grad(F&& f, const ParamSet<T>& params, double h = 1e-5) {
  static_assert(std::is_same_v<T, double>,
                "finite differences require 64-bit parameters");
  GradArrays out;
  out.reserve(params.size());
  for (auto p : params) {
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const double up = f();
      p[i] = saved - h;
      const double down = f();
      p[i] = saved;
      g[i] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

template <typename T>
GradArrays to_grad_arrays(const ParamSet<T>& arrays) {
  GradArrays out;
  for (auto a : arrays) out.emplace_back(a.begin(), a.end());
  return out;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t array = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Coordinate-wise |a - n| / max(|a|, |n|, abs_floor). The floor keeps
// vanishing gradients from amplifying round-off into a large ratio.
inline GradCheckResult compare_gradients(const GradArrays& analytic,
                                         const GradArrays& numeric,
                                         double abs_floor = 1e-6) {
  if (analytic.size() != numeric.size()) {
    throw ShapeError("compare_gradients: array count mismatch");
  }
  GradCheckResult worst;
  for (std::size_t a = 0; a < analytic.size(); ++a) {
    if (analytic[a].size() != numeric[a].size()) {
      throw ShapeError("compare_gradients: array size mismatch");
    }
    for (std::size_t i = 0; i < analytic[a].size(); ++i) {
      const double x = analytic[a][i];
      const double y = numeric[a][i];
      const double denom = std::max({std::abs(x), std::abs(y), abs_floor});
      const double rel = std::abs(x - y) / denom;
      if (rel > worst.max_rel_error) worst = {rel, a, i, x, y};
    }
  }
  return worst;
}

}  // namespace emofuse
