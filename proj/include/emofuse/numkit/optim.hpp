#pragma once

#include <cstdint>

#include "emofuse/numkit/matrix.hpp"

namespace emofuse {

// A set of parameter (or gradient) arrays viewed as flat spans.
template <typename T>
using ParamSet = std::vector<std::span<T>>;

template <typename T>
double global_norm(const ParamSet<T>& arrays) {
  double sq = 0.0;
  for (auto a : arrays) {
    for (T v : a) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sq);
}

struct ClipResult {
  double norm_before = 0.0;
  double norm_after = 0.0;
};

/// Rescales every array by max_norm / g when the global L2 norm g exceeds
/// max_norm. Operates in place.
template <typename T>
ClipResult clip_global_norm(const ParamSet<T>& grads, double max_norm = 1.0) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("max_norm must be > 0");
  for (auto a : grads) require_finite(std::span<const T>(a), "gradients");
  ClipResult r;
  r.norm_before = global_norm(grads);
  r.norm_after = r.norm_before;
  if (r.norm_before > max_norm) {
    const T scale = static_cast<T>(max_norm / r.norm_before);
    for (auto a : grads) {
      for (auto& v : a) v *= scale;
    }
    r.norm_after = global_norm(grads);
  }
  return r;
}

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;

  AdamState() = default;
  explicit AdamState(const ParamSet<T>& params) {
    for (auto p : params) {
      first_moment.emplace_back(p.size(), T{0});
      second_moment.emplace_back(p.size(), T{0});
    }
  }
};

/// Bias-corrected Adam update, in place on params and state.
template <typename T>
void adam_step(const ParamSet<T>& params, const ParamSet<T>& grads,
               AdamState<T>& state, const AdamConfig& cfg = {}) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() ||
        params[i].size() != state.first_moment[i].size()) {
      throw ShapeError("adam_step: array " + std::to_string(i) +
                       " shape mismatch");
    }
    require_finite(std::span<const T>(grads[i]), "adam gradients");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (T{1} - b1) * g[j];
      v[j] = b2 * v[j] + (T{1} - b2) * g[j] * g[j];
      const double mhat = static_cast<double>(m[j]) / bc1;
      const double vhat = static_cast<double>(v[j]) / bc2;
      p[j] -= static_cast<T>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
    require_finite(std::span<const T>(p), "adam parameters");
  }
}

}  // namespace emofuse
