#pragma once

#include <cstddef>

#include "emofuse/numkit/kernels.hpp"

namespace emofuse {

inline constexpr std::size_t kNumClasses = 4;
inline constexpr double kProbFloor = 1e-12;

/// Dense classifier head: probs = softmax(tanh(W x + b)).
template <typename T>
struct HeadParams {
  Matrix<T> w;  // n_classes x in_dim
  Vector<T> b;  // n_classes

  HeadParams() = default;
  explicit HeadParams(std::size_t in_dim)
      : w(kNumClasses, in_dim), b(kNumClasses, T{0}) {}

  std::size_t in_dim() const { return w.cols(); }
  std::size_t param_count() const { return w.size() + b.size(); }
};

template <typename T>
struct HeadOutput {
  Vector<T> logits;  // tanh(W x + b), each in (-1, 1)
  Vector<T> probs;
};

template <typename T>
HeadOutput<T> head_forward(std::span<const T> x, const HeadParams<T>& p) {
  if (x.size() != p.in_dim()) {
    throw ShapeError("head_forward: input length " + std::to_string(x.size()) +
                     " != head width " + std::to_string(p.in_dim()));
  }
  HeadOutput<T> out;
  out.logits = affine(p.w, x, std::span<const T>(p.b));
  for (auto& v : out.logits) v = std::tanh(v);
  out.probs = softmax(std::span<const T>(out.logits));
  require_finite(std::span<const T>(out.probs), "head_forward output");
  return out;
}

/// -ln(max(probs[label], 1e-12))
template <typename T>
T cross_entropy(std::span<const T> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) +
                     " out of range");
  }
  const T p = std::max(probs[label], static_cast<T>(kProbFloor));
  return -std::log(p);
}

// dL/dprobs for L = cross_entropy(probs, label).
template <typename T>
Vector<T> cross_entropy_backward(std::span<const T> probs, std::size_t label) {
  Vector<T> g(probs.size(), T{0});
  if (probs[label] > static_cast<T>(kProbFloor)) g[label] = -T{1} / probs[label];
  return g;
}

// Cross-entropy evaluated from the pre-softmax values by log-sum-exp.
template <typename T>
T cross_entropy_from_logits(std::span<const T> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ShapeError("cross_entropy: label out of range");
  }
  const T mx = *std::max_element(logits.begin(), logits.end());
  T sum{0};
  for (T v : logits) sum += std::exp(v - mx);
  const T loss = mx + std::log(sum) - logits[label];
  return std::min(loss, static_cast<T>(-std::log(kProbFloor)));
}

template <typename T>
struct HeadGrads {
  Matrix<T> dw;
  Vector<T> db;
  Vector<T> dx;
};

/// Backpropagates dL/dprobs through softmax, tanh and the affine map.
template <typename T>
HeadGrads<T> head_backward(std::span<const T> x, const HeadParams<T>& p,
                           const HeadOutput<T>& fwd,
                           std::span<const T> dprobs) {
  Vector<T> dz = softmax_backward(std::span<const T>(fwd.probs), dprobs);
  for (std::size_t i = 0; i < dz.size(); ++i) {
    dz[i] *= T{1} - fwd.logits[i] * fwd.logits[i];
  }
  HeadGrads<T> g;
  g.dw = Matrix<T>(p.w.rows(), p.w.cols());
  for (std::size_t i = 0; i < dz.size(); ++i) {
    auto row = g.dw.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) row[j] = dz[i] * x[j];
  }
  g.db = dz;
  g.dx.assign(x.size(), T{0});
  for (std::size_t i = 0; i < dz.size(); ++i) {
    const auto wr = p.w.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) g.dx[j] += wr[j] * dz[i];
  }
  return g;
}

}  // namespace emofuse
