#pragma once

#include <cmath>
#include <limits>
#include <numeric>

#include "emofuse/numkit/matrix.hpp"

namespace emofuse {

// A (m x k) * B (k x n)
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
  }
  Matrix<T> out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* orow = out.data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{0}) continue;
      const T* brow = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

// A (m x k) * B^T, with B (n x k)
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) +
                     "^T");
  }
  Matrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto br = b.row(j);
      T acc{0};
      for (std::size_t k = 0; k < ar.size(); ++k) acc += ar[k] * br[k];
      out(i, j) = acc;
    }
  }
  return out;
}

// A^T * B, with A (k x m), B (k x n)
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  }
  Matrix<T> out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const T* brow = b.data() + k * n;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T aki = a(k, i);
      if (aki == T{0}) continue;
      T* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

// y = W x + b, W (n x m)
template <typename T>
Vector<T> affine(const Matrix<T>& w, std::span<const T> x,
                 std::span<const T> b) {
  if (w.cols() != x.size() || w.rows() != b.size()) {
    throw ShapeError("affine: W " + shape_str(w) + ", x " +
                     std::to_string(x.size()) + ", b " +
                     std::to_string(b.size()));
  }
  Vector<T> y(b.begin(), b.end());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const auto wr = w.row(i);
    T acc{0};
    for (std::size_t j = 0; j < x.size(); ++j) acc += wr[j] * x[j];
    y[i] += acc;
  }
  return y;
}

template <typename T>
void add_scaled(Matrix<T>& dst, const Matrix<T>& src, T scale) {
  if (!dst.same_shape(src)) {
    throw ShapeError("add_scaled: " + shape_str(dst) + " vs " + shape_str(src));
  }
  auto d = dst.flat();
  auto s = src.flat();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

// Columns [first, first + count) of m.
template <typename T>
Matrix<T> column_block(const Matrix<T>& m, std::size_t first,
                       std::size_t count) {
  if (first + count > m.cols()) throw ShapeError("column_block out of range");
  Matrix<T> out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::copy_n(m.row(r).begin() + first, count, out.row(r).begin());
  }
  return out;
}

template <typename T>
void set_column_block(Matrix<T>& m, std::size_t first, const Matrix<T>& block) {
  if (block.rows() != m.rows() || first + block.cols() > m.cols()) {
    throw ShapeError("set_column_block out of range");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::copy(block.row(r).begin(), block.row(r).end(),
              m.row(r).begin() + first);
  }
}

/// In-place softmax of one row, stabilized by subtracting the row maximum.
template <typename T>
void softmax_inplace(std::span<T> v) {
  if (v.empty()) return;
  const T mx = *std::max_element(v.begin(), v.end());
  T sum{0};
  for (auto& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

template <typename T>
Vector<T> softmax(std::span<const T> v) {
  require_finite(v, "softmax input");
  Vector<T> out(v.begin(), v.end());
  softmax_inplace(std::span<T>(out));
  return out;
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& m) {
  require_finite(m, "softmax_rows input");
  Matrix<T> out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

// Backward of row-wise softmax: given P = softmax(S) and dL/dP, returns
// dL/dS = P * (dP - rowsum(dP * P)).
template <typename T>
Matrix<T> softmax_rows_backward(const Matrix<T>& probs,
                                const Matrix<T>& dprobs) {
  Matrix<T> ds(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto p = probs.row(r);
    const auto g = dprobs.row(r);
    T dot{0};
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * g[j];
    auto out = ds.row(r);
    for (std::size_t j = 0; j < p.size(); ++j) out[j] = p[j] * (g[j] - dot);
  }
  return ds;
}

template <typename T>
Vector<T> softmax_backward(std::span<const T> probs, std::span<const T> dprobs) {
  T dot{0};
  for (std::size_t j = 0; j < probs.size(); ++j) dot += probs[j] * dprobs[j];
  Vector<T> out(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) {
    out[j] = probs[j] * (dprobs[j] - dot);
  }
  return out;
}

/// Column means: averages over sequence positions (rows), giving one value
/// per model dimension.
template <typename T>
Vector<T> mean_over_positions(const Matrix<T>& m) {
  if (m.rows() == 0) throw ShapeError("mean_over_positions: zero rows");
  Vector<T> out(m.cols(), T{0});
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
  }
  const T inv = T{1} / static_cast<T>(m.rows());
  for (auto& v : out) v *= inv;
  return out;
}

// Gradient of mean_over_positions: each row receives dmean / rows.
template <typename T>
Matrix<T> mean_over_positions_backward(std::span<const T> dmean,
                                       std::size_t rows) {
  Matrix<T> out(rows, dmean.size());
  const T inv = T{1} / static_cast<T>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < dmean.size(); ++c) row[c] = dmean[c] * inv;
  }
  return out;
}

template <typename T>
std::size_t argmax(std::span<const T> v) {
  // first maximum wins, so ties go to the lowest index
  return static_cast<std::size_t>(
      std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

}  // namespace emofuse
