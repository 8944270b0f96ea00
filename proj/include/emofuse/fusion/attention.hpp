#pragma once

#include <cmath>

#include "emofuse/numkit/kernels.hpp"

namespace emofuse {

template <typename T>
struct AttentionResult {
  Matrix<T> output;   // L_q x d_v
  Matrix<T> weights;  // L_q x L_k, row-stochastic
};

/// softmax(Q K^T / sqrt(d_k)) V
template <typename T>
AttentionResult<T> scaled_dot_attention(const Matrix<T>& q, const Matrix<T>& k,
                                        const Matrix<T>& v) {
  if (q.cols() != k.cols()) {
    throw ShapeError("attention: Q " + shape_str(q) + " and K " + shape_str(k) +
                     " differ in width");
  }
  if (k.rows() != v.rows()) {
    throw ShapeError("attention: K " + shape_str(k) + " and V " + shape_str(v) +
                     " differ in length");
  }
  if (k.rows() == 0) throw ShapeError("attention: empty key sequence");
  Matrix<T> scores = matmul_nt(q, k);
  const T scale = T{1} / std::sqrt(static_cast<T>(q.cols()));
  for (auto& s : scores.flat()) s *= scale;
  AttentionResult<T> r;
  r.weights = softmax_rows(scores);
  r.output = matmul(r.weights, v);
  require_finite(r.output, "attention output");
  return r;
}

template <typename T>
struct AttentionGrads {
  Matrix<T> dq, dk, dv;
};

template <typename T>
AttentionGrads<T> scaled_dot_attention_backward(const Matrix<T>& q,
                                                const Matrix<T>& k,
                                                const Matrix<T>& v,
                                                const Matrix<T>& weights,
                                                const Matrix<T>& dout) {
  AttentionGrads<T> g;
  g.dv = matmul_tn(weights, dout);
  Matrix<T> dweights = matmul_nt(dout, v);
  Matrix<T> dscores = softmax_rows_backward(weights, dweights);
  const T scale = T{1} / std::sqrt(static_cast<T>(q.cols()));
  for (auto& s : dscores.flat()) s *= scale;
  g.dq = matmul(dscores, k);
  g.dk = matmul_tn(dscores, q);
  return g;
}

/// Projection weights of one multi-head attention block. Head i uses columns
/// [i*d_k, (i+1)*d_k) of W_Q, W_K and W_V. No biases.
template <typename T>
struct MultiHeadAttentionParams {
  Matrix<T> wq, wk, wv, wo;  // each d_model x d_model
  std::size_t n_heads = 1;

  MultiHeadAttentionParams() = default;
  MultiHeadAttentionParams(std::size_t d_model, std::size_t heads)
      : wq(d_model, d_model),
        wk(d_model, d_model),
        wv(d_model, d_model),
        wo(d_model, d_model),
        n_heads(heads) {
    if (heads == 0 || d_model % heads != 0) {
      throw ShapeError("d_model " + std::to_string(d_model) +
                       " not divisible by " + std::to_string(heads) + " heads");
    }
  }

  std::size_t d_model() const { return wq.rows(); }
  std::size_t head_dim() const { return d_model() / n_heads; }
  std::size_t param_count() const { return 4 * wq.size(); }
};

// Intermediate values kept for the backward pass.
template <typename T>
struct MultiHeadCache {
  Matrix<T> q, k, v;                 // projected inputs, L x d_model
  std::vector<Matrix<T>> weights;    // per head, L_q x L_k
  Matrix<T> concat;                  // L_q x d_model
};

template <typename T>
Matrix<T> multi_head_attention(const MultiHeadAttentionParams<T>& p,
                               const Matrix<T>& q_in, const Matrix<T>& k_in,
                               const Matrix<T>& v_in,
                               MultiHeadCache<T>* cache = nullptr) {
  const std::size_t d = p.d_model();
  if (d == 0 || d % p.n_heads != 0) {
    throw ShapeError("multi_head_attention: d_model not divisible by heads");
  }
  if (q_in.cols() != d || k_in.cols() != d || v_in.cols() != d) {
    throw ShapeError("multi_head_attention: input widths must equal d_model " +
                     std::to_string(d));
  }
  if (k_in.rows() != v_in.rows()) {
    throw ShapeError("multi_head_attention: K and V lengths differ");
  }
  const std::size_t dk = p.head_dim();
  MultiHeadCache<T> local;
  MultiHeadCache<T>& c = cache ? *cache : local;
  c.q = matmul(q_in, p.wq);
  c.k = matmul(k_in, p.wk);
  c.v = matmul(v_in, p.wv);
  c.weights.clear();
  c.concat = Matrix<T>(q_in.rows(), d);
  for (std::size_t h = 0; h < p.n_heads; ++h) {
    auto r = scaled_dot_attention(column_block(c.q, h * dk, dk),
                                  column_block(c.k, h * dk, dk),
                                  column_block(c.v, h * dk, dk));
    set_column_block(c.concat, h * dk, r.output);
    c.weights.push_back(std::move(r.weights));
  }
  return matmul(c.concat, p.wo);
}

/// Parameter gradients of one block given dL/d(output). Gradients are
/// accumulated into `grads` (scaled by `scale`), so several directions or
/// batch entries can share one gradient buffer.
template <typename T>
void multi_head_attention_backward(const MultiHeadAttentionParams<T>& p,
                                   const Matrix<T>& q_in, const Matrix<T>& k_in,
                                   const Matrix<T>& v_in,
                                   const MultiHeadCache<T>& c,
                                   const Matrix<T>& dout,
                                   MultiHeadAttentionParams<T>& grads,
                                   T scale = T{1}) {
  const std::size_t dk = p.head_dim();
  add_scaled(grads.wo, matmul_tn(c.concat, dout), scale);
  Matrix<T> dconcat = matmul_nt(dout, p.wo);
  Matrix<T> dq(c.q.rows(), c.q.cols());
  Matrix<T> dk_all(c.k.rows(), c.k.cols());
  Matrix<T> dv(c.v.rows(), c.v.cols());
  for (std::size_t h = 0; h < p.n_heads; ++h) {
    auto g = scaled_dot_attention_backward(
        column_block(c.q, h * dk, dk), column_block(c.k, h * dk, dk),
        column_block(c.v, h * dk, dk), c.weights[h],
        column_block(dconcat, h * dk, dk));
    set_column_block(dq, h * dk, g.dq);
    set_column_block(dk_all, h * dk, g.dk);
    set_column_block(dv, h * dk, g.dv);
  }
  add_scaled(grads.wq, matmul_tn(q_in, dq), scale);
  add_scaled(grads.wk, matmul_tn(k_in, dk_all), scale);
  add_scaled(grads.wv, matmul_tn(v_in, dv), scale);
}

}  // namespace emofuse
