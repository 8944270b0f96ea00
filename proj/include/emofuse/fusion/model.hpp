#pragma once

#include <array>
#include <random>
#include <string_view>

#include "emofuse/alignment.hpp"
#include "emofuse/fusion/attention.hpp"
#include "emofuse/numkit/head.hpp"
#include "emofuse/numkit/optim.hpp"

namespace emofuse {

enum class Architecture {
  UnimodalPara,
  UnimodalSem,
  Score,
  Concatenation,
  ParaCrossAttn,
  SemCrossAttn,
  SymmetricCrossAttn,
};

inline constexpr std::array kAllArchitectures = {
    Architecture::UnimodalPara,  Architecture::UnimodalSem,
    Architecture::Score,         Architecture::Concatenation,
    Architecture::ParaCrossAttn, Architecture::SemCrossAttn,
    Architecture::SymmetricCrossAttn,
};

inline std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::UnimodalPara: return "unimodal-para";
    case Architecture::UnimodalSem: return "unimodal-sem";
    case Architecture::Score: return "score";
    case Architecture::Concatenation: return "concat";
    case Architecture::ParaCrossAttn: return "para";
    case Architecture::SemCrossAttn: return "sem";
    case Architecture::SymmetricCrossAttn: return "symmetric";
  }
  return "?";
}

inline Architecture parse_architecture(std::string_view s) {
  for (auto a : kAllArchitectures) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown architecture: " + std::string(s));
}

inline bool uses_attention(Architecture a) {
  return a == Architecture::ParaCrossAttn || a == Architecture::SemCrossAttn ||
         a == Architecture::SymmetricCrossAttn;
}

enum class ModelSize { Base, Large };

inline std::string_view to_string(ModelSize s) {
  return s == ModelSize::Base ? "base" : "large";
}

inline ModelSize parse_size(std::string_view s) {
  if (s == "base") return ModelSize::Base;
  if (s == "large") return ModelSize::Large;
  throw std::invalid_argument("unknown size: " + std::string(s));
}

struct ModelConfig {
  Architecture architecture = Architecture::SymmetricCrossAttn;
  ModelSize size = ModelSize::Base;
  std::size_t d_model = 768;
  std::size_t n_heads = 16;
  AlignmentMethod alignment = AlignmentMethod::Subwords;

  /// Encoder-sized presets: Base is 768 wide with 16 heads, Large 1024 wide
  /// with 32 heads.
  static ModelConfig preset(Architecture arch, ModelSize size,
                            AlignmentMethod align = AlignmentMethod::Subwords) {
    ModelConfig c;
    c.architecture = arch;
    c.size = size;
    c.alignment = align;
    c.d_model = size == ModelSize::Base ? 768 : 1024;
    c.n_heads = size == ModelSize::Base ? 16 : 32;
    return c;
  }

  std::size_t head_dim() const { return d_model / n_heads; }

  void validate() const {
    if (d_model == 0) throw std::invalid_argument("d_model must be positive");
    if (n_heads == 0 || d_model % n_heads != 0) {
      throw std::invalid_argument("d_model " + std::to_string(d_model) +
                                  " not divisible by n_heads " +
                                  std::to_string(n_heads));
    }
  }

  std::size_t num_heads_params() const {
    return architecture == Architecture::Score ? 2 : 1;
  }
  std::size_t head_in_dim() const {
    return architecture == Architecture::Concatenation ? 2 * d_model : d_model;
  }
  std::size_t num_attention_blocks() const {
    switch (architecture) {
      case Architecture::ParaCrossAttn:
      case Architecture::SemCrossAttn: return 1;
      case Architecture::SymmetricCrossAttn: return 2;
      default: return 0;
    }
  }
};

/// Trainable-parameter count: 4*d_model^2 per attention block plus
/// n_classes*in_dim + n_classes per classifier head.
inline std::size_t count_params(const ModelConfig& c) {
  const std::size_t head = kNumClasses * c.head_in_dim() + kNumClasses;
  return c.num_heads_params() * head +
         c.num_attention_blocks() * 4 * c.d_model * c.d_model;
}

/// Parameters of one fusion model. Score keeps its paralinguistic head at
/// heads[0] and its semantic head at heads[1]. For Symmetric, attention[0]
/// is the paralinguistic direction (queries from H_s, keys/values from the
/// aligned H_p) and attention[1] the semantic direction.
template <typename T>
struct FusionModel {
  ModelConfig config;
  std::vector<HeadParams<T>> heads;
  std::vector<MultiHeadAttentionParams<T>> attention;

  FusionModel() = default;
  explicit FusionModel(const ModelConfig& cfg) : config(cfg) {
    cfg.validate();
    for (std::size_t i = 0; i < cfg.num_heads_params(); ++i) {
      heads.emplace_back(cfg.head_in_dim());
    }
    for (std::size_t i = 0; i < cfg.num_attention_blocks(); ++i) {
      attention.emplace_back(cfg.d_model, cfg.n_heads);
    }
  }

  ParamSet<T> params() {
    ParamSet<T> out;
    for (auto& h : heads) {
      out.push_back(h.w.flat());
      out.push_back(std::span<T>(h.b));
    }
    for (auto& a : attention) {
      for (auto* m : {&a.wq, &a.wk, &a.wv, &a.wo}) out.push_back(m->flat());
    }
    return out;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& h : heads) n += h.param_count();
    for (const auto& a : attention) n += a.param_count();
    return n;
  }
};

template <typename T>
FusionModel<T> zeros_like(const FusionModel<T>& m) {
  return FusionModel<T>(m.config);
}

template <typename T>
FusionModel<T> init_params(const ModelConfig& config, std::uint64_t seed) {
  FusionModel<T> m(config);
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&](Matrix<T>& w, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : w.flat()) v = static_cast<T>(dist(rng));
  };
  for (auto& h : m.heads) fill_uniform(h.w, h.in_dim());
  for (auto& a : m.attention) {
    for (auto* w : {&a.wq, &a.wk, &a.wv, &a.wo}) fill_uniform(*w, config.d_model);
  }
  return m;
}

template <typename T>
FusionModel<T> cast_model(const auto& src) {
  FusionModel<T> out(src.config);
  for (std::size_t i = 0; i < src.heads.size(); ++i) {
    out.heads[i].w = Matrix<T>::cast(src.heads[i].w);
    out.heads[i].b.assign(src.heads[i].b.begin(), src.heads[i].b.end());
  }
  for (std::size_t i = 0; i < src.attention.size(); ++i) {
    out.attention[i].wq = Matrix<T>::cast(src.attention[i].wq);
    out.attention[i].wk = Matrix<T>::cast(src.attention[i].wk);
    out.attention[i].wv = Matrix<T>::cast(src.attention[i].wv);
    out.attention[i].wo = Matrix<T>::cast(src.attention[i].wo);
  }
  return out;
}

/// One model input. `h_p_aligned` is only needed by the cross-attention
/// architectures and is computed once per segment.
template <typename T>
struct Example {
  Matrix<T> h_p;
  Matrix<T> h_p_aligned;
  Matrix<T> h_s;
  std::size_t label = 0;
  std::string id;
};

template <typename T>
Example<T> make_example(Matrix<T> h_p, Matrix<T> h_s,
                        std::span<const std::uint32_t> char_lengths,
                        std::size_t label, const ModelConfig& cfg) {
  Example<T> ex;
  if (uses_attention(cfg.architecture)) {
    ex.h_p_aligned = align(h_p, cfg.alignment, char_lengths);
  }
  ex.h_p = std::move(h_p);
  ex.h_s = std::move(h_s);
  ex.label = label;
  return ex;
}

template <typename T>
struct ForwardCache {
  std::array<Vector<T>, 2> pooled;           // head inputs
  std::array<HeadOutput<T>, 2> head_out;
  std::array<MultiHeadCache<T>, 2> mha;
  std::size_t z_rows = 0;
};

namespace detail {

template <typename T>
void check_width(const Matrix<T>& m, std::size_t d, const char* what) {
  if (m.cols() != d) {
    throw ShapeError(std::string(what) + " width " + std::to_string(m.cols()) +
                     " != d_model " + std::to_string(d));
  }
  if (m.rows() == 0) throw ShapeError(std::string(what) + " has no rows");
}

template <typename T>
Vector<T> concat(const Vector<T>& a, const Vector<T>& b) {
  Vector<T> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

/// Output class probabilities for one example. Fills `cache` for backward.
template <typename T>
Vector<T> forward(const FusionModel<T>& m, const Example<T>& ex,
                  ForwardCache<T>& cache) {
  const auto& cfg = m.config;
  const std::size_t d = cfg.d_model;
  switch (cfg.architecture) {
    case Architecture::UnimodalPara:
    case Architecture::UnimodalSem: {
      const auto& h =
          cfg.architecture == Architecture::UnimodalPara ? ex.h_p : ex.h_s;
      detail::check_width(h, d, "unimodal input");
      cache.pooled[0] = mean_over_positions(h);
      cache.head_out[0] =
          head_forward(std::span<const T>(cache.pooled[0]), m.heads[0]);
      return cache.head_out[0].probs;
    }
    case Architecture::Score: {
      detail::check_width(ex.h_p, d, "H_p");
      detail::check_width(ex.h_s, d, "H_s");
      cache.pooled[0] = mean_over_positions(ex.h_p);
      cache.pooled[1] = mean_over_positions(ex.h_s);
      Vector<T> probs(kNumClasses);
      for (std::size_t b = 0; b < 2; ++b) {
        cache.head_out[b] =
            head_forward(std::span<const T>(cache.pooled[b]), m.heads[b]);
      }
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        probs[c] = (cache.head_out[0].probs[c] + cache.head_out[1].probs[c]) /
                   T{2};
      }
      return probs;
    }
    case Architecture::Concatenation: {
      detail::check_width(ex.h_p, d, "H_p");
      detail::check_width(ex.h_s, d, "H_s");
      cache.pooled[0] = detail::concat(mean_over_positions(ex.h_p),
                                       mean_over_positions(ex.h_s));
      cache.head_out[0] =
          head_forward(std::span<const T>(cache.pooled[0]), m.heads[0]);
      return cache.head_out[0].probs;
    }
    case Architecture::ParaCrossAttn:
    case Architecture::SemCrossAttn:
    case Architecture::SymmetricCrossAttn: {
      const auto& hp = ex.h_p_aligned;
      detail::check_width(hp, d, "aligned H_p");
      detail::check_width(ex.h_s, d, "H_s");
      if (hp.rows() != ex.h_s.rows()) {
        throw ShapeError("cross-attention: aligned H_p has " +
                         std::to_string(hp.rows()) + " rows, H_s has " +
                         std::to_string(ex.h_s.rows()));
      }
      Matrix<T> z;
      if (cfg.architecture == Architecture::ParaCrossAttn) {
        z = multi_head_attention(m.attention[0], ex.h_s, hp, hp, &cache.mha[0]);
      } else if (cfg.architecture == Architecture::SemCrossAttn) {
        z = multi_head_attention(m.attention[0], hp, ex.h_s, ex.h_s,
                                 &cache.mha[0]);
      } else {
        z = multi_head_attention(m.attention[0], ex.h_s, hp, hp, &cache.mha[0]);
        Matrix<T> z_sem = multi_head_attention(m.attention[1], hp, ex.h_s,
                                               ex.h_s, &cache.mha[1]);
        auto zf = z.flat();
        auto sf = z_sem.flat();
        for (std::size_t i = 0; i < zf.size(); ++i) {
          zf[i] = (zf[i] + sf[i]) / T{2};
        }
      }
      cache.z_rows = z.rows();
      cache.pooled[0] = mean_over_positions(z);
      cache.head_out[0] =
          head_forward(std::span<const T>(cache.pooled[0]), m.heads[0]);
      return cache.head_out[0].probs;
    }
  }
  throw std::logic_error("unhandled architecture");
}

template <typename T>
Vector<T> forward(const FusionModel<T>& m, const Example<T>& ex) {
  ForwardCache<T> cache;
  return forward(m, ex, cache);
}

/// Accumulates scale * dL/dparams into `grads` given dL/dprobs.
template <typename T>
void backward(const FusionModel<T>& m, const Example<T>& ex,
              const ForwardCache<T>& cache, std::span<const T> dprobs,
              FusionModel<T>& grads, T scale) {
  auto accumulate_head = [&](std::size_t i, std::span<const T> dp) {
    auto g = head_backward(std::span<const T>(cache.pooled[i]), m.heads[i],
                           cache.head_out[i], dp);
    add_scaled(grads.heads[i].w, g.dw, scale);
    for (std::size_t c = 0; c < g.db.size(); ++c) {
      grads.heads[i].b[c] += scale * g.db[c];
    }
    return g.dx;
  };

  const auto arch = m.config.architecture;
  if (arch == Architecture::Score) {
    Vector<T> half(dprobs.begin(), dprobs.end());
    for (auto& v : half) v /= T{2};
    accumulate_head(0, half);
    accumulate_head(1, half);
    return;
  }
  Vector<T> dpooled = accumulate_head(0, dprobs);
  if (!uses_attention(arch)) return;

  Matrix<T> dz = mean_over_positions_backward(std::span<const T>(dpooled),
                                              cache.z_rows);
  const auto& hp = ex.h_p_aligned;
  if (arch == Architecture::ParaCrossAttn) {
    multi_head_attention_backward(m.attention[0], ex.h_s, hp, hp, cache.mha[0],
                                  dz, grads.attention[0], scale);
  } else if (arch == Architecture::SemCrossAttn) {
    multi_head_attention_backward(m.attention[0], hp, ex.h_s, ex.h_s,
                                  cache.mha[0], dz, grads.attention[0], scale);
  } else {
    const T half = scale / T{2};
    multi_head_attention_backward(m.attention[0], ex.h_s, hp, hp, cache.mha[0],
                                  dz, grads.attention[0], half);
    multi_head_attention_backward(m.attention[1], hp, ex.h_s, ex.h_s,
                                  cache.mha[1], dz, grads.attention[1], half);
  }
}

template <typename T>
T example_loss(const FusionModel<T>& m, const Example<T>& ex) {
  const auto probs = forward(m, ex);
  return cross_entropy(std::span<const T>(probs), ex.label);
}

template <typename T>
struct LossAndGrads {
  double loss = 0.0;
  FusionModel<T> grads;
};

/// Mean cross-entropy over the batch and its analytic gradient with respect
/// to every trainable parameter. Sequence lengths may vary across entries.
template <typename T>
LossAndGrads<T> model_grad(const FusionModel<T>& m,
                           std::span<const Example<T>* const> batch) {
  if (batch.empty()) throw std::invalid_argument("model_grad: empty batch");
  LossAndGrads<T> out{0.0, zeros_like(m)};
  const T scale = T{1} / static_cast<T>(batch.size());
  ForwardCache<T> cache;
  for (const Example<T>* ex : batch) {
    const auto probs = forward(m, *ex, cache);
    out.loss += static_cast<double>(
        cross_entropy(std::span<const T>(probs), ex->label));
    const auto dprobs =
        cross_entropy_backward(std::span<const T>(probs), ex->label);
    backward(m, *ex, cache, std::span<const T>(dprobs), out.grads, scale);
  }
  out.loss /= static_cast<double>(batch.size());
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  return out;
}

template <typename T>
LossAndGrads<T> model_grad(const FusionModel<T>& m,
                           std::span<const Example<T>> batch) {
  std::vector<const Example<T>*> ptrs;
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return model_grad(m, std::span<const Example<T>* const>(ptrs));
}

namespace detail {

template <typename T>
void require_arch(const FusionModel<T>& m, std::initializer_list<Architecture> ok,
                  const char* op) {
  for (auto a : ok) {
    if (m.config.architecture == a) return;
  }
  throw std::invalid_argument(std::string(op) + ": model architecture is " +
                              std::string(to_string(m.config.architecture)));
}

}  // namespace detail

template <typename T>
Vector<T> score_fusion_forward(const Matrix<T>& h_p, const Matrix<T>& h_s,
                               const FusionModel<T>& m) {
  detail::require_arch(m, {Architecture::Score}, "score_fusion_forward");
  return forward(m, Example<T>{h_p, {}, h_s, 0, {}});
}

template <typename T>
Vector<T> concat_fusion_forward(const Matrix<T>& h_p, const Matrix<T>& h_s,
                                const FusionModel<T>& m) {
  detail::require_arch(m, {Architecture::Concatenation},
                       "concat_fusion_forward");
  return forward(m, Example<T>{h_p, {}, h_s, 0, {}});
}

template <typename T>
Vector<T> cross_attention_forward(const Matrix<T>& h_p_aligned,
                                  const Matrix<T>& h_s,
                                  const FusionModel<T>& m) {
  detail::require_arch(m,
                       {Architecture::ParaCrossAttn, Architecture::SemCrossAttn,
                        Architecture::SymmetricCrossAttn},
                       "cross_attention_forward");
  return forward(m, Example<T>{{}, h_p_aligned, h_s, 0, {}});
}

template <typename T>
Vector<T> unimodal_forward(const Matrix<T>& h, const FusionModel<T>& m) {
  detail::require_arch(m, {Architecture::UnimodalPara, Architecture::UnimodalSem},
                       "unimodal_forward");
  Example<T> ex;
  if (m.config.architecture == Architecture::UnimodalPara) {
    ex.h_p = h;
  } else {
    ex.h_s = h;
  }
  return forward(m, ex);
}

}  // namespace emofuse
