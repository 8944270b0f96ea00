#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "emofuse/emofuse.hpp"
#include "oracles.hpp"

using namespace emofuse;

TEST(Softmax, UniformRow) {
  auto p = softmax_rows(Matrix<double>{{0, 0, 0, 0}});
  for (double v : p.flat()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, LogThreeRow) {
  auto p = softmax_rows(Matrix<double>{{0, std::log(3.0)}});
  EXPECT_NEAR(p(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariantPerRow) {
  std::mt19937_64 rng(3);
  auto m = oracle::random_matrix(5, 7, rng, 3.0);
  auto shifted = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (auto& v : shifted.row(r)) v += 17.0 * static_cast<double>(r) - 40.0;
  }
  auto a = softmax_rows(m), b = softmax_rows(shifted);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.flat()[i], b.flat()[i], 1e-12);
}

TEST(Softmax, StableForLargeMagnitudes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix<float> m(3, 9);
    for (auto& v : m.flat()) v = static_cast<float>(u(rng));
    auto p = softmax_rows(m);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (float v : p.row(r)) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Softmax, RejectsNonFinite) {
  Matrix<double> m{{0.0, NAN}};
  EXPECT_THROW(softmax_rows(m), NumericError);
  Matrix<double> inf{{INFINITY, 0.0}};
  EXPECT_THROW(softmax_rows(inf), NumericError);
}

TEST(MeanOverPositions, Examples) {
  EXPECT_EQ(mean_over_positions(Matrix<double>{{1, 2, 3}}), (Vector<double>{1, 2, 3}));
  EXPECT_EQ(mean_over_positions(Matrix<double>{{1, 3}, {3, 5}}), (Vector<double>{2, 4}));
  Matrix<double> c(6, 4, 2.5);
  for (double v : mean_over_positions(c)) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(MeanOverPositions, ZeroRowsIsError) {
  EXPECT_THROW(mean_over_positions(Matrix<double>(0, 3)), ShapeError);
}

TEST(HeadForward, ZeroParamsGiveUniform) {
  HeadParams<double> p(6);
  Vector<double> x{1, -2, 3, 0.5, 9, -1};
  auto out = head_forward(std::span<const double>(x), p);
  for (double v : out.probs) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(HeadForward, SaturatedBias) {
  // softmax([tanh(10), 0, 0, 0]), evaluated independently
  HeadParams<double> p(3);
  p.b = {10, 0, 0, 0};
  Vector<double> x{0.3, 0.1, -0.7};
  auto out = head_forward(std::span<const double>(x), p);
  EXPECT_NEAR(out.probs[0], 0.4753668853905963, 1e-12);
  for (int c = 1; c < 4; ++c) EXPECT_NEAR(out.probs[c], 0.17487770486980125, 1e-12);
  EXPECT_NEAR(out.logits[0], std::tanh(10.0), 1e-15);
}

TEST(HeadForward, DimensionMismatch) {
  HeadParams<double> p(4);
  Vector<double> x{1, 2, 3};
  EXPECT_THROW(head_forward(std::span<const double>(x), p), ShapeError);
}

TEST(HeadForward, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  HeadParams<double> p(8);
  for (auto& v : p.w.flat()) v = n(rng);
  for (auto& v : p.b) v = n(rng);
  Vector<double> x(8);
  for (auto& v : x) v = n(rng);
  const std::size_t label = 2;

  auto fwd = head_forward(std::span<const double>(x), p);
  auto dprobs = cross_entropy_backward(std::span<const double>(fwd.probs), label);
  auto g = head_backward(std::span<const double>(x), p, fwd,
                         std::span<const double>(dprobs));

  auto loss = [&] {
    auto o = head_forward(std::span<const double>(x), p);
    return cross_entropy(std::span<const double>(o.probs), label);
  };
  ParamSet<double> params{p.w.flat(), std::span<double>(p.b), std::span<double>(x)};
  auto numeric = finite_diff_grad<double>(loss, params);
  GradArrays analytic{{g.dw.flat().begin(), g.dw.flat().end()}, g.db, g.dx};
  EXPECT_LE(compare_gradients(analytic, numeric).max_rel_error, 1e-4);
}

TEST(CrossEntropy, Examples) {
  Vector<double> uniform{0.25, 0.25, 0.25, 0.25};
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_NEAR(cross_entropy(std::span<const double>(uniform), l), 1.3862943611198906, 1e-12);
  }
  Vector<double> sure{0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(cross_entropy(std::span<const double>(sure), 1), 0.0);
  Vector<double> p{0.5, 0.25, 0.125, 0.125};
  EXPECT_NEAR(cross_entropy(std::span<const double>(p), 0), 0.6931471805599453, 1e-12);
}

TEST(CrossEntropy, FloorAndRange) {
  Vector<double> p{1, 0, 0, 0};
  EXPECT_NEAR(cross_entropy(std::span<const double>(p), 3), -std::log(1e-12), 1e-9);
  EXPECT_THROW(cross_entropy(std::span<const double>(p), 4), ShapeError);
}

TEST(CrossEntropy, LogSumExpAgreesWithProbabilities) {
  Vector<double> logits{0.3, -0.9, 0.99, 0.0};
  auto probs = softmax(std::span<const double>(logits));
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_NEAR(cross_entropy_from_logits(std::span<const double>(logits), l),
                cross_entropy(std::span<const double>(probs), l), 1e-12);
  }
}

TEST(ClipGlobalNorm, Examples) {
  std::vector<double> a{2, 0};
  ParamSet<double> set{std::span<double>(a)};
  auto r = clip_global_norm(set, 1.0);
  EXPECT_DOUBLE_EQ(r.norm_before, 2.0);
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_DOUBLE_EQ(a[1], 0.0);

  std::vector<double> b{0.3, 0.4};
  ParamSet<double> small{std::span<double>(b)};
  clip_global_norm(small, 1.0);
  EXPECT_EQ(b, (std::vector<double>{0.3, 0.4}));

  std::vector<double> z{0, 0, 0};
  ParamSet<double> zeros{std::span<double>(z)};
  clip_global_norm(zeros, 1.0);
  EXPECT_EQ(z, (std::vector<double>{0, 0, 0}));
}

TEST(ClipGlobalNorm, BoundAndIdempotence) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> a(1 + rng() % 20), b(1 + rng() % 20);
    for (auto& v : a) v = static_cast<float>(n(rng));
    for (auto& v : b) v = static_cast<float>(n(rng));
    ParamSet<float> set{std::span<float>(a), std::span<float>(b)};
    const double max_norm = 0.1 + static_cast<double>(rng() % 30) / 10.0;
    auto r = clip_global_norm(set, max_norm);
    EXPECT_LE(r.norm_after, max_norm + 1e-6);
    auto once_a = a, once_b = b;
    clip_global_norm(set, max_norm);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], once_a[i], 1e-6);
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(b[i], once_b[i], 1e-6);
  }
}

TEST(ClipGlobalNorm, Errors) {
  std::vector<double> a{NAN};
  ParamSet<double> set{std::span<double>(a)};
  EXPECT_THROW(clip_global_norm(set, 1.0), NumericError);
  std::vector<double> b{1.0};
  ParamSet<double> ok{std::span<double>(b)};
  EXPECT_THROW(clip_global_norm(ok, 0.0), std::invalid_argument);
}

TEST(Adam, ZeroGradientIsIdentity) {
  std::vector<double> w{1.5, -2.0, 0.25};
  std::vector<double> g{0, 0, 0};
  ParamSet<double> params{std::span<double>(w)}, grads{std::span<double>(g)};
  AdamState<double> state(params);
  for (int i = 0; i < 25; ++i) adam_step(params, grads, state, {1e-2});
  EXPECT_EQ(w, (std::vector<double>{1.5, -2.0, 0.25}));
  EXPECT_EQ(state.step_count, 25u);
}

TEST(Adam, FirstStepClosedForm) {
  // t = 1: m_hat = g, v_hat = g^2, so the step is -lr * g / (|g| + eps)
  std::vector<double> w{0.7};
  std::vector<double> g{0.5};
  ParamSet<double> params{std::span<double>(w)}, grads{std::span<double>(g)};
  AdamState<double> state(params);
  adam_step(params, grads, state, {1e-3});
  EXPECT_NEAR(w[0] - 0.7, -0.0009999999800000003, 1e-15);
  EXPECT_EQ(state.step_count, 1u);
  EXPECT_GE(state.second_moment[0][0], 0.0);
}

TEST(Adam, TrajectoryOnSquareMatchesScalarOracle) {
  for (double lr : {0.1, 0.01}) {
    std::vector<double> w{1.0}, g{0.0};
    ParamSet<double> params{std::span<double>(w)}, grads{std::span<double>(g)};
    AdamState<double> state(params);
    const auto expected = oracle::scalar_adam_on_square(1.0, lr, 100);
    for (int t = 1; t <= 100; ++t) {
      g[0] = 2.0 * w[0];
      adam_step(params, grads, state, {lr});
      ASSERT_NEAR(w[0] * w[0], expected[t], 1e-12) << "lr " << lr << " step " << t;
    }
  }
}

TEST(Adam, SmallStepLossStrictlyDecreases) {
  // lr = 0.01 does not overshoot the minimum within 100 steps
  std::vector<double> w{1.0}, g{0.0};
  ParamSet<double> params{std::span<double>(w)}, grads{std::span<double>(g)};
  AdamState<double> state(params);
  double prev = 1.0;
  for (int t = 1; t <= 100; ++t) {
    g[0] = 2.0 * w[0];
    adam_step(params, grads, state, {0.01});
    ASSERT_LT(w[0] * w[0], prev) << "step " << t;
    prev = w[0] * w[0];
  }
}

TEST(Adam, Errors) {
  std::vector<double> w{1.0, 2.0}, g{1.0};
  ParamSet<double> params{std::span<double>(w)}, grads{std::span<double>(g)};
  AdamState<double> state(params);
  EXPECT_THROW(adam_step(params, grads, state), ShapeError);
  std::vector<double> bad{NAN, 0.0};
  ParamSet<double> bad_grads{std::span<double>(bad)};
  EXPECT_THROW(adam_step(params, bad_grads, state), NumericError);
}

TEST(FiniteDiff, QuadraticAndLinear) {
  std::vector<double> w{3.0};
  ParamSet<double> p{std::span<double>(w)};
  auto g = finite_diff_grad<double>([&] { return w[0] * w[0]; }, p);
  EXPECT_NEAR(g[0][0], 6.0, 1e-8);
  EXPECT_EQ(w[0], 3.0);

  std::vector<double> x{0.5, -1.0, 2.0};
  const std::vector<double> c{1.5, -3.0, 0.25};
  ParamSet<double> px{std::span<double>(x)};
  auto gl = finite_diff_grad<double>(
      [&] { return c[0] * x[0] + c[1] * x[1] + c[2] * x[2]; }, px);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(gl[0][i], c[i], 1e-9);
}

TEST(Kernels, Deterministic) {
  std::mt19937_64 rng(21);
  auto a = oracle::random_matrix(7, 5, rng);
  auto b = oracle::random_matrix(5, 9, rng);
  EXPECT_EQ(matmul(a, b), matmul(a, b));
  EXPECT_EQ(softmax_rows(a), softmax_rows(a));
}
