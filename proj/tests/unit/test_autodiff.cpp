#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "easz/autodiff.hpp"
#include "easz/error.hpp"

using namespace easz;
using namespace easz::ad;

namespace {

Tensor rand_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(s.size());
  for (auto& x : v) x = u(rng);
  return Tensor(s, std::move(v));
}

// sum(w .* y) with fixed random w, so every output coordinate matters.
Var weighted(Graph& g, Var y, std::uint64_t seed = 99) {
  return sum(mul(y, g.constant(rand_tensor(y.shape(), seed, 0.5, 1.5))));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST(Autodiff, MatmulIdentity) {
  Graph g;
  Var i2 = g.constant({2, 2}, {1, 0, 0, 1});
  Var a = g.constant({2, 2}, {1, 2, 3, 4});
  const auto c = matmul(i2, a);
  EXPECT_EQ(std::vector<double>(c.value().begin(), c.value().end()), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Autodiff, ShapeErrorsNameBothShapes) {
  Graph g;
  Var a = g.constant(Tensor::zeros({2, 3}));
  Var b = g.constant(Tensor::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(add(a, g.constant(Tensor::zeros({3, 2}))), DimensionError);
}

TEST(Autodiff, SoftmaxRowsSumToOne) {
  Graph g;
  Var s = softmax_lastdim(g.constant(rand_tensor({3, 5}, 1, -20, 20)));
  for (std::size_t r = 0; r < 3; ++r) {
    double t = 0;
    for (std::size_t c = 0; c < 5; ++c) t += s.value()[r * 5 + c];
    EXPECT_NEAR(t, 1.0, 1e-12);
  }
}

TEST(Autodiff, GeluValues) {
  Graph g;
  Var y = gelu(g.constant({1, 3}, {-1.0, 0.0, 1.0}));
  EXPECT_NEAR(y.value()[0], -0.15865525393145707, 1e-12);
  EXPECT_NEAR(y.value()[1], 0.0, 1e-15);
  EXPECT_NEAR(y.value()[2], 0.8413447460685429, 1e-12);
}

TEST(Autodiff, LayerNormNormalizes) {
  Graph g;
  Var x = g.constant(rand_tensor({2, 6}, 3, -5, 5));
  Var y = layer_norm(x, g.constant({1, 6}, std::vector<double>(6, 1.0)), g.constant(Tensor::zeros({1, 6})));
  for (std::size_t r = 0; r < 2; ++r) {
    double m = 0, v = 0;
    for (std::size_t c = 0; c < 6; ++c) m += y.value()[r * 6 + c];
    m /= 6;
    for (std::size_t c = 0; c < 6; ++c) v += (y.value()[r * 6 + c] - m) * (y.value()[r * 6 + c] - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 6, 1.0, 1e-3);
  }
}

TEST(Autodiff, GradientsAccumulateAcrossUses) {
  Graph g;
  Var x = g.parameter({1, 1}, {3.0});
  Var y = add(mul(x, x), x);  // x^2 + x
  g.backward(sum(y));
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(Autodiff, MaeSubgradientAtTie) {
  Graph g;
  Var a = g.parameter({1, 2}, {1.0, 2.0});
  Var b = g.constant({1, 2}, {1.0, 0.0});
  g.backward(mean_abs_error(a, b));
  EXPECT_EQ(a.grad()[0], 0.0);
  EXPECT_EQ(a.grad()[1], 0.5);
}

TEST(GradCheck, Matmul) {
  EXPECT_LE(grad_check([](Graph& g, std::span<const Var> v) { return weighted(g, matmul(v[0], v[1])); },
                       {rand_tensor({3, 4}, 1), rand_tensor({4, 2}, 2)}),
            kTol);
}

TEST(GradCheck, TransposeAddScaleMul) {
  EXPECT_LE(grad_check(
                [](Graph& g, std::span<const Var> v) {
                  return weighted(g, mul(add(transpose(v[0]), scale(v[1], -2.5)), v[1]));
                },
                {rand_tensor({2, 3}, 3), rand_tensor({3, 2}, 4)}),
            kTol);
}

TEST(GradCheck, ConcatAndSlice) {
  EXPECT_LE(grad_check(
                [](Graph& g, std::span<const Var> v) {
                  std::vector<Var> rows{v[0], v[1]};
                  Var c = concat(rows, 0);
                  std::vector<Var> cols{c, slice_cols(c, 1, 2)};
                  return weighted(g, concat(cols, 1));
                },
                {rand_tensor({2, 3}, 5), rand_tensor({1, 3}, 6)}),
            kTol);
}

TEST(GradCheck, GatherScatter) {
  const std::vector<std::size_t> rows{3, 0, 2};
  EXPECT_LE(grad_check(
                [&](Graph& g, std::span<const Var> v) {
                  return weighted(g, scatter_rows(gather_rows(v[0], rows), rows, 5));
                },
                {rand_tensor({4, 3}, 7)}),
            kTol);
}

TEST(GradCheck, LayerNorm) {
  EXPECT_LE(grad_check(
                [](Graph& g, std::span<const Var> v) { return weighted(g, layer_norm(v[0], v[1], v[2])); },
                {rand_tensor({3, 5}, 8), rand_tensor({1, 5}, 9, 0.5, 1.5), rand_tensor({1, 5}, 10)}),
            kTol);
}

TEST(GradCheck, Softmax) {
  EXPECT_LE(grad_check([](Graph& g, Var x) { return weighted(g, softmax_lastdim(x)); }, rand_tensor({3, 4}, 11, -2, 2)),
            kTol);
}

TEST(GradCheck, Gelu) {
  EXPECT_LE(grad_check([](Graph& g, Var x) { return weighted(g, gelu(x)); }, rand_tensor({2, 5}, 12, -3, 3)), kTol);
}

TEST(GradCheck, Linear) {
  EXPECT_LE(grad_check([](Graph& g, std::span<const Var> v) { return weighted(g, linear(v[0], v[1], v[2])); },
                       {rand_tensor({4, 3}, 13), rand_tensor({3, 2}, 14), rand_tensor({1, 2}, 15)}),
            kTol);
}

TEST(GradCheck, MeanAbsError) {
  // Inputs kept well apart so no coordinate sits near the kink.
  Tensor a = rand_tensor({2, 4}, 16, 0.0, 1.0), b = rand_tensor({2, 4}, 17, 0.0, 1.0);
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = b.values[i] + (i % 2 ? 0.3 : -0.3) + a.values[i] * 0.1;
  EXPECT_LE(grad_check([](Graph&, std::span<const Var> v) { return mean_abs_error(v[0], v[1]); }, {a, b}), kTol);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A deliberately broken rule must be reported.
  const double err = grad_check(
      [](Graph& g, Var x) {
        std::vector<double> v(x.value().begin(), x.value().end());
        for (auto& e : v) e = e * e;
        const Var xx = x;
        Var y = g.emit(x.shape(), std::move(v), {xx}, [xx](Graph& gr, std::uint32_t self) {
          auto& in = gr.node(xx.id());
          const auto& out = gr.node(self);
          for (std::size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += out.grad[i] * in.values[i];  // missing 2x
        });
        return sum(y);
      },
      rand_tensor({1, 3}, 18, 0.5, 1.0));
  EXPECT_GT(err, 0.1);
}

TEST(Optimizer, MatchesHandComputedFirstStep) {
  std::vector<std::vector<double>> p{{1.0, -2.0}};
  const std::vector<std::vector<double>> g{{0.5, -0.25}};
  OptimizerState s;
  s.learning_rate = 0.1;
  s.weight_decay = 0.01;
  optimizer_step(p, g, s);
  // First step: mhat = g, vhat = g^2, so the update is lr * sign(g) (up to eps).
  EXPECT_NEAR(p[0][0], 1.0 - 0.1 * 0.01 * 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p[0][1], -2.0 - 0.1 * 0.01 * -2.0 + 0.1 * 0.25 / (0.25 + 1e-8), 1e-12);
  EXPECT_EQ(s.step, 1u);
}

TEST(Optimizer, RejectsNonFiniteGradient) {
  std::vector<std::vector<double>> p{{1.0}};
  const std::vector<std::vector<double>> g{{std::nan("")}};
  OptimizerState s;
  EXPECT_THROW(optimizer_step(p, g, s), TrainingError);
}

TEST(Optimizer, MinimizesQuadratic) {
  std::vector<std::vector<double>> p{{5.0, -3.0}};
  OptimizerState s;
  s.learning_rate = 0.1;
  s.weight_decay = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::vector<std::vector<double>> g{{2 * (p[0][0] - 1.0), 2 * (p[0][1] + 1.0)}};
    optimizer_step(p, g, s);
  }
  EXPECT_NEAR(p[0][0], 1.0, 1e-2);
  EXPECT_NEAR(p[0][1], -1.0, 1e-2);
}
