#include <numeric>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace invrescale;
using support::max_grad_error;
using support::random_leaf;

namespace {

// Frozen from a 50-digit decimal product of (1 − β_i).
constexpr double kAlphaBar250 = 0.52408537382536050097;
constexpr double kAlphaBar500 = 0.078587242881778237343;
constexpr double kAlphaBar1000 = 4.0358297653756833148e-05;

ModelConfig refiner_config(std::uint64_t seed = 1) {
  ModelConfig c;
  c.scale = 2;
  c.coupling_hidden = 4;
  c.pse_hidden = 6;
  c.pse_dim = 5;
  c.predictor_hidden = 4;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Schedule, PinnedValues) {
  NoiseSchedule s;
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_NEAR(s.alpha_bar(1), 0.9999, 1e-15);
  EXPECT_NEAR(s.alpha_bar(250), kAlphaBar250, 1e-12);
  EXPECT_NEAR(s.alpha_bar(500), kAlphaBar500, 1e-12);
  EXPECT_NEAR(s.alpha_bar(1000), kAlphaBar1000, 1e-12);
}

TEST(Schedule, StrictlyDecreasingInUnitInterval) {
  NoiseSchedule s;
  double prev = 1.0;
  for (int t = 1; t <= 1000; ++t) {
    const double a = s.alpha_bar(t);
    ASSERT_LT(a, prev);
    ASSERT_GT(a, 0.0);
    prev = a;
  }
}

TEST(Schedule, RejectsBadArguments) {
  NoiseSchedule s;
  EXPECT_THROW(s.alpha_bar(0), ShapeError);
  EXPECT_THROW(s.alpha_bar(1001), ShapeError);
  EXPECT_THROW(NoiseSchedule(0), ConfigError);
  EXPECT_THROW(NoiseSchedule(10, 0.5, 0.1), ConfigError);
  EXPECT_NEAR(NoiseSchedule(1, 0.3, 0.3).alpha_bar(1), 0.7, 1e-15);
}

TEST(Denoise, ZeroNoiseDividesBySignal) {
  NoiseSchedule s;
  const BasicTensor<double> f({3}, std::vector<double>{1.0, -2.0, 0.5});
  const auto out = one_step_denoise(f, BasicTensor<double>({3}), s, 500);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], f[i] / std::sqrt(kAlphaBar500), 1e-12);
}

TEST(Denoise, UnitNoiseAtMaximumStep) {
  NoiseSchedule s;
  const auto out = one_step_denoise(BasicTensor<double>({1}), BasicTensor<double>({1}, 1.0), s, 1000);
  EXPECT_NEAR(out[0], -std::sqrt(1.0 - kAlphaBar1000) / std::sqrt(kAlphaBar1000), 1e-9);
  EXPECT_NEAR(out[0], -157.41, 0.01);
}

TEST(Denoise, InvertsCorruption) {
  NoiseSchedule s;
  SeededRng rng(1);
  for (int t : {1, 250, 500, 1000}) {
    const auto z = normal_tensor<float>({4, 8, 8}, 1.0, rng);
    const auto n = normal_tensor<float>({4, 8, 8}, 1.0, rng);
    // Float rounding of F_T is amplified by 1/√ᾱ_t ≈ 157 at t = 1000.
    EXPECT_LT(max_abs_diff(one_step_denoise(corrupt(z, n, s, t), n, s, t), z), 1e-4) << "t=" << t;
  }
}

TEST(Denoise, Gradients) {
  NoiseSchedule s;
  SeededRng rng(2);
  auto f = random_leaf({2, 3, 3}, rng);
  auto e = random_leaf({2, 3, 3}, rng);
  EXPECT_LT(max_grad_error(f, [&] { return ad::one_step_denoise(f, e, s, 700); }, 6, rng), 1e-6);
  EXPECT_LT(max_grad_error(e, [&] { return ad::one_step_denoise(f, e, s, 700); }, 6, rng), 1e-6);
}

TEST(Refiner, ZeroResidualIsIdentity) {
  RescalerModel<double> m(refiner_config());
  m.make_pure_rearrangement();
  SeededRng rng(3);
  ad::NoGradGuard no_grad;
  const auto f = Var<double>::constant(normal_tensor<double>({3, 4, 4}, 1.0, rng));
  const auto c = Var<double>::constant(normal_tensor<double>({5}, 1.0, rng));
  EXPECT_LT(max_abs_diff(m.refine(f, c).value(), f.value()), 1e-9);
}

TEST(Refiner, ResidualShiftsTheDenoisedLatent) {
  RescalerModel<double> m(refiner_config());
  SeededRng rng(4);
  ad::NoGradGuard no_grad;
  const auto f = Var<double>::constant(normal_tensor<double>({3, 4, 4}, 1.0, rng));
  const auto c = Var<double>::constant(normal_tensor<double>({5}, 1.0, rng));
  const auto* net = dynamic_cast<const ConditionedResidualNet<double>*>(&m.predictor());
  ASSERT_NE(net, nullptr);
  const auto r = net->residual(m.parameters(), f, c).value();
  EXPECT_GT(max_abs(r), 0.0);
  EXPECT_LT(max_abs_diff(m.refine(f, c).value(), f.value() - r), 1e-9);
}

TEST(Refiner, ZeroPredictorGivesScaledLatent) {
  struct ZeroPredictor final : EpsilonPredictor<double> {
    Var<double> predict(const ParameterSet<double>&, const Var<double>& f, const Var<double>&, int,
                        const NoiseSchedule&) const override {
      return Var<double>::constant(BasicTensor<double>(f.dims()));
    }
  };
  NoiseSchedule s;
  ParameterSet<double> params;
  ZeroPredictor zero;
  ad::NoGradGuard no_grad;
  const auto f = Var<double>::constant(BasicTensor<double>({1, 2, 2}, 0.25));
  const auto out = refine(params, f, Var<double>::constant(BasicTensor<double>({1})), zero, s).value();
  for (double v : out.values()) EXPECT_NEAR(v, 0.25 / std::sqrt(kAlphaBar1000), 1e-9);
}

TEST(Refiner, ConditioningChangesTheOutput) {
  RescalerModel<double> m(refiner_config());
  SeededRng rng(5);
  ad::NoGradGuard no_grad;
  const auto f = Var<double>::constant(normal_tensor<double>({3, 4, 4}, 1.0, rng));
  const auto c1 = Var<double>::constant(normal_tensor<double>({5}, 1.0, rng));
  const auto c2 = Var<double>::constant(normal_tensor<double>({5}, 1.0, rng));
  EXPECT_GT(max_abs_diff(m.refine(f, c1).value(), m.refine(f, c2).value()), 1e-6);
}

TEST(Refiner, PredictorGradients) {
  RescalerModel<double> m(refiner_config(6));
  SeededRng rng(6);
  auto f = random_leaf({3, 4, 4}, rng);
  auto c = random_leaf({5}, rng);
  auto fwd = [&] { return m.refine(f, c); };
  for (auto& e : m.parameters().entries())
    if (e.name.rfind("pred.", 0) == 0) {
      EXPECT_LT(max_grad_error(e.var, fwd, 5, rng), 1e-5) << e.name;
    }
  EXPECT_LT(max_grad_error(f, fwd, 6, rng), 1e-5);
  EXPECT_LT(max_grad_error(c, fwd, 5, rng), 1e-5);
}

TEST(Pse, ShapeAndZeroImage) {
  RescalerModel<double> m(refiner_config());
  ad::NoGradGuard no_grad;
  const auto e1 = m.embed(Var<double>::constant(BasicTensor<double>({3, 4, 4}))).value();
  const auto e2 = m.embed(Var<double>::constant(BasicTensor<double>({3, 7, 2}))).value();
  EXPECT_EQ(e1.dims(), (Shape{5}));
  // A constant image pools to the same vector whatever its extent.
  EXPECT_TRUE(bitwise_equal(e1, e2));
}

TEST(Pse, PixelShuffleInvariance) {
  RescalerModel<float> m(refiner_config(7));
  SeededRng rng(7);
  ad::NoGradGuard no_grad;
  for (int trial = 0; trial < 20; ++trial) {
    const auto lr = uniform_tensor<float>({3, 6, 5}, 0, 1, rng);
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    BasicTensor<float> shuffled(lr.dims());
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 30; ++p) shuffled[c * 30 + p] = lr[c * 30 + perm[p]];
    ASSERT_TRUE(bitwise_equal(m.embed(Var<float>::constant(lr)).value(),
                              m.embed(Var<float>::constant(shuffled)).value()));
  }
}

TEST(Pse, Gradients) {
  RescalerModel<double> m(refiner_config(8));
  SeededRng rng(8);
  auto lr = random_leaf({3, 4, 4}, rng, 0.0, 1.0);
  auto fwd = [&] { return m.embed(lr); };
  for (auto& e : m.parameters().entries())
    if (e.name.rfind("pse.", 0) == 0) {
      EXPECT_LT(max_grad_error(e.var, fwd, 5, rng), 1e-5) << e.name;
    }
  EXPECT_LT(max_grad_error(lr, fwd, 6, rng), 1e-5);
}

TEST(Teacher, DeterministicPerSeed) {
  SeededRng rng(9);
  const auto img = uniform_tensor<float>({3, 16, 16}, 0, 1, rng);
  FrozenRandomTeacher<float> a(11, 8), b(11, 8), c(12, 8);
  EXPECT_EQ(a.dim(), 8u);
  EXPECT_TRUE(bitwise_equal(a.embed(img), b.embed(img)));
  EXPECT_FALSE(bitwise_equal(a.embed(img), c.embed(img)));
}
