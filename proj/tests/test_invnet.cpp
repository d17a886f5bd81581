#include <gtest/gtest.h>

#include "support.hpp"

using namespace invrescale;
using support::max_grad_error;
using support::random_leaf;

namespace {

ModelConfig small_config(std::size_t scale = 2, std::uint64_t seed = 1) {
  ModelConfig c;
  c.scale = scale;
  c.coupling_hidden = 8;
  c.pse_hidden = 8;
  c.pse_dim = 8;
  c.predictor_hidden = 4;
  c.adp_tile = 4;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Quantize, Examples) {
  EXPECT_FLOAT_EQ(quantize_value(0.5f), 128.0f / 255.0f);
  EXPECT_EQ(quantize_value(0.0f), 0.0f);
  EXPECT_EQ(quantize_value(1.0f), 1.0f);
  EXPECT_EQ(quantize_value(-3.0f), 0.0f);
  EXPECT_EQ(quantize_value(7.0f), 1.0f);
  EXPECT_EQ(quantize_level(std::nanf("")), 0);
  // Exact half step rounds away from zero.
  EXPECT_EQ(quantize_level(0.5 / 255.0), 1);
  EXPECT_EQ(quantize_level(2.5 / 255.0), 3);
}

TEST(Quantize, ErrorIsAtMostHalfAStep) {
  SeededRng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const float v = static_cast<float>(rng.uniform());
    ASSERT_LE(std::abs(quantize_value(v) - v), 1.0f / 510.0f + 1e-6f);
  }
}

TEST(Quantize, StraightThroughGradient) {
  auto x = Var<double>::leaf(BasicTensor<double>({4}, std::vector<double>{-0.5, 0.2, 0.9, 1.5}));
  ad::backward(ad::dot_constant(ad::quantize_ste(x), BasicTensor<double>({4}, 1.0)));
  const auto g = x.grad();
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1.0);
  EXPECT_EQ(g[2], 1.0);
  EXPECT_EQ(g[3], 0.0);
}

TEST(Adp, TilingExamples) {
  SeededRng rng(2);
  const auto tile = uniform_tensor<float>({5, 4, 4}, -1, 1, rng);
  EXPECT_TRUE(bitwise_equal(adp_map(tile, 4, 4), tile));
  const auto big = adp_map(tile, 8, 8);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) ASSERT_EQ(big(c, i, j), tile(c, i % 4, j % 4));
  const auto cut = adp_map(tile, 3, 6);
  EXPECT_EQ(cut.dims(), (Shape{5, 3, 6}));
  EXPECT_EQ(cut(2, 2, 5), tile(2, 2, 1));
}

TEST(Adp, Kinds) {
  SeededRng rng(3);
  const auto zeros = make_adp_tile<float>(AdpKind::kZeros, 45, 8, rng);
  EXPECT_EQ(max_abs(adp_map(zeros, 16, 16)), 0.0);
  EXPECT_EQ(max_abs(make_adp_tile<float>(AdpKind::kLearnable, 45, 8, rng)), 0.0);
  const auto random = make_adp_tile<float>(AdpKind::kRandom, 45, 8, rng);
  EXPECT_GT(max_abs(random), 0.1);
  EXPECT_LE(max_abs(random), kRandomAdpAmplitude);
  EXPECT_EQ(parse_adp_kind("random"), AdpKind::kRandom);
  EXPECT_THROW(parse_adp_kind("gaussian"), ConfigError);
  EXPECT_EQ(make_adp_tile<float>(AdpKind::kZeros, 9, 1, rng).dims(), (Shape{9, 1, 1}));
}

TEST(Adp, Gradient) {
  SeededRng rng(4);
  auto tile = random_leaf({3, 2, 2}, rng);
  EXPECT_LT(max_grad_error(tile, [&] { return ad::adp_map(tile, 5, 3); }, 8, rng), 1e-6);
}

TEST(Coupling, ZeroSubnetsAreIdentity) {
  SeededRng rng(5);
  ParameterSet<float> params;
  CouplingBlock blk{"b", 3, 9, 8, 1.0};
  add_coupling_parameters(params, blk, rng, 0.0);
  const auto x = uniform_tensor<float>({12, 4, 4}, -1, 1, rng);
  EXPECT_TRUE(bitwise_equal(coupling_forward(params, blk, x), x));
  EXPECT_TRUE(bitwise_equal(coupling_inverse(params, blk, x), x));
}

TEST(Coupling, RoundTripWithRandomParameters) {
  SeededRng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    ParameterSet<float> params;
    CouplingBlock blk{"b", 3, 13, 8, 1.0};
    add_coupling_parameters(params, blk, rng, 1.0);
    const auto x = uniform_tensor<float>({16, 5, 3}, -2, 2, rng);
    EXPECT_LT(max_abs_diff(coupling_inverse(params, blk, coupling_forward(params, blk, x)), x), 1e-4);
  }
}

TEST(Coupling, LogScaleIsBoundedByClamp) {
  SeededRng rng(7);
  ParameterSet<float> params;
  CouplingBlock blk{"b", 3, 5, 8, 0.7};
  add_coupling_parameters(params, blk, rng, 5.0);
  ad::NoGradGuard no_grad;
  const auto a = Var<float>::constant(uniform_tensor<float>({3, 6, 6}, -10, 10, rng));
  EXPECT_LE(max_abs(coupling_log_scale(params, blk, a).value()), 0.7 + 1e-6);
}

TEST(Coupling, ChannelMismatch) {
  SeededRng rng(8);
  ParameterSet<float> params;
  CouplingBlock blk{"b", 3, 5, 4, 1.0};
  add_coupling_parameters(params, blk, rng);
  EXPECT_THROW(coupling_forward(params, blk, BasicTensor<float>({7, 2, 2})), ShapeError);
  EXPECT_THROW(coupling_inverse(params, blk, BasicTensor<float>({9, 2, 2})), ShapeError);
}

TEST(Coupling, GradientsForEverySubnetParameter) {
  SeededRng rng(9);
  ParameterSet<double> params;
  CouplingBlock blk{"b", 3, 5, 4, 1.0};
  add_coupling_parameters(params, blk, rng, 1.0);
  auto x = random_leaf({8, 4, 4}, rng);
  auto fwd = [&] { return coupling_forward(params, blk, x); };
  auto inv = [&] { return coupling_inverse(params, blk, x); };
  for (auto& e : params.entries()) {
    EXPECT_LT(max_grad_error(e.var, fwd, 6, rng), 1e-5) << e.name;
    EXPECT_LT(max_grad_error(e.var, inv, 6, rng), 1e-5) << e.name;
  }
  EXPECT_LT(max_grad_error(x, fwd, 8, rng), 1e-5);
}

TEST(Codec, IdentityIsBitwise) {
  SeededRng rng(10);
  ParameterSet<float> params;
  IdentityCodec<float> codec;
  const auto x = uniform_tensor<float>({3, 8, 8}, 0, 1, rng);
  const auto y = codec.decode(params, codec.encode(params, Var<float>::constant(x))).value();
  EXPECT_TRUE(bitwise_equal(y, x));
  EXPECT_EQ(parse_codec_kind("tiny-ae"), CodecKind::kTinyAutoencoder);
  EXPECT_THROW(parse_codec_kind("vae"), ConfigError);
}

TEST(Codec, TinyAutoencoderShapesAndGradients) {
  SeededRng rng(11);
  ParameterSet<double> params;
  TinyAutoencoder<double> codec(4, 6);
  TinyAutoencoder<double>::add_parameters(params, 4, 6, rng);
  auto x = random_leaf({3, 8, 8}, rng, 0.0, 1.0);
  const auto z = codec.encode(params, x);
  EXPECT_EQ(z.dims(), (Shape{4, 2, 2}));
  EXPECT_EQ(codec.decode(params, z).dims(), (Shape{3, 8, 8}));
  auto round = [&] { return codec.decode(params, codec.encode(params, x)); };
  for (auto& e : params.entries()) EXPECT_LT(max_grad_error(e.var, round, 6, rng), 1e-5) << e.name;
}

TEST(Model, ChannelBookkeeping) {
  for (std::size_t s : {2u, 4u, 8u}) {
    RescalerModel<float> m(small_config(s));
    EXPECT_EQ(m.latent_channels(), 3u);
    EXPECT_EQ(m.kernel_extent(), 3 * s * s);
    EXPECT_EQ(m.hf_channels(), 3 * s * s - 3);
    EXPECT_EQ(m.parameters().get("adp.tile").dims(), (Shape{3 * s * s - 3, 4, 4}));
    EXPECT_TRUE(m.kernel().within_budget());
  }
  auto c = small_config(4);
  c.codec = CodecKind::kTinyAutoencoder;
  RescalerModel<float> tiny(c);
  EXPECT_EQ(tiny.kernel_extent(), 4u * 16u);
  EXPECT_EQ(tiny.total_scale(), 16u);
  EXPECT_FALSE(tiny.parameters().entry("codec.enc1.w").trainable);
}

TEST(Model, ParameterNamesAreUniqueAndEnumerable) {
  RescalerModel<float> m(small_config());
  const auto names = m.parameters().names();
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
  for (const char* n : {"lrt.w", "adp.tile", "block0.phi.conv1.w", "block2.eta.conv2.b", "pse.fc3.w", "pred.conv3.w",
                        "pred.mod2.shift.w"})
    EXPECT_TRUE(m.parameters().contains(n)) << n;
}

TEST(Model, DownscaleShapesAndQuantizationGrid) {
  SeededRng rng(12);
  RescalerModel<float> m(small_config(4));
  const auto x = uniform_tensor<float>({3, 16, 12}, 0, 1, rng);
  const auto [lr, hf] = m.downscale(x, true);
  EXPECT_EQ(lr.dims(), (Shape{3, 4, 3}));
  EXPECT_EQ(hf.dims(), (Shape{45, 4, 3}));
  for (float v : lr.values()) {
    const float k = v * 255.0f;
    ASSERT_NEAR(k, std::round(k), 1e-4);
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
  EXPECT_EQ(m.upscale(lr).dims(), (Shape{3, 16, 12}));
  EXPECT_THROW(m.downscale(BasicTensor<float>({3, 10, 12}), true), ShapeError);
  EXPECT_THROW(m.upscale(lr, BasicTensor<float>({44, 4, 3})), ShapeError);
}

TEST(Model, IdentityPipelineWithUnitGainKeepsOnePhase) {
  SeededRng rng(13);
  auto cfg = small_config(2);
  cfg.lr_gain = 1.0;
  RescalerModel<float> m(cfg);
  m.make_pure_rearrangement();
  const auto x = uniform_tensor<float>({3, 8, 8}, 0, 1, rng);
  const auto lr = m.downscale(x, true).first;
  // Kernel row c·s² (phase dy = dx = 0 of channel 0) lands in LR channel 0;
  // rows 1, 2 are phases (0,1) and (1,0) of channel 0.
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(lr(0, i, j), quantize_value(x(0, 2 * i, 2 * j)));
      EXPECT_EQ(lr(1, i, j), quantize_value(x(0, 2 * i, 2 * j + 1)));
      EXPECT_EQ(lr(2, i, j), quantize_value(x(0, 2 * i + 1, 2 * j)));
    }
}

TEST(Model, DefaultGainDividesTheLrBranchByScale) {
  SeededRng rng(14);
  RescalerModel<float> m(small_config(4));
  m.make_pure_rearrangement();
  const auto x = uniform_tensor<float>({3, 8, 8}, 0, 1, rng);
  const auto lr = m.downscale(x, true).first;
  EXPECT_EQ(lr(0, 1, 1), quantize_value(x(0, 4, 4) / 4.0f));
}

TEST(Model, PureRearrangementIsExactModuloQuantization) {
  SeededRng rng(15);
  auto cfg = small_config(4);
  cfg.lr_gain = 1.0;
  RescalerModel<float> m(cfg);
  m.make_pure_rearrangement();
  // Inputs already on the 8-bit grid make quantization a no-op.
  const auto x = quantize(uniform_tensor<float>({3, 8, 8}, 0, 1, rng));
  const auto [lr, hf] = m.downscale(x, true);
  EXPECT_TRUE(bitwise_equal(m.upscale(lr, hf), x));
}

TEST(Model, ExactInversionWithTrueHighFrequencies) {
  SeededRng rng(16);
  for (int trial = 0; trial < 5; ++trial) {
    auto cfg = small_config(trial % 2 ? 2 : 4, 100 + trial);
    cfg.coupling_init_gain = 1.0;
    RescalerModel<float> m(cfg);
    const auto x = uniform_tensor<float>({3, 8, 8}, 0, 1, rng);
    const auto [a, hf] = m.downscale(x, false);
    EXPECT_LT(max_abs_diff(m.upscale(a, hf), x), 1e-3);
  }
}

TEST(Model, QuantizedRoundTripErrorIsBoundedAndReported) {
  SeededRng rng(17);
  RescalerModel<float> m(small_config(4, 7));
  const auto x = uniform_tensor<float>({3, 16, 16}, 0.2, 0.8, rng);
  const auto [lr, hf] = m.downscale(x, true);
  const double err = max_abs_diff(m.upscale(lr, hf), x);
  RecordProperty("quantized_round_trip_max_abs", std::to_string(err));
  std::cout << "quantized round-trip max-abs error: " << err << "\n";
  EXPECT_LT(err, 0.5);
}

TEST(Model, CastToDoubleComputesTheSameFunction) {
  SeededRng rng(18);
  RescalerModel<float> m(small_config(2));
  const auto md = m.cast<double>();
  const auto x = uniform_tensor<float>({3, 8, 8}, 0, 1, rng);
  const auto a = m.downscale(x, false).first;
  const auto b = md.downscale(x.cast<double>(), false).first;
  EXPECT_LT(max_abs_diff(a, b), 1e-5);
}
