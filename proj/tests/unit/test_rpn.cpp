#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "leafdet/error.hpp"
#include "leafdet/rpn.hpp"
#include "oracles.hpp"

namespace leafdet {
namespace {

ConvLayer identity_1x1(std::size_t channels) {
  std::vector<double> w(channels * channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) w[c * channels + c] = 1.0;
  return ConvLayer(1, channels, channels, w, std::vector<double>(channels, 0.0));
}

TEST(ConvTest, IdentityKernel) {
  std::mt19937_64 rng(1);
  const FeatureMap in = testing::random_map(rng, 3, 4, 6);
  EXPECT_EQ(conv_forward(in, identity_1x1(3)), in);
}

TEST(ConvTest, ZeroWeightsGiveBias) {
  std::mt19937_64 rng(2);
  const FeatureMap in = testing::random_map(rng, 2, 5, 5);
  const ConvLayer layer(3, 2, 2, std::vector<double>(36, 0.0), {1.5, -2.0});
  const FeatureMap out = conv_forward(in, layer);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(out(0, i, j), 1.5);
      EXPECT_EQ(out(1, i, j), -2.0);
    }
}

TEST(ConvTest, MatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  for (std::size_t kernel : {1u, 3u}) {
    for (int t = 0; t < 20; ++t) {
      const FeatureMap in = testing::random_map(rng, 3, 5, 5);
      const ConvLayer layer = ConvLayer::random(kernel, 3, 4, rng(), 0.5);
      const FeatureMap got = conv_forward(in, layer);
      const FeatureMap want = oracle::naive_conv(in, layer);
      for (std::size_t k = 0; k < got.size(); ++k) {
        ASSERT_NEAR(got.values()[k], want.values()[k], 1e-9);
      }
    }
  }
}

TEST(ConvTest, Linearity) {
  std::mt19937_64 rng(4);
  const ConvLayer layer = ConvLayer::random(3, 2, 3, 77, 1.0);
  const FeatureMap x = testing::random_map(rng, 2, 6, 7);
  const FeatureMap y = testing::random_map(rng, 2, 6, 7);
  const double alpha = 1.7, beta = -0.3;
  FeatureMap mix(2, 6, 7);
  for (std::size_t k = 0; k < mix.size(); ++k) {
    mix.values()[k] = alpha * x.values()[k] + beta * y.values()[k];
  }
  const FeatureMap cx = conv_forward(x, layer), cy = conv_forward(y, layer);
  const FeatureMap cm = conv_forward(mix, layer);
  for (std::size_t k = 0; k < cm.size(); ++k) {
    EXPECT_NEAR(cm.values()[k], alpha * cx.values()[k] + beta * cy.values()[k], 1e-9);
  }
}

TEST(ConvTest, ChannelMismatch) {
  const FeatureMap in(4, 3, 3);
  EXPECT_THROW(conv_forward(in, identity_1x1(3)), ValidationError);
}

TEST(ConvTest, BadShapesRejected) {
  EXPECT_THROW(ConvLayer(5, 1, 1, {1.0}, {0.0}), ValidationError);
  EXPECT_THROW(ConvLayer(1, 2, 1, {1.0}, {0.0}), ValidationError);
  EXPECT_THROW(ConvLayer(1, 1, 1, {1.0}, {}), ValidationError);
  EXPECT_THROW(FeatureMap(0, 1, 1), ValidationError);
  EXPECT_THROW(FeatureMap(1, 1, 1, {std::nan("")}), ValidationError);
}

TEST(RpnTest, ChannelCountsForNineAnchors) {
  std::mt19937_64 rng(5);
  const FeatureMap features = testing::random_map(rng, 8, 7, 9);
  const RpnOutput out = rpn_forward(features, RpnHead::random(8, 9, 11));
  EXPECT_EQ(out.cls_map().channels(), 18u);
  EXPECT_EQ(out.reg_map().channels(), 36u);
  EXPECT_EQ(out.height(), 7u);
  EXPECT_EQ(out.width(), 9u);
}

TEST(RpnTest, SpatialSizePreservedDownToOnePixel) {
  std::mt19937_64 rng(6);
  for (std::size_t h : {1u, 2u, 5u})
    for (std::size_t w : {1u, 3u}) {
      const RpnOutput out = rpn_forward(testing::random_map(rng, 4, h, w), RpnHead::random(4, 9, 3));
      EXPECT_EQ(out.height(), h);
      EXPECT_EQ(out.width(), w);
    }
}

TEST(RpnTest, ObjectnessPairsSumToOne) {
  std::mt19937_64 rng(7);
  const RpnOutput out =
      rpn_forward(testing::random_map(rng, 4, 6, 6, -50, 50), RpnHead::random(4, 9, 5, 0));
  const FeatureMap p = out.objectness();
  for (std::size_t a = 0; a < 9; ++a)
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_NEAR(p(2 * a, i, j) + p(2 * a + 1, i, j), 1.0, 1e-6);
        EXPECT_GE(p(2 * a + 1, i, j), 0.0);
        EXPECT_EQ(p(2 * a + 1, i, j), out.object_probability(i, j, a));
      }
}

TEST(RpnTest, Deterministic) {
  std::mt19937_64 rng(8);
  const FeatureMap f = testing::random_map(rng, 3, 4, 4);
  const RpnHead head = RpnHead::random(3, 9, 99);
  const RpnOutput a = rpn_forward(f, head), b = rpn_forward(f, head);
  EXPECT_EQ(a.cls_map(), b.cls_map());
  EXPECT_EQ(a.reg_map(), b.reg_map());
}

TEST(RpnTest, WrongSiblingWidthNamesExpectation) {
  RpnHead head = RpnHead::random(4, 9, 1);
  head.cls = ConvLayer::random(1, 4, 17, 2);
  try {
    head.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("2k = 18"), std::string::npos) << e.what();
  }
  head = RpnHead::random(4, 9, 1);
  head.reg = ConvLayer::random(1, 4, 35, 2);
  try {
    head.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("4k = 36"), std::string::npos) << e.what();
  }
}

TEST(RpnTest, SharedConvAppliesRectifier) {
  // Shared conv maps everything to -1; after ReLU the siblings only see bias.
  const ConvLayer shared(3, 1, 1, std::vector<double>(9, 0.0), {-1.0});
  const ConvLayer cls(1, 1, 2, {5.0, 5.0}, {0.25, 0.75});
  const ConvLayer reg(1, 1, 4, {1.0, 1.0, 1.0, 1.0}, {0, 0, 0, 0});
  const RpnOutput out = rpn_forward(FeatureMap(1, 2, 2), RpnHead{shared, cls, reg, 1});
  EXPECT_EQ(out.cls_map()(0, 1, 1), 0.25);
  EXPECT_EQ(out.cls_map()(1, 1, 1), 0.75);
  EXPECT_EQ(out.delta(0, 0, 0), BoxDelta{});
}

TEST(HeadTest, TwoClassShapes) {
  const std::size_t hidden[] = {16};
  const DetectionHead head = DetectionHead::random(7 * 7 * 2, hidden, 2, 4);
  std::vector<double> roi(7 * 7 * 2, 0.5);
  const HeadOutput out = head_forward(roi, head);
  EXPECT_EQ(out.class_probs.size(), 3u);
  EXPECT_EQ(out.box_deltas.size(), 8u);
  double sum = 0;
  for (double p : out.class_probs) {
    EXPECT_GE(p, 0.0);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(HeadTest, ZeroWeightsAreUniform) {
  const std::size_t C = 4, in = 10;
  const DetectionHead head{{},
                           DenseLayer(in, C + 1, std::vector<double>(in * (C + 1), 0.0),
                                      std::vector<double>(C + 1, 0.0)),
                           DenseLayer(in, 4 * C, std::vector<double>(in * 4 * C, 0.0),
                                      std::vector<double>(4 * C, 0.0)),
                           C};
  const HeadOutput out = head_forward(std::vector<double>(in, 3.0), head);
  for (double p : out.class_probs) EXPECT_DOUBLE_EQ(p, 1.0 / (C + 1));
}

TEST(HeadTest, MatchesMatrixMultiplyAndSoftmax) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t in = 12, mid = 6, C = 2;
    const std::size_t sizes[] = {mid};
    const DetectionHead head = DetectionHead::random(in, sizes, C, rng());
    std::vector<double> x(in);
    for (double& v : x) v = u(rng) * 10;

    // Reference: explicit loops over the raw weight arrays.
    std::vector<double> h(mid);
    for (std::size_t o = 0; o < mid; ++o) {
      double acc = head.hidden[0].bias()[o];
      for (std::size_t i = 0; i < in; ++i) acc += head.hidden[0].weights()[o * in + i] * x[i];
      h[o] = acc > 0 ? acc : 0;
    }
    std::vector<double> logits(C + 1);
    double z = 0, m = -1e300;
    for (std::size_t o = 0; o <= C; ++o) {
      double acc = head.cls_score.bias()[o];
      for (std::size_t i = 0; i < mid; ++i) acc += head.cls_score.weights()[o * mid + i] * h[i];
      logits[o] = acc;
      m = std::max(m, acc);
    }
    for (double& l : logits) z += std::exp(l - m);
    const HeadOutput out = head_forward(x, head);
    for (std::size_t o = 0; o <= C; ++o) {
      EXPECT_NEAR(out.class_probs[o], std::exp(logits[o] - m) / z, 1e-9);
    }
    for (std::size_t o = 0; o < 4 * C; ++o) {
      double acc = head.bbox_pred.bias()[o];
      for (std::size_t i = 0; i < mid; ++i) acc += head.bbox_pred.weights()[o * mid + i] * h[i];
      EXPECT_NEAR(out.box_deltas[o], acc, 1e-9);
    }
  }
}

TEST(HeadTest, LengthMismatch) {
  const std::size_t hidden[] = {4};
  const DetectionHead head = DetectionHead::random(98, hidden, 2, 1);
  EXPECT_THROW(head_forward(std::vector<double>(97, 0.0), head), ValidationError);
}

TEST(HeadTest, WrongOutputWidths) {
  DetectionHead head = DetectionHead::random(8, {}, 2, 1);
  head.num_classes = 3;
  EXPECT_THROW(head.validate(), ValidationError);
}

}  // namespace
}  // namespace leafdet
