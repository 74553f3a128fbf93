#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "leafdet/error.hpp"
#include "leafdet/proposals.hpp"
#include "oracles.hpp"

namespace leafdet {
namespace {

TEST(ScoredBoxTest, ScoreRange) {
  EXPECT_THROW(ScoredBox(BBox(0, 0, 1, 1), 1.5), ValidationError);
  EXPECT_THROW(ScoredBox(BBox(0, 0, 1, 1), -0.1), ValidationError);
  EXPECT_NO_THROW(ScoredBox(BBox(0, 0, 1, 1), 1.0));
}

TEST(NmsTest, EmptyInput) { EXPECT_TRUE(nms({}, 0.5).empty()); }

TEST(NmsTest, SuppressesOverlapAboveThreshold) {
  const std::vector<ScoredBox> in{{BBox(0, 0, 10, 10), 0.9}, {BBox(1, 1, 11, 11), 0.8}};
  const auto out = nms(in, 0.5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
}

TEST(NmsTest, EqualToThresholdIsKept) {
  // IoU exactly 1/3.
  const std::vector<ScoredBox> in{{BBox(0, 0, 10, 10), 0.9}, {BBox(5, 0, 15, 10), 0.8}};
  EXPECT_EQ(nms(in, 1.0 / 3.0).size(), 2u);
  EXPECT_EQ(nms(in, 0.3).size(), 1u);
}

TEST(NmsTest, DisjointAllKeptInScoreOrder) {
  const std::vector<ScoredBox> in{
      {BBox(0, 0, 1, 1), 0.2}, {BBox(5, 5, 6, 6), 0.7}, {BBox(9, 9, 10, 10), 0.5}};
  EXPECT_EQ(nms_indices(in, 0.5), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(NmsTest, TiesKeepInputOrder) {
  const std::vector<ScoredBox> in{{BBox(0, 0, 10, 10), 0.5}, {BBox(0, 0, 10, 10), 0.5}};
  EXPECT_EQ(nms_indices(in, 0.5), (std::vector<std::size_t>{0}));
}

TEST(NmsTest, Idempotent) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> s(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<ScoredBox> in;
    for (int i = 0; i < 15; ++i) in.emplace_back(testing::random_box(rng, 0, 40, 1), s(rng));
    const auto once = nms(in, 0.5);
    EXPECT_EQ(nms(once, 0.5), once);
    for (std::size_t a = 0; a < once.size(); ++a)
      for (std::size_t b = a + 1; b < once.size(); ++b) EXPECT_LE(iou(once[a].box, once[b].box), 0.5);
  }
}

TEST(NmsTest, MatchesGreedyOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> score(0, 5);
  for (int t = 0; t < 300; ++t) {
    std::vector<ScoredBox> in;
    for (int i = 0; i < 8; ++i) in.emplace_back(testing::random_int_box(rng, 16), score(rng) / 5.0);
    for (double thr : {0.3, 0.5, 0.7}) ASSERT_EQ(nms_indices(in, thr), oracle::greedy_nms(in, thr));
  }
}

TEST(NmsTest, ThresholdRange) {
  const std::vector<ScoredBox> in{{BBox(0, 0, 1, 1), 0.5}};
  EXPECT_THROW(nms(in, 0.0), ValidationError);
  EXPECT_THROW(nms(in, 1.0), ValidationError);
}

// A 2x2 feature grid with one 32x32 anchor per position, stride 16, so the
// anchors overlap their neighbours. All deltas are zero.
struct TinyGrid {
  AnchorSet anchors;
  RpnOutput rpn;
};

TinyGrid tiny_grid(const std::vector<double>& object_logits, FeatureMap reg = FeatureMap(4, 2, 2)) {
  AnchorConfig cfg;
  cfg.base_size = 32;
  cfg.scales = {1};
  cfg.ratios = {1};
  FeatureMap cls(2, 2, 2);
  for (std::size_t p = 0; p < 4; ++p) cls(1, p / 2, p % 2) = object_logits[p];
  return {tile_anchors(cfg, 2, 2), RpnOutput(cls, std::move(reg), 1)};
}

TEST(ProposalTest, HandTracedSuppression) {
  // Clipped to 32x32: (0,0,24,24) (8,0,32,24) (0,8,24,32) (8,8,32,32).
  // Side neighbours overlap at IoU 0.5, diagonal ones at 2/7.
  const TinyGrid g = tiny_grid({0.0, 1.0, 2.0, 3.0});
  ProposalParams p;
  p.nms_iou_threshold = 0.4;
  const auto out = generate_proposals(g.rpn, g.anchors, ImageSize(32, 32), p);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].box, BBox(8, 8, 32, 32));
  EXPECT_EQ(out[1].box, BBox(0, 0, 24, 24));
  EXPECT_NEAR(out[0].score, 1.0 / (1.0 + std::exp(-3.0)), 1e-12);
  EXPECT_NEAR(out[1].score, 0.5, 1e-12);

  p.nms_iou_threshold = 0.7;
  const auto all = generate_proposals(g.rpn, g.anchors, ImageSize(32, 32), p);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[1].box, BBox(0, 8, 24, 32));
}

TEST(ProposalTest, TopNLimits) {
  const TinyGrid g = tiny_grid({0.0, 1.0, 2.0, 3.0});
  ProposalParams p;
  p.post_nms_top_n = 1;
  auto out = generate_proposals(g.rpn, g.anchors, ImageSize(32, 32), p);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].box, BBox(8, 8, 32, 32));

  p.post_nms_top_n = 2;
  p.pre_nms_top_n = 2;
  out = generate_proposals(g.rpn, g.anchors, ImageSize(32, 32), p);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].box, BBox(0, 8, 24, 32));
}

TEST(ProposalTest, TinyBoxesDropped) {
  FeatureMap reg(4, 2, 2);
  reg(2, 1, 1) = -10.0;  // collapses the top-scoring anchor's width
  const TinyGrid g = tiny_grid({0.0, 1.0, 2.0, 3.0}, reg);
  const auto out = generate_proposals(g.rpn, g.anchors, ImageSize(32, 32), ProposalParams{});
  ASSERT_EQ(out.size(), 3u);
  for (const auto& s : out) EXPECT_NE(s.box, BBox(8, 8, 32, 32));
}

TEST(ProposalTest, GridMismatchRejected) {
  const TinyGrid g = tiny_grid({0, 0, 0, 0});
  const AnchorSet other = tile_anchors(AnchorConfig{}, 2, 2);
  EXPECT_THROW(generate_proposals(g.rpn, other, ImageSize(32, 32), ProposalParams{}),
               ValidationError);
}

TEST(ProposalTest, ParamsValidated) {
  ProposalParams p;
  p.post_nms_top_n = 0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.pre_nms_top_n = 10;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.min_box_size = -1;
  EXPECT_THROW(p.validate(), ValidationError);
}

}  // namespace
}  // namespace leafdet
