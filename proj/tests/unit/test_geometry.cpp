#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "leafdet/error.hpp"
#include "leafdet/geometry.hpp"
#include "oracles.hpp"

namespace leafdet {
namespace {

TEST(BBoxTest, RejectsDegenerateBoxes) {
  EXPECT_THROW(BBox(0, 0, 0, 10), ValidationError);
  EXPECT_THROW(BBox(0, 0, 10, 0), ValidationError);
  EXPECT_THROW(BBox(5, 0, 1, 10), ValidationError);
  EXPECT_THROW(BBox(0, 0, std::nan(""), 10), ValidationError);
  EXPECT_THROW(BBox(0, 0, INFINITY, 10), ValidationError);
  EXPECT_FALSE(BBox::try_make(0, 0, 0, 0).has_value());
}

TEST(BBoxTest, AreaHasNoPixelCorrection) {
  const BBox b(0, 0, 10, 10);
  EXPECT_EQ(b.area(), 100.0);
  EXPECT_EQ(b.width(), 10.0);
  EXPECT_EQ(b.center_x(), 5.0);
}

TEST(ImageSizeTest, RejectsEmpty) {
  EXPECT_THROW(ImageSize(0, 10), ValidationError);
  EXPECT_THROW(ImageSize(10, -1), ValidationError);
  EXPECT_NO_THROW(ImageSize(1, 1));
}

TEST(IouTest, IdenticalBoxes) { EXPECT_EQ(iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)), 1.0); }

TEST(IouTest, DisjointBoxes) { EXPECT_EQ(iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)), 0.0); }

TEST(IouTest, TouchingBoxesDoNotOverlap) {
  EXPECT_EQ(iou(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)), 0.0);
}

TEST(IouTest, HalfShiftMatchesQuarterPixelLattice) {
  const BBox a(0, 0, 10, 10);
  const BBox b(5, 0, 15, 10);
  const oracle::LatticeCount c = oracle::lattice_count(a, b, 4);
  // Cells are 1/16 px^2: I = 50 px^2, U = 150 px^2.
  EXPECT_EQ(c.both, 50 * 16);
  EXPECT_EQ(c.either, 150 * 16);
  EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 3.0);
  EXPECT_EQ(iou(a, b), oracle::lattice_iou(a, b, 4));
}

TEST(IouTest, RandomPairsAreSymmetricBoundedAndSelfOne) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 2000; ++t) {
    const BBox a = testing::random_box(rng, -50, 150, 0.01);
    const BBox b = testing::random_box(rng, -50, 150, 0.01);
    const double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(iou(a, a), 1.0);
  }
}

TEST(IouTest, IntegerBoxesMatchPixelCount) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 500; ++t) {
    const BBox a = testing::random_int_box(rng, 64);
    const BBox b = testing::random_int_box(rng, 64);
    ASSERT_EQ(iou(a, b), oracle::lattice_iou(a, b)) << a << " " << b;
  }
}

TEST(ClipTest, QuadrantClip) {
  const auto c = clip(BBox(-5, -5, 5, 5), ImageSize(10, 10));
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, BBox(0, 0, 5, 5));
}

TEST(ClipTest, InsideIsUnchanged) {
  const BBox b(1.5, 2, 7, 9.25);
  EXPECT_EQ(clip(b, ImageSize(10, 10)), b);
}

TEST(ClipTest, ZeroAreaTouchIsEmpty) {
  EXPECT_FALSE(clip(BBox(-5, -5, 0, 0), ImageSize(10, 10)).has_value());
  EXPECT_FALSE(clip(BBox(10, 2, 15, 5), ImageSize(10, 10)).has_value());
}

TEST(ClipTest, Idempotent) {
  std::mt19937_64 rng(3);
  const ImageSize s(40, 30);
  for (int t = 0; t < 500; ++t) {
    const BBox b = testing::random_box(rng, -20, 60);
    const auto once = clip(b, s);
    if (!once) continue;
    EXPECT_EQ(clip(*once, s), once);
    EXPECT_GE(once->x1(), 0.0);
    EXPECT_LE(once->x2(), 40.0);
  }
}

}  // namespace
}  // namespace leafdet
