#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "leafdet/anchors.hpp"
#include "leafdet/evaluation.hpp"
#include "leafdet/proposals.hpp"
#include "leafdet/roi_pool.hpp"
#include "leafdet/rpn.hpp"

namespace {

using namespace leafdet;

std::vector<BBox> random_boxes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0, 1000), side(4, 200);
  std::vector<BBox> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pos(rng), y = pos(rng);
    out.emplace_back(x, y, x + side(rng), y + side(rng));
  }
  return out;
}

FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  FeatureMap m(c, h, w);
  for (double& v : m.values()) v = d(rng);
  return m;
}

void BM_Iou(benchmark::State& state) {
  const auto boxes = random_boxes(1024, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(boxes[i & 1023], boxes[(i * 7 + 3) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_Nms(benchmark::State& state) {
  const auto boxes = random_boxes(static_cast<std::size_t>(state.range(0)), 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> s(0, 1);
  std::vector<ScoredBox> scored;
  for (const BBox& b : boxes) scored.emplace_back(b, s(rng));
  for (auto _ : state) benchmark::DoNotOptimize(nms(scored, 0.7));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(64, 6000)->Complexity();

void BM_RoiPool(benchmark::State& state) {
  const FeatureMap f = random_map(64, 38, 50, 4);
  const auto boxes = random_boxes(256, 5);
  std::size_t i = 0;
  for (auto _ : state) {
    const BBox& b = boxes[i++ & 255];
    benchmark::DoNotOptimize(roi_pool(f, BBox(b.x1() / 25, b.y1() / 30, b.x2() / 25 + 1, b.y2() / 30 + 1)));
  }
}
BENCHMARK(BM_RoiPool);

void BM_Conv3x3(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const FeatureMap f = random_map(c, 38, 50, 6);
  const ConvLayer layer = ConvLayer::random(3, c, c, 7);
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(f, layer));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(64);

void BM_RpnAndProposals(benchmark::State& state) {
  const FeatureMap f = random_map(32, 38, 50, 8);
  const RpnHead head = RpnHead::random(32, 9, 9);
  const AnchorSet anchors = tile_anchors(AnchorConfig{}, 38, 50);
  for (auto _ : state) {
    const RpnOutput out = rpn_forward(f, head);
    benchmark::DoNotOptimize(generate_proposals(out, anchors, ImageSize(800, 600), ProposalParams{}));
  }
}
BENCHMARK(BM_RpnAndProposals)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
  std::mt19937_64 rng(10);
  std::bernoulli_distribution tp(0.4);
  std::vector<Outcome> seq(static_cast<std::size_t>(state.range(0)));
  std::size_t total = 0;
  for (Outcome& o : seq) {
    o = tp(rng) ? Outcome::kTruePositive : Outcome::kFalsePositive;
    total += o == Outcome::kTruePositive;
  }
  for (auto _ : state) benchmark::DoNotOptimize(pr_curve(seq, total + 10));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
