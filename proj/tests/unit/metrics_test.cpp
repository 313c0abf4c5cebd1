#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rssmm/metrics.hpp"

using namespace rssmm;

namespace {

// Two parallel 20 m roads, 100 m apart, nodes every 2 m.
RoadGraph two_roads() {
  RoadNetwork net;
  net.polylines = {{{0.0, 0.0}, {20.0, 0.0}}, {{0.0, 100.0}, {20.0, 100.0}}};
  return build_nodes(net, 2.0);
}

std::vector<int> walk(const RoadGraph& g, double y, std::vector<double> xs) {
  Trajectory t;
  for (double x : xs) t.positions.push_back({x, y});
  return snap_to_nodes(g, t);
}

}  // namespace

TEST(Qle, Examples) {
  Trajectory a{{{0.0, 0.0}, {5.0, 5.0}, {10.0, -2.0}}};
  EXPECT_EQ(qle(a, a), 0.0);
  Trajectory b = a;
  for (auto& p : b.positions) p.y += 3.0;
  EXPECT_NEAR(qle(b, a), 3.0, 1e-12);
  EXPECT_THROW(qle(Trajectory{{{0.0, 0.0}}}, a), LengthMismatch);
  EXPECT_THROW(per_slot_errors(Trajectory{}, a), LengthMismatch);
}

TEST(Qle, RandomRecomputation) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  Trajectory e;
  Trajectory t;
  double s = 0.0;
  for (int i = 0; i < 7; ++i) {
    e.positions.push_back({u(rng), u(rng)});
    t.positions.push_back({u(rng), u(rng)});
    const double dx = e.positions.back().x - t.positions.back().x;
    const double dy = e.positions.back().y - t.positions.back().y;
    s += dx * dx + dy * dy;
  }
  EXPECT_NEAR(qle(e, t), std::sqrt(s / 7.0), 1e-12);
  const auto err = per_slot_errors(e, t);
  for (int i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(err[i], distance(e.positions[i], t.positions[i]));
}

TEST(Tme, IdenticalPathIsZero) {
  const RoadGraph g = two_roads();
  const auto truth = walk(g, 0.0, {0.0, 4.0, 8.0, 12.0, 16.0, 20.0});
  EXPECT_EQ(tme(truth, truth, g), 0.0);
}

TEST(Tme, DisjointEqualLengthPathIs200Percent) {
  const RoadGraph g = two_roads();
  const auto truth = walk(g, 0.0, {0.0, 10.0, 20.0});
  const auto est = walk(g, 100.0, {0.0, 10.0, 20.0});
  const TmeTerms t = tme_terms(est, truth, g);
  EXPECT_DOUBLE_EQ(t.length, 20.0);
  EXPECT_DOUBLE_EQ(t.loss, 20.0);
  EXPECT_DOUBLE_EQ(t.surplus, 20.0);
  EXPECT_DOUBLE_EQ(t.percent, 200.0);
}

TEST(Tme, HalfCoverageIs50Percent) {
  const RoadGraph g = two_roads();
  const auto truth = walk(g, 0.0, {0.0, 20.0});
  const auto est = walk(g, 0.0, {0.0, 10.0, 10.0});
  EXPECT_DOUBLE_EQ(tme(est, truth, g), 50.0);
}

TEST(Tme, RepeatedTraversalCountsOnce) {
  const RoadGraph g = two_roads();
  const auto truth = walk(g, 0.0, {0.0, 20.0});
  const auto est = walk(g, 0.0, {0.0, 20.0, 0.0, 20.0, 10.0});
  EXPECT_EQ(tme(est, truth, g), 0.0);
  EXPECT_EQ(traversed_edges(g, est).size(), 10u);
}

TEST(Tme, StationaryTruthIsRejected) {
  const RoadGraph g = two_roads();
  const auto truth = walk(g, 0.0, {4.0, 4.0, 4.0});
  EXPECT_THROW(tme(truth, truth, g), EmptyTruth);
  EXPECT_THROW(evaluate(Trajectory{}, Trajectory{}, g), EmptyTruth);
}

TEST(Evaluate, CombinesBothMetrics) {
  const RoadGraph g = two_roads();
  Trajectory truth{{{0.0, 0.0}, {10.0, 0.0}, {20.0, 0.0}}};
  Trajectory est = truth;
  for (auto& p : est.positions) p.y += 0.4;
  const EvaluationReport r = evaluate(est, truth, g);
  EXPECT_NEAR(r.qle, 0.4, 1e-12);
  EXPECT_EQ(r.tme, 0.0);
  EXPECT_DOUBLE_EQ(r.length, 20.0);
  ASSERT_EQ(r.errors.size(), 3u);
}

TEST(Baselines, MarAndWcl) {
  const Deployment dep{{1, {0.0, 0.0}}, {2, {100.0, 0.0}}};
  RssObservationSequence seq;
  seq.slots = {{{1, -70.0}, {2, -60.0}}, {{1, -65.0}, {2, -65.0}}, {}};
  const Trajectory mar = baseline_mar(seq, dep);
  EXPECT_EQ(mar.positions[0], (Point{100.0, 0.0}));
  EXPECT_EQ(mar.positions[2], mar.positions[1]);
  const Trajectory wcl = baseline_wcl(seq, dep);
  EXPECT_NEAR(wcl.positions[0].x, 100.0 * 10.0 / 11.0, 1e-9);
  EXPECT_NEAR(wcl.positions[1].x, 50.0, 1e-12);
  EXPECT_EQ(wcl.positions[2], wcl.positions[1]);
}
