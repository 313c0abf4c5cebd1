#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/numeric_oracles.hpp"
#include "oracles/recompute_oracles.hpp"
#include "rssmm/msr.hpp"
#include "rssmm/simulator.hpp"

using namespace rssmm;

namespace {

const Deployment kThree({{1, {0.0, 0.0}}, {2, {100.0, 0.0}}, {3, {0.0, 300.0}}});

RssObservationSequence slots(std::vector<SlotObservations> s) {
  RssObservationSequence seq;
  seq.slots = std::move(s);
  return seq;
}

// Random strictly feasible trajectory with every step at most 80% of the cap.
std::vector<Point> random_feasible(std::size_t n, double cap, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> frac(0.0, 0.8);
  std::vector<Point> x{{std::uniform_real_distribution<double>(-50.0, 50.0)(rng), 0.0}};
  for (std::size_t t = 1; t < n; ++t) {
    const double a = ang(rng);
    const double r = frac(rng) * cap;
    x.push_back({x.back().x + r * std::cos(a), x.back().y + r * std::sin(a)});
  }
  return x;
}

std::vector<double> flatten(const std::vector<Point>& x) {
  std::vector<double> v;
  for (const auto& p : x) {
    v.push_back(p.x);
    v.push_back(p.y);
  }
  return v;
}

std::vector<Point> unflatten(const std::vector<double>& v) {
  std::vector<Point> x;
  for (std::size_t k = 0; k < v.size(); k += 2) x.push_back({v[k], v[k + 1]});
  return x;
}

// Dense entry (i, j) of the block-tridiagonal matrix.
double dense_entry(const BlockTridiagonal& h, std::size_t i, std::size_t j) {
  const std::size_t bi = i / 2;
  const std::size_t bj = j / 2;
  const std::size_t r = i % 2;
  const std::size_t c = j % 2;
  if (bi == bj) return h.diag[bi][2 * r + c];
  if (bi == bj + 1) return h.lower[bj][2 * r + c];
  if (bj == bi + 1) return h.lower[bi][2 * c + r];
  return 0.0;
}

}  // namespace

TEST(AnchorNearest, Examples) {
  EXPECT_EQ(anchor_estimates_nearest(slots({{{2, -80.0}}}), kThree).positions[0], (Point{100.0, 0.0}));
  EXPECT_EQ(anchor_estimates_nearest(slots({{{1, -70.0}, {3, -60.0}}}), kThree).positions[0], (Point{0.0, 300.0}));
  const auto a = anchor_estimates_nearest(slots({{{2, -80.0}}, {}, {{1, -50.0}}}), kThree);
  EXPECT_EQ(a.positions[1], (Point{100.0, 0.0}));
  EXPECT_EQ(a.positions[2], (Point{0.0, 0.0}));
  EXPECT_THROW(anchor_estimates_nearest(slots({{}, {{1, -50.0}}}), kThree), EmptyFirstSlot);
}

TEST(AnchorWeighted, Examples) {
  EXPECT_EQ(anchor_estimates_weighted(slots({{{3, -80.0}}}), kThree).positions[0], (Point{0.0, 300.0}));
  const Point mid = anchor_estimates_weighted(slots({{{1, -70.0}, {2, -70.0}}}), kThree).positions[0];
  EXPECT_NEAR(mid.x, 50.0, 1e-12);
  EXPECT_NEAR(mid.y, 0.0, 1e-12);
  const Point w = anchor_estimates_weighted(slots({{{1, -50.0}, {2, -60.0}, {3, -70.0}}}), kThree).positions[0];
  const auto [ox, oy] = oracle::weighted_centroid({{{0.0, 0.0}, -50.0}, {{100.0, 0.0}, -60.0}, {{0.0, 300.0}, -70.0}});
  EXPECT_NEAR(w.x, ox, 1e-12);
  EXPECT_NEAR(w.y, oy, 1e-12);
  const double s = 1e-5 + 1e-6 + 1e-7;
  EXPECT_NEAR(w.x, 100.0 * 1e-6 / s, 1e-12);
  EXPECT_THROW(anchor_estimates_weighted(slots({{}}), kThree), EmptyFirstSlot);
}

TEST(AnchorWeighted, VeryWeakSignalsDoNotUnderflow) {
  const Point w = anchor_estimates_weighted(slots({{{1, -4000.0}, {2, -4000.0}}}), kThree).positions[0];
  EXPECT_NEAR(w.x, 50.0, 1e-9);
}

TEST(Barrier, SingleSlotIsPureDataTerm) {
  MsrProblem p{{{3.0, 4.0}}, 5.0, {}};
  const std::vector<Point> x{{0.0, 0.0}};
  const auto ev = barrier_value_grad_hess(x, p, 2.0);
  EXPECT_DOUBLE_EQ(ev.value, 2.0 * 25.0);
  EXPECT_DOUBLE_EQ(ev.gradient[0], -12.0);
  EXPECT_DOUBLE_EQ(ev.gradient[1], -16.0);
}

TEST(Barrier, AtAnchorsOnlyBarrierRemains) {
  MsrProblem p{{{0.0, 0.0}, {3.0, 0.0}, {3.0, 4.0}}, 5.0, {}};
  const auto ev = barrier_value_grad_hess(p.anchors, p, 7.0);
  EXPECT_NEAR(ev.value, -std::log(25.0 - 9.0) - std::log(25.0 - 16.0), 1e-12);
}

TEST(Barrier, InfeasiblePointThrows) {
  MsrProblem p{{{0.0, 0.0}, {1.0, 0.0}}, 5.0, {}};
  const std::vector<Point> x{{0.0, 0.0}, {5.0, 0.0}};
  EXPECT_THROW(barrier_value_grad_hess(x, p, 1.0), InfeasiblePoint);
  EXPECT_THROW(barrier_value_grad_hess(std::vector<Point>{{0.0, 0.0}}, p, 1.0), LengthMismatch);
}

TEST(Barrier, GradientAndHessianMatchFiniteDifferences) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> jitter(-30.0, 30.0);
  std::uniform_int_distribution<int> len(1, 10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(len(rng));
    MsrProblem p;
    p.cap = 4.44;
    p.anchors = random_feasible(n, 3.0 * p.cap, rng);
    const std::vector<Point> x = random_feasible(n, p.cap, rng);
    const double c = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 2.0)(rng));
    const auto ev = barrier_value_grad_hess(x, p, c);
    auto f = [&](const std::vector<double>& v) { return barrier_value_grad_hess(unflatten(v), p, c, false).value; };
    auto grad = [&](const std::vector<double>& v, std::size_t k) {
      return barrier_value_grad_hess(unflatten(v), p, c, false).gradient[k];
    };
    const auto v = flatten(x);
    double gmax = 0.0;
    for (double g : ev.gradient) gmax = std::max(gmax, std::abs(g));
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double fd = oracle::central_difference(f, v, k, 1e-5);
      EXPECT_LE(std::abs(fd - ev.gradient[k]), 1e-4 * std::max(gmax, 1e-8)) << "trial " << trial << " k " << k;
    }
    double hmax = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) hmax = std::max(hmax, std::abs(dense_entry(ev.hessian, i, j)));
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double fd = oracle::central_difference([&](const std::vector<double>& w) { return grad(w, i); }, v, j, 1e-5);
        EXPECT_LE(std::abs(fd - dense_entry(ev.hessian, i, j)), 1e-4 * hmax) << "trial " << trial << " (" << i << "," << j << ")";
      }
    }
  }
}

TEST(Barrier, NewtonDirectionSolvesHessianSystem) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 30);
    MsrProblem p;
    p.cap = 4.44;
    p.anchors = random_feasible(n, 4.0 * p.cap, rng);
    const std::vector<Point> x = random_feasible(n, 0.99 * p.cap, rng);
    const double c = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 4.0)(rng));
    const auto ev = barrier_value_grad_hess(x, p, c);
    const auto dir = barrier_newton_direction(x, p, c, ev.gradient);
    const auto hp = multiply_block_tridiagonal(ev.hessian, dir.step);
    double gmax = 0.0;
    double ptHp = 0.0;
    for (std::size_t k = 0; k < hp.size(); ++k) {
      gmax = std::max(gmax, std::abs(ev.gradient[k]));
      ptHp += dir.step[k] * hp[k];
    }
    for (std::size_t k = 0; k < hp.size(); ++k) EXPECT_NEAR(hp[k], ev.gradient[k], 1e-8 * gmax);
    EXPECT_NEAR(dir.decrement2, ptHp, 1e-8 * std::max(1.0, ptHp));
  }
}

TEST(Barrier, NewtonDirectionStaysDescentNextToTightStep) {
  std::mt19937_64 rng(58);
  for (int trial = 0; trial < 40; ++trial) {
    MsrProblem p;
    p.cap = 4.44;
    const std::size_t n = 150;
    p.anchors = random_feasible(n, 20.0, rng);
    std::vector<Point> x;
    for (std::size_t t = 0; t < n; ++t) x.push_back({0.99 * p.cap * static_cast<double>(t), 0.0});
    // one step within ~1e-8 of the cap
    const std::size_t tight = 20 + static_cast<std::size_t>(trial);
    const double s = std::pow(10.0, -6.0 - trial % 4);
    const double len = std::sqrt(p.cap * p.cap - s);
    for (std::size_t t = tight; t < n; ++t) x[t].x += len - 0.99 * p.cap;
    const double c = 1.0;
    const auto ev = barrier_value_grad_hess(x, p, c, false);
    const auto dir = barrier_newton_direction(x, p, c, ev.gradient);
    double gp = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < ev.gradient.size(); ++k) {
      gp += ev.gradient[k] * dir.step[k];
      scale += std::abs(ev.gradient[k] * dir.step[k]);
    }
    EXPECT_GT(gp, 0.0) << "trial " << trial;
    EXPECT_NEAR(gp, dir.decrement2, 1e-9 * scale + 1e-9 * dir.decrement2) << "trial " << trial;
  }
}

TEST(Barrier, BandedSolverMatchesDenseResidual) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial);
    BlockTridiagonal h;
    for (std::size_t t = 0; t < n; ++t) h.diag.push_back({6.0 + u(rng), 0.0, 0.0, 6.0 + u(rng)});
    for (std::size_t t = 0; t < n; ++t) {
      const double off = 0.5 * u(rng);
      h.diag[t][1] = off;
      h.diag[t][2] = off;
    }
    for (std::size_t t = 0; t + 1 < n; ++t) h.lower.push_back({u(rng), u(rng), u(rng), u(rng)});
    std::vector<double> b(2 * n);
    for (auto& v : b) v = u(rng);
    const auto x = solve_block_tridiagonal(h, b);
    const auto hx = multiply_block_tridiagonal(h, x);
    for (std::size_t k = 0; k < b.size(); ++k) EXPECT_NEAR(hx[k], b[k], 1e-12);
  }
  BlockTridiagonal indefinite{{{1.0, 0.0, 0.0, -1.0}}, {}};
  const std::vector<double> rhs{1.0, 1.0};
  EXPECT_THROW(solve_block_tridiagonal(indefinite, rhs), NewtonFailure);
}

TEST(SolveMsr, SingleSlotReturnsAnchor) {
  MsrProblem p{{{12.5, -3.0}}, 1.0, {}};
  const auto sol = solve_msr(p);
  EXPECT_EQ(sol.trajectory.positions[0], (Point{12.5, -3.0}));
}

TEST(SolveMsr, FeasibleAnchorsAreReproduced) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    MsrProblem p;
    p.cap = 4.44;
    p.anchors = random_feasible(50, p.cap, rng);
    const auto sol = solve_msr(p);
    EXPECT_LE(sol.data_term, p.options.eps_outer);
    EXPECT_LE(sol.bound, p.options.eps_outer);
    EXPECT_LT(sol.max_violation, 0.0);
  }
}

TEST(SolveMsr, TwoPointClosedForm) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  for (int trial = 0; trial < 50; ++trial) {
    MsrProblem p;
    p.cap = 4.44;
    p.anchors = {{u(rng), u(rng)}, {u(rng), u(rng)}};
    const auto sol = solve_msr(p);
    const auto [a, b] = oracle::two_point_kkt(p.anchors[0].x, p.anchors[0].y, p.anchors[1].x, p.anchors[1].y, p.cap);
    const double tol = std::max(p.options.eps_outer, 1e-3);
    EXPECT_NEAR(sol.trajectory.positions[0].x, a.first, tol);
    EXPECT_NEAR(sol.trajectory.positions[0].y, a.second, tol);
    EXPECT_NEAR(sol.trajectory.positions[1].x, b.first, tol);
    EXPECT_NEAR(sol.trajectory.positions[1].y, b.second, tol);
  }
}

TEST(SolveMsr, WithinCertificateOfGridOptimumOnCollinearAnchors) {
  std::mt19937_64 rng(56);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
    std::vector<double> s(n);
    for (auto& v : s) v = u(rng);
    const double a = ang(rng);
    const Point origin{u(rng), u(rng)};
    MsrProblem p;
    p.cap = 4.44;
    for (double v : s) p.anchors.push_back({origin.x + v * std::cos(a), origin.y + v * std::sin(a)});
    const auto sol = solve_msr(p);
    const double grid = oracle::constrained_line_fit_grid(s, p.cap, 0.01);
    EXPECT_LE(sol.data_term - grid, sol.bound) << "trial " << trial;
    // the grid optimum can only exceed the continuous optimum by discretization error
    EXPECT_LE(grid - sol.data_term, 1e-2);
  }
}

TEST(SolveMsr, OutputRespectsSpeedCapAndCertificate) {
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  for (int trial = 0; trial < 10; ++trial) {
    MsrProblem p;
    p.cap = 4.44;
    for (int t = 0; t < 200; ++t) p.anchors.push_back({u(rng), u(rng)});
    const auto sol = solve_msr(p);
    EXPECT_LE(sol.bound, p.options.eps_outer * (1.0 + 1e-12));
    EXPECT_GE(sol.final_c, 199.0 / p.options.eps_outer);
    for (std::size_t t = 1; t < 200; ++t) {
      EXPECT_LE(distance(sol.trajectory.positions[t], sol.trajectory.positions[t - 1]), p.cap);
    }
  }
}

TEST(SolveMsr, SimulatedDriveWithNearlySaturatedStepSolves) {
  ScenarioConfig cfg;
  cfg.seed = 5033;
  const Scenario sc = make_scenario(cfg);
  const MsrSolution sol = msr_from_observations(sc.seq, sc.stations, cfg.v_max);
  EXPECT_LT(sol.max_violation, 0.0);
  EXPECT_LE(sol.bound, MsrOptions{}.eps_outer);
}

TEST(SolveMsr, RejectsInvalidProblems) {
  EXPECT_THROW(solve_msr(MsrProblem{{}, 1.0, {}}), BadParams);
  EXPECT_THROW(solve_msr(MsrProblem{{{0.0, 0.0}}, 0.0, {}}), BadParams);
  MsrProblem p{{{0.0, 0.0}, {1.0, 1.0}}, 1.0, {}};
  p.options.mu = 1.0;
  EXPECT_THROW(solve_msr(p), BadParams);
}

TEST(SolveMsr, FromObservationsUsesSlotDuration) {
  RssObservationSequence seq;
  seq.delta = 0.2;
  seq.slots = {{{1, -50.0}}, {{2, -50.0}}};
  const auto sol = msr_from_observations(seq, kThree, 22.2, AnchorRule::nearest);
  EXPECT_NEAR(distance(sol.trajectory.positions[0], sol.trajectory.positions[1]), 4.44, 1e-3);
  EXPECT_NEAR(sol.trajectory.positions[0].x, 50.0 - 2.22, 1e-3);
}
