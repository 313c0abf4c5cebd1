#ifndef RSSMM_MSR_HPP
#define RSSMM_MSR_HPP

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/types.hpp"

namespace rssmm {

/// Strongest-station position per slot; empty slots repeat the previous anchor.
inline Trajectory anchor_estimates_nearest(const RssObservationSequence& seq, const Deployment& stations) {
  Trajectory out;
  out.positions.reserve(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto& slot = seq.slots[t];
    if (slot.empty()) {
      if (t == 0) throw EmptyFirstSlot("the first slot has no observations to anchor on");
      out.positions.push_back(out.positions.back());
      continue;
    }
    const RssObservation* best = &slot.front();
    for (const auto& o : slot) {
      if (o.rss > best->rss) best = &o;
    }
    out.positions.push_back(stations.at(best->bs_id).position);
  }
  return out;
}

/// Centroid of observed station positions weighted by linear power 10^(rss/10).
inline Trajectory anchor_estimates_weighted(const RssObservationSequence& seq, const Deployment& stations) {
  Trajectory out;
  out.positions.reserve(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto& slot = seq.slots[t];
    if (slot.empty()) {
      if (t == 0) throw EmptyFirstSlot("the first slot has no observations to anchor on");
      out.positions.push_back(out.positions.back());
      continue;
    }
    double peak = slot.front().rss;
    for (const auto& o : slot) peak = std::max(peak, o.rss);
    // Weights are rescaled by the peak power; the ratio is unchanged.
    double wsum = 0.0;
    Point acc{0.0, 0.0};
    for (const auto& o : slot) {
      const double w = std::pow(10.0, (o.rss - peak) / 10.0);
      acc = acc + w * stations.at(o.bs_id).position;
      wsum += w;
    }
    out.positions.push_back((1.0 / wsum) * acc);
  }
  return out;
}

struct MsrOptions {
  double c0 = 1.0;
  double mu = 10.0;
  double eps_inner = 1e-8;
  double eps_outer = 1e-3;
  int max_newton = 100000;
  int max_outer = 100;
};

struct MsrProblem {
  std::vector<Point> anchors;
  double cap = 0.0;  // v_max * delta, meters
  MsrOptions options;

  void validate() const {
    if (anchors.empty()) throw BadParams("speed-constrained recovery needs at least one anchor");
    if (!(cap > 0.0) || !std::isfinite(cap)) throw BadParams("step cap must be positive");
    for (const auto& a : anchors) {
      if (!is_finite(a)) throw BadParams("anchor coordinates must be finite");
    }
    const auto& o = options;
    if (!(o.c0 > 0.0) || !(o.mu > 1.0) || !(o.eps_inner > 0.0) || !(o.eps_outer > 0.0)) {
      throw BadParams("barrier options require c0 > 0, mu > 1, eps > 0");
    }
  }
};

using Block2 = std::array<double, 4>;  // row-major 2x2

/// Block-tridiagonal symmetric matrix: diag[t] = H(t,t), lower[t] = H(t+1,t).
struct BlockTridiagonal {
  std::vector<Block2> diag;
  std::vector<Block2> lower;
};

struct BarrierEval {
  double value = 0.0;
  std::vector<double> gradient;  // 2T, interleaved (x0, y0, x1, y1, ...)
  BlockTridiagonal hessian;
};

/**
 * phi(x, c) = c * sum_t |x_t - z_t|^2 - sum_{t>=1} ln(cap^2 - |x_t - x_{t-1}|^2).
 * Throws InfeasiblePoint when a step reaches the cap.
 */
inline BarrierEval barrier_value_grad_hess(std::span<const Point> x, const MsrProblem& problem, double c,
                                           bool with_hessian = true) {
  const std::size_t n = x.size();
  if (n != problem.anchors.size()) throw LengthMismatch("trajectory and anchors differ in length");
  const double cap2 = problem.cap * problem.cap;
  BarrierEval ev;
  ev.gradient.assign(2 * n, 0.0);
  if (with_hessian) {
    ev.hessian.diag.assign(n, Block2{2.0 * c, 0.0, 0.0, 2.0 * c});
    ev.hessian.lower.assign(n > 0 ? n - 1 : 0, Block2{0.0, 0.0, 0.0, 0.0});
  }
  for (std::size_t t = 0; t < n; ++t) {
    const Point r = x[t] - problem.anchors[t];
    ev.value += c * dot(r, r);
    ev.gradient[2 * t] += 2.0 * c * r.x;
    ev.gradient[2 * t + 1] += 2.0 * c * r.y;
  }
  for (std::size_t t = 1; t < n; ++t) {
    const Point d = x[t] - x[t - 1];
    const double s = cap2 - dot(d, d);
    if (!(s > 0.0)) {
      std::ostringstream msg;
      msg << "step " << t << " has length " << norm(d) << " >= cap " << problem.cap;
      throw InfeasiblePoint(msg.str());
    }
    ev.value -= std::log(s);
    const double gx = 2.0 * d.x / s;
    const double gy = 2.0 * d.y / s;
    ev.gradient[2 * t] += gx;
    ev.gradient[2 * t + 1] += gy;
    ev.gradient[2 * t - 2] -= gx;
    ev.gradient[2 * t - 1] -= gy;
    if (with_hessian) {
      const double s2 = s * s;
      const Block2 h{2.0 / s + 4.0 * d.x * d.x / s2, 4.0 * d.x * d.y / s2, 4.0 * d.x * d.y / s2,
                     2.0 / s + 4.0 * d.y * d.y / s2};
      for (int k = 0; k < 4; ++k) {
        ev.hessian.diag[t][k] += h[k];
        ev.hessian.diag[t - 1][k] += h[k];
        ev.hessian.lower[t - 1][k] -= h[k];
      }
    }
  }
  return ev;
}

namespace detail {

inline Block2 transpose(const Block2& a) { return {a[0], a[2], a[1], a[3]}; }
inline std::array<double, 2> apply(const Block2& a, double x, double y) {
  return {a[0] * x + a[1] * y, a[2] * x + a[3] * y};
}

}  // namespace detail

/// Solves H p = rhs by banded Cholesky (half-bandwidth 3 over interleaved coordinates) in O(T).
inline std::vector<double> solve_block_tridiagonal(const BlockTridiagonal& h, std::span<const double> rhs) {
  constexpr std::size_t w = 3;
  const std::size_t n = h.diag.size();
  const std::size_t m = 2 * n;
  // band[i * (w + 1) + k] holds H(i, i - k), later L(i, i - k).
  std::vector<double> band(m * (w + 1), 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return band[i * (w + 1) + (i - j)]; };
  for (std::size_t t = 0; t < n; ++t) {
    at(2 * t, 2 * t) = h.diag[t][0];
    at(2 * t + 1, 2 * t) = h.diag[t][2];
    at(2 * t + 1, 2 * t + 1) = h.diag[t][3];
    if (t + 1 < n) {
      const Block2& l = h.lower[t];
      at(2 * t + 2, 2 * t) = l[0];
      at(2 * t + 2, 2 * t + 1) = l[1];
      at(2 * t + 3, 2 * t) = l[2];
      at(2 * t + 3, 2 * t + 1) = l[3];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i >= w ? i - w : 0;
    for (std::size_t j = lo; j <= i; ++j) {
      double sum = at(i, j);
      for (std::size_t k = std::max(lo, j >= w ? j - w : 0); k < j; ++k) sum -= at(i, k) * at(j, k);
      if (j == i) {
        if (!(sum > 0.0) || !std::isfinite(sum)) throw NewtonFailure("Hessian is not positive definite");
        at(i, i) = std::sqrt(sum);
      } else {
        at(i, j) = sum / at(j, j);
      }
    }
  }
  std::vector<double> y(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i >= w ? i - w : 0;
    for (std::size_t k = lo; k < i; ++k) y[i] -= at(i, k) * y[k];
    y[i] /= at(i, i);
  }
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t k = i + 1; k < std::min(m, i + w + 1); ++k) y[i] -= at(k, i) * y[k];
    y[i] /= at(i, i);
  }
  return y;
}

/**
 * Newton direction p = H^-1 g for the barrier Hessian H = 2c I + D^T B D,
 * where D takes differences of consecutive points and B holds the per-step
 * barrier curvature. Solved through the step forces w = B D p:
 * (D D^T + 2c B^-1) w = D g, then p = (g - D^T w) / (2c).
 */
struct NewtonDirection {
  std::vector<double> step;  // p, interleaved x/y
  double decrement2 = 0.0;   // p^T H p
};

inline NewtonDirection barrier_newton_direction(std::span<const Point> x, const MsrProblem& problem, double c,
                                               std::span<const double> gradient) {
  const std::size_t n = x.size();
  NewtonDirection out;
  std::vector<double>& p = out.step;
  p.assign(gradient.begin(), gradient.end());
  if (n < 2) {
    for (double& v : p) {
      v /= 2.0 * c;
      out.decrement2 += 2.0 * c * v * v;
    }
    return out;
  }
  const double cap2 = problem.cap * problem.cap;
  const std::size_t m = n - 1;
  BlockTridiagonal sys;
  sys.diag.resize(m);
  std::vector<Block2> binvs(m);
  sys.lower.assign(m - 1, Block2{-1.0, 0.0, 0.0, -1.0});
  std::vector<double> rhs(2 * m);
  for (std::size_t t = 1; t < n; ++t) {
    const Point d = x[t] - x[t - 1];
    const double dd = dot(d, d);
    const double s = cap2 - dd;
    if (!(s > 0.0)) throw InfeasiblePoint("step " + std::to_string(t) + " reached the cap");
    // B^-1 = (s/2) (P_perp + s / (s + 2|d|^2) P_d)
    Block2 binv{s / 2.0, 0.0, 0.0, s / 2.0};
    if (dd > 0.0) {
      const double along = s / (s + 2.0 * dd) - 1.0;
      binv[0] += s / 2.0 * along * d.x * d.x / dd;
      binv[1] += s / 2.0 * along * d.x * d.y / dd;
      binv[2] = binv[1];
      binv[3] += s / 2.0 * along * d.y * d.y / dd;
    }
    binvs[t - 1] = binv;
    sys.diag[t - 1] = {2.0 + 2.0 * c * binv[0], 2.0 * c * binv[1], 2.0 * c * binv[2], 2.0 + 2.0 * c * binv[3]};
    rhs[2 * (t - 1)] = gradient[2 * t] - gradient[2 * t - 2];
    rhs[2 * (t - 1) + 1] = gradient[2 * t + 1] - gradient[2 * t - 1];
  }
  const std::vector<double> w = solve_block_tridiagonal(sys, rhs);
  // p from (g - D^T w) / 2c cancels badly next to tight steps. Evaluate it at
  // the node with the least cancellation and integrate D p = B^-1 w outward.
  auto force = [&](std::size_t k) {
    std::array<double, 2> f{0.0, 0.0};
    if (k >= 1) {
      f[0] += w[2 * (k - 1)];
      f[1] += w[2 * (k - 1) + 1];
    }
    if (k + 1 < n) {
      f[0] -= w[2 * k];
      f[1] -= w[2 * k + 1];
    }
    return f;
  };
  std::size_t ref = 0;
  double ref_scale = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const auto f = force(k);
    const double scale = std::abs(gradient[2 * k]) + std::abs(gradient[2 * k + 1]) + std::abs(f[0]) + std::abs(f[1]);
    if (scale < ref_scale) {
      ref_scale = scale;
      ref = k;
    }
  }
  const auto fr = force(ref);
  p[2 * ref] = (gradient[2 * ref] - fr[0]) / (2.0 * c);
  p[2 * ref + 1] = (gradient[2 * ref + 1] - fr[1]) / (2.0 * c);
  auto diff = [&](std::size_t t) {  // (D p) of step t - 1 -> t
    const Block2& b = binvs[t - 1];
    return detail::apply(b, w[2 * (t - 1)], w[2 * (t - 1) + 1]);
  };
  for (std::size_t k = ref + 1; k < n; ++k) {
    const auto d = diff(k);
    p[2 * k] = p[2 * k - 2] + d[0];
    p[2 * k + 1] = p[2 * k - 1] + d[1];
  }
  for (std::size_t k = ref; k-- > 0;) {
    const auto d = diff(k + 1);
    p[2 * k] = p[2 * k + 2] - d[0];
    p[2 * k + 1] = p[2 * k + 3] - d[1];
  }
  for (double v : p) out.decrement2 += 2.0 * c * v * v;
  for (std::size_t t = 0; t < m; ++t) {
    const double wx = w[2 * t];
    const double wy = w[2 * t + 1];
    const Block2& b = binvs[t];
    out.decrement2 += wx * (b[0] * wx + b[1] * wy) + wy * (b[2] * wx + b[3] * wy);
  }
  return out;
}

/// y = H x for a block-tridiagonal H.
inline std::vector<double> multiply_block_tridiagonal(const BlockTridiagonal& h, std::span<const double> x) {
  using namespace detail;
  const std::size_t n = h.diag.size();
  std::vector<double> y(2 * n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto v = apply(h.diag[t], x[2 * t], x[2 * t + 1]);
    if (t > 0) {
      const auto w = apply(h.lower[t - 1], x[2 * t - 2], x[2 * t - 1]);
      v[0] += w[0];
      v[1] += w[1];
    }
    if (t + 1 < n) {
      const auto w = apply(transpose(h.lower[t]), x[2 * t + 2], x[2 * t + 3]);
      v[0] += w[0];
      v[1] += w[1];
    }
    y[2 * t] = v[0];
    y[2 * t + 1] = v[1];
  }
  return y;
}

struct MsrSolution {
  Trajectory trajectory;
  double final_c = 0.0;
  int outer_iterations = 0;
  int newton_iterations = 0;
  double max_violation = 0.0;  // max_t |x_t - x_{t-1}| - cap; negative when strictly inside
  double bound = 0.0;          // (T - 1) / final_c
  double data_term = 0.0;      // sum_t |x_t - z_t|^2
  bool precision_limited = false;  // centering stopped at the floating-point resolution of the step slacks
};

/// phi(y) - phi(x) summed term by term; +inf when y leaves the feasible set.
inline double barrier_change(std::span<const Point> x, std::span<const Point> y, const MsrProblem& problem, double c) {
  const double cap2 = problem.cap * problem.cap;
  double data = 0.0;
  double bar = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const Point dx = y[t] - x[t];
    const Point mid = (x[t] - problem.anchors[t]) + (y[t] - problem.anchors[t]);
    data += dot(dx, mid);
    if (t == 0) continue;
    const Point a = x[t] - x[t - 1];
    const Point b = y[t] - y[t - 1];
    const double sb = cap2 - dot(b, b);
    if (!(sb > 0.0)) return std::numeric_limits<double>::infinity();
    const double sa = cap2 - dot(a, a);
    // s_b - s_a = -(b - a) . (b + a)
    bar -= std::log1p(-dot(b - a, b + a) / sa);
  }
  return c * data + bar;
}

inline double msr_data_term(std::span<const Point> x, std::span<const Point> z) {
  double s = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) s += dot(x[t] - z[t], x[t] - z[t]);
  return s;
}

/**
 * Log-barrier interior point: Newton centering with Armijo backtracking from
 * the anchor centroid, then c <- mu * c until c >= (T - 1) / eps_outer.
 */
inline MsrSolution solve_msr(const MsrProblem& problem) {
  problem.validate();
  const auto& opt = problem.options;
  const std::size_t n = problem.anchors.size();
  MsrSolution sol;
  if (n == 1) {
    sol.trajectory.positions = problem.anchors;
    sol.final_c = opt.c0;
    sol.max_violation = -problem.cap;
    return sol;
  }

  Point centroid{0.0, 0.0};
  for (const auto& z : problem.anchors) centroid = centroid + z;
  centroid = (1.0 / static_cast<double>(n)) * centroid;
  std::vector<Point> x(n, centroid);
  const double cap2 = problem.cap * problem.cap;

  auto feasible = [&](const std::vector<Point>& p) {
    for (std::size_t t = 1; t < n; ++t) {
      const Point d = p[t] - p[t - 1];
      if (!(dot(d, d) < cap2)) return false;
    }
    return true;
  };

  double c = opt.c0;
  // Smallest slack cap^2 - |d|^2 still resolvable given the coordinate magnitudes.
  double extent = problem.cap;
  for (const Point& z : problem.anchors) extent = std::max({extent, std::abs(z.x), std::abs(z.y)});
  const double resolution = 1e3 * std::numeric_limits<double>::epsilon() * extent * problem.cap;
  auto near_resolution_limit = [&](const std::vector<Point>& pts) {
    for (std::size_t t = 1; t < n; ++t) {
      const Point d = pts[t] - pts[t - 1];
      if (cap2 - dot(d, d) <= resolution) return true;
    }
    return false;
  };
  const double target = static_cast<double>(n - 1) / opt.eps_outer;
  for (int outer = 0;; ++outer) {
    if (outer >= opt.max_outer) throw NewtonFailure("barrier continuation did not reach the target penalty");
    sol.outer_iterations = outer + 1;
    for (int it = 0;; ++it) {
      if (it >= opt.max_newton) {
        if (near_resolution_limit(x)) {
          sol.precision_limited = true;
          break;
        }
        std::ostringstream msg;
        msg << "Newton centering did not converge at c=" << c << " after " << it << " iterations";
        throw NewtonFailure(msg.str());
      }
      const BarrierEval ev = barrier_value_grad_hess(x, problem, c, false);
      double gnorm2 = 0.0;
      for (double g : ev.gradient) gnorm2 += g * g;
      if (std::sqrt(gnorm2) < opt.eps_inner) break;
      NewtonDirection dir;
      try {
        dir = barrier_newton_direction(x, problem, c, ev.gradient);
      } catch (const NewtonFailure&) {
        if (!near_resolution_limit(x)) throw;
        sol.precision_limited = true;
        break;
      }
      const std::vector<double>& p = dir.step;
      const double decrement2 = dir.decrement2;  // lambda^2 = p^T H p
      const double floor = std::max(opt.eps_inner, 16.0 * std::numeric_limits<double>::epsilon() * std::abs(ev.value));
      if (!std::isfinite(decrement2)) {
        std::ostringstream msg;
        msg << "Newton step is not finite at c=" << c;
        throw NewtonFailure(msg.str());
      }
      if (decrement2 / 2.0 <= floor) break;
      ++sol.newton_iterations;

      double step = 1.0;
      std::vector<Point> trial(n);
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls) {
        for (std::size_t t = 0; t < n; ++t) trial[t] = {x[t].x - step * p[2 * t], x[t].y - step * p[2 * t + 1]};
        if (feasible(trial)) {
          const double change = barrier_change(x, trial, problem, c);
          if (change <= -0.25 * step * decrement2) {
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (decrement2 / 2.0 <= 1e-9 * (1.0 + std::abs(ev.value))) break;
        if (near_resolution_limit(x)) {
          sol.precision_limited = true;
          break;
        }
        std::ostringstream msg;
        msg << "line search failed at c=" << c << " (Newton decrement^2 " << decrement2 << ")";
        throw NewtonFailure(msg.str());
      }
      x.swap(trial);
    }
    if (c >= target) break;
    c *= opt.mu;
  }

  sol.trajectory.positions = x;
  sol.final_c = c;
  sol.bound = static_cast<double>(n - 1) / c;
  sol.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < n; ++t) sol.max_violation = std::max(sol.max_violation, norm(x[t] - x[t - 1]) - problem.cap);
  sol.data_term = msr_data_term(x, problem.anchors);
  return sol;
}

/// Speed-constrained rough trajectory from per-slot anchors.
inline MsrSolution msr_from_observations(const RssObservationSequence& seq, const Deployment& stations, double v_max,
                                         AnchorRule rule = AnchorRule::weighted, MsrOptions options = {}) {
  seq.validate();
  MsrProblem problem;
  problem.anchors = (rule == AnchorRule::nearest ? anchor_estimates_nearest(seq, stations)
                                                 : anchor_estimates_weighted(seq, stations))
                        .positions;
  problem.cap = v_max * seq.delta;
  problem.options = options;
  return solve_msr(problem);
}

}  // namespace rssmm

#endif  // RSSMM_MSR_HPP
