#ifndef RSSMM_CORE_LAMBERT_HPP
#define RSSMM_CORE_LAMBERT_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/types.hpp"

namespace rssmm {

/**
 * Lower real branch W_{-1} of the Lambert W function.
 *
 * Defined on [-1/e, 0); returns w <= -1 with w * exp(w) == x. Halley
 * iteration seeded by the branch-point series (x near -1/e) or the
 * logarithmic asymptote (x near 0), with a bisection fallback whenever
 * Halley stalls or leaves the branch.
 */
inline double lambert_w_minus1(double x) {
  constexpr double inv_e = 1.0 / std::numbers::e;
  if (!(x >= -inv_e) || !(x < 0.0)) {
    std::ostringstream msg;
    msg << "lambert_w_minus1: argument " << x << " outside [-1/e, 0)";
    throw DomainError(msg.str());
  }
  if (x == -inv_e) return -1.0;

  auto residual = [x](double w) { return w * std::exp(w) - x; };

  double w;
  if (x < -0.25) {
    const double p = -std::sqrt(2.0 * (1.0 + std::numbers::e * x));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else {
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  if (!(w <= -1.0)) w = -1.0 - 1e-8;

  bool converged = false;
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double next = w - f / denom;
    if (!std::isfinite(next) || next > -1.0) break;
    if (std::abs(next - w) <= 1e-15 * std::abs(w)) {
      w = next;
      converged = true;
      break;
    }
    w = next;
  }

  if (!converged || std::abs(residual(w)) > 1e-13) {
    // w*e^w increases from -1/e towards 0 as w runs from -1 to -inf.
    double hi = -1.0;
    double lo = -2.0;
    while (residual(lo) < 0.0) lo *= 2.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::abs(lo); ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (residual(mid) < 0.0) hi = mid; else lo = mid;
    }
    w = 0.5 * (lo + hi);
  }
  return w;
}

/// Standard normal quantile: returns z with P(Z <= z) = p, 0 < p < 1.
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("normal_quantile: probability must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double z;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement against erfc brings the ~1e-9 rational fit to full precision.
  for (int iter = 0; iter < 2; ++iter) {
    const double e = 0.5 * std::erfc(-z / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
    z = z - u / (1.0 + 0.5 * z * u);
  }
  return z;
}

/// Gaussian density N(v; mean, variance).
inline double gaussian_density(double v, double mean, double variance) {
  const double r = v - mean;
  return std::exp(-r * r / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

/**
 * Speed variance implied by the probability level `eta` of driving at v_max.
 *
 * Density mode solves N(v_max; v_avr, s2) = eta on the smaller-variance
 * root: s2 = -(v_max - v_avr)^2 / W_{-1}(-2 pi eta^2 (v_max - v_avr)^2).
 * Tail mode places v_max at the upper-eta quantile: s2 = ((v_max - v_avr) / z_eta)^2.
 */
inline double speed_variance_from_eta(double v_max, double v_avr, double eta, EtaMode mode = EtaMode::density) {
  if (!(v_max > v_avr)) throw BadParams("speed_variance_from_eta: require v_max > v_avr");
  if (!(eta > 0.0)) throw BadParams("speed_variance_from_eta: eta must be positive");
  const double gap = v_max - v_avr;

  if (mode == EtaMode::tail) {
    if (!(eta < 0.5)) {
      throw InfeasibleEta("tail mode needs eta < 0.5 so that v_max lies above the mean speed");
    }
    const double z = -normal_quantile(eta);
    return (gap / z) * (gap / z);
  }

  const double arg = -2.0 * std::numbers::pi * eta * eta * gap * gap;
  if (arg < -1.0 / std::numbers::e) {
    std::ostringstream msg;
    msg << "density eta=" << eta << " at v_max=" << v_max << " (v_avr=" << v_avr
        << ") exceeds the largest attainable Gaussian density " << 1.0 / (gap * std::sqrt(2.0 * std::numbers::pi * std::numbers::e))
        << "; use tail mode or a smaller eta";
    throw InfeasibleEta(msg.str());
  }
  return -(gap * gap) / lambert_w_minus1(arg);
}

}  // namespace rssmm

#endif  // RSSMM_CORE_LAMBERT_HPP
