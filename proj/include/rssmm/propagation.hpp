#ifndef RSSMM_PROPAGATION_HPP
#define RSSMM_PROPAGATION_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/parallel.hpp"
#include "rssmm/core/types.hpp"

namespace rssmm {

/// Shadowing std floor (dB); a zero-residual fit would otherwise give unbounded log-densities.
inline constexpr double kSigmaFloor = 0.5;
/// Distances below this are clamped inside log10 (meters).
inline constexpr double kMinDistance = 1.0;

/// Log-distance path loss of one base station: rss = beta + alpha * log10(d) + N(0, sigma^2).
struct PathLossParams {
  double alpha = 0.0;  // dB per decade
  double beta = 0.0;   // dB
  double sigma = 1.0;  // dB
  friend bool operator==(const PathLossParams&, const PathLossParams&) = default;
};

class PropagationModel {
 public:
  bool contains(int bs_id) const { return params_.count(bs_id) != 0; }
  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  const PathLossParams& at(int bs_id) const {
    auto it = params_.find(bs_id);
    if (it == params_.end()) throw UnknownBs("no propagation parameters for base station " + std::to_string(bs_id));
    return it->second;
  }
  const PathLossParams* find(int bs_id) const {
    auto it = params_.find(bs_id);
    return it == params_.end() ? nullptr : &it->second;
  }

  void set(int bs_id, PathLossParams p) {
    if (!(p.sigma > 0.0) || !std::isfinite(p.alpha) || !std::isfinite(p.beta) || !std::isfinite(p.sigma)) {
      throw BadParams("invalid path-loss parameters for base station " + std::to_string(bs_id));
    }
    params_[bs_id] = p;
  }

  const std::map<int, PathLossParams>& entries() const { return params_; }
  friend bool operator==(const PropagationModel&, const PropagationModel&) = default;

 private:
  std::map<int, PathLossParams> params_;
};

inline double log10_distance(Point bs, Point x) { return std::log10(std::max(distance(bs, x), kMinDistance)); }

/// log N(residual; 0, sigma^2).
inline double gaussian_log_density(double residual, double sigma) {
  static const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return -half_log_2pi - std::log(sigma) - residual * residual / (2.0 * sigma * sigma);
}

inline double predict_rss(const PathLossParams& p, double log10_d) { return p.beta + p.alpha * log10_d; }

/// Mean rss of `bs` at `position`.
inline double predict_rss(const PropagationModel& model, const BaseStation& bs, Point position) {
  const PathLossParams& p = model.at(bs.id);
  if (distance(bs.position, position) == 0.0) {
    throw ZeroDistance("position coincides with base station " + std::to_string(bs.id));
  }
  return predict_rss(p, log10_distance(bs.position, position));
}

enum class MissingBsPolicy { raise, drop };

/**
 * log p(y_t | x, Theta): sum of per-station Gaussian log-densities. An empty
 * slot scores 0. Under MissingBsPolicy::drop, readings from stations without
 * parameters are skipped and counted in `dropped`.
 */
inline double observation_log_prob(const PropagationModel& model, const Deployment& stations,
                                   std::span<const RssObservation> slot, Point position,
                                   MissingBsPolicy policy = MissingBsPolicy::raise, std::size_t* dropped = nullptr) {
  double total = 0.0;
  for (const auto& o : slot) {
    const PathLossParams* p = model.find(o.bs_id);
    if (p == nullptr) {
      if (policy == MissingBsPolicy::raise) {
        throw UnknownBs("no propagation parameters for base station " + std::to_string(o.bs_id));
      }
      if (dropped) ++*dropped;
      continue;
    }
    const double lg = log10_distance(stations.at(o.bs_id).position, position);
    total += gaussian_log_density(o.rss - predict_rss(*p, lg), p->sigma);
  }
  return total;
}

struct LabeledSample {
  Point position;
  double rss = 0.0;
};

/// Per-station (position, rss) pairs used to fit the path-loss model.
using LabeledRssSet = std::map<int, std::vector<LabeledSample>>;

/// Labels each reading of slot t with positions[t].
inline LabeledRssSet label_observations(const RssObservationSequence& seq, std::span<const Point> positions) {
  if (positions.size() != seq.size()) throw LengthMismatch("trajectory length does not match observation slots");
  LabeledRssSet out;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (const auto& o : seq.slots[t]) out[o.bs_id].push_back({positions[t], o.rss});
  }
  return out;
}

/**
 * Closed-form maximum-likelihood path-loss fit for one station: ordinary
 * least squares of rss on log10 distance, then the mean squared residual
 * (divisor N) as the shadowing variance, floored at kSigmaFloor.
 */
inline PathLossParams fit_path_loss(Point bs_position, std::span<const LabeledSample> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw RankDeficient("path-loss fit needs at least two samples");
  std::vector<double> u(n);
  double mean_u = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = log10_distance(bs_position, samples[i].position);
    mean_u += u[i];
    mean_y += samples[i].rss;
  }
  mean_u /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double suu = 0.0;
  double suy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double du = u[i] - mean_u;
    suu += du * du;
    suy += du * (samples[i].rss - mean_y);
  }
  const double scale = 1e-12 * std::max(1.0, std::abs(mean_u));
  if (suu <= static_cast<double>(n) * scale * scale) {
    throw RankDeficient("all samples lie at the same distance from the base station");
  }
  PathLossParams p;
  p.alpha = suy / suu;
  p.beta = mean_y - p.alpha * mean_u;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = p.alpha * u[i] + p.beta - samples[i].rss;
    sse += r * r;
  }
  p.sigma = std::max(std::sqrt(sse / static_cast<double>(n)), kSigmaFloor);
  return p;
}

struct PropagationFit {
  PropagationModel model;
  std::vector<int> skipped;  // stations that could not be fitted this round
};

/**
 * Fits every station in `data`. Stations that cannot be fitted are listed
 * in `skipped`; when `previous` has parameters for them they are carried over.
 */
inline PropagationFit fit_propagation(const LabeledRssSet& data, const Deployment& stations,
                                      const PropagationModel* previous = nullptr) {
  std::vector<int> ids;
  std::vector<const std::vector<LabeledSample>*> sets;
  for (const auto& [id, samples] : data) {
    ids.push_back(id);
    sets.push_back(&samples);
  }
  std::vector<PathLossParams> fitted(ids.size());
  std::vector<char> ok(ids.size(), 0);
  const Deployment& dep = stations;
  parallel_for(
      ids.size(),
      [&](std::size_t k) {
        const Point pos = dep.at(ids[k]).position;
        try {
          fitted[k] = fit_path_loss(pos, *sets[k]);
          ok[k] = 1;
        } catch (const RankDeficient&) {
        }
      },
      64);

  PropagationFit out;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ok[k]) {
      out.model.set(ids[k], fitted[k]);
    } else {
      out.skipped.push_back(ids[k]);
      if (previous && previous->contains(ids[k])) out.model.set(ids[k], previous->at(ids[k]));
    }
  }
  if (previous) {
    for (const auto& [id, p] : previous->entries()) {
      if (!out.model.contains(id)) out.model.set(id, p);
    }
  }
  return out;
}

}  // namespace rssmm

#endif  // RSSMM_PROPAGATION_HPP
