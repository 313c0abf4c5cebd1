#ifndef RSSMM_MOBILITY_HPP
#define RSSMM_MOBILITY_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/lambert.hpp"
#include "rssmm/core/types.hpp"
#include "rssmm/road_graph.hpp"

namespace rssmm {

/// Variance floor for fitted speed groups, (m/s)^2.
inline constexpr double kSpeedVarianceFloor = 0.1;

/// log N(speed; v_avr, sigma_sq).
inline double speed_log_density(double speed, double v_avr, double sigma_sq) {
  const double r = speed - v_avr;
  return -0.5 * std::log(2.0 * std::numbers::pi * sigma_sq) - r * r / (2.0 * sigma_sq);
}

/// Single Gaussian speed model shared by every transition.
struct FixedMobilityModel {
  double v_avr = 10.5;
  double v_max = 22.2;
  double eta = 0.05;
  double sigma_v_sq = 1.0;

  static FixedMobilityModel from_eta(double v_max, double v_avr, double eta, EtaMode mode) {
    return {v_avr, v_max, eta, speed_variance_from_eta(v_max, v_avr, eta, mode)};
  }
  static FixedMobilityModel from_config(const SolverConfig& cfg) {
    return from_eta(cfg.v_max, cfg.v_avr, cfg.eta, cfg.eta_mode);
  }
};

struct SpeedGroup {
  double v_avr = 0.0;
  double sigma_sq = kSpeedVarianceFloor;
  friend bool operator==(const SpeedGroup&, const SpeedGroup&) = default;
};

/**
 * Grouped speed model. group_of_transition[t] (0-based) is the group of the
 * move from slot t to slot t + 1.
 */
struct AdaptiveMobilityModel {
  int group_count = 1;
  std::vector<int> group_of_transition;
  std::vector<SpeedGroup> params;

  const SpeedGroup& group_for_slot(std::size_t t) const {
    if (t == 0 || t - 1 >= group_of_transition.size()) {
      throw UnassignedSlot("slot " + std::to_string(t) + " has no incoming transition group");
    }
    return params.at(static_cast<std::size_t>(group_of_transition[t - 1]));
  }
  friend bool operator==(const AdaptiveMobilityModel&, const AdaptiveMobilityModel&) = default;
};

using MobilityModel = std::variant<FixedMobilityModel, AdaptiveMobilityModel>;

/// Mean |rss change| over stations seen in both slots t and t + 1; nullopt when none are shared.
inline std::vector<std::optional<double>> raw_signal_differences(const RssObservationSequence& seq) {
  std::vector<std::optional<double>> out;
  if (seq.size() < 2) return out;
  out.reserve(seq.size() - 1);
  for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
    double sum = 0.0;
    int common = 0;
    for (const auto& a : seq.slots[t]) {
      for (const auto& b : seq.slots[t + 1]) {
        if (a.bs_id == b.bs_id) {
          sum += std::abs(b.rss - a.rss);
          ++common;
          break;
        }
      }
    }
    out.push_back(common > 0 ? std::optional<double>(sum / common) : std::nullopt);
  }
  return out;
}

/**
 * Normalized signal difference rho_t for t = 0 .. T-2. Undefined entries
 * take the value of the nearest defined neighbor in time (earlier on ties).
 */
inline std::vector<double> normalized_signal_differences(const RssObservationSequence& seq) {
  if (seq.size() < 2) throw BadParams("signal differences need at least two slots");
  const auto raw = raw_signal_differences(seq);
  const std::size_t n = raw.size();
  if (std::none_of(raw.begin(), raw.end(), [](const auto& r) { return r.has_value(); })) {
    throw AllUndefined("no consecutive slot pair shares a base station");
  }
  std::vector<double> rho(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (raw[t]) {
      rho[t] = *raw[t];
      continue;
    }
    for (std::size_t k = 1;; ++k) {
      if (t >= k && raw[t - k]) {
        rho[t] = *raw[t - k];
        break;
      }
      if (t + k < n && raw[t + k]) {
        rho[t] = *raw[t + k];
        break;
      }
    }
  }
  return rho;
}

/**
 * Equal-width binning of rho into A groups (0-based): group a holds
 * rho in [min + a * w, min + (a + 1) * w), w = (max - min) / A, and the
 * maximum closes the last group.
 */
inline std::vector<int> group_time_slots(std::span<const double> rho, int group_count) {
  if (group_count < 1) throw BadParams("group count must be >= 1");
  std::vector<int> groups(rho.size(), 0);
  if (rho.empty() || group_count == 1) return groups;
  const auto [lo_it, hi_it] = std::minmax_element(rho.begin(), rho.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return groups;
  const double width = (hi - lo) / group_count;
  auto lower_edge = [&](int a) { return lo + a * width; };
  for (std::size_t t = 0; t < rho.size(); ++t) {
    int a = std::clamp(static_cast<int>(std::floor((rho[t] - lo) / width)), 0, group_count - 1);
    while (a > 0 && rho[t] < lower_edge(a)) --a;
    while (a + 1 < group_count && rho[t] >= lower_edge(a + 1)) ++a;
    groups[t] = a;
  }
  return groups;
}

inline double transition_log_prob_fixed(const FixedMobilityModel& model, const RoadGraph& graph, int i, int j,
                                        double delta) {
  const int hops = graph.edge_hops(i, j);
  if (hops < 0) throw NotAnEdge("(" + std::to_string(i) + ", " + std::to_string(j) + ") is not a transition edge");
  return speed_log_density(hops * graph.gamma() / delta, model.v_avr, model.sigma_v_sq);
}

/// Transition into slot t (0-based, t >= 1) under the group of the move t-1 -> t.
inline double transition_log_prob_adaptive(const AdaptiveMobilityModel& model, const RoadGraph& graph, int i, int j,
                                           std::size_t t, double delta) {
  const int hops = graph.edge_hops(i, j);
  if (hops < 0) throw NotAnEdge("(" + std::to_string(i) + ", " + std::to_string(j) + ") is not a transition edge");
  const SpeedGroup& g = model.group_for_slot(t);
  return speed_log_density(hops * graph.gamma() / delta, g.v_avr, g.sigma_sq);
}

/// Along-road speed between consecutive trajectory nodes; +inf when disconnected.
inline std::vector<double> trajectory_speeds(const RoadGraph& graph, std::span<const int> nodes, double delta) {
  std::vector<double> speeds;
  for (std::size_t t = 0; t + 1 < nodes.size(); ++t) {
    int hops = graph.has_transitions() ? graph.edge_hops(nodes[t], nodes[t + 1]) : -1;
    if (hops < 0) hops = graph.hops_between(nodes[t], nodes[t + 1]);
    speeds.push_back(hops < 0 ? RoadGraph::kDisconnected : hops * graph.gamma() / delta);
  }
  return speeds;
}

/**
 * Closed-form grouped speed fit: per group, the mean and mean squared
 * deviation of the along-road speeds of its transitions (variance floored).
 * Groups without usable transitions take the global statistics.
 */
inline AdaptiveMobilityModel fit_mobility(const RoadGraph& graph, std::span<const int> nodes,
                                          std::span<const int> group_of_transition, double delta, int group_count) {
  if (group_count < 1) throw BadParams("group count must be >= 1");
  if (nodes.size() < 2) throw BadParams("mobility fit needs at least two slots");
  if (group_of_transition.size() + 1 != nodes.size()) {
    throw LengthMismatch("group assignment must cover every transition");
  }
  const std::vector<double> speeds = trajectory_speeds(graph, nodes, delta);

  std::vector<double> sum(group_count, 0.0);
  std::vector<int> count(group_count, 0);
  double global_sum = 0.0;
  int global_count = 0;
  for (std::size_t t = 0; t < speeds.size(); ++t) {
    const int a = group_of_transition[t];
    if (a < 0 || a >= group_count) throw UnassignedSlot("transition " + std::to_string(t) + " has an invalid group");
    if (!std::isfinite(speeds[t])) continue;
    sum[a] += speeds[t];
    ++count[a];
    global_sum += speeds[t];
    ++global_count;
  }
  const double global_mean = global_count > 0 ? global_sum / global_count : 0.0;
  double global_sq = 0.0;
  std::vector<double> mean(group_count, global_mean);
  for (int a = 0; a < group_count; ++a) {
    if (count[a] > 0) mean[a] = sum[a] / count[a];
  }
  std::vector<double> sq(group_count, 0.0);
  for (std::size_t t = 0; t < speeds.size(); ++t) {
    if (!std::isfinite(speeds[t])) continue;
    const int a = group_of_transition[t];
    const double r = speeds[t] - mean[a];
    sq[a] += r * r;
    const double rg = speeds[t] - global_mean;
    global_sq += rg * rg;
  }
  const double global_var = std::max(global_count > 0 ? global_sq / global_count : 0.0, kSpeedVarianceFloor);

  AdaptiveMobilityModel model;
  model.group_count = group_count;
  model.group_of_transition.assign(group_of_transition.begin(), group_of_transition.end());
  model.params.resize(group_count);
  for (int a = 0; a < group_count; ++a) {
    if (count[a] > 0) {
      model.params[a] = {mean[a], std::max(sq[a] / count[a], kSpeedVarianceFloor)};
    } else {
      model.params[a] = {global_mean, global_var};
    }
  }
  return model;
}

/// Adaptive model whose every group carries the fixed model's parameters.
inline AdaptiveMobilityModel pinned_adaptive(const FixedMobilityModel& fixed, std::span<const int> group_of_transition,
                                             int group_count) {
  AdaptiveMobilityModel m;
  m.group_count = group_count;
  m.group_of_transition.assign(group_of_transition.begin(), group_of_transition.end());
  m.params.assign(group_count, SpeedGroup{fixed.v_avr, fixed.sigma_v_sq});
  return m;
}

}  // namespace rssmm

#endif  // RSSMM_MOBILITY_HPP
