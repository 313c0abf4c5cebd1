#ifndef RSSMM_OPTIMIZER_HPP
#define RSSMM_OPTIMIZER_HPP

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/types.hpp"
#include "rssmm/decoder.hpp"
#include "rssmm/mobility.hpp"
#include "rssmm/msr.hpp"
#include "rssmm/propagation.hpp"
#include "rssmm/road_graph.hpp"

namespace rssmm {

namespace detail {

inline double joint_log_likelihood_impl(const RoadGraph& graph, const RssObservationSequence& seq,
                                        std::span<const int> nodes, const PropagationModel& theta,
                                        const Deployment& stations, const MobilityModel& mobility, bool strict) {
  if (nodes.size() != seq.size()) throw LengthMismatch("trajectory length does not match observation slots");
  double total = 0.0;
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    total += observation_log_prob(theta, stations, seq.slots[t], graph.position(nodes[t]), MissingBsPolicy::drop);
    if (t == 0) continue;
    const int hops = graph.edge_hops(nodes[t - 1], nodes[t]);
    if (hops < 0) {
      if (strict) {
        throw InfeasibleTrajectory("slots " + std::to_string(t - 1) + " -> " + std::to_string(t) +
                                   " are not joined by a transition edge");
      }
      return kNegInf;
    }
    const double speed = hops * graph.gamma() / seq.delta;
    if (const auto* fixed = std::get_if<FixedMobilityModel>(&mobility)) {
      total += speed_log_density(speed, fixed->v_avr, fixed->sigma_v_sq);
    } else {
      const SpeedGroup& g = std::get<AdaptiveMobilityModel>(mobility).group_for_slot(t);
      total += speed_log_density(speed, g.v_avr, g.sigma_sq);
    }
  }
  return total;
}

}  // namespace detail

/**
 * sum_t log p(y_t | x_t, Theta) + sum_{t>=1} log p(x_t | x_{t-1}). Readings of
 * stations missing from Theta are skipped.
 */
inline double joint_log_likelihood(const RoadGraph& graph, const RssObservationSequence& seq,
                                   std::span<const int> nodes, const PropagationModel& theta,
                                   const Deployment& stations, const MobilityModel& mobility) {
  return detail::joint_log_likelihood_impl(graph, seq, nodes, theta, stations, mobility, true);
}

/// As joint_log_likelihood, but -inf for a trajectory that leaves the transition edges.
inline double joint_log_likelihood_or_neg_inf(const RoadGraph& graph, const RssObservationSequence& seq,
                                              std::span<const int> nodes, const PropagationModel& theta,
                                              const Deployment& stations, const MobilityModel& mobility) {
  return detail::joint_log_likelihood_impl(graph, seq, nodes, theta, stations, mobility, false);
}

/// Coarse and fine road graphs with transition edges for one slot duration.
struct GraphPair {
  RoadGraph coarse;
  RoadGraph fine;
};

inline GraphPair build_graph_pair(const RoadNetwork& network, const SolverConfig& cfg, double delta) {
  cfg.validate();
  validate_network(network);
  return {build_transition_edges(build_nodes(network, cfg.gamma_coarse), cfg.v_max, delta, cfg.hop_slack),
          build_transition_edges(build_nodes(network, cfg.gamma_fine), cfg.v_max, delta, cfg.hop_slack)};
}

struct IterationRecord {
  int iteration = 0;
  double objective_after_fit = 0.0;
  double objective_after_decode = 0.0;
  int changed_nodes = 0;
  std::size_t corridor_size = 0;
  std::size_t skipped_stations = 0;
  std::size_t dropped_readings = 0;
};

struct HreOptions {
  bool adaptive = false;
  bool pin_mobility = false;  // adaptive loop with every group fixed to the configured speed model
  MsrOptions msr;
};

struct HreResult {
  std::vector<int> nodes;  // fine-graph node per slot
  Trajectory trajectory;
  PropagationModel theta;
  MobilityModel mobility;
  std::vector<int> groups;  // per transition, adaptive runs only
  std::vector<IterationRecord> diagnostics;
  MsrSolution initial;
  bool converged = false;
  double objective = kNegInf;
};

/**
 * Alternating maximization. Starts from the speed-constrained rough
 * trajectory snapped to fine nodes, then repeats: fit Theta (and, when
 * adaptive, the grouped speed model), decode coarse-to-fine. Stops once the
 * node sequence no longer changes or after max_outer_iters rounds.
 */
inline HreResult run_alternating(const RssObservationSequence& seq, const Deployment& stations, const GraphPair& graphs,
                                 const SolverConfig& cfg, const HreOptions& options = {}) {
  cfg.validate();
  seq.validate();
  const RoadGraph& fine = graphs.fine;
  if (fine.size() == 0) throw EmptyNetwork("road graph has no nodes");
  const std::size_t slots = seq.size();

  HreResult out;
  out.initial = msr_from_observations(seq, stations, cfg.v_max, cfg.anchor_rule, options.msr);
  std::vector<int> nodes = snap_to_nodes(fine, out.initial.trajectory);

  const FixedMobilityModel fixed = FixedMobilityModel::from_config(cfg);
  MobilityModel mobility = fixed;
  const bool adaptive = options.adaptive && slots >= 2;
  if (adaptive) {
    out.groups = group_time_slots(normalized_signal_differences(seq), cfg.group_count);
    if (options.pin_mobility) mobility = pinned_adaptive(fixed, out.groups, cfg.group_count);
  }

  PropagationModel theta;
  const double radius = cfg.effective_corridor_radius();
  for (int m = 1; m <= cfg.max_outer_iters; ++m) {
    IterationRecord rec;
    rec.iteration = m;

    PropagationFit fit = fit_propagation(label_observations(seq, node_positions(fine, nodes).positions), stations,
                                         m == 1 ? nullptr : &theta);
    theta = std::move(fit.model);
    rec.skipped_stations = fit.skipped.size();
    if (theta.empty()) throw RankDeficient("no base station could be fitted from the initial trajectory");
    if (adaptive && !options.pin_mobility) {
      mobility = fit_mobility(fine, nodes, out.groups, seq.delta, cfg.group_count);
    }
    rec.objective_after_fit = joint_log_likelihood_or_neg_inf(fine, seq, nodes, theta, stations, mobility);

    TwoStageResult dec = decode_two_stage(graphs.coarse, fine, seq, theta, stations, mobility, radius, nodes);
    rec.corridor_size = dec.corridor_size;
    rec.dropped_readings = dec.dropped;
    rec.objective_after_decode = joint_log_likelihood_or_neg_inf(fine, seq, dec.fine.nodes, theta, stations, mobility);

    for (std::size_t t = 0; t < slots; ++t) rec.changed_nodes += dec.fine.nodes[t] != nodes[t];
    nodes = std::move(dec.fine.nodes);
    out.diagnostics.push_back(rec);
    if (rec.changed_nodes == 0) {
      out.converged = true;
      break;
    }
  }

  out.objective = out.diagnostics.back().objective_after_decode;
  out.trajectory = node_positions(fine, nodes);
  out.nodes = std::move(nodes);
  out.theta = std::move(theta);
  out.mobility = std::move(mobility);
  return out;
}

inline HreResult run_hre(const RssObservationSequence& seq, const Deployment& stations, const GraphPair& graphs,
                         const SolverConfig& cfg, MsrOptions msr = {}) {
  HreOptions o;
  o.msr = msr;
  return run_alternating(seq, stations, graphs, cfg, o);
}

inline HreResult run_hrea(const RssObservationSequence& seq, const Deployment& stations, const GraphPair& graphs,
                          const SolverConfig& cfg, MsrOptions msr = {}) {
  HreOptions o;
  o.adaptive = true;
  o.msr = msr;
  return run_alternating(seq, stations, graphs, cfg, o);
}

inline HreResult run_hre(const RssObservationSequence& seq, const Deployment& stations, const RoadNetwork& network,
                         const SolverConfig& cfg) {
  return run_hre(seq, stations, build_graph_pair(network, cfg, seq.delta), cfg);
}

inline HreResult run_hrea(const RssObservationSequence& seq, const Deployment& stations, const RoadNetwork& network,
                          const SolverConfig& cfg) {
  return run_hrea(seq, stations, build_graph_pair(network, cfg, seq.delta), cfg);
}

}  // namespace rssmm

#endif  // RSSMM_OPTIMIZER_HPP
