#ifndef RSSMM_METRICS_HPP
#define RSSMM_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/types.hpp"
#include "rssmm/msr.hpp"
#include "rssmm/road_graph.hpp"

namespace rssmm {

/// Position of the strongest station in each slot.
inline Trajectory baseline_mar(const RssObservationSequence& seq, const Deployment& stations) {
  return anchor_estimates_nearest(seq, stations);
}

/// Power-weighted centroid of the observed stations in each slot.
inline Trajectory baseline_wcl(const RssObservationSequence& seq, const Deployment& stations) {
  return anchor_estimates_weighted(seq, stations);
}

inline std::vector<double> per_slot_errors(const Trajectory& estimate, const Trajectory& truth) {
  if (estimate.size() != truth.size()) throw LengthMismatch("estimate and truth differ in length");
  std::vector<double> e(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) e[t] = distance(estimate.positions[t], truth.positions[t]);
  return e;
}

/// Root-mean-square position error, meters.
inline double qle(const Trajectory& estimate, const Trajectory& truth) {
  if (estimate.size() != truth.size()) throw LengthMismatch("estimate and truth differ in length");
  if (truth.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const Point d = estimate.positions[t] - truth.positions[t];
    s += dot(d, d);
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

using EdgeSet = std::set<std::pair<int, int>>;

/// Base-adjacency edges on shortest paths between consecutive nodes.
inline EdgeSet traversed_edges(const RoadGraph& graph, std::span<const int> nodes) {
  EdgeSet edges;
  for (std::size_t t = 1; t < nodes.size(); ++t) {
    if (nodes[t] == nodes[t - 1]) continue;
    const std::vector<int> path = graph.shortest_path(nodes[t - 1], nodes[t]);
    for (std::size_t k = 1; k < path.size(); ++k) {
      edges.emplace(std::min(path[k - 1], path[k]), std::max(path[k - 1], path[k]));
    }
  }
  return edges;
}

struct TmeTerms {
  double length = 0.0;
  double loss = 0.0;
  double surplus = 0.0;
  double percent = 0.0;
};

inline TmeTerms tme_terms(std::span<const int> estimate, std::span<const int> truth, const RoadGraph& graph) {
  const EdgeSet te = traversed_edges(graph, truth);
  if (te.empty()) throw EmptyTruth("the true path traverses no road edge");
  const EdgeSet ee = traversed_edges(graph, estimate);
  std::size_t loss = 0;
  for (const auto& e : te) loss += ee.count(e) == 0;
  std::size_t surplus = 0;
  for (const auto& e : ee) surplus += te.count(e) == 0;
  TmeTerms r;
  r.length = graph.gamma() * static_cast<double>(te.size());
  r.loss = graph.gamma() * static_cast<double>(loss);
  r.surplus = graph.gamma() * static_cast<double>(surplus);
  r.percent = (r.loss + r.surplus) / r.length * 100.0;
  return r;
}

/// Track mismatch: (missed + surplus length) / true length, percent.
inline double tme(std::span<const int> estimate, std::span<const int> truth, const RoadGraph& graph) {
  return tme_terms(estimate, truth, graph).percent;
}

struct EvaluationReport {
  double qle = 0.0;
  double tme = 0.0;
  std::vector<double> errors;
  double length = 0.0;
  double loss = 0.0;
  double surplus = 0.0;
};

/// QLE on raw positions; TME after snapping both trajectories to the nearest graph nodes.
inline EvaluationReport evaluate(const Trajectory& estimate, const Trajectory& truth, const RoadGraph& graph) {
  if (truth.size() == 0) throw EmptyTruth("empty ground-truth trajectory");
  EvaluationReport r;
  r.errors = per_slot_errors(estimate, truth);
  r.qle = qle(estimate, truth);
  const TmeTerms terms = tme_terms(snap_to_nodes(graph, estimate), snap_to_nodes(graph, truth), graph);
  r.tme = terms.percent;
  r.length = terms.length;
  r.loss = terms.loss;
  r.surplus = terms.surplus;
  return r;
}

}  // namespace rssmm

#endif  // RSSMM_METRICS_HPP
