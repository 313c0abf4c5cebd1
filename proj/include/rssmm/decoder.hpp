#ifndef RSSMM_DECODER_HPP
#define RSSMM_DECODER_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/parallel.hpp"
#include "rssmm/core/types.hpp"
#include "rssmm/mobility.hpp"
#include "rssmm/propagation.hpp"
#include "rssmm/road_graph.hpp"

namespace rssmm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct DecodedPath {
  std::vector<int> nodes;
  double total = kNegInf;
  std::vector<double> obs_scores;    // per slot
  std::vector<double> trans_scores;  // per slot; slot 0 is always 0
};

/**
 * Max-score path over the transition edges of `graph`.
 *
 * obs(t, out) writes the observation score of every node for slot t into
 * `out`; trans(t, i, j, hops) scores the move i -> j into slot t (t >= 1).
 * Scores accumulate as (prefix + obs) + trans. Ties resolve to the lowest
 * node index, both for predecessors and for the terminal state.
 */
template <class ObsFill, class TransScore>
DecodedPath viterbi(const RoadGraph& graph, std::size_t slots, ObsFill&& obs, TransScore&& trans) {
  const std::size_t n = graph.size();
  if (n == 0) throw EmptyNetwork("cannot decode on an empty graph");
  if (slots == 0) throw BadParams("cannot decode an empty sequence");
  if (slots > 1 && !graph.has_transitions()) throw BadParams("decoding needs transition edges");

  std::vector<double> prev(n);
  std::vector<double> cur(n);
  std::vector<double> o(n);
  std::vector<int> back((slots - 1) * n, -1);

  auto all_dead = [](const std::vector<double>& v) {
    for (double x : v) {
      if (x > kNegInf) return false;
    }
    return true;
  };

  obs(std::size_t{0}, std::span<double>(prev));
  if (all_dead(prev)) throw NoFeasiblePath("every state scores -inf at slot 0");

  for (std::size_t t = 1; t < slots; ++t) {
    obs(t, std::span<double>(o));
    int* bp = back.data() + (t - 1) * n;
    parallel_for(
        n,
        [&](std::size_t j) {
          double best = kNegInf;
          int arg = -1;
          const double oj = o[j];
          for (const auto& e : graph.transitions(static_cast<int>(j))) {
            if (prev[e.node] == kNegInf) continue;
            const double cand = (prev[e.node] + oj) + trans(t, e.node, static_cast<int>(j), e.hops);
            if (arg < 0 || cand > best) {
              best = cand;
              arg = e.node;
            }
          }
          cur[j] = arg < 0 ? kNegInf : best;
          bp[j] = arg;
        },
        4096);
    if (all_dead(cur)) throw NoFeasiblePath("no feasible path reaches slot " + std::to_string(t));
    std::swap(prev, cur);
  }

  DecodedPath path;
  int last = -1;
  for (std::size_t j = 0; j < n; ++j) {
    if (prev[j] > kNegInf && (last < 0 || prev[j] > prev[static_cast<std::size_t>(last)])) last = static_cast<int>(j);
  }
  path.total = prev[static_cast<std::size_t>(last)];
  path.nodes.assign(slots, 0);
  path.nodes[slots - 1] = last;
  for (std::size_t t = slots - 1; t > 0; --t) {
    path.nodes[t - 1] = back[(t - 1) * n + static_cast<std::size_t>(path.nodes[t])];
  }

  path.obs_scores.assign(slots, 0.0);
  path.trans_scores.assign(slots, 0.0);
  for (std::size_t t = 0; t < slots; ++t) {
    obs(t, std::span<double>(o));
    path.obs_scores[t] = o[static_cast<std::size_t>(path.nodes[t])];
    if (t > 0) {
      const int i = path.nodes[t - 1];
      const int j = path.nodes[t];
      path.trans_scores[t] = trans(t, i, j, graph.edge_hops(i, j));
    }
  }
  return path;
}

/**
 * Observation scores of graph nodes under a propagation model. Readings from
 * stations without parameters are skipped and counted in dropped().
 */
class ObservationScorer {
 public:
  ObservationScorer(const std::vector<Point>& nodes, const PropagationModel& model, const Deployment& stations,
                    const RssObservationSequence& seq)
      : nodes_(nodes), model_(model), seq_(seq) {
    for (const auto& slot : seq.slots) {
      for (const auto& ob : slot) {
        if (!model.contains(ob.bs_id)) {
          ++dropped_;
          continue;
        }
        if (log_d_.count(ob.bs_id)) continue;
        const Point bs = stations.at(ob.bs_id).position;
        std::vector<double> lg(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) lg[i] = log10_distance(bs, nodes[i]);
        log_d_.emplace(ob.bs_id, std::move(lg));
      }
    }
  }

  std::size_t dropped() const { return dropped_; }
  std::size_t size() const { return seq_.size(); }

  void fill(std::size_t t, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& ob : seq_.slots.at(t)) {
      const PathLossParams* p = model_.find(ob.bs_id);
      if (p == nullptr) continue;
      const std::vector<double>& lg = log_d_.at(ob.bs_id);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += gaussian_log_density(ob.rss - predict_rss(*p, lg[i]), p->sigma);
      }
    }
  }

  void operator()(std::size_t t, std::span<double> out) const { fill(t, out); }

 private:
  const std::vector<Point>& nodes_;
  const PropagationModel& model_;
  const RssObservationSequence& seq_;
  std::unordered_map<int, std::vector<double>> log_d_;
  std::size_t dropped_ = 0;
};

/// Per-hop transition scores for a mobility model on a graph of spacing gamma.
class TransitionScorer {
 public:
  TransitionScorer(const MobilityModel& mobility, double gamma, double delta, int hop_limit) {
    if (!(delta > 0.0)) throw BadParams("slot duration must be positive");
    const int k = std::max(hop_limit, 1);
    auto table = [&](double v, double s2) {
      std::vector<double> row(static_cast<std::size_t>(k));
      for (int h = 0; h < k; ++h) row[h] = speed_log_density(h * gamma / delta, v, s2);
      return row;
    };
    if (const auto* fixed = std::get_if<FixedMobilityModel>(&mobility)) {
      tables_.push_back(table(fixed->v_avr, fixed->sigma_v_sq));
    } else {
      const auto& ad = std::get<AdaptiveMobilityModel>(mobility);
      for (const auto& g : ad.params) tables_.push_back(table(g.v_avr, g.sigma_sq));
      groups_ = ad.group_of_transition;
      adaptive_ = true;
    }
  }

  std::span<const double> table_for_slot(std::size_t t) const {
    if (!adaptive_) return tables_.front();
    if (t == 0 || t - 1 >= groups_.size()) {
      throw UnassignedSlot("slot " + std::to_string(t) + " has no incoming transition group");
    }
    return tables_.at(static_cast<std::size_t>(groups_[t - 1]));
  }

  double operator()(std::size_t t, int, int, int hops) const {
    if (hops < 0) return kNegInf;
    return table_for_slot(t)[static_cast<std::size_t>(hops)];
  }

 private:
  std::vector<std::vector<double>> tables_;
  std::vector<int> groups_;
  bool adaptive_ = false;
};

inline void check_mobility_covers(const MobilityModel& mobility, std::size_t slots) {
  if (const auto* ad = std::get_if<AdaptiveMobilityModel>(&mobility)) {
    if (slots > 1 && ad->group_of_transition.size() < slots - 1) {
      throw UnassignedSlot("adaptive mobility model does not cover every transition");
    }
  }
}

/// One Viterbi pass over all nodes of `graph`.
inline DecodedPath decode_single_stage(const RoadGraph& graph, const RssObservationSequence& seq,
                                       const PropagationModel& model, const Deployment& stations,
                                       const MobilityModel& mobility, std::size_t* dropped = nullptr) {
  seq.validate();
  check_mobility_covers(mobility, seq.size());
  ObservationScorer obs(graph.positions(), model, stations, seq);
  if (dropped) *dropped = obs.dropped();
  TransitionScorer trans(mobility, graph.gamma(), seq.delta, graph.hop_limit());
  return viterbi(graph, seq.size(), obs, trans);
}

struct TwoStageResult {
  DecodedPath coarse;
  DecodedPath fine;  // node ids of the full fine graph
  std::size_t corridor_size = 0;
  std::size_t dropped = 0;
};

/**
 * Decodes on the coarse graph, restricts the fine graph to nodes within
 * `radius` of the coarse path (plus `keep`), and decodes there.
 */
inline TwoStageResult decode_two_stage(const RoadGraph& coarse, const RoadGraph& fine, const RssObservationSequence& seq,
                                       const PropagationModel& model, const Deployment& stations,
                                       const MobilityModel& mobility, double radius, std::span<const int> keep = {}) {
  TwoStageResult out;
  out.coarse = decode_single_stage(coarse, seq, model, stations, mobility);
  const Corridor corridor = build_corridor(fine, node_positions(coarse, out.coarse.nodes), radius, keep);
  out.corridor_size = corridor.members.size();
  out.fine = decode_single_stage(corridor.graph, seq, model, stations, mobility, &out.dropped);
  for (int& v : out.fine.nodes) v = corridor.members[static_cast<std::size_t>(v)];
  return out;
}

}  // namespace rssmm

#endif  // RSSMM_DECODER_HPP
