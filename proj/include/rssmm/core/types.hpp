#ifndef RSSMM_CORE_TYPES_HPP
#define RSSMM_CORE_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rssmm/core/errors.hpp"

namespace rssmm {

/// Planar point in a local metric (ENU) frame, meters.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }
inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

struct BaseStation {
  int id = 0;
  Point position;
  friend bool operator==(const BaseStation&, const BaseStation&) = default;
};

/// A set of base stations with id lookup.
class Deployment {
 public:
  Deployment() = default;
  explicit Deployment(std::vector<BaseStation> stations) : stations_(std::move(stations)) {
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      if (!is_finite(stations_[i].position)) {
        throw BadParams("base station " + std::to_string(stations_[i].id) + " has non-finite coordinates");
      }
      if (!index_.emplace(stations_[i].id, i).second) {
        throw BadParams("duplicate base station id " + std::to_string(stations_[i].id));
      }
    }
  }
  Deployment(std::initializer_list<BaseStation> stations) : Deployment(std::vector<BaseStation>(stations)) {}

  const std::vector<BaseStation>& stations() const { return stations_; }
  std::size_t size() const { return stations_.size(); }
  bool contains(int id) const { return index_.count(id) != 0; }

  const BaseStation& at(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownBs("unknown base station id " + std::to_string(id));
    return stations_[it->second];
  }

 private:
  std::vector<BaseStation> stations_;
  std::unordered_map<int, std::size_t> index_;
};

struct RssObservation {
  int bs_id = 0;
  double rss = 0.0;  // dBm
  friend bool operator==(const RssObservation&, const RssObservation&) = default;
};

using SlotObservations = std::vector<RssObservation>;

/// Per-slot RSS readings sampled every `delta` seconds. Slots may be empty.
struct RssObservationSequence {
  std::vector<SlotObservations> slots;
  double delta = 0.2;

  std::size_t size() const { return slots.size(); }

  void validate() const {
    if (slots.empty()) throw BadParams("observation sequence must contain at least one slot");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw BadParams("slot duration delta must be positive");
    for (std::size_t t = 0; t < slots.size(); ++t) {
      std::unordered_set<int> seen;
      for (const auto& o : slots[t]) {
        if (!std::isfinite(o.rss)) throw BadParams("non-finite rss in slot " + std::to_string(t));
        if (!seen.insert(o.bs_id).second) {
          throw BadParams("duplicate base station " + std::to_string(o.bs_id) + " in slot " + std::to_string(t));
        }
      }
    }
  }

  std::size_t observation_count() const {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.size();
    return n;
  }

  friend bool operator==(const RssObservationSequence&, const RssObservationSequence&) = default;
};

/// One planar position per time slot.
struct Trajectory {
  std::vector<Point> positions;

  std::size_t size() const { return positions.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class EtaMode { density, tail };

/// Which per-slot anchor rule seeds the speed-constrained initializer.
enum class AnchorRule { nearest, weighted };

struct SolverConfig {
  double v_max = 22.2;
  double v_avr = 10.5;
  double eta = 0.05;
  EtaMode eta_mode = EtaMode::tail;
  double gamma_coarse = 300.0;
  double gamma_fine = 2.0;
  int group_count = 10;
  int max_outer_iters = 30;
  int hop_slack = 1;
  double corridor_radius = 0.0;  // 0 selects 2 * gamma_coarse
  AnchorRule anchor_rule = AnchorRule::weighted;

  double effective_corridor_radius() const {
    return corridor_radius > 0.0 ? corridor_radius : 2.0 * gamma_coarse;
  }

  void validate() const {
    if (!(v_avr > 0.0) || !(v_max > v_avr)) throw BadParams("require 0 < v_avr < v_max");
    if (!(eta > 0.0)) throw BadParams("eta must be positive");
    if (!(gamma_fine > 0.0) || !(gamma_coarse >= gamma_fine)) {
      throw BadParams("require 0 < gamma_fine <= gamma_coarse");
    }
    if (group_count < 1) throw BadParams("group count must be >= 1");
    if (max_outer_iters < 1) throw BadParams("max_outer_iters must be >= 1");
    if (hop_slack < 0) throw BadParams("hop slack must be >= 0");
    if (corridor_radius < 0.0) throw BadParams("corridor radius must be >= 0");
  }
};

}  // namespace rssmm

#endif  // RSSMM_CORE_TYPES_HPP
