#ifndef RSSMM_SIMULATOR_HPP
#define RSSMM_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/types.hpp"
#include "rssmm/propagation.hpp"
#include "rssmm/road_graph.hpp"

namespace rssmm {

/// Independent generator stream `stream` of `seed`.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

/// rows x cols intersections `spacing` apart; one polyline per block edge.
inline RoadNetwork gen_grid_network(int rows, int cols, double spacing) {
  if (rows < 2 || cols < 2) throw BadParams("grid needs at least 2 rows and 2 columns");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw BadParams("grid spacing must be positive");
  RoadNetwork net;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      net.polylines.push_back({{c * spacing, r * spacing}, {(c + 1) * spacing, r * spacing}});
    }
  }
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r + 1 < rows; ++r) {
      net.polylines.push_back({{c * spacing, r * spacing}, {c * spacing, (r + 1) * spacing}});
    }
  }
  return net;
}

/// Concentric rings (closed polylines of `ring_points` vertices) joined by radial spokes from the center.
inline RoadNetwork gen_ring_radial_network(int rings, int spokes, double ring_spacing, int ring_points = 48) {
  if (rings < 1 || spokes < 2 || ring_points < 8) throw BadParams("ring-radial network needs rings >= 1, spokes >= 2");
  if (!(ring_spacing > 0.0) || !std::isfinite(ring_spacing)) throw BadParams("ring spacing must be positive");
  RoadNetwork net;
  for (int k = 1; k <= rings; ++k) {
    std::vector<Point> ring;
    const double r = k * ring_spacing;
    for (int i = 0; i <= ring_points; ++i) {
      const double a = 2.0 * std::numbers::pi * (i % ring_points) / ring_points;
      ring.push_back({r * std::cos(a), r * std::sin(a)});
    }
    net.polylines.push_back(std::move(ring));
  }
  const double outer = rings * ring_spacing;
  for (int s = 0; s < spokes; ++s) {
    // Spokes pass through ring vertices so they meet the rings exactly.
    const int vertex = s * ring_points / spokes;
    const double a = 2.0 * std::numbers::pi * vertex / ring_points;
    net.polylines.push_back({{0.0, 0.0}, {outer * std::cos(a), outer * std::sin(a)}});
  }
  return net;
}

/// Per-slot commanded speeds (m/s).
using SpeedProfile = std::vector<double>;

inline SpeedProfile constant_speed(std::size_t slots, double speed) { return SpeedProfile(slots, speed); }

/**
 * Piecewise-constant speeds: every `hold` slots a new speed is drawn
 * uniformly from [mean - spread, mean + spread], clamped to [0, v_max].
 */
inline SpeedProfile piecewise_random_speed(std::size_t slots, double mean, double spread, std::size_t hold,
                                           double v_max, std::mt19937_64& rng) {
  if (hold == 0) throw BadParams("speed hold length must be positive");
  std::uniform_real_distribution<double> u(mean - spread, mean + spread);
  SpeedProfile s(slots);
  double v = 0.0;
  for (std::size_t t = 0; t < slots; ++t) {
    if (t % hold == 0) v = std::clamp(u(rng), 0.0, v_max);
    s[t] = v;
  }
  return s;
}

/// Alternating blocks of `block` slots at speeds a and b.
inline SpeedProfile two_regime_speed(std::size_t slots, double a, double b, std::size_t block) {
  if (block == 0) throw BadParams("regime block length must be positive");
  SpeedProfile s(slots);
  for (std::size_t t = 0; t < slots; ++t) s[t] = (t / block) % 2 == 0 ? a : b;
  return s;
}

struct Drive {
  Trajectory truth;
  std::vector<double> speeds;  // realized along-road speed entering each slot (slot 0: 0)
};

/**
 * Random walk along the roads: slot t + 1 lies speeds[t] * delta further
 * along the road than slot t. At junctions a continuing piece is chosen
 * uniformly; the piece just left is excluded unless it is the only one.
 */
inline Drive gen_drive(const RoadNetwork& network, const SpeedProfile& speeds, double delta, std::mt19937_64& rng) {
  validate_network(network);
  if (!(delta > 0.0)) throw BadParams("slot duration must be positive");
  if (speeds.empty()) throw BadParams("speed profile must cover at least one slot");
  for (double v : speeds) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw BadParams("speeds must be finite and non-negative");
  }
  const RoadTopology topo = split_network(network, 0.5);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < topo.pieces.size(); ++i) {
    if (topo.pieces[i].length > 0.0) usable.push_back(i);
  }
  if (usable.empty()) throw EmptyNetwork("road network has no drivable piece");
  std::vector<std::vector<std::size_t>> incident(topo.junctions.size());
  for (std::size_t i : usable) {
    incident[topo.pieces[i].from].push_back(i);
    if (topo.pieces[i].to != topo.pieces[i].from) incident[topo.pieces[i].to].push_back(i);
  }

  std::size_t piece = usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
  bool forward = std::bernoulli_distribution(0.5)(rng);
  double s = std::uniform_real_distribution<double>(0.0, topo.pieces[piece].length)(rng);

  auto position = [&] {
    const RoadPiece& p = topo.pieces[piece];
    return point_at_arclength(p.geometry, forward ? s : p.length - s);
  };

  Drive d;
  d.truth.positions.reserve(speeds.size());
  d.speeds.reserve(speeds.size());
  d.truth.positions.push_back(position());
  d.speeds.push_back(0.0);
  for (std::size_t t = 0; t + 1 < speeds.size(); ++t) {
    double remaining = speeds[t] * delta;
    while (remaining > 0.0) {
      const double left = topo.pieces[piece].length - s;
      if (remaining < left) {
        s += remaining;
        break;
      }
      remaining -= left;
      const RoadPiece& p = topo.pieces[piece];
      const int junction = forward ? p.to : p.from;
      std::vector<std::size_t> options;
      for (std::size_t q : incident[junction]) {
        if (q != piece) options.push_back(q);
      }
      // A closed loop piece is re-entered from its other end.
      if (options.empty()) options.push_back(piece);
      const std::size_t next = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
      if (next == piece && p.from != p.to) {
        forward = !forward;
      } else {
        piece = next;
        forward = topo.pieces[piece].from == junction;
      }
      s = 0.0;
    }
    d.truth.positions.push_back(position());
    d.speeds.push_back(speeds[t]);
  }
  return d;
}

/// Jittered lattice of stations over the network bounding box, kept `clearance` meters off every road.
inline Deployment gen_stations(const RoadNetwork& network, double spacing, std::mt19937_64& rng,
                               double clearance = 10.0) {
  validate_network(network);
  if (!(spacing > 0.0)) throw BadParams("station spacing must be positive");
  double minx = std::numeric_limits<double>::infinity(), miny = minx;
  double maxx = -minx, maxy = -minx;
  for (const auto& line : network.polylines) {
    for (const auto& p : line) {
      minx = std::min(minx, p.x);
      miny = std::min(miny, p.y);
      maxx = std::max(maxx, p.x);
      maxy = std::max(maxy, p.y);
    }
  }
  const int nx = std::max(1, static_cast<int>(std::ceil((maxx - minx) / spacing - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil((maxy - miny) / spacing - 1e-9)));
  const double cx = std::max(maxx - minx, spacing) / nx;
  const double cy = std::max(maxy - miny, spacing) / ny;
  const double x0 = maxx - minx > 0.0 ? minx : minx - 0.5 * spacing;
  const double y0 = maxy - miny > 0.0 ? miny : miny - 0.5 * spacing;

  auto road_distance = [&](Point q) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& line : network.polylines) {
      for (std::size_t i = 1; i < line.size(); ++i) {
        const Point a = line[i - 1];
        const Point ab = line[i] - a;
        const double l2 = dot(ab, ab);
        const double u = l2 > 0.0 ? std::clamp(dot(q - a, ab) / l2, 0.0, 1.0) : 0.0;
        best = std::min(best, distance(q, a + u * ab));
      }
    }
    return best;
  };

  std::uniform_real_distribution<double> jitter(-0.35, 0.35);
  std::vector<BaseStation> out;
  int id = 1;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const Point q{x0 + (i + 0.5 + jitter(rng)) * cx, y0 + (j + 0.5 + jitter(rng)) * cy};
        if (road_distance(q) >= clearance) {
          out.push_back({id++, q});
          break;
        }
      }
    }
  }
  if (out.empty()) throw BadParams("no station position keeps the requested clearance from the roads");
  return Deployment(std::move(out));
}

struct ThetaRanges {
  double alpha_lo = -35.0, alpha_hi = -20.0;
  double beta_lo = -50.0, beta_hi = -30.0;
  double sigma_lo = 1.0, sigma_hi = 4.0;
};

/// Uniformly drawn path-loss parameters per station. sigma may be 0 for noiseless sampling.
struct TrueTheta {
  std::map<int, PathLossParams> params;
};

inline TrueTheta gen_theta(const Deployment& stations, const ThetaRanges& r, std::mt19937_64& rng) {
  if (!(r.sigma_lo >= 0.0) || r.sigma_hi < r.sigma_lo) throw BadParams("invalid sigma range");
  std::uniform_real_distribution<double> ua(r.alpha_lo, r.alpha_hi);
  std::uniform_real_distribution<double> ub(r.beta_lo, r.beta_hi);
  std::uniform_real_distribution<double> us(r.sigma_lo, r.sigma_hi);
  TrueTheta th;
  for (const auto& bs : stations.stations()) {
    PathLossParams p;
    p.alpha = ua(rng);
    p.beta = ub(rng);
    p.sigma = r.sigma_hi > r.sigma_lo ? us(rng) : r.sigma_lo;
    th.params[bs.id] = p;
  }
  return th;
}

struct Visibility {
  int top_k = 7;        // strongest stations by mean rss; used when radius == 0
  double radius = 0.0;  // meters; > 0 selects every station within range
};

/// Per slot: visible stations, each read as mean + N(0, sigma^2). Readings are ordered by station id.
inline RssObservationSequence sample_rss(const Trajectory& truth, const Deployment& stations, const TrueTheta& theta,
                                         const Visibility& vis, double delta, std::mt19937_64& rng) {
  if (vis.radius <= 0.0 && vis.top_k < 1) throw BadParams("visibility needs top_k >= 1 or a positive radius");
  RssObservationSequence seq;
  seq.delta = delta;
  seq.slots.resize(truth.size());
  std::normal_distribution<double> noise(0.0, 1.0);
  struct Cand {
    int id;
    double mean;
    double sigma;
  };
  std::vector<Cand> cands;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    cands.clear();
    for (const auto& bs : stations.stations()) {
      const PathLossParams& p = theta.params.at(bs.id);
      const double d = distance(bs.position, truth.positions[t]);
      if (vis.radius > 0.0 && d > vis.radius) continue;
      cands.push_back({bs.id, predict_rss(p, log10_distance(bs.position, truth.positions[t])), p.sigma});
    }
    if (vis.radius <= 0.0 && cands.size() > static_cast<std::size_t>(vis.top_k)) {
      std::partial_sort(cands.begin(), cands.begin() + vis.top_k, cands.end(), [](const Cand& a, const Cand& b) {
        return a.mean != b.mean ? a.mean > b.mean : a.id < b.id;
      });
      cands.resize(static_cast<std::size_t>(vis.top_k));
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.id < b.id; });
    for (const auto& c : cands) {
      const double z = noise(rng);
      seq.slots[t].push_back({c.id, c.mean + c.sigma * z});
    }
  }
  return seq;
}

/// Drops every reading independently with probability `rate`.
inline RssObservationSequence apply_missing(const RssObservationSequence& seq, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0) || !(rate < 1.0)) throw BadParams("missing rate must lie in [0, 1)");
  RssObservationSequence out;
  out.delta = seq.delta;
  out.slots.resize(seq.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (const auto& o : seq.slots[t]) {
      if (!(u(rng) < rate)) out.slots[t].push_back(o);
    }
  }
  return out;
}

enum class SpeedKind { constant, piecewise, two_regime };

struct ScenarioConfig {
  int rows = 5;
  int cols = 5;
  double spacing = 200.0;
  std::size_t slots = 500;
  double delta = 0.2;
  SpeedKind speed_kind = SpeedKind::piecewise;
  double speed = 10.5;         // constant speed, or piecewise mean
  double speed_spread = 3.0;   // piecewise half-width
  std::size_t speed_hold = 50; // piecewise hold / two-regime block, slots
  double speed_b = 25.0;       // second regime
  double v_max = 22.2;
  double station_spacing = 250.0;
  ThetaRanges theta;
  Visibility visibility;
  double missing_rate = 0.0;
  std::uint64_t seed = 1;
};

struct Scenario {
  RoadNetwork network;
  Deployment stations;
  Trajectory truth;
  std::vector<double> truth_speeds;
  RssObservationSequence seq;
  TrueTheta theta;
  std::uint64_t seed = 0;
};

inline Scenario make_scenario(const ScenarioConfig& cfg, const RoadNetwork* network = nullptr) {
  if (cfg.slots == 0) throw BadParams("scenario needs at least one slot");
  Scenario sc;
  sc.seed = cfg.seed;
  sc.network = network ? *network : gen_grid_network(cfg.rows, cfg.cols, cfg.spacing);
  validate_network(sc.network);

  auto rng_bs = make_rng(cfg.seed, 1);
  sc.stations = gen_stations(sc.network, cfg.station_spacing, rng_bs);
  sc.theta = gen_theta(sc.stations, cfg.theta, rng_bs);

  auto rng_drive = make_rng(cfg.seed, 2);
  SpeedProfile profile;
  switch (cfg.speed_kind) {
    case SpeedKind::constant:
      profile = constant_speed(cfg.slots, cfg.speed);
      break;
    case SpeedKind::piecewise:
      profile = piecewise_random_speed(cfg.slots, cfg.speed, cfg.speed_spread, cfg.speed_hold, cfg.v_max, rng_drive);
      break;
    case SpeedKind::two_regime:
      profile = two_regime_speed(cfg.slots, cfg.speed, cfg.speed_b, cfg.speed_hold);
      break;
  }
  Drive drive = gen_drive(sc.network, profile, cfg.delta, rng_drive);
  sc.truth = std::move(drive.truth);
  sc.truth_speeds = std::move(drive.speeds);

  auto rng_noise = make_rng(cfg.seed, 3);
  sc.seq = sample_rss(sc.truth, sc.stations, sc.theta, cfg.visibility, cfg.delta, rng_noise);
  if (cfg.missing_rate > 0.0) {
    auto rng_missing = make_rng(cfg.seed, 4);
    sc.seq = apply_missing(sc.seq, cfg.missing_rate, rng_missing);
  }
  return sc;
}

}  // namespace rssmm

#endif  // RSSMM_SIMULATOR_HPP
