#ifndef RSSMM_ROAD_GRAPH_HPP
#define RSSMM_ROAD_GRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rssmm/core/errors.hpp"
#include "rssmm/core/types.hpp"

namespace rssmm {

/// Roads as planar polylines (meters). Roads connect where they share endpoints or cross.
struct RoadNetwork {
  std::vector<std::vector<Point>> polylines;
  friend bool operator==(const RoadNetwork&, const RoadNetwork&) = default;
};

inline void validate_network(const RoadNetwork& network) {
  if (network.polylines.empty()) throw EmptyNetwork("road network has no polylines");
  for (std::size_t i = 0; i < network.polylines.size(); ++i) {
    const auto& line = network.polylines[i];
    if (line.size() < 2) throw BadParams("polyline " + std::to_string(i) + " has fewer than 2 points");
    for (const auto& p : line) {
      if (!is_finite(p)) throw BadParams("polyline " + std::to_string(i) + " has non-finite coordinates");
    }
  }
}

inline double polyline_length(std::span<const Point> line) {
  double len = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) len += distance(line[i - 1], line[i]);
  return len;
}

/// Point at arclength `s` along a polyline (clamped to its ends).
inline Point point_at_arclength(std::span<const Point> line, double s) {
  if (s <= 0.0) return line.front();
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    if (s <= seg && seg > 0.0) return line[i - 1] + (s / seg) * (line[i] - line[i - 1]);
    s -= seg;
  }
  return line.back();
}

/// A stretch of road between two junctions, with its geometry.
struct RoadPiece {
  int from = 0;
  int to = 0;
  std::vector<Point> geometry;  // front() and back() sit on the junctions
  double length = 0.0;
};

/// Network cut at every endpoint and crossing; junctions within the snap tolerance are merged.
struct RoadTopology {
  std::vector<Point> junctions;
  std::vector<RoadPiece> pieces;
};

namespace detail {

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

struct Cut {
  double s;
  Point p;
};

// Intersections between segment [a0,a1] and [b0,b1]; returns parameters along each.
inline void segment_intersections(Point a0, Point a1, Point b0, Point b1,
                                  std::vector<std::pair<double, double>>& out) {
  const Point r = a1 - a0;
  const Point q = b1 - b0;
  const double denom = cross(r, q);
  const double la = norm(r);
  const double lb = norm(q);
  if (la == 0.0 || lb == 0.0) return;
  constexpr double eps = 1e-9;
  if (std::abs(denom) > 1e-12 * la * lb) {
    const double t = cross(b0 - a0, q) / denom;
    const double u = cross(b0 - a0, r) / denom;
    if (t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps) {
      out.emplace_back(std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0));
    }
    return;
  }
  // Parallel: only endpoint contacts count as junctions.
  const double tol = 1e-9 * std::max(la, lb);
  auto project = [](Point p, Point s0, Point s1, double len) {
    const double t = dot(p - s0, s1 - s0) / (len * len);
    return std::pair{t, distance(p, s0 + std::clamp(t, 0.0, 1.0) * (s1 - s0))};
  };
  for (const auto& [pt, on_a] : {std::pair{b0, false}, std::pair{b1, false}, std::pair{a0, true}, std::pair{a1, true}}) {
    if (!on_a) {
      auto [t, d] = project(pt, a0, a1, la);
      if (d <= tol && t >= -eps && t <= 1.0 + eps) out.emplace_back(std::clamp(t, 0.0, 1.0), pt == b0 ? 0.0 : 1.0);
    } else {
      auto [u, d] = project(pt, b0, b1, lb);
      if (d <= tol && u >= -eps && u <= 1.0 + eps) out.emplace_back(pt == a0 ? 0.0 : 1.0, std::clamp(u, 0.0, 1.0));
    }
  }
}

}  // namespace detail

/**
 * Splits a network into junction-to-junction pieces. Junction candidates are
 * polyline endpoints and crossings between different polylines; candidates
 * closer than `snap_tolerance` collapse onto the earliest one.
 */
inline RoadTopology split_network(const RoadNetwork& network, double snap_tolerance) {
  validate_network(network);
  const auto& lines = network.polylines;
  const std::size_t n_lines = lines.size();

  struct Segment {
    std::size_t line;
    Point a, b;
    double s0;
    double len;
    double minx, maxx, miny, maxy;
  };
  std::vector<Segment> segments;
  std::vector<std::vector<detail::Cut>> cuts(n_lines);
  for (std::size_t l = 0; l < n_lines; ++l) {
    double s = 0.0;
    for (std::size_t k = 1; k < lines[l].size(); ++k) {
      const Point a = lines[l][k - 1];
      const Point b = lines[l][k];
      const double len = distance(a, b);
      segments.push_back({l, a, b, s, len, std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y),
                          std::max(a.y, b.y)});
      s += len;
    }
    cuts[l].push_back({0.0, lines[l].front()});
    cuts[l].push_back({s, lines[l].back()});
  }

  std::vector<std::pair<double, double>> hits;
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return segments[i].minx < segments[j].minx; });
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const Segment& sa = segments[order[oi]];
    const double slack = 1e-9 * (1.0 + sa.len);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const Segment& sb = segments[order[oj]];
      if (sb.minx > sa.maxx + slack) break;
      if (sa.line == sb.line) continue;
      if (sb.miny > sa.maxy + slack || sb.maxy < sa.miny - slack) continue;
      hits.clear();
      detail::segment_intersections(sa.a, sa.b, sb.a, sb.b, hits);
      for (auto [t, u] : hits) {
        const Point p = sa.a + t * (sa.b - sa.a);
        cuts[sa.line].push_back({sa.s0 + t * sa.len, p});
        cuts[sb.line].push_back({sb.s0 + u * sb.len, p});
      }
    }
  }

  // Junction candidates in (line, arclength) order, merged by snapping.
  struct Candidate {
    std::size_t line;
    double s;
    Point p;
  };
  std::vector<Candidate> candidates;
  for (std::size_t l = 0; l < n_lines; ++l) {
    auto& c = cuts[l];
    std::sort(c.begin(), c.end(), [](const detail::Cut& x, const detail::Cut& y) { return x.s < y.s; });
    const double total = c.back().s;
    std::vector<detail::Cut> unique;
    for (const auto& cut : c) {
      if (!unique.empty() && cut.s - unique.back().s <= 1e-9 * (1.0 + total)) continue;
      unique.push_back(cut);
    }
    if (unique.back().s < total) unique.back() = {total, lines[l].back()};
    c = std::move(unique);
    for (const auto& cut : c) candidates.push_back({l, cut.s, cut.p});
  }

  std::vector<int> parent(candidates.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  {
    const double cell = std::max(snap_tolerance, 1e-9);
    std::unordered_map<std::int64_t, std::vector<int>> grid;
    auto key = [](std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffff); };
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto cx = static_cast<std::int64_t>(std::floor(candidates[i].p.x / cell));
      const auto cy = static_cast<std::int64_t>(std::floor(candidates[i].p.y / cell));
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          auto it = grid.find(key(cx + dx, cy + dy));
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (distance(candidates[i].p, candidates[j].p) <= snap_tolerance) {
              const int ri = find(static_cast<int>(i));
              const int rj = find(j);
              if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
          }
        }
      }
      grid[key(cx, cy)].push_back(static_cast<int>(i));
    }
  }

  RoadTopology topo;
  std::vector<int> junction_of_root(candidates.size(), -1);
  std::vector<int> junction_of(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const int root = find(static_cast<int>(i));
    if (junction_of_root[root] < 0) {
      junction_of_root[root] = static_cast<int>(topo.junctions.size());
      topo.junctions.push_back(candidates[root].p);
    }
    junction_of[i] = junction_of_root[root];
  }

  std::size_t ci = 0;
  for (std::size_t l = 0; l < n_lines; ++l) {
    const auto& line = lines[l];
    std::vector<double> vertex_s(line.size(), 0.0);
    for (std::size_t k = 1; k < line.size(); ++k) vertex_s[k] = vertex_s[k - 1] + distance(line[k - 1], line[k]);
    const auto& c = cuts[l];
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
      RoadPiece piece;
      piece.from = junction_of[ci + k];
      piece.to = junction_of[ci + k + 1];
      piece.geometry.push_back(topo.junctions[piece.from]);
      for (std::size_t v = 0; v < line.size(); ++v) {
        if (vertex_s[v] > c[k].s && vertex_s[v] < c[k + 1].s) piece.geometry.push_back(line[v]);
      }
      piece.geometry.push_back(topo.junctions[piece.to]);
      piece.length = polyline_length(piece.geometry);
      if (piece.from == piece.to && piece.length <= 2.0 * snap_tolerance) continue;
      if (piece.length <= 0.0) continue;
      topo.pieces.push_back(std::move(piece));
    }
    ci += c.size();
  }
  return topo;
}

/// One transition edge leaving a node, with its base-adjacency hop count.
struct TransitionEdge {
  int node = 0;
  int hops = 0;
  friend bool operator==(const TransitionEdge&, const TransitionEdge&) = default;
};

/**
 * Road graph: gamma-spaced nodes, a base adjacency (one hop along a road or
 * across a junction) and, once built, K-hop transition edges.
 */
class RoadGraph {
 public:
  static constexpr double kDisconnected = std::numeric_limits<double>::infinity();

  RoadGraph() = default;
  RoadGraph(std::vector<Point> nodes, std::vector<std::vector<int>> base_adjacency, double gamma)
      : nodes_(std::move(nodes)), base_(std::move(base_adjacency)), gamma_(gamma) {
    if (base_.size() != nodes_.size()) throw BadParams("adjacency size does not match node count");
    for (auto& nb : base_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  std::size_t size() const { return nodes_.size(); }
  double gamma() const { return gamma_; }
  const std::vector<Point>& positions() const { return nodes_; }
  Point position(int i) const { return nodes_.at(check(i)); }
  std::span<const int> base_neighbors(int i) const { return base_.at(check(i)); }

  std::size_t base_edge_count() const {
    std::size_t n = 0;
    for (const auto& nb : base_) n += nb.size();
    return n / 2;
  }

  /// K of the transition relation; 0 until transition edges are built.
  int hop_limit() const { return hop_limit_; }
  bool has_transitions() const { return hop_limit_ > 0; }

  std::span<const TransitionEdge> transitions(int i) const {
    check(i);
    if (!has_transitions()) return {};
    return {edges_.data() + offsets_[i], edges_.data() + offsets_[i + 1]};
  }
  std::size_t transition_edge_count() const { return edges_.size(); }

  bool has_edge(int i, int j) const { return edge_hops(i, j) >= 0; }

  /// Hop count of transition edge (i, j), or -1 when (i, j) is not an edge.
  int edge_hops(int i, int j) const {
    check(j);
    auto span = transitions(i);
    auto it = std::lower_bound(span.begin(), span.end(), j,
                               [](const TransitionEdge& e, int v) { return e.node < v; });
    return (it != span.end() && it->node == j) ? it->hops : -1;
  }

  /// Shortest base-adjacency hop count, -1 when disconnected.
  int hops_between(int i, int j) const {
    check(i);
    check(j);
    if (i == j) return 0;
    std::vector<int> dist(size(), -1);
    std::queue<int> queue;
    dist[i] = 0;
    queue.push(i);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      for (int v : base_[u]) {
        if (dist[v] >= 0) continue;
        dist[v] = dist[u] + 1;
        if (v == j) return dist[v];
        queue.push(v);
      }
    }
    return -1;
  }

  /// Along-road distance: hops * gamma, +inf when disconnected.
  double routine_distance(int i, int j) const {
    const int h = hops_between(i, j);
    return h < 0 ? kDisconnected : h * gamma_;
  }

  /// Node sequence of a shortest base path from i to j (BFS, lowest-index parents). Empty if disconnected.
  std::vector<int> shortest_path(int i, int j) const {
    check(i);
    check(j);
    if (i == j) return {i};
    std::vector<int> parent(size(), -2);
    std::queue<int> queue;
    parent[i] = -1;
    queue.push(i);
    bool found = false;
    while (!queue.empty() && !found) {
      const int u = queue.front();
      queue.pop();
      for (int v : base_[u]) {
        if (parent[v] != -2) continue;
        parent[v] = u;
        if (v == j) {
          found = true;
          break;
        }
        queue.push(v);
      }
    }
    if (!found) return {};
    std::vector<int> path;
    for (int v = j; v != -1; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
  }

  /// Installs transition edges; rows must be sorted by node id.
  void set_transitions(int hop_limit, std::vector<std::vector<TransitionEdge>> rows) {
    if (rows.size() != size()) throw BadParams("transition rows do not match node count");
    hop_limit_ = hop_limit;
    offsets_.assign(size() + 1, 0);
    edges_.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::sort(rows[i].begin(), rows[i].end(),
                [](const TransitionEdge& a, const TransitionEdge& b) { return a.node < b.node; });
      edges_.insert(edges_.end(), rows[i].begin(), rows[i].end());
      offsets_[i + 1] = edges_.size();
    }
  }

 private:
  int check(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size()) {
      throw UnknownNode("node " + std::to_string(i) + " is not in the graph");
    }
    return i;
  }

  std::vector<Point> nodes_;
  std::vector<std::vector<int>> base_;
  double gamma_ = 0.0;
  int hop_limit_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<TransitionEdge> edges_;
};

/**
 * Resamples every road piece at multiples of gamma. Junctions (endpoints and
 * crossings, merged within gamma/2) become shared nodes; a regular sample
 * closer than gamma/2 to the piece end is dropped, so consecutive nodes are
 * at most 1.5 gamma apart along the road.
 */
inline RoadGraph build_nodes(const RoadNetwork& network, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw BadParams("node spacing gamma must be positive");
  validate_network(network);
  const RoadTopology topo = split_network(network, 0.5 * gamma);

  std::vector<Point> nodes = topo.junctions;
  std::vector<std::vector<int>> adj(nodes.size());
  auto link = [&](int a, int b) {
    if (a == b) return;
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (const auto& piece : topo.pieces) {
    int prev = piece.from;
    for (int k = 1; k * gamma < piece.length - 0.5 * gamma; ++k) {
      const int id = static_cast<int>(nodes.size());
      nodes.push_back(point_at_arclength(piece.geometry, k * gamma));
      adj.emplace_back();
      link(prev, id);
      prev = id;
    }
    link(prev, piece.to);
  }
  return RoadGraph(std::move(nodes), std::move(adj), gamma);
}

/// K = ceil(v_max * delta / gamma) + slack.
inline int hop_limit_for(double v_max, double delta, double gamma, int slack) {
  if (!(v_max > 0.0) || !(delta > 0.0) || !(gamma > 0.0)) throw BadParams("hop limit needs positive v_max, delta, gamma");
  if (slack < 0) throw BadParams("hop slack must be >= 0");
  const double reach = v_max * delta / gamma;
  return std::max(1, static_cast<int>(std::ceil(reach - 1e-9)) + slack);
}

/// Transition edges for an explicit K: (i, j) is an edge iff hops(i, j) < K. Self-loops included.
inline RoadGraph with_hop_limit(RoadGraph graph, int hop_limit) {
  if (hop_limit < 1) throw BadParams("hop limit must be >= 1");
  const int n = static_cast<int>(graph.size());
  std::vector<std::vector<TransitionEdge>> rows(n);
  std::vector<int> depth(n, -1);
  std::vector<int> touched;
  std::vector<int> frontier;
  std::vector<int> next;
  for (int s = 0; s < n; ++s) {
    touched.assign({s});
    depth[s] = 0;
    frontier.assign({s});
    rows[s].push_back({s, 0});
    for (int d = 1; d < hop_limit && !frontier.empty(); ++d) {
      next.clear();
      for (int u : frontier) {
        for (int v : graph.base_neighbors(u)) {
          if (depth[v] >= 0) continue;
          depth[v] = d;
          touched.push_back(v);
          next.push_back(v);
          rows[s].push_back({v, d});
        }
      }
      frontier.swap(next);
    }
    for (int v : touched) depth[v] = -1;
  }
  graph.set_transitions(hop_limit, std::move(rows));
  return graph;
}

inline RoadGraph build_transition_edges(RoadGraph graph, double v_max, double delta, int slack = 1) {
  const int hop_limit = hop_limit_for(v_max, delta, graph.gamma(), slack);
  return with_hop_limit(std::move(graph), hop_limit);
}

/// Uniform-grid spatial index over graph node positions.
class NodeLocator {
 public:
  explicit NodeLocator(std::vector<Point> points, double cell = 0.0) : points_(std::move(points)) {
    if (points_.empty()) throw EmptyNetwork("cannot index an empty node set");
    double minx = points_[0].x, maxx = minx, miny = points_[0].y, maxy = miny;
    for (const auto& p : points_) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    origin_ = {minx, miny};
    const double span = std::max({maxx - minx, maxy - miny, 1e-9});
    cell_ = cell > 0.0 ? cell : std::max(span / std::sqrt(static_cast<double>(points_.size())), 1e-6);
    nx_ = static_cast<int>((maxx - minx) / cell_) + 1;
    ny_ = static_cast<int>((maxy - miny) / cell_) + 1;
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t i = 0; i < points_.size(); ++i) buckets_[bucket(cell_x(points_[i].x), cell_y(points_[i].y))].push_back(static_cast<int>(i));
  }

  /// Nearest point index; ties go to the lowest index.
  int nearest(Point q) const {
    const int cx = std::clamp(cell_x(q.x), 0, nx_ - 1);
    const int cy = std::clamp(cell_y(q.y), 0, ny_ - 1);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int ring = 0;; ++ring) {
      for (int x = cx - ring; x <= cx + ring; ++x) {
        for (int y = cy - ring; y <= cy + ring; ++y) {
          if (std::max(std::abs(x - cx), std::abs(y - cy)) != ring) continue;
          if (x < 0 || y < 0 || x >= nx_ || y >= ny_) continue;
          for (int i : buckets_[bucket(x, y)]) {
            const double d = distance(points_[i], q);
            if (d < best_d || (d == best_d && i < best)) {
              best_d = d;
              best = i;
            }
          }
        }
      }
      // Cells beyond this ring are at least ring * cell_ away from the query cell.
      const double outside = distance_outside(q, cx, cy, ring);
      if (best >= 0 && best_d < outside) return best;
      if (ring > nx_ + ny_) return best;
    }
  }

  /// Indices of points within `radius` of q (ascending).
  std::vector<int> within(Point q, double radius) const {
    std::vector<int> out;
    const int x0 = std::max(0, cell_x(q.x - radius)), x1 = std::min(nx_ - 1, cell_x(q.x + radius));
    const int y0 = std::max(0, cell_y(q.y - radius)), y1 = std::min(ny_ - 1, cell_y(q.y + radius));
    for (int x = x0; x <= x1; ++x) {
      for (int y = y0; y <= y1; ++y) {
        for (int i : buckets_[bucket(x, y)]) {
          if (distance(points_[i], q) <= radius) out.push_back(i);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  int cell_x(double x) const { return static_cast<int>(std::floor((x - origin_.x) / cell_)); }
  int cell_y(double y) const { return static_cast<int>(std::floor((y - origin_.y) / cell_)); }
  std::size_t bucket(int x, int y) const { return static_cast<std::size_t>(x) * ny_ + y; }

  // Lower bound on the distance from q to any cell outside the (2 ring + 1)^2 block around (cx, cy).
  double distance_outside(Point q, int cx, int cy, int ring) const {
    const double left = q.x - (origin_.x + (cx - ring) * cell_);
    const double right = origin_.x + (cx + ring + 1) * cell_ - q.x;
    const double down = q.y - (origin_.y + (cy - ring) * cell_);
    const double up = origin_.y + (cy + ring + 1) * cell_ - q.y;
    return std::max(0.0, std::min({left, right, down, up}));
  }

  std::vector<Point> points_;
  Point origin_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Snaps free-space points to their nearest graph nodes.
inline std::vector<int> snap_to_nodes(const RoadGraph& graph, const Trajectory& points) {
  NodeLocator locator(graph.positions());
  std::vector<int> out;
  out.reserve(points.size());
  for (const auto& p : points.positions) out.push_back(locator.nearest(p));
  return out;
}

inline Trajectory node_positions(const RoadGraph& graph, std::span<const int> nodes) {
  Trajectory t;
  t.positions.reserve(nodes.size());
  for (int n : nodes) t.positions.push_back(graph.position(n));
  return t;
}

/// Subset of a fine graph near a coarse path; `graph` keeps only member nodes, re-indexed in ascending order.
struct Corridor {
  std::vector<int> members;
  double radius = 0.0;
  RoadGraph graph;
};

/**
 * Restricts a fine graph to the nodes within `radius` of any coarse-path
 * point, plus any `keep` nodes. Transition edges between members keep
 * their fine-graph hop counts.
 */
inline Corridor build_corridor(const RoadGraph& fine, const Trajectory& coarse_path, double radius,
                               std::span<const int> keep = {}) {
  if (coarse_path.positions.empty()) throw BadParams("corridor needs a non-empty coarse path");
  if (!fine.has_transitions()) throw BadParams("corridor needs a graph with transition edges");
  std::vector<char> member(fine.size(), 0);
  NodeLocator locator(fine.positions());
  std::vector<Point> anchors = coarse_path.positions;
  std::sort(anchors.begin(), anchors.end(), [](Point a, Point b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  for (const auto& a : anchors) {
    for (int i : locator.within(a, radius)) member[i] = 1;
  }
  for (int k : keep) {
    if (k < 0 || static_cast<std::size_t>(k) >= fine.size()) throw UnknownNode("corridor keep node out of range");
    member[k] = 1;
  }

  Corridor corridor;
  corridor.radius = radius;
  std::vector<int> local(fine.size(), -1);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    if (member[i]) {
      local[i] = static_cast<int>(corridor.members.size());
      corridor.members.push_back(static_cast<int>(i));
    }
  }
  if (corridor.members.empty()) throw EmptyCorridor("no fine-graph node lies within the corridor radius");

  std::vector<Point> pos;
  std::vector<std::vector<int>> adj(corridor.members.size());
  std::vector<std::vector<TransitionEdge>> rows(corridor.members.size());
  for (std::size_t li = 0; li < corridor.members.size(); ++li) {
    const int g = corridor.members[li];
    pos.push_back(fine.position(g));
    for (int v : fine.base_neighbors(g)) {
      if (local[v] >= 0) adj[li].push_back(local[v]);
    }
    for (const auto& e : fine.transitions(g)) {
      if (local[e.node] >= 0) rows[li].push_back({local[e.node], e.hops});
    }
  }
  corridor.graph = RoadGraph(std::move(pos), std::move(adj), fine.gamma());
  corridor.graph.set_transitions(fine.hop_limit(), std::move(rows));
  return corridor;
}

}  // namespace rssmm

#endif  // RSSMM_ROAD_GRAPH_HPP
