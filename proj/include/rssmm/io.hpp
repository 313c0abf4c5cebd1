#ifndef RSSMM_IO_HPP
#define RSSMM_IO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "rssmm/core/errors.hpp"
#include "rssmm/core/types.hpp"
#include "rssmm/decoder.hpp"
#include "rssmm/metrics.hpp"
#include "rssmm/mobility.hpp"
#include "rssmm/optimizer.hpp"
#include "rssmm/propagation.hpp"
#include "rssmm/road_graph.hpp"
#include "rssmm/simulator.hpp"

namespace rssmm::io {

/// Shortest decimal that reads back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(where + ": '" + std::string(s) + "' is not a number");
  }
  if (!std::isfinite(v)) throw ParseError(where + ": non-finite value");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(where + ": '" + std::string(s) + "' is not an integer");
  }
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

/// CSV table with `#key=value` metadata lines and a named header.
struct Table {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string source;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    return static_cast<std::size_t>(it - columns.begin());
  }
  std::string where(std::size_t row) const { return source + " row " + std::to_string(row + 1); }
};

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Parses CSV text whose header must hold exactly `expected` (any order).
inline Table parse_table(const std::string& text, const std::vector<std::string>& expected, const std::string& source) {
  Table tab;
  tab.source = source;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(source + ": metadata line '" + line + "' lacks '='");
      tab.meta[line.substr(1, eq - 1)] = line.substr(eq + 1);
      continue;
    }
    auto cells = split(line, ',');
    for (auto& c : cells) {
      while (!c.empty() && c.front() == ' ') c.erase(c.begin());
      while (!c.empty() && c.back() == ' ') c.pop_back();
    }
    if (!have_header) {
      for (const auto& c : cells) {
        if (std::find(expected.begin(), expected.end(), c) == expected.end()) {
          throw ParseError(source + ": unknown column '" + c + "'");
        }
      }
      for (const auto& e : expected) {
        if (std::count(cells.begin(), cells.end(), e) != 1) throw ParseError(source + ": missing column '" + e + "'");
      }
      tab.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != tab.columns.size()) {
      throw ParseError(tab.where(tab.rows.size()) + ": expected " + std::to_string(tab.columns.size()) + " fields");
    }
    tab.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ParseError(source + ": missing header");
  return tab;
}

inline Table read_table(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  return parse_table(read_file(path), expected, path.string());
}

// ---- geographic input ----

/// Local equirectangular projection about (lat0, lon0), degrees to meters.
struct GeoOrigin {
  double lat0 = 0.0;
  double lon0 = 0.0;

  Point project(double lon, double lat) const {
    constexpr double r = 6371008.8;
    constexpr double rad = std::numbers::pi / 180.0;
    return {r * (lon - lon0) * rad * std::cos(lat0 * rad), r * (lat - lat0) * rad};
  }
  /// Reinterprets p as (lon, lat).
  Point project(Point p) const { return project(p.x, p.y); }
};

inline GeoOrigin parse_geo_origin(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw BadParams("--utm expects LAT0,LON0");
  GeoOrigin g{parse_double(parts[0], "--utm latitude"), parse_double(parts[1], "--utm longitude")};
  if (std::abs(g.lat0) >= 90.0 || std::abs(g.lon0) > 180.0) throw BadParams("--utm origin out of range");
  return g;
}

// ---- stations ----

inline std::string format_stations(const Deployment& d) {
  std::string s = "bs_id,x,y\n";
  for (const auto& bs : d.stations()) s += fmt(bs.id) + "," + fmt(bs.position.x) + "," + fmt(bs.position.y) + "\n";
  return s;
}

inline Deployment parse_stations(const Table& tab) {
  const std::size_t ci = tab.column("bs_id"), cx = tab.column("x"), cy = tab.column("y");
  std::vector<BaseStation> out;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    out.push_back({static_cast<int>(parse_int(row[ci], tab.where(r))),
                   {parse_double(row[cx], tab.where(r)), parse_double(row[cy], tab.where(r))}});
  }
  return Deployment(std::move(out));
}

inline Deployment read_stations(const std::filesystem::path& path) {
  return parse_stations(read_table(path, {"bs_id", "x", "y"}));
}

// ---- observations ----

inline std::string format_observations(const RssObservationSequence& seq) {
  std::string s = "#delta=" + fmt(seq.delta) + "\n#slots=" + fmt(seq.size()) + "\nt,bs_id,rss\n";
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (const auto& o : seq.slots[t]) s += fmt(t) + "," + fmt(o.bs_id) + "," + fmt(o.rss) + "\n";
  }
  return s;
}

/**
 * Slot count comes from `#slots=` when present (so trailing empty slots
 * survive), else from the largest slot index. Rows may appear in any order.
 */
inline RssObservationSequence parse_observations(const Table& tab, double default_delta = 0.2) {
  RssObservationSequence seq;
  seq.delta = default_delta;
  if (auto it = tab.meta.find("delta"); it != tab.meta.end()) seq.delta = parse_double(it->second, tab.source + " #delta");
  long long slots = -1;
  if (auto it = tab.meta.find("slots"); it != tab.meta.end()) {
    slots = parse_int(it->second, tab.source + " #slots");
    if (slots < 1) throw ParseError(tab.source + ": #slots must be >= 1");
  }
  const std::size_t ct = tab.column("t"), cb = tab.column("bs_id"), cr = tab.column("rss");
  long long max_t = -1;
  std::vector<std::pair<long long, RssObservation>> items;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    const long long t = parse_int(row[ct], tab.where(r));
    if (t < 0) throw ParseError(tab.where(r) + ": negative slot index");
    if (slots >= 0 && t >= slots) throw ParseError(tab.where(r) + ": slot index beyond #slots");
    max_t = std::max(max_t, t);
    items.push_back({t, {static_cast<int>(parse_int(row[cb], tab.where(r))), parse_double(row[cr], tab.where(r))}});
  }
  const long long n = slots >= 0 ? slots : max_t + 1;
  if (n < 1) throw ParseError(tab.source + ": no observations and no #slots line");
  seq.slots.resize(static_cast<std::size_t>(n));
  for (const auto& [t, o] : items) seq.slots[static_cast<std::size_t>(t)].push_back(o);
  try {
    seq.validate();
  } catch (const BadParams& e) {
    throw ParseError(tab.source + ": " + e.what());
  }
  return seq;
}

inline RssObservationSequence read_observations(const std::filesystem::path& path, double default_delta = 0.2) {
  return parse_observations(read_table(path, {"t", "bs_id", "rss"}), default_delta);
}

// ---- network ----

inline std::string format_network(const RoadNetwork& net) {
  std::string s;
  for (const auto& line : net.polylines) {
    s += "[";
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) s += ",";
      s += "[" + fmt(line[i].x) + "," + fmt(line[i].y) + "]";
    }
    s += "]\n";
  }
  return s;
}

inline RoadNetwork parse_network(const std::string& text, const std::string& source) {
  RoadNetwork net;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + " line " + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(where + ": expected an array of [x, y] pairs");
    std::vector<Point> poly;
    for (const auto& p : j) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ParseError(where + ": expected [x, y] pairs");
      }
      poly.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    net.polylines.push_back(std::move(poly));
  }
  try {
    validate_network(net);
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
  return net;
}

inline RoadNetwork read_network(const std::filesystem::path& path) {
  return parse_network(read_file(path), path.string());
}

// ---- trajectories and paths ----

inline std::string format_trajectory(const Trajectory& tr) {
  std::string s = "t,x,y\n";
  for (std::size_t t = 0; t < tr.size(); ++t) {
    s += fmt(t) + "," + fmt(tr.positions[t].x) + "," + fmt(tr.positions[t].y) + "\n";
  }
  return s;
}

inline Trajectory parse_trajectory(const Table& tab) {
  const std::size_t ct = tab.column("t"), cx = tab.column("x"), cy = tab.column("y");
  std::vector<std::pair<long long, Point>> items;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    items.push_back({parse_int(row[ct], tab.where(r)),
                     {parse_double(row[cx], tab.where(r)), parse_double(row[cy], tab.where(r))}});
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Trajectory tr;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].first != static_cast<long long>(k)) {
      throw ParseError(tab.source + ": slot indices must run 0..T-1 without gaps or repeats");
    }
    tr.positions.push_back(items[k].second);
  }
  return tr;
}

inline Trajectory read_trajectory(const std::filesystem::path& path) {
  return parse_trajectory(read_table(path, {"t", "x", "y"}));
}

inline std::string format_path(const RoadGraph& graph, const DecodedPath& path) {
  std::string s = "t,node,x,y,obs_score,trans_score\n";
  for (std::size_t t = 0; t < path.nodes.size(); ++t) {
    const Point p = graph.position(path.nodes[t]);
    s += fmt(t) + "," + fmt(path.nodes[t]) + "," + fmt(p.x) + "," + fmt(p.y) + "," +
         fmt(t < path.obs_scores.size() ? path.obs_scores[t] : 0.0) + "," +
         fmt(t < path.trans_scores.size() ? path.trans_scores[t] : 0.0) + "\n";
  }
  return s;
}

// ---- models ----

inline std::string format_model(const PropagationModel& m) {
  std::string s = "bs_id,alpha,beta,sigma\n";
  for (const auto& [id, p] : m.entries()) s += fmt(id) + "," + fmt(p.alpha) + "," + fmt(p.beta) + "," + fmt(p.sigma) + "\n";
  return s;
}

inline PropagationModel parse_model(const Table& tab) {
  const std::size_t ci = tab.column("bs_id"), ca = tab.column("alpha"), cb = tab.column("beta"),
                    cs = tab.column("sigma");
  PropagationModel m;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    const int id = static_cast<int>(parse_int(row[ci], tab.where(r)));
    if (m.contains(id)) throw ParseError(tab.where(r) + ": duplicate base station " + std::to_string(id));
    try {
      m.set(id, {parse_double(row[ca], tab.where(r)), parse_double(row[cb], tab.where(r)),
                 parse_double(row[cs], tab.where(r))});
    } catch (const BadParams& e) {
      throw ParseError(tab.where(r) + ": " + e.what());
    }
  }
  return m;
}

inline PropagationModel read_model(const std::filesystem::path& path) {
  return parse_model(read_table(path, {"bs_id", "alpha", "beta", "sigma"}));
}

inline std::string format_mobility(const AdaptiveMobilityModel& m) {
  std::string s = "group,v_avr,sigma_sq\n";
  for (std::size_t a = 0; a < m.params.size(); ++a) {
    s += fmt(a) + "," + fmt(m.params[a].v_avr) + "," + fmt(m.params[a].sigma_sq) + "\n";
  }
  return s;
}

inline std::string format_mobility(const FixedMobilityModel& m) {
  return "group,v_avr,sigma_sq\n0," + fmt(m.v_avr) + "," + fmt(m.sigma_v_sq) + "\n";
}

inline std::vector<SpeedGroup> parse_mobility(const Table& tab) {
  const std::size_t cg = tab.column("group"), cv = tab.column("v_avr"), cs = tab.column("sigma_sq");
  std::vector<SpeedGroup> out(tab.rows.size());
  std::vector<char> seen(tab.rows.size(), 0);
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    const long long g = parse_int(row[cg], tab.where(r));
    if (g < 0 || g >= static_cast<long long>(out.size()) || seen[g]) {
      throw ParseError(tab.where(r) + ": groups must be numbered 0..A-1 once each");
    }
    seen[g] = 1;
    out[g] = {parse_double(row[cv], tab.where(r)), parse_double(row[cs], tab.where(r))};
    if (!(out[g].sigma_sq > 0.0)) throw ParseError(tab.where(r) + ": sigma_sq must be positive");
  }
  return out;
}

inline std::string format_groups(std::span<const int> groups) {
  std::string s = "t,group\n";
  for (std::size_t t = 0; t < groups.size(); ++t) s += fmt(t) + "," + fmt(groups[t]) + "\n";
  return s;
}

inline std::string format_diagnostics(const std::vector<IterationRecord>& recs) {
  std::string s =
      "iteration,objective_after_fit,objective_after_decode,changed_nodes,corridor_size,skipped_stations,dropped_"
      "readings\n";
  for (const auto& r : recs) {
    s += fmt(r.iteration) + "," + fmt(r.objective_after_fit) + "," + fmt(r.objective_after_decode) + "," +
         fmt(r.changed_nodes) + "," + fmt(r.corridor_size) + "," + fmt(r.skipped_stations) + "," +
         fmt(r.dropped_readings) + "\n";
  }
  return s;
}

inline std::string format_errors(std::span<const double> errors) {
  std::string s = "t,error\n";
  for (std::size_t t = 0; t < errors.size(); ++t) s += fmt(t) + "," + fmt(errors[t]) + "\n";
  return s;
}

inline nlohmann::ordered_json report_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["qle_m"] = r.qle;
  j["tme_percent"] = r.tme;
  j["true_length_m"] = r.length;
  j["loss_length_m"] = r.loss;
  j["surplus_length_m"] = r.surplus;
  j["slots"] = r.errors.size();
  return j;
}

inline nlohmann::ordered_json scenario_json(const ScenarioConfig& cfg, const Scenario& sc) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["grid"] = {{"rows", cfg.rows}, {"cols", cfg.cols}, {"spacing", cfg.spacing}};
  j["slots"] = cfg.slots;
  j["delta"] = cfg.delta;
  j["speed"] = {{"mean", cfg.speed}, {"spread", cfg.speed_spread}, {"hold", cfg.speed_hold}};
  j["station_spacing"] = cfg.station_spacing;
  j["visibility"] = {{"top_k", cfg.visibility.top_k}, {"radius", cfg.visibility.radius}};
  j["missing_rate"] = cfg.missing_rate;
  nlohmann::ordered_json theta = nlohmann::ordered_json::array();
  for (const auto& [id, p] : sc.theta.params) {
    theta.push_back({{"bs_id", id}, {"alpha", p.alpha}, {"beta", p.beta}, {"sigma", p.sigma}});
  }
  j["theta_true"] = theta;
  return j;
}

}  // namespace rssmm::io

#endif  // RSSMM_IO_HPP
