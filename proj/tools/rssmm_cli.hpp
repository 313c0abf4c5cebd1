#ifndef RSSMM_TOOLS_CLI_HPP
#define RSSMM_TOOLS_CLI_HPP

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rssmm/io.hpp"
#include "rssmm/rssmm.hpp"

namespace rssmm::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kBadFlags = 2, kIo = 3, kSolver = 4, kLength = 5 };

struct SolverFlags {
  double delta = 0.2;
  double v_max = 22.2;
  double v_avr = 10.5;
  double eta = 0.05;
  std::string eta_mode = "tail";
  int groups = 10;
  double gamma_coarse = 300.0;
  double gamma_fine = 2.0;
  int max_iters = 30;
  int hop_slack = 1;
  double corridor = 0.0;
  std::string anchor = "weighted";
  CLI::Option* delta_opt = nullptr;

  void attach(CLI::App* app) {
    delta_opt = app->add_option("--delta", delta, "slot duration, seconds (overrides the observations file)");
    app->add_option("--vmax", v_max, "maximum speed, m/s")->capture_default_str();
    app->add_option("--vavr", v_avr, "average speed, m/s")->capture_default_str();
    app->add_option("--eta", eta, "probability level at the maximum speed")->capture_default_str();
    app->add_option("--eta-mode", eta_mode, "density | tail")
        ->check(CLI::IsMember({"density", "tail"}))
        ->capture_default_str();
    app->add_option("--groups", groups, "speed groups for hrea")->capture_default_str();
    app->add_option("--gamma-coarse", gamma_coarse, "coarse node spacing, meters")->capture_default_str();
    app->add_option("--gamma-fine", gamma_fine, "fine node spacing, meters")->capture_default_str();
    app->add_option("--max-iters", max_iters, "outer iteration cap")->capture_default_str();
    app->add_option("--hop-slack", hop_slack, "extra hops on top of ceil(vmax*delta/gamma)")->capture_default_str();
    app->add_option("--corridor", corridor, "corridor radius, meters (0: twice gamma-coarse)")->capture_default_str();
    app->add_option("--anchor", anchor, "nearest | weighted")
        ->check(CLI::IsMember({"nearest", "weighted"}))
        ->capture_default_str();
  }

  SolverConfig config() const {
    SolverConfig c;
    c.v_max = v_max;
    c.v_avr = v_avr;
    c.eta = eta;
    c.eta_mode = eta_mode == "density" ? EtaMode::density : EtaMode::tail;
    c.group_count = groups;
    c.gamma_coarse = gamma_coarse;
    c.gamma_fine = gamma_fine;
    c.max_outer_iters = max_iters;
    c.hop_slack = hop_slack;
    c.corridor_radius = corridor;
    c.anchor_rule = anchor == "nearest" ? AnchorRule::nearest : AnchorRule::weighted;
    c.validate();
    return c;
  }
};

/// Projects (lon, lat) inputs when --utm was given.
inline void project_stations(Deployment& d, const std::optional<io::GeoOrigin>& geo) {
  if (!geo) return;
  std::vector<BaseStation> out = d.stations();
  for (auto& bs : out) bs.position = geo->project(bs.position);
  d = Deployment(std::move(out));
}
inline void project_network(RoadNetwork& n, const std::optional<io::GeoOrigin>& geo) {
  if (!geo) return;
  for (auto& line : n.polylines) {
    for (auto& p : line) p = geo->project(p);
  }
}
inline void project_trajectory(Trajectory& t, const std::optional<io::GeoOrigin>& geo) {
  if (!geo) return;
  for (auto& p : t.positions) p = geo->project(p);
}

struct SimulateCmd {
  std::string out_dir;
  std::string grid = "5x5";
  double spacing = 200.0;
  std::string network_file;
  std::string ring;
  std::size_t slots = 500;
  double delta = 0.2;
  std::uint64_t seed = 1;
  double missing = 0.0;
  int top_k = 7;
  double radius = 0.0;
  double sigma_min = 1.0;
  double sigma_max = 4.0;
  double speed = 10.5;
  double speed_spread = 3.0;
  std::size_t hold = 50;
  double station_spacing = 250.0;

  void attach(CLI::App* app) {
    app->add_option("--out", out_dir, "output directory")->required();
    app->add_option("--grid", grid, "ROWSxCOLS grid")->capture_default_str();
    app->add_option("--spacing", spacing, "grid spacing, meters")->capture_default_str();
    app->add_option("--network", network_file, "road network file instead of a grid");
    app->add_option("--ring", ring, "RINGS,SPOKES,SPACING ring-radial network instead of a grid");
    app->add_option("--slots", slots, "number of time slots")->capture_default_str();
    app->add_option("--delta", delta, "slot duration, seconds")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--missing", missing, "fraction of readings removed")->capture_default_str();
    app->add_option("--top-k", top_k, "strongest stations observed per slot")->capture_default_str();
    app->add_option("--radius", radius, "observe every station within this range instead of top-k")
        ->capture_default_str();
    app->add_option("--sigma-min", sigma_min, "shadowing std lower bound, dB")->capture_default_str();
    app->add_option("--sigma-max", sigma_max, "shadowing std upper bound, dB")->capture_default_str();
    app->add_option("--speed", speed, "mean speed, m/s")->capture_default_str();
    app->add_option("--speed-spread", speed_spread, "speed half-range, m/s")->capture_default_str();
    app->add_option("--hold", hold, "slots between speed changes")->capture_default_str();
    app->add_option("--station-spacing", station_spacing, "station lattice spacing, meters")->capture_default_str();
  }

  int run(std::ostream& out) const {
    ScenarioConfig cfg;
    const auto x = grid.find('x');
    if (x == std::string::npos) throw BadParams("--grid expects ROWSxCOLS");
    cfg.rows = static_cast<int>(io::parse_int(grid.substr(0, x), "--grid rows"));
    cfg.cols = static_cast<int>(io::parse_int(grid.substr(x + 1), "--grid cols"));
    cfg.spacing = spacing;
    cfg.slots = slots;
    cfg.delta = delta;
    cfg.seed = seed;
    cfg.missing_rate = missing;
    cfg.visibility = {top_k, radius};
    cfg.theta.sigma_lo = sigma_min;
    cfg.theta.sigma_hi = sigma_max;
    cfg.speed = speed;
    cfg.speed_spread = speed_spread;
    cfg.speed_hold = hold;
    cfg.station_spacing = station_spacing;
    if (!(delta > 0.0)) throw BadParams("--delta must be positive");

    std::optional<RoadNetwork> net;
    if (!network_file.empty()) {
      net = io::read_network(network_file);
    } else if (!ring.empty()) {
      const auto parts = io::split(ring, ',');
      if (parts.size() != 3) throw BadParams("--ring expects RINGS,SPOKES,SPACING");
      net = gen_ring_radial_network(static_cast<int>(io::parse_int(parts[0], "--ring")),
                                    static_cast<int>(io::parse_int(parts[1], "--ring")),
                                    io::parse_double(parts[2], "--ring"));
    }
    const Scenario sc = make_scenario(cfg, net ? &*net : nullptr);
    const fs::path dir(out_dir);
    io::write_file(dir / "network.jsonl", io::format_network(sc.network));
    io::write_file(dir / "stations.csv", io::format_stations(sc.stations));
    io::write_file(dir / "observations.csv", io::format_observations(sc.seq));
    io::write_file(dir / "truth.csv", io::format_trajectory(sc.truth));
    io::write_file(dir / "scenario.json", io::scenario_json(cfg, sc).dump(2) + "\n");
    out << "seed " << seed << "\n";
    return kOk;
  }
};

struct ReconstructCmd {
  std::string network_file;
  std::string stations_file;
  std::string observations_file;
  std::string method = "hre";
  std::string out_dir;
  std::string utm;
  SolverFlags solver;

  void attach(CLI::App* app) {
    app->add_option("--network", network_file, "road network (one JSON polyline per line)");
    app->add_option("--stations", stations_file, "stations.csv")->required();
    app->add_option("--observations", observations_file, "observations.csv")->required();
    app->add_option("--method", method, "hre | hrea | msr | mar | wcl")
        ->check(CLI::IsMember({"hre", "hrea", "msr", "mar", "wcl"}))
        ->capture_default_str();
    app->add_option("--out", out_dir, "output directory")->required();
    app->add_option("--utm", utm, "LAT0,LON0: inputs are lon/lat degrees, projected about this origin");
    solver.attach(app);
  }

  int run(std::ostream& out) const {
    std::optional<io::GeoOrigin> geo;
    if (!utm.empty()) geo = io::parse_geo_origin(utm);
    const SolverConfig cfg = solver.config();
    Deployment stations = io::read_stations(stations_file);
    project_stations(stations, geo);
    RssObservationSequence seq = io::read_observations(observations_file, solver.delta);
    if (solver.delta_opt && solver.delta_opt->count() > 0) seq.delta = solver.delta;
    seq.validate();
    for (const auto& slot : seq.slots) {
      for (const auto& o : slot) {
        if (!stations.contains(o.bs_id)) throw UnknownBs("observations reference unknown station " + std::to_string(o.bs_id));
      }
    }
    const fs::path dir(out_dir);

    if (method == "mar" || method == "wcl" || method == "msr") {
      Trajectory tr;
      std::string diag = "method,outer_iterations,newton_iterations,final_c,bound,max_violation\n";
      if (method == "mar") {
        tr = baseline_mar(seq, stations);
        diag += "mar,0,0,0,0,0\n";
      } else if (method == "wcl") {
        tr = baseline_wcl(seq, stations);
        diag += "wcl,0,0,0,0,0\n";
      } else {
        const MsrSolution sol = msr_from_observations(seq, stations, cfg.v_max, cfg.anchor_rule);
        tr = sol.trajectory;
        diag += "msr," + io::fmt(sol.outer_iterations) + "," + io::fmt(sol.newton_iterations) + "," +
                io::fmt(sol.final_c) + "," + io::fmt(sol.bound) + "," + io::fmt(sol.max_violation) + "\n";
      }
      io::write_file(dir / "trajectory.csv", io::format_trajectory(tr));
      io::write_file(dir / "diagnostics.csv", diag);
      out << method << ": " << tr.size() << " slots\n";
      return kOk;
    }

    if (network_file.empty()) throw BadParams("--network is required for hre and hrea");
    RoadNetwork net = io::read_network(network_file);
    project_network(net, geo);
    const GraphPair graphs = build_graph_pair(net, cfg, seq.delta);
    const HreResult res = method == "hrea" ? run_hrea(seq, stations, graphs, cfg) : run_hre(seq, stations, graphs, cfg);
    io::write_file(dir / "trajectory.csv", io::format_trajectory(res.trajectory));
    io::write_file(dir / "diagnostics.csv", io::format_diagnostics(res.diagnostics));
    io::write_file(dir / "model.csv", io::format_model(res.theta));
    if (const auto* ad = std::get_if<AdaptiveMobilityModel>(&res.mobility)) {
      io::write_file(dir / "mobility.csv", io::format_mobility(*ad));
      io::write_file(dir / "groups.csv", io::format_groups(ad->group_of_transition));
    }
    // Per-slot scores of the final path under the final parameters.
    ObservationScorer obs(graphs.fine.positions(), res.theta, stations, seq);
    TransitionScorer trans(res.mobility, graphs.fine.gamma(), seq.delta, graphs.fine.hop_limit());
    DecodedPath path;
    path.nodes = res.nodes;
    std::vector<double> row(graphs.fine.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
      obs.fill(t, row);
      path.obs_scores.push_back(row[static_cast<std::size_t>(res.nodes[t])]);
      path.trans_scores.push_back(t == 0 ? 0.0
                                         : trans(t, res.nodes[t - 1], res.nodes[t],
                                                 graphs.fine.edge_hops(res.nodes[t - 1], res.nodes[t])));
    }
    io::write_file(dir / "path.csv", io::format_path(graphs.fine, path));
    out << method << ": " << res.diagnostics.size() << " iterations, "
        << (res.converged ? "converged" : "iteration cap reached") << ", objective " << io::fmt(res.objective) << "\n";
    return kOk;
  }
};

struct FitCmd {
  std::string stations_file;
  std::string observations_file;
  std::string trajectory_file;
  std::string network_file;
  std::string out_dir;
  std::string utm;
  SolverFlags solver;

  void attach(CLI::App* app) {
    app->add_option("--stations", stations_file, "stations.csv")->required();
    app->add_option("--observations", observations_file, "observations.csv")->required();
    app->add_option("--trajectory", trajectory_file, "trajectory.csv giving each slot's position")->required();
    app->add_option("--network", network_file, "road network; enables the grouped speed fit");
    app->add_option("--out", out_dir, "output directory")->required();
    app->add_option("--utm", utm, "LAT0,LON0: inputs are lon/lat degrees, projected about this origin");
    solver.attach(app);
  }

  int run(std::ostream& out) const {
    std::optional<io::GeoOrigin> geo;
    if (!utm.empty()) geo = io::parse_geo_origin(utm);
    const SolverConfig cfg = solver.config();
    Deployment stations = io::read_stations(stations_file);
    project_stations(stations, geo);
    RssObservationSequence seq = io::read_observations(observations_file, solver.delta);
    if (solver.delta_opt && solver.delta_opt->count() > 0) seq.delta = solver.delta;
    Trajectory tr = io::read_trajectory(trajectory_file);
    project_trajectory(tr, geo);
    const PropagationFit fit = fit_propagation(label_observations(seq, tr.positions), stations);
    const fs::path dir(out_dir);
    io::write_file(dir / "model.csv", io::format_model(fit.model));
    out << "fitted " << fit.model.size() << " stations, skipped " << fit.skipped.size() << "\n";
    if (!network_file.empty() && seq.size() >= 2) {
      RoadNetwork net = io::read_network(network_file);
      project_network(net, geo);
      const RoadGraph fine = build_transition_edges(build_nodes(net, cfg.gamma_fine), cfg.v_max, seq.delta, cfg.hop_slack);
      const std::vector<int> groups = group_time_slots(normalized_signal_differences(seq), cfg.group_count);
      const AdaptiveMobilityModel mob = fit_mobility(fine, snap_to_nodes(fine, tr), groups, seq.delta, cfg.group_count);
      io::write_file(dir / "mobility.csv", io::format_mobility(mob));
      io::write_file(dir / "groups.csv", io::format_groups(mob.group_of_transition));
      out << "fitted " << mob.params.size() << " speed groups\n";
    }
    return kOk;
  }
};

struct EvaluateCmd {
  std::string estimate_file;
  std::string truth_file;
  std::string network_file;
  std::string errors_file;
  std::string report_file;
  std::string utm;
  double gamma_fine = 2.0;

  void attach(CLI::App* app) {
    app->add_option("--estimate", estimate_file, "estimated trajectory.csv")->required();
    app->add_option("--truth", truth_file, "ground-truth trajectory.csv")->required();
    app->add_option("--network", network_file, "road network")->required();
    app->add_option("--errors", errors_file, "write the per-slot error table here");
    app->add_option("--report", report_file, "write a JSON report here");
    app->add_option("--gamma-fine", gamma_fine, "node spacing for the track-mismatch graph, meters")
        ->capture_default_str();
    app->add_option("--utm", utm, "LAT0,LON0: inputs are lon/lat degrees, projected about this origin");
  }

  int run(std::ostream& out) const {
    std::optional<io::GeoOrigin> geo;
    if (!utm.empty()) geo = io::parse_geo_origin(utm);
    Trajectory est = io::read_trajectory(estimate_file);
    Trajectory truth = io::read_trajectory(truth_file);
    RoadNetwork net = io::read_network(network_file);
    project_trajectory(est, geo);
    project_trajectory(truth, geo);
    project_network(net, geo);
    if (est.size() != truth.size()) {
      throw LengthMismatch("estimate has " + std::to_string(est.size()) + " slots, truth has " +
                           std::to_string(truth.size()));
    }
    const RoadGraph graph = build_nodes(net, gamma_fine);
    const EvaluationReport rep = evaluate(est, truth, graph);
    out << "QLE " << io::fmt(rep.qle) << " m\n";
    out << "TME " << io::fmt(rep.tme) << " %\n";
    if (!errors_file.empty()) io::write_file(errors_file, io::format_errors(rep.errors));
    if (!report_file.empty()) io::write_file(report_file, io::report_json(rep).dump(2) + "\n");
    return kOk;
  }
};

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Vehicle trajectory reconstruction from received signal strength"};
  app.require_subcommand(1);
  SimulateCmd simulate;
  ReconstructCmd reconstruct;
  FitCmd fit;
  EvaluateCmd evaluate_cmd;
  simulate.attach(app.add_subcommand("simulate", "generate a synthetic scenario bundle"));
  reconstruct.attach(app.add_subcommand("reconstruct", "estimate a trajectory from observations"));
  fit.attach(app.add_subcommand("fit", "fit path-loss (and speed) parameters along a known trajectory"));
  evaluate_cmd.attach(app.add_subcommand("evaluate", "score an estimated trajectory against the truth"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadFlags;
  }

  try {
    if (app.got_subcommand("simulate")) return simulate.run(out);
    if (app.got_subcommand("reconstruct")) return reconstruct.run(out);
    if (app.got_subcommand("fit")) return fit.run(out);
    return evaluate_cmd.run(out);
  } catch (const LengthMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kLength;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const UnknownBs& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const BadParams& e) {
    err << "error: " << e.what() << "\n";
    return kBadFlags;
  } catch (const InfeasibleEta& e) {
    err << "error: " << e.what() << "\n";
    return kBadFlags;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kBadFlags;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSolver;
  }
}

}  // namespace rssmm::cli

#endif  // RSSMM_TOOLS_CLI_HPP
