#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "rssmm/io.hpp"
#include "rssmm/metrics.hpp"
#include "rssmm/simulator.hpp"
#include "rssmm_cli.hpp"

using namespace rssmm;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rssmm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("rssmm_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string simulate(const std::string& sub, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"simulate", "--out", path(sub)};
    args.insert(args.end(), extra.begin(), extra.end());
    const CliResult r = run_cli(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return path(sub);
  }

  fs::path dir_;
};

std::size_t data_rows(const std::string& file) {
  const std::string text = io::read_file(file);
  std::size_t n = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) n += !line.empty() && line[0] != '#';
  return n - 1;
}

}  // namespace

TEST_F(CliTest, SimulateWritesBundleDeterministically) {
  const std::vector<std::string> flags{"--grid", "5x5", "--spacing", "200", "--slots", "500", "--seed", "7"};
  const std::string a = simulate("a", flags);
  const std::string b = simulate("b", flags);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    const fs::path other = fs::path(b) / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(io::read_file(e.path()), io::read_file(other)) << e.path().filename();
  }
  EXPECT_EQ(files, 5u);
  for (const char* f : {"network.jsonl", "stations.csv", "observations.csv", "truth.csv", "scenario.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(a) / f)) << f;
  }
  EXPECT_EQ(io::read_trajectory(fs::path(a) / "truth.csv").size(), 500u);
}

TEST_F(CliTest, MissingRateThinsObservations) {
  const std::string full = simulate("full", {"--slots", "1000", "--seed", "3"});
  const std::string thin = simulate("thin", {"--slots", "1000", "--seed", "3", "--missing", "0.3"});
  const double n = static_cast<double>(data_rows(full + "/observations.csv"));
  const double kept = static_cast<double>(data_rows(thin + "/observations.csv"));
  EXPECT_LE(std::abs(kept - 0.7 * n), 3.0 * std::sqrt(n * 0.21));
}

TEST_F(CliTest, MarOnSingleSlot) {
  io::write_file(path("stations.csv"), "bs_id,x,y\n1,0,0\n2,100,50\n3,-40,10\n");
  io::write_file(path("obs.csv"), "t,bs_id,rss\n0,1,-80\n0,2,-61.5\n0,3,-70\n");
  const CliResult r = run_cli({"reconstruct", "--method", "mar", "--stations", path("stations.csv"), "--observations",
                           path("obs.csv"), "--out", path("mar")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Trajectory tr = io::read_trajectory(path("mar/trajectory.csv"));
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr.positions[0], (Point{100.0, 50.0}));
  EXPECT_TRUE(fs::exists(path("mar/diagnostics.csv")));
}

TEST_F(CliTest, MissingFileNamesThePath) {
  io::write_file(path("stations.csv"), "bs_id,x,y\n1,0,0\n");
  const std::string missing = path("nowhere.csv");
  const CliResult r = run_cli({"reconstruct", "--method", "wcl", "--stations", path("stations.csv"), "--observations",
                           missing, "--out", path("o")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST_F(CliTest, BadFlagsExitTwo) {
  EXPECT_EQ(run_cli({"simulate"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--out", path("x"), "--grid", "banana"}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--out", path("x"), "--missing", "1.5"}).code, 2);
  const std::string s = simulate("s", {"--slots", "20"});
  EXPECT_EQ(run_cli({"reconstruct", "--method", "teleport", "--stations", s + "/stations.csv", "--observations",
                 s + "/observations.csv", "--out", path("r")})
                .code,
            2);
  EXPECT_EQ(run_cli({"reconstruct", "--method", "hre", "--stations", s + "/stations.csv", "--observations",
                 s + "/observations.csv", "--out", path("r"), "--network", s + "/network.jsonl", "--vmax", "-3"})
                .code,
            2);
}

TEST_F(CliTest, EvaluateReportsZeroForIdenticalAndThreeForShift) {
  const std::string s = simulate("s", {"--slots", "200"});
  const std::string truth = s + "/truth.csv";
  CliResult r = run_cli({"evaluate", "--estimate", truth, "--truth", truth, "--network", s + "/network.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("QLE 0 m"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("TME 0 %"), std::string::npos) << r.out;

  Trajectory shifted = io::read_trajectory(truth);
  for (auto& p : shifted.positions) p.x += 3.0;
  io::write_file(path("shifted.csv"), io::format_trajectory(shifted));
  r = run_cli({"evaluate", "--estimate", path("shifted.csv"), "--truth", truth, "--network", s + "/network.jsonl",
           "--errors", path("err.csv"), "--report", path("rep.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string label;
  double q = 0.0;
  in >> label >> q;
  EXPECT_EQ(label, "QLE");
  EXPECT_NEAR(q, 3.0, 1e-9);
  EXPECT_EQ(data_rows(path("err.csv")), 200u);
  EXPECT_TRUE(fs::exists(path("rep.json")));
}

TEST_F(CliTest, EvaluateMatchesLibraryOnRandomPair) {
  const std::string s = simulate("s", {"--slots", "150", "--seed", "5"});
  Trajectory est = io::read_trajectory(s + "/truth.csv");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 20.0);
  for (auto& p : est.positions) p = p + Point{n(rng), n(rng)};
  io::write_file(path("est.csv"), io::format_trajectory(est));
  const CliResult r =
      run_cli({"evaluate", "--estimate", path("est.csv"), "--truth", s + "/truth.csv", "--network", s + "/network.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  const RoadGraph g = build_nodes(io::read_network(s + "/network.jsonl"), 2.0);
  const EvaluationReport rep = evaluate(io::read_trajectory(path("est.csv")), io::read_trajectory(s + "/truth.csv"), g);
  EXPECT_EQ(r.out, "QLE " + io::fmt(rep.qle) + " m\nTME " + io::fmt(rep.tme) + " %\n");
}

TEST_F(CliTest, LengthMismatchExitFive) {
  const std::string s = simulate("s", {"--slots", "50"});
  Trajectory t = io::read_trajectory(s + "/truth.csv");
  t.positions.pop_back();
  io::write_file(path("short.csv"), io::format_trajectory(t));
  const CliResult r =
      run_cli({"evaluate", "--estimate", path("short.csv"), "--truth", s + "/truth.csv", "--network", s + "/network.jsonl"});
  EXPECT_EQ(r.code, 5);
  const CliResult f = run_cli({"fit", "--stations", s + "/stations.csv", "--observations", s + "/observations.csv",
                           "--trajectory", path("short.csv"), "--out", path("fit")});
  EXPECT_EQ(f.code, 5);
}

TEST_F(CliTest, WritersRoundTrip) {
  ScenarioConfig cfg;
  cfg.slots = 120;
  cfg.missing_rate = 0.5;
  const Scenario sc = make_scenario(cfg);

  const Deployment st = io::parse_stations(io::parse_table(io::format_stations(sc.stations), {"bs_id", "x", "y"}, "m"));
  ASSERT_EQ(st.size(), sc.stations.size());
  for (const auto& bs : sc.stations.stations()) EXPECT_EQ(st.at(bs.id).position, bs.position);

  RssObservationSequence seq = sc.seq;
  seq.delta = 0.25;
  seq.slots.back().clear();
  const RssObservationSequence back =
      io::parse_observations(io::parse_table(io::format_observations(seq), {"t", "bs_id", "rss"}, "m"));
  EXPECT_EQ(back.delta, 0.25);
  ASSERT_EQ(back.size(), seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    ASSERT_EQ(back.slots[t].size(), seq.slots[t].size());
    for (std::size_t k = 0; k < seq.slots[t].size(); ++k) {
      EXPECT_EQ(back.slots[t][k].bs_id, seq.slots[t][k].bs_id);
      EXPECT_EQ(back.slots[t][k].rss, seq.slots[t][k].rss);
    }
  }

  const Trajectory tr = io::parse_trajectory(io::parse_table(io::format_trajectory(sc.truth), {"t", "x", "y"}, "m"));
  EXPECT_EQ(tr.positions, sc.truth.positions);

  PropagationModel m;
  for (const auto& [id, p] : sc.theta.params) m.set(id, p);
  EXPECT_EQ(io::parse_model(io::parse_table(io::format_model(m), {"bs_id", "alpha", "beta", "sigma"}, "m")), m);

  AdaptiveMobilityModel ad;
  ad.group_count = 3;
  ad.params = {{8.25, 1.5}, {11.0 / 3.0, 0.1}, {20.125, 7.75}};
  EXPECT_EQ(io::parse_mobility(io::parse_table(io::format_mobility(ad), {"group", "v_avr", "sigma_sq"}, "m")),
            ad.params);

  const RoadNetwork net = io::parse_network(io::format_network(sc.network), "m");
  EXPECT_EQ(io::format_network(net), io::format_network(sc.network));
}

TEST_F(CliTest, ParserRejectsUnknownColumns) {
  io::write_file(path("stations.csv"), "bs_id,x,y,z\n1,0,0,0\n");
  io::write_file(path("obs.csv"), "t,bs_id,rss\n0,1,-60\n");
  const CliResult r = run_cli({"reconstruct", "--method", "mar", "--stations", path("stations.csv"), "--observations",
                           path("obs.csv"), "--out", path("o")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("unknown column"), std::string::npos);
}

TEST_F(CliTest, ReconstructIsDeterministicAndWritesOutputs) {
  const std::string s = simulate("s", {"--grid", "3x3", "--slots", "200", "--seed", "9"});
  const std::vector<std::string> base{"reconstruct", "--method", "hrea", "--stations", s + "/stations.csv",
                                      "--observations", s + "/observations.csv", "--network", s + "/network.jsonl"};
  auto with_out = [&](const std::string& o) {
    auto a = base;
    a.push_back("--out");
    a.push_back(path(o));
    return a;
  };
  ASSERT_EQ(run_cli(with_out("r1")).code, 0);
  ASSERT_EQ(run_cli(with_out("r2")).code, 0);
  for (const char* f : {"trajectory.csv", "diagnostics.csv", "model.csv", "path.csv", "mobility.csv", "groups.csv"}) {
    ASSERT_TRUE(fs::exists(path("r1") + "/" + f)) << f;
    EXPECT_EQ(io::read_file(path("r1") + "/" + f), io::read_file(path("r2") + "/" + f)) << f;
  }
  EXPECT_EQ(io::read_trajectory(path("r1") + "/trajectory.csv").size(), 200u);
  for (const char* m : {"msr", "wcl"}) {
    std::vector<std::string> a{"reconstruct", "--method", m, "--stations", s + "/stations.csv", "--observations",
                               s + "/observations.csv", "--out", path(m)};
    ASSERT_EQ(run_cli(a).code, 0) << m;
    EXPECT_EQ(io::read_trajectory(path(m) + "/trajectory.csv").size(), 200u);
  }
}

TEST_F(CliTest, FitRecoversNoiselessParameters) {
  const std::string s = simulate("s", {"--slots", "400", "--sigma-min", "0", "--sigma-max", "0"});
  const CliResult r = run_cli({"fit", "--stations", s + "/stations.csv", "--observations", s + "/observations.csv",
                           "--trajectory", s + "/truth.csv", "--out", path("fit")});
  ASSERT_EQ(r.code, 0) << r.err;
  const PropagationModel m = io::read_model(path("fit/model.csv"));
  const auto scenario = nlohmann::json::parse(io::read_file(s + "/scenario.json"));
  std::size_t checked = 0;
  for (const auto& th : scenario["theta_true"]) {
    const int id = th["bs_id"].get<int>();
    if (!m.contains(id)) continue;
    EXPECT_NEAR(m.at(id).alpha, th["alpha"].get<double>(), 1e-8);
    EXPECT_NEAR(m.at(id).beta, th["beta"].get<double>(), 1e-8);
    ++checked;
  }
  EXPECT_GE(checked, 5u);
}

TEST_F(CliTest, HreOnNoiselessScenarioLandsWithinNodeSpacing) {
  const std::string s = simulate("s", {"--grid", "3x3", "--slots", "500", "--seed", "2", "--sigma-min", "0",
                                       "--sigma-max", "0"});
  ASSERT_EQ(run_cli({"reconstruct", "--method", "hre", "--stations", s + "/stations.csv", "--observations",
                 s + "/observations.csv", "--network", s + "/network.jsonl", "--out", path("hre")})
                .code,
            0);
  const Trajectory est = io::read_trajectory(path("hre/trajectory.csv"));
  const Trajectory truth = io::read_trajectory(s + "/truth.csv");
  EXPECT_LE(qle(est, truth), 2.0 + 1e-6);
}
