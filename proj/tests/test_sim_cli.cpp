#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "stepsynth/io.hpp"
#include "stepsynth/scenarios.hpp"
#include "stepsynth/sim.hpp"

using namespace stepsynth;
namespace fs = std::filesystem;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

IntegratorConfig cfg_dt(double dt, double t_max = 100.0) {
  IntegratorConfig c;
  c.dt = dt;
  c.t_max = t_max;
  return c;
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(STEPSYNTH_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("stepsynth_test_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Csv, HeaderAndRows) {
  const SimResult r = simulate(intro2d(), vec({1, 1}), cfg_dt(1e-3));
  std::ostringstream os;
  write_csv(os, r.traj);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,x1,x2,z1,z2,u,event");
  EXPECT_EQ(count_lines(text), static_cast<int>(r.traj.size()) + 1);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  // The initial sample, in %.12e.
  EXPECT_EQ(line.substr(0, 19), "0.000000000000e+00,");
  // Event samples carry a nonzero flag in the last column.
  int flagged = line.back() != '0';
  while (std::getline(in, line)) flagged += line.back() != '0';
  EXPECT_GE(flagged, 2);
}

TEST(Csv, EmptyTrajectoryIsHeaderOnly) {
  std::ostringstream os;
  write_csv(os, Trajectory{}, 3);
  EXPECT_EQ(os.str(), "t,x1,x2,x3,z1,z2,z3,u,event\n");
}

TEST(Json, SummarySchema) {
  const SimResult r = simulate(polyodd(3), polyodd(3).chart.from_z(vec({1, 1, 1})), cfg_dt(1e-3));
  const Json j = summary_json(r.summary);
  EXPECT_EQ(j.at("schema_version"), 1);
  for (const char* key : {"scenario", "x0", "params", "T_total", "step_times", "steps",
                          "hold_residuals", "final_state_norm"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("scenario"), "polyodd:3");
  EXPECT_EQ(j.at("step_times").size(), 3u);
  EXPECT_NEAR(j.at("step_times")[0].get<double>(), 2.025, 1e-6);
  EXPECT_EQ(j.at("steps")[0].at("policy"), "const-sign");
  EXPECT_TRUE(j.at("steps")[0].at("theta_bound").is_null());
}

TEST(Svg, PolylineAndMarkers) {
  const SimResult r = simulate(intro2d(), vec({1, 1}), cfg_dt(1e-3));
  std::ostringstream os;
  write_svg(os, r.traj, {1, 2});
  const std::string s = os.str();
  EXPECT_NE(s.find("<svg"), std::string::npos);
  EXPECT_NE(s.find("<polyline"), std::string::npos);
  EXPECT_NE(s.find("viewBox"), std::string::npos);
  EXPECT_NE(s.find("<circle"), std::string::npos);
  EXPECT_NE(s.find("step-complete"), std::string::npos);
  std::ostringstream bad;
  EXPECT_THROW(write_svg(bad, r.traj, {0, 2}), ValidationError);
  EXPECT_THROW(write_svg(bad, r.traj, {1, 3}), ValidationError);
  EXPECT_THROW(emit_svg(Trajectory{}, {1, 2}, "/tmp/never.svg"), ValidationError);
}

TEST(Io, WriteFailuresNamePath) {
  const SimResult r = simulate(intro2d(), vec({0.1, 0}), cfg_dt(1e-3));
  try {
    emit_csv(r.traj, "/nonexistent-dir/traj.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/traj.csv"), std::string::npos);
  }
}

TEST(Config, ParseAndErrors) {
  std::istringstream ok("# comment\n dt = 1e-3 \n\nscenario=pendulum # trailing\n");
  const auto m = parse_config(ok);
  EXPECT_EQ(m.at("dt"), "1e-3");
  EXPECT_EQ(m.at("scenario"), "pendulum");
  EXPECT_EQ(m.size(), 2u);
  std::istringstream bad("dt = 1\njunk line\n");
  try {
    parse_config(bad, "f.cfg");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("f.cfg:2"), std::string::npos);
  }
  EXPECT_THROW(read_config("/nonexistent/x.cfg"), IoError);
}

TEST(Simulate, Determinism) {
  const Scenario s = pendulum();
  std::ostringstream a, b;
  write_csv(a, simulate(s, vec({-2, 1, -1, 0.5}), cfg_dt(1e-3)).traj);
  write_csv(b, simulate(s, vec({-2, 1, -1, 0.5}), cfg_dt(1e-3)).traj);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Simulate, EventsSortedAndSamplesIncreasing) {
  for (const std::string name : {"intro2d", "example51", "pendulum", "polyodd:3"}) {
    const Scenario s = make_scenario(name);
    Vec x0 = Vec::Constant(s.n, 0.5);
    if (name == "pendulum") x0 = vec({-2, 1, -1, 0.5});
    const SimResult r = simulate(s, x0, cfg_dt(1e-3));
    const Trajectory& t = r.traj;
    ASSERT_EQ(t.x.size(), t.size());
    ASSERT_EQ(t.z.size(), t.size());
    ASSERT_EQ(t.controls.size(), t.size());
    for (std::size_t k = 1; k < t.size(); ++k) ASSERT_GT(t.times[k], t.times[k - 1]) << name;
    for (std::size_t k = 1; k < t.events.size(); ++k) EXPECT_GE(t.events[k].t, t.events[k - 1].t);
    // Each step-complete event lands on a recorded completion time.
    int complete = 0;
    for (const Event& e : t.events) {
      if (e.kind != EventKind::StepComplete) continue;
      EXPECT_DOUBLE_EQ(e.t, r.run.step_times.at(e.step - 1)) << name;
      EXPECT_DOUBLE_EQ(t.times.at(e.sample), e.t) << name;
      ++complete;
    }
    EXPECT_EQ(complete, static_cast<int>(s.policies.size())) << name;
    EXPECT_DOUBLE_EQ(r.summary.final_state_norm, t.x.back().norm());
  }
}

TEST(Simulate, StepRefinement) {
  struct Case {
    std::string name;
    Vec x0;
  };
  const std::vector<Case> cases = {{"intro2d", vec({1, 1})},
                                   {"polyodd:3", polyodd(3).chart.from_z(vec({1, 1, 1}))},
                                   {"pendulum", vec({-2, 1, -1, 0.5})},
                                   {"example51", vec({0.3, -0.2, 0.1})}};
  for (const auto& c : cases) {
    const Scenario s = make_scenario(c.name);
    const double dt = 2e-3;
    const double t1 = simulate(s, c.x0, cfg_dt(dt)).summary.T_total;
    const double t2 = simulate(s, c.x0, cfg_dt(dt / 2)).summary.T_total;
    EXPECT_LE(std::abs(t1 - t2), dt) << c.name;
  }
}

TEST(Simulate, ErrorsAndConfig) {
  const Scenario s = intro2d();
  EXPECT_THROW(simulate(s, vec({1, 2, 3})), ValidationError);
  EXPECT_THROW(simulate(s, vec({std::nan(""), 0})), ValidationError);
  IntegratorConfig c;
  c.event_tol = c.dt;
  EXPECT_THROW(simulate(s, vec({1, 1}), c), ValidationError);
  EXPECT_THROW(simulate(s, vec({1, 1}), cfg_dt(1e-3, 0.5)), Timeout);
}

TEST(Cli, ListScenarios) {
  const CliResult r = run_cli("list-scenarios");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "intro2d\nexample51\npolyodd:<n>\npendulum\n");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("bogus").code, 1);
  EXPECT_EQ(run_cli("simulate --scenario nope --x0 1").code, 1);
  EXPECT_EQ(run_cli("simulate --scenario intro2d").code, 1);
  EXPECT_EQ(run_cli("simulate --scenario intro2d --x0 1,abc").code, 1);
  EXPECT_EQ(run_cli("simulate --scenario intro2d --x0 1,1 --z0 1,1").code, 1);
  TempDir tmp;
  // Runtime failure: the cap is hit before the origin is reached.
  const CliResult r = run_cli("simulate --scenario intro2d --x0 1,1 --tmax 0.5 --out-dir " +
                              tmp.path().string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("runtime error"), std::string::npos);
}

TEST(Cli, PendulumWritesArtifacts) {
  TempDir tmp;
  const CliResult r = run_cli("simulate --scenario pendulum --x0 -2,1,-1,0.5 --dt 1e-4 --out-dir " +
                              tmp.path().string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(tmp.path() / "traj.csv"));
  EXPECT_TRUE(fs::exists(tmp.path() / "proj_x1_x2.svg"));
  EXPECT_TRUE(fs::exists(tmp.path() / "proj_x3_x4.svg"));
  const Json j = Json::parse(slurp(tmp.path() / "summary.json"));
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_NEAR(j.at("T_total").get<double>(), 3.53471, 0.01 * 3.53471);
  const std::string csv = slurp(tmp.path() / "traj.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1,x2,x3,x4,z1,z2,z3,z4,u,event");
}

TEST(Cli, PolyoddFromBlockChart) {
  TempDir tmp;
  const CliResult r =
      run_cli("simulate --scenario polyodd:3 --z0 1,1,1 --dt 1e-3 --out-dir " + tmp.path().string());
  ASSERT_EQ(r.code, 0) << r.out;
  const Json j = Json::parse(slurp(tmp.path() / "summary.json"));
  EXPECT_NEAR(j.at("step_times")[0].get<double>(), 2.025, 1e-6);
}

TEST(Cli, ConfigFileAndOverride) {
  TempDir tmp;
  const fs::path cfg = tmp.path() / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "# intro run\nscenario = intro2d\nx0 = 1,0\ndt = 1e-3\nout-dir = " << tmp.path().string()
      << "\n";
  }
  CliResult r = run_cli("simulate --config " + cfg.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(Json::parse(slurp(tmp.path() / "summary.json")).at("T_total").get<double>(), 1.5, 1e-6);

  r = run_cli("simulate --config " + cfg.string() + " --x0 2,0");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(Json::parse(slurp(tmp.path() / "summary.json")).at("T_total").get<double>(), 3.0, 1e-6);

  {
    std::ofstream f(cfg, std::ios::app);
    f << "no_such_key = 1\n";
  }
  EXPECT_EQ(run_cli("simulate --config " + cfg.string()).code, 1);
  EXPECT_EQ(run_cli("simulate --config " + (tmp.path() / "missing.cfg").string()).code, 2);
}

TEST(Cli, TheoryCommands) {
  CliResult r = run_cli("theta --k 2 --a0 1 --d 1.7320508075688772 --x 1,0");
  ASSERT_EQ(r.code, 0) << r.out;
  Json j = Json::parse(r.out);
  EXPECT_NEAR(j.at("theta").get<double>(), std::pow(18.0, 0.25), 1e-9);

  r = run_cli("gramian --k 2 --theta 2");
  ASSERT_EQ(r.code, 0) << r.out;
  j = Json::parse(r.out);
  EXPECT_EQ(j.at("n1_exact")[0][1], "-1/6");
  EXPECT_NEAR(j.at("n_theta")[1][1].get<double>(), 1.0, 1e-14);
  EXPECT_EQ(run_cli("gramian --k 0").code, 1);

  r = run_cli("probe --scenario pendulum --box -1,1 --samples 32");
  ASSERT_EQ(r.code, 0) << r.out;
  j = Json::parse(r.out);
  EXPECT_EQ(j.at("indices"), (std::vector<int>{2, 2}));
  EXPECT_EQ(j.at("declared_blocks"), (std::vector<int>{2, 2}));
}
