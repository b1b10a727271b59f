#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stepsynth/stepsynth.hpp"

namespace fs = std::filesystem;
using namespace stepsynth;

namespace {

std::vector<double> parse_csv(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size()) {
      throw ValidationError(what + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(what + ": empty list");
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Config values fill options the command line left unset.
void apply_config(CLI::App& cmd, const std::string& path) {
  for (const auto& [key, value] : read_config(path)) {
    if (key == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ValidationError(path + ": unknown key '" + key + "'");
    }
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
}

struct SimArgs {
  std::string scenario;
  std::string x0;
  std::string z0;
  IntegratorConfig cfg;
  double delta = 1e-8;
  std::string out_dir = ".";
  std::string chart = "z";
  std::string config;
  PendulumParams pend;
  std::string step1 = "curve";
  std::string lambdas;
  std::optional<double> level1;
};

int run_simulate(const SimArgs& a) {
  ScenarioOptions opt;
  opt.pendulum = a.pend;
  opt.pendulum_step1 = a.step1 == "theta" ? PendulumStep1::Theta : PendulumStep1::Curve;
  if (!a.lambdas.empty()) opt.lambdas = parse_csv(a.lambdas, "--lambdas");
  opt.level1 = a.level1;
  const Scenario scn = make_scenario(a.scenario, opt);

  IntegratorConfig cfg = a.cfg;
  cfg.integrate_x_chart = a.chart == "x";
  Vec x0;
  if (a.z0.empty()) {
    x0 = to_vec(parse_csv(a.x0, "--x0"));
  } else {
    const Vec z0 = to_vec(parse_csv(a.z0, "--z0"));
    if (z0.size() != scn.n) throw ValidationError("--z0 must have " + std::to_string(scn.n) + " entries");
    x0 = scn.chart.from_z(z0);
  }
  const SimResult res = simulate(scn, x0, cfg, a.delta);

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  emit_csv(res.traj, dir / "traj.csv", scn.n);
  emit_json(res.summary, dir / "summary.json");
  for (const auto& [i, j] : scn.projections) {
    emit_svg(res.traj, {i, j}, dir / ("proj_x" + std::to_string(i) + "_x" + std::to_string(j) + ".svg"));
  }
  std::cout << summary_json(res.summary).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stepwise constrained control synthesis and simulation"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-scenarios", "Print the registered scenario names");

  int gram_k = 0;
  std::optional<double> gram_theta;
  auto* gram = app.add_subcommand("gramian", "Print N(1), its inverse and optionally N(theta)");
  gram->add_option("--k", gram_k, "Chain dimension (1..16)")->required();
  gram->add_option("--theta", gram_theta, "Also print N(theta)");

  int th_k = 0;
  double th_a0 = 0;
  std::optional<double> th_d;
  std::string th_x;
  auto* theta = app.add_subcommand("theta", "Evaluate the controllability function at x");
  theta->add_option("--k", th_k, "Chain dimension")->required();
  theta->add_option("--a0", th_a0, "a0 > 0")->required();
  theta->add_option("--d", th_d, "Control bound (default: smallest admitting a0)");
  theta->add_option("--x", th_x, "State as comma-separated floats")->required()->allow_extra_args(false);

  std::string pr_scenario = "pendulum", pr_box = "-1,1";
  int pr_samples = 32;
  auto* probe = app.add_subcommand("probe", "Numeric reducibility probe of a scenario");
  probe->add_option("--scenario", pr_scenario, "Scenario name")->required();
  probe->add_option("--box", pr_box, "lo,hi for every coordinate or 2n values lo1,hi1,...");
  probe->add_option("--samples", pr_samples, "Number of Sobol samples");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run the stepwise controller on a scenario");
  sim->add_option("--scenario", sa.scenario, "intro2d | example51 | polyodd:<n> | pendulum");
  sim->add_option("--x0", sa.x0, "Initial state (original chart), comma-separated");
  sim->add_option("--z0", sa.z0, "Initial state in the block chart (instead of --x0)");
  sim->add_option("--dt", sa.cfg.dt, "RK4 step");
  sim->add_option("--tmax", sa.cfg.t_max, "Simulation cap");
  sim->add_option("--event-tol", sa.cfg.event_tol, "Switch localization tolerance");
  sim->add_option("--delta", sa.delta, "Per-block completion threshold");
  sim->add_option("--out-dir", sa.out_dir, "Output directory");
  sim->add_option("--chart", sa.chart, "Integrate in the z (block) or x (original) chart")
      ->check(CLI::IsMember({"z", "x"}));
  sim->add_option("--config", sa.config, "Flat key = value file; flags override it");
  sim->add_option("--alpha", sa.pend.alpha, "Pendulum force coefficient");
  sim->add_option("--eps1p", sa.pend.eps1p, "Pendulum step-1 margin eps1+");
  sim->add_option("--eps1m", sa.pend.eps1m, "Pendulum step-1 margin eps1-");
  sim->add_option("--m1", sa.pend.m1);
  sim->add_option("--m2", sa.pend.m2);
  sim->add_option("--l1", sa.pend.l1);
  sim->add_option("--l2", sa.pend.l2);
  sim->add_option("--g", sa.pend.g);
  sim->add_option("--step1", sa.step1, "Pendulum step-1 policy")->check(CLI::IsMember({"curve", "theta"}));
  sim->add_option("--lambdas", sa.lambdas, "polyodd levels lambda_1..lambda_{n-1}");
  sim->add_option("--level1", sa.level1, "polyodd step-1 level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*list) {
      for (const auto& n : scenario_names()) std::cout << n << '\n';
      return 0;
    }
    if (*gram) {
      const GramSet g = gram_n1(ChainDim(gram_k));
      std::cout << gram_json(g, gram_theta).dump(2) << '\n';
      return 0;
    }
    if (*theta) {
      const GramSet g = gram_n1(ChainDim(th_k));
      if (!(th_a0 > 0)) throw ValidationError("--a0 must be positive");
      const double d = th_d.value_or(std::sqrt(th_a0 * g.inv_bb() / 2.0));
      const LinearSynth s(g, d, th_a0);
      const ThetaEval e = theta_of(s, to_vec(parse_csv(th_x, "--x")));
      Json j = theta_json(e);
      j["a0"] = s.a0();
      j["d"] = s.d();
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*probe) {
      const Scenario scn = make_scenario(pr_scenario);
      const auto box = parse_csv(pr_box, "--box");
      Vec lo(scn.n), hi(scn.n);
      if (box.size() == 2) {
        lo.setConstant(box[0]);
        hi.setConstant(box[1]);
      } else if (static_cast<int>(box.size()) == 2 * scn.n) {
        for (int i = 0; i < scn.n; ++i) {
          lo(i) = box[2 * i];
          hi(i) = box[2 * i + 1];
        }
      } else {
        throw ValidationError("--box needs 2 or " + std::to_string(2 * scn.n) + " values");
      }
      const auto samples = sobol_samples(lo, hi, pr_samples);
      const ProbeReport rep = select_columns(scn.probe.a, scn.probe.bs, samples);
      const auto phi =
          verify_phi_conditions(scn.probe.phi_grads, rep, scn.probe.a, scn.probe.bs, samples);
      Json j = probe_json(rep, phi);
      j["scenario"] = scn.name;
      j["declared_blocks"] = scn.system.blocks.sizes();
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*sim) {
      if (!sa.config.empty()) apply_config(*sim, sa.config);
      if (sa.scenario.empty() || sa.x0.empty() == sa.z0.empty()) {
        throw ValidationError("simulate needs --scenario and exactly one of --x0, --z0");
      }
      return run_simulate(sa);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
