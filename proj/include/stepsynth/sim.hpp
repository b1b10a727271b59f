#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepsynth/ctrl_fn.hpp"
#include "stepsynth/integrator.hpp"
#include "stepsynth/scenario.hpp"
#include "stepsynth/stepwise.hpp"

namespace stepsynth {

struct RunSummary {
  std::string scenario;
  Vec x0;
  std::map<std::string, double> params;
  double T_total = 0;
  std::vector<double> step_times;
  std::vector<StepRecord> steps;
  std::vector<double> hold_residuals;
  double final_state_norm = 0;  // Euclidean norm in the x chart
};

struct SimResult {
  Trajectory traj;
  StepwiseRun run;
  RunSummary summary;
};

// Stepwise run of a scenario from x0 in its original chart.
inline SimResult simulate(const Scenario& scn, const Vec& x0, const IntegratorConfig& cfg = {},
                          double delta = 1e-8) {
  if (x0.size() != scn.n) {
    throw ValidationError("simulate: " + scn.name + " expects " + std::to_string(scn.n) +
                          " coordinates, got " + std::to_string(x0.size()));
  }
  if (!x0.allFinite()) throw ValidationError("simulate: x0 must be finite");
  const Simulator sim(cfg, scn.chart);
  auto [run, traj] = orchestrate(scn.system, scn.chart.to_z(x0), scn.policies, sim, delta);

  SimResult out;
  out.summary.scenario = scn.name;
  out.summary.x0 = x0;
  out.summary.params = scn.params;
  out.summary.T_total = run.total_time;
  out.summary.step_times = run.step_times;
  out.summary.steps = run.steps;
  out.summary.hold_residuals = run.hold_residuals;
  out.summary.final_state_norm = traj.x.back().norm();
  out.traj = std::move(traj);
  out.run = std::move(run);
  return out;
}

// Samples of x' = A0 x + b0 v(x) integrated by RK4 until Theta < theta_min.
struct LinearRun {
  std::vector<double> times;
  std::vector<Vec> x;
  std::vector<double> theta;
  double arrival = -1;  // first time Theta < theta_min; -1 if not reached
};

inline LinearRun run_linear_closed_loop(const LinearSynth& s, const Vec& x0, double dt,
                                        double t_max) {
  if (!(dt > 0) || !(t_max > 0)) throw ValidationError("linear run: dt and t_max must be positive");
  LinearRun r;
  Vec x = x0;
  double t = 0;
  auto push = [&] {
    r.times.push_back(t);
    r.x.push_back(x);
    r.theta.push_back(theta_of(s, x).theta);
  };
  push();
  while (t < t_max) {
    if (r.theta.back() < s.theta_min()) {
      r.arrival = t;
      break;
    }
    // Smaller steps as Theta shrinks keep the feedback resolved near the origin.
    const double h = std::min(dt, 0.01 * r.theta.back());
    x = rk4_step([&](const Vec& y) { return closed_loop_rhs(s, y); }, x, h);
    t += h;
    if (!x.allFinite()) throw NonFinite("linear run: state left the finite range");
    push();
  }
  return r;
}

}  // namespace stepsynth
