#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stepsynth/errors.hpp"

namespace stepsynth {

using Vec = Eigen::VectorXd;

struct IntegratorConfig {
  double dt = 1e-4;
  double event_tol = 1e-10;  // time tolerance for switch localization
  double t_max = 100.0;
  bool integrate_x_chart = false;  // cross-check mode: integrate f(x,u) directly

  void validate() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
    if (!(event_tol > 0) || !(event_tol < dt)) {
      throw ValidationError("event_tol must be positive and smaller than dt");
    }
    if (!(t_max > 0)) throw ValidationError("t_max must be positive");
  }
};

enum class EventKind { BranchSwitch, StepComplete, SurfaceSlide };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::BranchSwitch: return "branch-switch";
    case EventKind::StepComplete: return "step-complete";
    case EventKind::SurfaceSlide: return "surface-slide";
  }
  return "?";
}

struct Event {
  double t = 0;
  EventKind kind = EventKind::BranchSwitch;
  int step = 0;  // 1-based step index
  std::string detail;
  std::size_t sample = 0;  // index into the trajectory samples
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> x;  // original chart
  std::vector<Vec> z;  // block chart
  std::vector<double> controls;
  std::vector<Event> events;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

// Original dynamics and the change of variables to the block chart.
struct Chart {
  std::function<Vec(const Vec&, double)> f;  // x' = f(x, u)
  std::function<Vec(const Vec&)> to_z;
  std::function<Vec(const Vec&)> from_z;
};

// Classical fourth-order Runge-Kutta step.
template <class Rhs>
Vec rk4_step(const Rhs& rhs, const Vec& y, double h) {
  const Vec k1 = rhs(y);
  const Vec k2 = rhs(y + 0.5 * h * k1);
  const Vec k3 = rhs(y + 0.5 * h * k2);
  const Vec k4 = rhs(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Shortest tau in (0, h] with pred(state(tau)) true, given pred false at 0 and
// true at h; bisects until the bracket is below tol. Returns (tau, state).
template <class Advance, class Pred>
std::pair<double, Vec> localize(const Advance& advance, const Pred& pred, double h, Vec y_hi,
                                double tol) {
  double lo = 0.0, hi = h;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    Vec y_mid = advance(mid);
    if (pred(y_mid)) {
      hi = mid;
      y_hi = std::move(y_mid);
    } else {
      lo = mid;
    }
  }
  return {hi, std::move(y_hi)};
}

}  // namespace stepsynth
