#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stepsynth/integrator.hpp"
#include "stepsynth/mappability.hpp"
#include "stepsynth/stepwise.hpp"

namespace stepsynth {

// Fields a(x), b_j(x) of the control-affine form and the gradients of the
// functions phi_i that generate the change of variables.
struct ScenarioProbe {
  VectorField a;
  std::vector<VectorField> bs;
  std::vector<GradFn> phi_grads;
};

struct Scenario {
  std::string name;
  int n = 0;
  Chart chart;  // f, to_z, from_z
  BlockSystem system;
  std::vector<StepPolicy> policies;
  // Leading completion times T_1, T_2, ... known in closed form from z0; may be empty.
  std::function<std::vector<double>(const Vec& z0)> analytic_schedule;
  ScenarioProbe probe;
  std::map<std::string, double> params;
  Vec box_lo;
  Vec box_hi;
  std::vector<std::pair<int, int>> projections;  // 1-based x-chart coordinate pairs
};

namespace detail {

inline Vec unit(int n, int i) {
  Vec e = Vec::Zero(n);
  e(i) = 1.0;
  return e;
}

inline VectorField const_field(Vec v) {
  const int n = static_cast<int>(v.size());
  return {n, [v = std::move(v)](const Vec&) { return v; }};
}

inline GradFn const_grad(Vec v) {
  return [v = std::move(v)](const Vec&) { return v; };
}

}  // namespace detail

}  // namespace stepsynth
