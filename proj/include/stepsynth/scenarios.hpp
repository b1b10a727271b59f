#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stepsynth/scenarios/example51.hpp"
#include "stepsynth/scenarios/intro2d.hpp"
#include "stepsynth/scenarios/pendulum.hpp"
#include "stepsynth/scenarios/polyodd.hpp"

namespace stepsynth {

// Tunables accepted by the registry; each scenario reads only its own.
struct ScenarioOptions {
  PendulumParams pendulum;
  PendulumStep1 pendulum_step1 = PendulumStep1::Curve;
  std::optional<std::vector<double>> lambdas;
  std::optional<double> level1;
};

inline std::vector<std::string> scenario_names() {
  return {"intro2d", "example51", "polyodd:<n>", "pendulum"};
}

inline Scenario make_scenario(const std::string& name, const ScenarioOptions& opt = {}) {
  if (name == "intro2d") return intro2d();
  if (name == "example51") return example51();
  if (name == "pendulum") return pendulum(opt.pendulum, opt.pendulum_step1);
  const std::string prefix = "polyodd:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string tail = name.substr(prefix.size());
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tail.empty() || used != tail.size()) {
      throw ValidationError("polyodd needs an integer size, e.g. polyodd:3");
    }
    return polyodd(n, opt.lambdas, opt.level1);
  }
  throw ValidationError("unknown scenario '" + name + "'");
}

}  // namespace stepsynth
