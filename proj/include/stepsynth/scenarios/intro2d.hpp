#pragma once

// y1' = sin u, y2' = u cos 2u. Not controllable in the first approximation,
// but -(pi/2) sign y1 followed by -pi sign y2 reaches the origin in
// |y10| + |y10/2 + y20/pi|.

#include <cmath>
#include <numbers>

#include "stepsynth/scenario.hpp"

namespace stepsynth {

inline Vec intro2d_rhs(const Vec&, double u) {
  Vec dy(2);
  dy << std::sin(u), u * std::cos(2.0 * u);
  return dy;
}

inline Scenario intro2d() {
  using std::numbers::pi;
  Scenario s;
  s.name = "intro2d";
  s.n = 2;
  s.chart.f = intro2d_rhs;
  s.chart.to_z = [](const Vec& x) { return x; };
  s.chart.from_z = [](const Vec& z) { return z; };
  s.system.blocks = BlockPartition({1, 1});
  s.system.H = intro2d_rhs;
  s.policies = {ConstSign{pi / 2, pi / 2, 0}, ConstSign{pi, pi, 0}};
  s.analytic_schedule = [](const Vec& y0) {
    const double t1 = std::abs(y0(0));
    return std::vector<double>{t1, t1 + std::abs(y0(0) / 2.0 + y0(1) / pi)};
  };
  s.probe.a = detail::const_field(Vec::Zero(2));
  s.probe.bs = {detail::const_field(detail::unit(2, 0)), detail::const_field(detail::unit(2, 1))};
  s.probe.phi_grads = {detail::const_grad(detail::unit(2, 0)),
                       detail::const_grad(detail::unit(2, 1))};
  s.box_lo = Vec::Constant(2, -1.0);
  s.box_hi = Vec::Constant(2, 1.0);
  s.projections = {{1, 2}};
  return s;
}

}  // namespace stepsynth
