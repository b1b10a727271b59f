#pragma once

// x1' = u^3 + 0.1 sin^2 f1(x, u), x2' = u, x3' = f2(x2), |u| <= 2.
//
// z = (x1 - x2, x3, f2(x2)) gives z1' = H1 = u^3 - u + 0.1 sin^2 f1~,
// z2' = z3, z3' = H2 = f2~(z3) u. Step 1 drives z1 with H1 = +-0.2; step 2
// keeps H1 = 0 and steers (z2, z3) along the curve made of the two
// trajectories that enter the origin.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "stepsynth/roots.hpp"
#include "stepsynth/scenario.hpp"

namespace stepsynth {

struct Example51Fns {
  std::function<double(double, double, double, double)> f1 =
      [](double, double, double, double) { return 0.0; };
  std::function<double(double)> f2 = [](double x2) { return x2; };
  std::function<double(double)> f2_prime = [](double) { return 1.0; };
  std::function<double(double)> f2_inv;  // empty: numeric inverse of f2
};

inline constexpr double kExample51Eps1 = 0.2;

// Residual dynamics and controls of the block chart.
class Example51Model {
 public:
  explicit Example51Model(Example51Fns fns) : fns_(std::move(fns)) {
    if (!fns_.f1 || !fns_.f2 || !fns_.f2_prime) {
      throw ValidationError("example51: f1, f2 and f2' are required");
    }
    if (std::abs(fns_.f2(0.0)) > 1e-12) throw ValidationError("example51: f2(0) must be 0");
    if (std::abs(fns_.f1(0, 0, 0, 0)) > 1e-12) throw ValidationError("example51: f1(0) must be 0");
  }

  double f2(double x2) const { return fns_.f2(x2); }

  double f2_inv(double z3) const {
    if (fns_.f2_inv) return fns_.f2_inv(z3);
    // f2 is strictly monotone with |f2'| bounded below: expand a bracket.
    auto g = [&](double x) { return fns_.f2(x) - z3; };
    double lo = -1.0, hi = 1.0;
    for (int it = 0; it < 200 && (g(lo) > 0) == (g(hi) > 0); ++it) {
      lo *= 2.0;
      hi *= 2.0;
    }
    return bracket_root(g, lo, hi, "example51 f2 inverse");
  }

  Vec f(const Vec& x, double u) const {
    const double s = std::sin(fns_.f1(x(0), x(1), x(2), u));
    Vec dx(3);
    dx << u * u * u + 0.1 * s * s, u, fns_.f2(x(1));
    return dx;
  }

  Vec to_z(const Vec& x) const {
    Vec z(3);
    z << x(0) - x(1), x(2), fns_.f2(x(1));
    return z;
  }

  Vec from_z(const Vec& z) const {
    const double x2 = f2_inv(z(2));
    Vec x(3);
    x << z(0) + x2, x2, z(1);
    return x;
  }

  // f2~(z3) = f2'(f2^{-1}(z3))
  double f2t(double z3) const { return fns_.f2_prime(f2_inv(z3)); }

  double H1(const Vec& z, double u) const {
    const double x2 = f2_inv(z(2));
    const double s = std::sin(fns_.f1(z(0) + x2, x2, z(1), u));
    return u * u * u - u + 0.1 * s * s;
  }

  Vec H(const Vec& z, double u) const {
    Vec h(2);
    h << H1(z, u), f2t(z(2)) * u;
    return h;
  }

  // H1(z, u) = +-0.2 with u+ in [0.7, 1.1], u- in [-1.2, -0.8].
  double u1(const Vec& z, int sign) const {
    const double target = sign > 0 ? kExample51Eps1 : -kExample51Eps1;
    auto g = [&](double u) { return H1(z, u) - target; };
    return sign > 0 ? bracket_root(g, 0.7, 1.1, "example51 u1+")
                    : bracket_root(g, -1.2, -0.8, "example51 u1-");
  }

  // Root of H1(z, u) = 0 in [0.9, 1] or [-1.1, -1]; u+ is the one with H2 > 0.
  double u2(const Vec& z, int sign) const {
    auto g = [&](double u) { return H1(z, u); };
    const double pos = bracket_root(g, 0.9, 1.0, "example51 u2 (positive)");
    const double neg = bracket_root(g, -1.1, -1.0, "example51 u2 (negative)");
    const bool swap = f2t(z(2)) < 0;
    const double plus = swap ? neg : pos;
    const double minus = swap ? pos : neg;
    return sign > 0 ? plus : minus;
  }

 private:
  Example51Fns fns_;
};

// The switching curve gamma+ u gamma- in the (z2, z3) plane, tabulated as
// z2 = Z(z3) by integrating dz2/dz3 = z3 / H2 outward from the origin along
// each control; residual(z2, z3) = z3 - W(z2) with W the inverse of Z.
class Example51Curve {
 public:
  Example51Curve(std::shared_ptr<const Example51Model> model, double z3_range = 20.0,
                 double step = 2e-3)
      : model_(std::move(model)) {
    build(plus_, -1.0, +1, z3_range, step);
    build(minus_, +1.0, -1, z3_range, step);
  }

  // z3 on the curve above/below z2; DomainError outside the tabulated range.
  double W(double z2) const {
    if (z2 == 0.0) return 0.0;
    const Branch& b = z2 > 0 ? plus_ : minus_;
    const double target = std::abs(z2);
    if (target > b.abs_y.back()) {
      throw DomainError("example51 curve: z2=" + std::to_string(z2) + " outside the table");
    }
    const auto it = std::lower_bound(b.abs_y.begin(), b.abs_y.end(), target);
    const std::size_t j = std::max<std::size_t>(1, it - b.abs_y.begin());
    auto g = [&](double s) { return hermite(b, j, s) - target; };
    const double s = bracket_root(g, 0.0, 1.0, "example51 curve inverse");
    return b.z3[j - 1] + s * (b.z3[j] - b.z3[j - 1]);
  }

  // Z(z3): the z2 coordinate of the curve point at height z3.
  double Z(double z3) const {
    if (z3 == 0.0) return 0.0;
    const Branch& b = z3 < 0 ? plus_ : minus_;
    const double a = std::abs(z3);
    const double h = std::abs(b.z3[1]);
    const std::size_t j = std::min(b.z3.size() - 1, static_cast<std::size_t>(a / h) + 1);
    if (a > std::abs(b.z3.back())) throw DomainError("example51 curve: z3 outside the table");
    const double s = (a - std::abs(b.z3[j - 1])) / h;
    return (z3 < 0 ? 1.0 : -1.0) * hermite(b, j, s);
  }

  double residual(const Vec& zi) const { return zi(1) - W(zi(0)); }

 private:
  struct Branch {
    std::vector<double> z3;     // 0, -h, -2h, ... or 0, h, 2h, ...
    std::vector<double> abs_y;  // |z2| along the branch, increasing
    std::vector<double> dy;     // d|z2|/ds per unit of |z3|
  };

  // u evaluated on the plane z1 = 0.
  double slope(double y, double z3, int sign) const {
    Vec z(3);
    z << 0.0, y, z3;
    return z3 / (model_->f2t(z3) * model_->u2(z, sign));
  }

  void build(Branch& b, double dir, int sign, double range, double h) {
    const int steps = static_cast<int>(std::ceil(range / h));
    double y = 0.0;
    double z3 = 0.0;
    b.z3.push_back(0.0);
    b.abs_y.push_back(0.0);
    b.dy.push_back(0.0);
    const double dz = dir * h;
    for (int k = 0; k < steps; ++k) {
      const double k1 = slope(y, z3, sign);
      const double k2 = slope(y + 0.5 * dz * k1, z3 + 0.5 * dz, sign);
      const double k3 = slope(y + 0.5 * dz * k2, z3 + 0.5 * dz, sign);
      const double k4 = slope(y + dz * k3, z3 + dz, sign);
      y += dz / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      z3 += dz;
      b.z3.push_back(z3);
      b.abs_y.push_back(std::abs(y));
      b.dy.push_back(std::abs(slope(y, z3, sign)));
    }
  }

  // Cubic Hermite on cell [j-1, j] at local coordinate s in [0, 1].
  static double hermite(const Branch& b, std::size_t j, double s) {
    const double h = std::abs(b.z3[j] - b.z3[j - 1]);
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * b.abs_y[j - 1] + (s3 - 2 * s2 + s) * h * b.dy[j - 1] +
           (-2 * s3 + 3 * s2) * b.abs_y[j] + (s3 - s2) * h * b.dy[j];
  }

  std::shared_ptr<const Example51Model> model_;
  Branch plus_;
  Branch minus_;
};

inline Scenario example51(Example51Fns fns = {}) {
  auto model = std::make_shared<const Example51Model>(std::move(fns));
  auto curve = std::make_shared<const Example51Curve>(model);

  Scenario s;
  s.name = "example51";
  s.n = 3;
  s.chart.f = [model](const Vec& x, double u) { return model->f(x, u); };
  s.chart.to_z = [model](const Vec& x) { return model->to_z(x); };
  s.chart.from_z = [model](const Vec& z) { return model->from_z(z); };
  s.system.blocks = BlockPartition({1, 2});
  s.system.H = [model](const Vec& z, double u) { return model->H(z, u); };

  // Step 1: |H1| = 0.2 = d on a one-dimensional chain, so Theta = 5 |z1|.
  s.policies.push_back(ThetaSwitch{LinearSynth(ChainDim(1), kExample51Eps1),
                                   [model](const Vec& z) { return model->u1(z, +1); },
                                   [model](const Vec& z) { return model->u1(z, -1); },
                                   {}});
  s.policies.push_back(CurveSwitch{[curve](const Vec& zi) { return curve->residual(zi); },
                                   [model](const Vec& z) { return model->u2(z, +1); },
                                   [model](const Vec& z) { return model->u2(z, -1); }});
  s.analytic_schedule = [](const Vec& z0) { return std::vector<double>{5.0 * std::abs(z0(0))}; };

  s.probe.a = {3, [model](const Vec& x) {
                 Vec a = Vec::Zero(3);
                 a(2) = model->f2(x(1));
                 return a;
               }};
  s.probe.bs = {detail::const_field(detail::unit(3, 0)), detail::const_field(detail::unit(3, 1))};
  s.probe.phi_grads = {detail::const_grad(Vec((Vec(3) << 1.0, -1.0, 0.0).finished())),
                       detail::const_grad(detail::unit(3, 2))};
  s.params["eps1"] = kExample51Eps1;
  s.box_lo = Vec::Constant(3, -1.0);
  s.box_hi = Vec::Constant(3, 1.0);
  s.projections = {{1, 2}, {2, 3}};
  return s;
}

}  // namespace stepsynth
