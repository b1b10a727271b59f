#pragma once

// Two-link pendulum with forces F1 = alpha u^3 on the first link and u on
// the second. State x = (phi, phi', psi, psi'); z = (phi - psi, phi' - psi',
// psi, psi'). Step 1 makes the links coincide, step 2 stops the resulting
// single pendulum while keeping z1 = z2 = 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stepsynth/cubic.hpp"
#include "stepsynth/roots.hpp"
#include "stepsynth/scenario.hpp"

namespace stepsynth {

struct PendulumParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double g = 1.0;
  double alpha = 1.0 / 9.0;
  double eps1p = 20.0;
  double eps1m = 10.0;

  void validate() const {
    for (double v : {m1, m2, l1, l2, g, alpha, eps1p, eps1m}) {
      if (!(v > 0) || !std::isfinite(v)) {
        throw ValidationError("pendulum: parameters must be positive and finite");
      }
    }
    const double cap = 4.0 / 27.0 * l1 * l1 / (g * g);
    if (alpha > cap * (1 + 1e-12)) {
      throw ValidationError("pendulum: alpha=" + std::to_string(alpha) + " exceeds " +
                            std::to_string(cap));
    }
  }
};

// Accelerations of the uncontrolled pendulum: (phi'', psi'') at u = 0.
inline std::pair<double, double> pendulum_free(const PendulumParams& p, const Vec& x) {
  const double d = x(0) - x(2);
  const double s = std::sin(d), c = std::cos(d);
  const double den = p.m1 + p.m2 * s * s;
  const double b1 = -(p.g * p.m1 * std::sin(x(0)) +
                      p.m2 * s * (p.g * std::cos(x(2)) + p.l1 * x(1) * x(1) * c + p.l2 * x(3) * x(3))) /
                    (p.l1 * den);
  const double b2 = s * ((p.m1 + p.m2) * (p.g * std::cos(x(0)) + p.l1 * x(1) * x(1)) +
                         p.l2 * p.m2 * x(3) * x(3) * c) /
                    (p.l2 * den);
  return {b1, b2};
}

inline Vec pendulum_f(const PendulumParams& p, const Vec& x, double u) {
  const auto [b1, b2] = pendulum_free(p, x);
  Vec dx(4);
  dx << x(1), b1 + p.alpha * u * u * u, x(3), b2 + u;
  return dx;
}

inline Vec pendulum_to_z(const Vec& x) {
  Vec z(4);
  z << x(0) - x(2), x(1) - x(3), x(2), x(3);
  return z;
}

inline Vec pendulum_from_z(const Vec& z) {
  Vec x(4);
  x << z(0) + z(2), z(1) + z(3), z(2), z(3);
  return x;
}

// Control-free part of H1.
inline double pendulum_G(const PendulumParams& p, const Vec& z) {
  const auto [b1, b2] = pendulum_free(p, pendulum_from_z(z));
  return b1 - b2;
}

// (H1, H2): H1 = G(z) + alpha u^3 - u, H2 = psi''_free + u.
inline Vec pendulum_H(const PendulumParams& p, const Vec& z, double u) {
  const auto [b1, b2] = pendulum_free(p, pendulum_from_z(z));
  Vec h(2);
  h << b1 - b2 + p.alpha * u * u * u - u, b2 + u;
  return h;
}

// Total mechanical energy of the free pendulum in the x chart.
inline double pendulum_energy(const PendulumParams& p, const Vec& x) {
  const double kin = 0.5 * (p.m1 + p.m2) * p.l1 * p.l1 * x(1) * x(1) +
                     0.5 * p.m2 * p.l2 * p.l2 * x(3) * x(3) +
                     p.m2 * p.l1 * p.l2 * x(1) * x(3) * std::cos(x(0) - x(2));
  const double pot = -(p.m1 + p.m2) * p.g * p.l1 * std::cos(x(0)) - p.m2 * p.g * p.l2 * std::cos(x(2));
  return kin + pot;
}

namespace detail {

// Largest (sign > 0) or smallest real root of alpha u^3 - u + c = 0.
inline double pendulum_cubic_root(double alpha, double c, int sign) {
  const auto r = cubic_real_roots(alpha, 0.0, -1.0, c);
  return sign > 0 ? r.back() : r.front();
}

}  // namespace detail

// Root of H1(z, u) = eps1+ (sign > 0) or H1(z, u) = -eps1- (sign < 0) on the
// forcing side: the largest root for +, the smallest for -.
inline double pendulum_u1pm(const PendulumParams& p, const Vec& z, int sign) {
  const double G = pendulum_G(p, z);
  if (sign > 0) {
    const double u = detail::pendulum_cubic_root(p.alpha, G - p.eps1p, +1);
    if (!(u > 0)) throw NoRealRoot("pendulum u1+: no positive root");
    return u;
  }
  const double u = detail::pendulum_cubic_root(p.alpha, G + p.eps1m, -1);
  if (!(u < 0)) throw NoRealRoot("pendulum u1-: no negative root");
  return u;
}

// Extreme roots of alpha u^3 - u - (g/l1) sin z3 = 0.
inline double pendulum_u2pm(const PendulumParams& p, double z3, int sign) {
  return detail::pendulum_cubic_root(p.alpha, -p.g / p.l1 * std::sin(z3), sign);
}

// Extreme roots of H1(z, u) = 0 at the full state; equal to pendulum_u2pm on
// the plane z1 = z2 = 0, and keeps z2' = 0 exactly off it.
inline double pendulum_u2_state(const PendulumParams& p, const Vec& z, int sign) {
  return detail::pendulum_cubic_root(p.alpha, pendulum_G(p, z), sign);
}

inline double pendulum_w1(const PendulumParams& p, double z1) {
  return z1 >= 0 ? -std::sqrt(2.0 * p.eps1p * z1) : std::sqrt(-2.0 * p.eps1m * z1);
}

// -sqrt(2 int_0^z3 u+) for z3 >= 0, sqrt(-2 int_z3^0 u-) otherwise.
inline double pendulum_w2(const PendulumParams& p, double z3) {
  if (z3 == 0.0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  if (z3 > 0) {
    const double I = gauss_kronrod<double, 15>::integrate(
        [&](double t) { return pendulum_u2pm(p, t, +1); }, 0.0, z3, 15, 1e-13);
    return -std::sqrt(2.0 * I);
  }
  const double I = gauss_kronrod<double, 15>::integrate(
      [&](double t) { return pendulum_u2pm(p, t, -1); }, z3, 0.0, 15, 1e-13);
  return std::sqrt(-2.0 * I);
}

// w2 from tabulated integrals of u2+ on [0, 2 pi] and u2- on [-2 pi, 0],
// extended by periodicity of the integrands; cubic Hermite between nodes
// with the exact derivatives u2+-.
class PendulumW2Table {
 public:
  explicit PendulumW2Table(const PendulumParams& p, int cells = 8192) : p_(p), cells_(cells) {
    using std::numbers::pi;
    h_ = 2.0 * pi / cells_;
    plus_.assign(cells_ + 1, 0.0);
    minus_.assign(cells_ + 1, 0.0);
    using boost::math::quadrature::gauss_kronrod;
    for (int k = 0; k < cells_; ++k) {
      const double a = k * h_, b = (k + 1) * h_;
      plus_[k + 1] = plus_[k] + gauss_kronrod<double, 15>::integrate(
                                    [&](double t) { return pendulum_u2pm(p_, t, +1); }, a, b, 0);
      // minus_[k] = int_{-k h}^0 u2-
      minus_[k + 1] = minus_[k] + gauss_kronrod<double, 15>::integrate(
                                      [&](double t) { return pendulum_u2pm(p_, t, -1); }, -b, -a, 0);
    }
  }

  double operator()(double z3) const {
    if (z3 == 0.0) return 0.0;
    if (!std::isfinite(z3)) throw DomainError("pendulum w2: non-finite z3");
    if (z3 > 0) return -std::sqrt(2.0 * integral(plus_, z3, +1));
    return std::sqrt(-2.0 * integral(minus_, -z3, -1));
  }

 private:
  // int over [0, a] (sign > 0) or [-a, 0] (sign < 0), a >= 0.
  double integral(const std::vector<double>& tab, double a, int sign) const {
    const double period = tab.back();
    const double turns = std::floor(a / (cells_ * h_));
    double r = a - turns * cells_ * h_;
    int k = std::min(cells_ - 1, static_cast<int>(r / h_));
    const double s = (r - k * h_) / h_;
    const double x0 = sign * k * h_, x1 = sign * (k + 1) * h_;
    const double d0 = pendulum_u2pm(p_, x0, sign), d1 = pendulum_u2pm(p_, x1, sign);
    const double s2 = s * s, s3 = s2 * s;
    const double val = (2 * s3 - 3 * s2 + 1) * tab[k] + (s3 - 2 * s2 + s) * h_ * d0 +
                       (-2 * s3 + 3 * s2) * tab[k + 1] + (s3 - s2) * h_ * d1;
    return turns * period + val;
  }

  PendulumParams p_;
  int cells_;
  double h_ = 0;
  std::vector<double> plus_;
  std::vector<double> minus_;
};

// eps2+ = u2+(-pi/2); eps2- = -sup u2- over a grid of [-pi, pi].
inline std::pair<double, double> pendulum_eps2(const PendulumParams& p) {
  using std::numbers::pi;
  double sup = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 720; ++k) sup = std::max(sup, pendulum_u2pm(p, -pi + k * pi / 360.0, -1));
  return {pendulum_u2pm(p, -pi / 2, +1), -sup};
}

struct PendulumT1 {
  double T11 = 0;
  double T12 = 0;
  double T1 = 0;
};

// Step-1 times for the bang-bang motion z2' = eps1+ / -eps1-.
inline PendulumT1 pendulum_T1_analytic(const PendulumParams& p, const Vec& z0) {
  const double z1 = z0(0), z2 = z0(1);
  const double ep = p.eps1p, em = p.eps1m;
  const double w = pendulum_w1(p, z1);
  PendulumT1 t;
  if (std::abs(z2 - w) <= 1e-12 * std::max(1.0, std::abs(z2))) {
    // On the curve: a single deceleration to the origin.
    t.T12 = z1 >= 0 ? std::abs(z2) / ep : std::abs(z2) / em;
  } else if (z2 < w) {
    const double q = z2 * z2 - 2.0 * z1 * ep;
    t.T11 = (-z2 + std::sqrt(q * em / (ep + em))) / ep;
    t.T12 = std::sqrt(q / (em * (ep + em)));
  } else {
    const double q = z2 * z2 + 2.0 * z1 * em;
    t.T11 = (z2 + std::sqrt(q * ep / (ep + em))) / em;
    t.T12 = std::sqrt(q / (ep * (ep + em)));
  }
  t.T1 = t.T11 + t.T12;
  return t;
}

enum class PendulumStep1 { Curve, Theta };

// t |t|: monotone, so z - w and z|z| - w|w| share a sign, and the latter is
// smooth where w ~ sqrt|z1| meets the origin.
inline double signed_square(double t) { return t * std::abs(t); }

inline Scenario pendulum(const PendulumParams& params = {},
                         PendulumStep1 step1 = PendulumStep1::Curve) {
  params.validate();
  const PendulumParams p = params;

  Scenario s;
  s.name = "pendulum";
  s.n = 4;
  s.chart.f = [p](const Vec& x, double u) { return pendulum_f(p, x, u); };
  s.chart.to_z = pendulum_to_z;
  s.chart.from_z = pendulum_from_z;
  s.system.blocks = BlockPartition({2, 2});
  s.system.H = [p](const Vec& z, double u) { return pendulum_H(p, z, u); };

  auto u1p = [p](const Vec& z) { return pendulum_u1pm(p, z, +1); };
  auto u1m = [p](const Vec& z) { return pendulum_u1pm(p, z, -1); };
  if (step1 == PendulumStep1::Curve) {
    s.policies.push_back(CurveSwitch{
        [p](const Vec& zi) { return signed_square(zi(1)) - signed_square(pendulum_w1(p, zi(0))); },
        u1p, u1m});
  } else {
    // Theta feedback with d = min(eps1+, eps1-); inside the surface band
    // H1 tracks the linear law v(z^1) exactly.
    LinearSynth synth(ChainDim(2), std::min(p.eps1p, p.eps1m));
    auto u0 = [p, synth, u1p, u1m](const Vec& z) {
      const double v = v_of(synth, z.head(2));
      const double G = pendulum_G(p, z);
      return bracket_root([&](double u) { return G + p.alpha * u * u * u - u - v; }, u1m(z),
                          u1p(z), "pendulum u0");
    };
    s.policies.push_back(ThetaSwitch{synth, u1p, u1m, u0});
  }
  auto w2 = std::make_shared<const PendulumW2Table>(p);
  s.policies.push_back(CurveSwitch{[w2](const Vec& zi) {
                                     return signed_square(zi(1)) - signed_square((*w2)(zi(0)));
                                   },
                                   [p](const Vec& z) { return pendulum_u2_state(p, z, +1); },
                                   [p](const Vec& z) { return pendulum_u2_state(p, z, -1); }});
  s.analytic_schedule = [p](const Vec& z0) {
    return std::vector<double>{pendulum_T1_analytic(p, z0).T1};
  };

  s.probe.a = {4, [](const Vec& x) {
                 Vec a(4);
                 a << x(1), 0.0, x(3), 0.0;
                 return a;
               }};
  s.probe.bs = {detail::const_field(detail::unit(4, 1)), detail::const_field(detail::unit(4, 3))};
  s.probe.phi_grads = {detail::const_grad(Vec((Vec(4) << 1.0, 0.0, -1.0, 0.0).finished())),
                       detail::const_grad(detail::unit(4, 2))};

  s.params = {{"m1", p.m1},       {"m2", p.m2},       {"l1", p.l1},
              {"l2", p.l2},       {"g", p.g},         {"alpha", p.alpha},
              {"eps1p", p.eps1p}, {"eps1m", p.eps1m}, {"step1_theta", step1 == PendulumStep1::Theta}};
  s.box_lo = Vec::Constant(4, -1.0);
  s.box_hi = Vec::Constant(4, 1.0);
  s.projections = {{1, 2}, {3, 4}};
  return s;
}

}  // namespace stepsynth
