#pragma once

// x_k' = u^{2k-1}, k = 1..n, |u| <= 1.
//
// With P_i(u) = u prod_{k=1}^{n-i} (u^2 - lambda_k^2) the change of variables
// z_i = x_{n-i+1} + sum_k c_k^(i) x_k gives z_i' = P_i(u). Each level
// lambda_{n+1-i} is a root of every earlier P_j, so constant controls
// zero the coordinates one at a time.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "stepsynth/chain_gramian.hpp"
#include "stepsynth/scenario.hpp"

namespace stepsynth {

inline constexpr int kPolyoddMaxN = 12;

// Levels lambda_1 < ... < lambda_{n-1} and the step-1 level alpha.
struct PolyoddLevels {
  std::vector<double> lambdas;
  double alpha = 1.0;
};

inline PolyoddLevels polyodd_levels(int n, const std::optional<std::vector<double>>& lambdas = {},
                                    std::optional<double> alpha = {}) {
  if (n < 2 || n > kPolyoddMaxN) {
    throw ValidationError("polyodd: n must be in [2, " + std::to_string(kPolyoddMaxN) + "]");
  }
  PolyoddLevels lv;
  if (lambdas) {
    if (static_cast<int>(lambdas->size()) != n - 1) {
      throw ValidationError("polyodd: expected " + std::to_string(n - 1) + " lambdas");
    }
    lv.lambdas = *lambdas;
  } else {
    for (int k = 1; k < n; ++k) lv.lambdas.push_back(static_cast<double>(k) / n);
  }
  for (std::size_t k = 0; k < lv.lambdas.size(); ++k) {
    const double l = lv.lambdas[k];
    if (!(l > 0 && l < 1.0) || (k > 0 && !(l > lv.lambdas[k - 1]))) {
      throw ValidationError("polyodd: lambdas must be strictly increasing in (0, 1)");
    }
  }
  lv.alpha = alpha.value_or(1.0);
  if (!(lv.alpha > 0 && lv.alpha <= 1.0)) throw ValidationError("polyodd: level1 must be in (0, 1]");
  for (double l : lv.lambdas) {
    if (l == lv.alpha) throw ValidationError("polyodd: level1 must differ from every lambda");
  }
  return lv;
}

// Level of step i (1-based): alpha for i = 1, lambda_{n+1-i} afterwards.
inline double polyodd_level(const PolyoddLevels& lv, int n, int i) {
  return i == 1 ? lv.alpha : lv.lambdas[n - i];
}

namespace detail {

// Coefficients of prod (w - r_k) in w, constant term first.
template <class T>
std::vector<T> expand_in_square(const std::vector<T>& r) {
  std::vector<T> c{T(1)};
  for (const T& rk : r) {
    std::vector<T> next(c.size() + 1, T(0));
    for (std::size_t j = 0; j < c.size(); ++j) {
      next[j + 1] += c[j];
      next[j] -= rk * c[j];
    }
    c = std::move(next);
  }
  return c;
}

}  // namespace detail

// Coefficients of P_i for the default levels k/n, exactly: entry k-1 is the
// coefficient of u^{2k-1}, k = 1..n-i+1 (the last one is 1).
inline std::vector<Rational> polyodd_coeffs_exact(int n, int i) {
  if (n < 1 || i < 1 || i > n) throw ValidationError("polyodd_coeffs: need 1 <= i <= n");
  std::vector<Rational> sq;
  for (int k = 1; k <= n - i; ++k) sq.push_back(Rational(k * k) / Rational(n * n));
  return detail::expand_in_square(sq);
}

inline std::vector<double> polyodd_coeffs(int n, int i,
                                          const std::optional<std::vector<double>>& lambdas = {}) {
  if (n < 1 || i < 1 || i > n) throw ValidationError("polyodd_coeffs: need 1 <= i <= n");
  if (!lambdas) {
    std::vector<double> out;
    for (const Rational& c : polyodd_coeffs_exact(n, i)) out.push_back(c.convert_to<double>());
    return out;
  }
  const PolyoddLevels lv = polyodd_levels(n, lambdas);
  std::vector<double> sq;
  for (int k = 0; k < n - i; ++k) sq.push_back(lv.lambdas[k] * lv.lambdas[k]);
  return detail::expand_in_square(sq);
}

// P_i(u) in product form, so that P_i vanishes exactly at its level roots.
inline double polyodd_P(const PolyoddLevels& lv, int n, int i, double u) {
  double p = u;
  for (int k = 0; k < n - i; ++k) p *= u * u - lv.lambdas[k] * lv.lambdas[k];
  return p;
}

// T_i = T_{i-1} + |z_i(T_{i-1}) / P_i(u_i)| with the coordinates advanced in closed form.
inline std::vector<double> polyodd_schedule(const PolyoddLevels& lv, int n, const Vec& z0) {
  Vec z = z0;
  std::vector<double> times;
  double t = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double zi = z(i - 1);
    if (zi != 0.0) {
      const double u = zi > 0 ? -polyodd_level(lv, n, i) : polyodd_level(lv, n, i);
      const double dt = std::abs(zi / polyodd_P(lv, n, i, u));
      for (int k = i + 1; k <= n; ++k) z(k - 1) += polyodd_P(lv, n, k, u) * dt;
      z(i - 1) = 0.0;
      t += dt;
    }
    times.push_back(t);
  }
  return times;
}

inline Scenario polyodd(int n, const std::optional<std::vector<double>>& lambdas = {},
                        std::optional<double> level1 = {}) {
  const PolyoddLevels lv = polyodd_levels(n, lambdas, level1);

  // coeffs[i-1][k-1]: coefficient of x_k in z_i for k <= n - i.
  std::vector<std::vector<double>> coeffs(n);
  for (int i = 1; i < n; ++i) {
    std::vector<double> sq;
    for (int k = 0; k < n - i; ++k) sq.push_back(lv.lambdas[k] * lv.lambdas[k]);
    coeffs[i - 1] = detail::expand_in_square(sq);
  }

  Scenario s;
  s.name = "polyodd:" + std::to_string(n);
  s.n = n;
  s.chart.f = [n](const Vec&, double u) {
    Vec dx(n);
    for (int k = 1; k <= n; ++k) dx(k - 1) = std::pow(u, 2 * k - 1);
    return dx;
  };
  s.chart.to_z = [n, coeffs](const Vec& x) {
    Vec z(n);
    for (int i = 1; i < n; ++i) {
      double v = x(n - i);
      for (int k = 1; k <= n - i; ++k) v += coeffs[i - 1][k - 1] * x(k - 1);
      z(i - 1) = v;
    }
    z(n - 1) = x(0);
    return z;
  };
  s.chart.from_z = [n, coeffs](const Vec& z) {
    Vec x(n);
    x(0) = z(n - 1);
    for (int i = 2; i <= n; ++i) {
      double v = z(n - i);
      for (int k = 1; k < i; ++k) v -= coeffs[n - i][k - 1] * x(k - 1);
      x(i - 1) = v;
    }
    return x;
  };
  s.system.blocks = BlockPartition(std::vector<int>(n, 1));
  s.system.H = [lv, n](const Vec&, double u) {
    Vec h(n);
    for (int i = 1; i <= n; ++i) h(i - 1) = polyodd_P(lv, n, i, u);
    return h;
  };
  for (int i = 1; i <= n; ++i) {
    const double level = polyodd_level(lv, n, i);
    s.policies.push_back(ConstSign{level, level, 0});
  }
  s.analytic_schedule = [lv, n](const Vec& z0) { return polyodd_schedule(lv, n, z0); };

  s.probe.a = detail::const_field(Vec::Zero(n));
  for (int i = 1; i <= n; ++i) {
    s.probe.bs.push_back(detail::const_field(detail::unit(n, n - i)));
    Vec g = Vec::Zero(n);
    g(n - i) = 1.0;
    if (i < n) {
      for (int k = 1; k <= n - i; ++k) g(k - 1) += coeffs[i - 1][k - 1];
    } else {
      g = detail::unit(n, 0);
    }
    s.probe.phi_grads.push_back(detail::const_grad(g));
  }

  s.params["n"] = n;
  s.params["level1"] = lv.alpha;
  for (int k = 0; k < n - 1; ++k) s.params["lambda" + std::to_string(k + 1)] = lv.lambdas[k];
  s.box_lo = Vec::Constant(n, -1.0);
  s.box_hi = Vec::Constant(n, 1.0);
  s.projections = {{1, 2}};
  if (n > 2) s.projections.emplace_back(n - 1, n);
  return s;
}

}  // namespace stepsynth
