#pragma once

// Real roots of a u^3 + b u^2 + c u + d = 0.
//
// Trigonometric form when there are three real roots (no complex
// intermediates), stable Cardano otherwise; each root gets one Newton
// polish on the original polynomial.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "stepsynth/errors.hpp"

namespace stepsynth {

namespace detail {

inline double newton_polish(double a, double b, double c, double d, double u) {
  const double f = ((a * u + b) * u + c) * u + d;
  const double df = (3 * a * u + 2 * b) * u + c;
  if (df == 0.0 || !std::isfinite(df)) return u;
  const double next = u - f / df;
  const double fn = ((a * next + b) * next + c) * next + d;
  return std::abs(fn) <= std::abs(f) ? next : u;
}

}  // namespace detail

// Sorted real roots; repeated roots appear with multiplicity.
inline std::vector<double> cubic_real_roots(double a, double b, double c, double d) {
  if (a == 0.0) throw DomainError("cubic_real_roots: leading coefficient is zero");
  const double B = b / a, C = c / a, D = d / a;
  const double shift = B / 3.0;
  // u = t - B/3 gives t^3 + p t + q = 0
  const double p = C - B * B / 3.0;
  const double q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
  const double disc = q * q / 4.0 + p * p * p / 27.0;

  std::vector<double> t;
  if (p == 0.0 && q == 0.0) {
    t = {0.0, 0.0, 0.0};
  } else if (disc < 0.0) {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) t.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0));
  } else if (disc == 0.0) {
    t = {3.0 * q / p, -1.5 * q / p, -1.5 * q / p};
  } else {
    const double A = -std::copysign(std::cbrt(std::abs(q) / 2.0 + std::sqrt(disc)), q);
    const double Bc = (A == 0.0) ? 0.0 : -p / (3.0 * A);
    t = {A + Bc};
  }

  std::vector<double> roots;
  roots.reserve(t.size());
  for (double ti : t) roots.push_back(detail::newton_polish(a, b, c, d, ti - shift));
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace stepsynth
