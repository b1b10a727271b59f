#pragma once

// Controllability function of one integrator chain under |v| <= d.
//
// Theta(x) is the positive root of 2 a0 T = (N^{-1}(T) x, x) and the
// feedback is v(x) = -1/2 b0* N^{-1}(Theta(x)) x. Along x' = A0 x + b0 v(x)
// the function decreases at unit rate, so Theta(x0) is the time to the origin.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stepsynth/chain_gramian.hpp"

namespace stepsynth {

// 2 d^2 / (N^{-1}(1) b0, b0): the largest a0 keeping |v| <= d.
inline double a0_max(const GramSet& gram, double d) {
  if (!(d > 0)) throw ValidationError("a0_max: d must be positive");
  return 2.0 * d * d / gram.inv_bb();
}

// Theta-feedback law for one block.
class LinearSynth {
 public:
  // a0 defaults to a0_max(gram, d).
  LinearSynth(GramSet gram, double d, double a0 = -1.0, double theta_min = 1e-9,
              double root_tol = 1e-12)
      : gram_(std::move(gram)), d_(d), theta_min_(theta_min), root_tol_(root_tol) {
    if (!(d > 0) || !std::isfinite(d)) throw ValidationError("LinearSynth: d must be positive");
    const double cap = a0_max(gram_, d_);
    a0_ = a0 < 0 ? cap : a0;
    if (!(a0_ > 0) || a0_ > cap * (1 + 1e-12)) {
      throw ValidationError("LinearSynth: a0=" + std::to_string(a0_) + " outside (0, " +
                            std::to_string(cap) + "]");
    }
    if (!(theta_min_ > 0) || !(root_tol_ > 0)) {
      throw ValidationError("LinearSynth: theta_min and root_tol must be positive");
    }
  }

  LinearSynth(ChainDim k, double d) : LinearSynth(gram_n1(k), d) {}

  const GramSet& gram() const { return gram_; }
  int dim() const { return gram_.dim(); }
  double a0() const { return a0_; }
  double d() const { return d_; }
  double theta_min() const { return theta_min_; }
  double root_tol() const { return root_tol_; }

 private:
  GramSet gram_;
  double d_;
  double a0_ = 0;
  double theta_min_;
  double root_tol_;
};

struct ThetaEval {
  double theta = 0;
  Vec w;              // N^{-1}(Theta) x
  double v = 0;       // -sigma / 2
  double sigma = 0;   // b0* N^{-1}(Theta) x; sign selects S+ / S- / S
};

namespace detail {

// Residual r(T) = 2 a0 T - (N^{-1}(T) x, x) and dr/dT, using y = D(T) x.
struct ThetaResidual {
  const LinearSynth& s;
  const Vec& x;

  void operator()(double theta, double& r, double& dr, Vec& my) const {
    const GramSet& g = s.gram();
    Vec y = dilation_diag(g, theta).cwiseProduct(x);
    my = g.n1_inv * y;
    const double q = y.dot(my);
    // sum_ij M_ij y_i y_j (e_i + e_j) = 2 (E y)' M y
    const double qe = 2.0 * g.dil.cwiseProduct(y).dot(my);
    r = 2.0 * s.a0() * theta - q;
    dr = 2.0 * s.a0() + qe / theta;
  }
};

}  // namespace detail

// Positive root of the Theta equation by doubling bracket + safeguarded Newton.
inline ThetaEval theta_of(const LinearSynth& s, const Vec& x) {
  const int k = s.dim();
  if (x.size() != k) {
    throw ValidationError("theta_of: state has " + std::to_string(x.size()) +
                          " entries, block has " + std::to_string(k));
  }
  ThetaEval out;
  out.w = Vec::Zero(k);
  if (x.cwiseAbs().maxCoeff() == 0.0) return out;
  if (!x.allFinite()) throw DomainError("theta_of: non-finite state");

  detail::ThetaResidual f{s, x};
  double r, dr;
  Vec my;

  // r < 0 for small T, r > 0 for large T, with a single sign change.
  double lo = 1.0, hi = 1.0;
  f(1.0, r, dr, my);
  if (r < 0) {
    while (true) {
      hi *= 2.0;
      f(hi, r, dr, my);
      if (r >= 0) break;
      lo = hi;
      if (!std::isfinite(hi)) throw NonConvergence("theta_of: no upper bracket");
    }
  } else {
    while (true) {
      lo *= 0.5;
      f(lo, r, dr, my);
      if (r <= 0) break;
      hi = lo;
      if (lo == 0.0) throw NonConvergence("theta_of: no lower bracket");
    }
  }

  double theta = std::sqrt(lo * hi);
  constexpr int kMaxIter = 400;
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    f(theta, r, dr, my);
    // Iterate to machine precision, well inside root_tol.
    if (std::abs(r) <= std::numeric_limits<double>::epsilon() * 2.0 * s.a0() * theta) {
      converged = true;
      break;
    }
    if (r < 0) lo = theta; else hi = theta;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      converged = true;
      break;
    }
    double next = theta - r / dr;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = std::sqrt(lo * hi);
    theta = next;
  }
  if (!converged) throw NonConvergence("theta_of: root iteration did not converge");

  f(theta, r, dr, my);
  out.theta = theta;
  out.w = dilation_diag(s.gram(), theta).cwiseProduct(my);
  out.sigma = out.w(k - 1);
  out.v = -0.5 * out.sigma;
  return out;
}

// Feedback with the near-origin hold: v = 0 once Theta < theta_min.
inline double v_of(const LinearSynth& s, const Vec& x) {
  const ThetaEval e = theta_of(s, x);
  return e.theta < s.theta_min() ? 0.0 : e.v;
}

// A0 x + b0 v(x)
inline Vec closed_loop_rhs(const LinearSynth& s, const Vec& x) {
  const int k = s.dim();
  Vec dx(k);
  for (int i = 0; i + 1 < k; ++i) dx(i) = x(i + 1);
  dx(k - 1) = v_of(s, x);
  return dx;
}

// Anisotropic dilation (Delta_s x)_j = s^{k-j+1} x_j under which
// Theta scales by s and v is invariant.
inline Vec dilate(const Vec& x, double s) {
  const int k = static_cast<int>(x.size());
  Vec out(k);
  for (int j = 0; j < k; ++j) out(j) = std::pow(s, k - j) * x(j);
  return out;
}

}  // namespace stepsynth
