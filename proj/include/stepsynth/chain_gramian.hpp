#pragma once

// Gramian family of the integrator chain x' = A0 x + b0 v, x in R^k.
//
// A0 is the upper shift matrix and b0 = e_k, so e^{-A0 t} b0 is a
// polynomial vector and every integral below has a closed form in
// factorials. N(1) is built exactly in rationals and rounded once; the
// other members follow from the homogeneity N(T) = D(T)^{-1} N(1) D(T)^{-1}.

#include <cmath>
#include <utility>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "stepsynth/errors.hpp"

namespace stepsynth {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rational = boost::multiprecision::cpp_rational;

// Dimension of one integrator-chain block.
class ChainDim {
 public:
  static constexpr int kMax = 16;

  explicit ChainDim(int k) : k_(k) {
    if (k < 1 || k > kMax) {
      throw ValidationError("chain dimension must be in [1, " + std::to_string(kMax) +
                            "], got " + std::to_string(k));
    }
  }

  int value() const { return k_; }
  operator int() const { return k_; }

 private:
  int k_;
};

// Precomputed N(1), its inverse and the dilation exponents for one chain size.
// Immutable after construction.
struct GramSet {
  ChainDim k{1};
  Mat n1;       // N(1)
  Mat n1_inv;   // N(1)^{-1}
  Vec dil;      // dil[j] = (2k - 2j + 1) / 2 for 1-based j
  std::vector<std::vector<std::string>> n1_exact;  // N(1) as "p/q" strings

  int dim() const { return k.value(); }

  // (N^{-1}(1) b0, b0): the last diagonal entry of the inverse.
  double inv_bb() const { return n1_inv(dim() - 1, dim() - 1); }
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline Rational factorial_exact(int n) {
  Rational f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// p = k - i for 0-based row i.
inline int chain_power(int k, int i) { return k - 1 - i; }

}  // namespace detail

// e^{-A0 t} b0; component i (1-based) is (-t)^{k-i} / (k-i)!.
inline Vec expm_chain_b(ChainDim k, double t) {
  Vec out(k.value());
  for (int i = 0; i < k; ++i) {
    const int p = detail::chain_power(k, i);
    out(i) = std::pow(-t, p) / detail::factorial(p);
  }
  return out;
}

// Nilpotent shift A0 and input b0 for a chain of size k.
inline Mat chain_a0(ChainDim k) {
  Mat a = Mat::Zero(k, k);
  for (int i = 0; i + 1 < k; ++i) a(i, i + 1) = 1.0;
  return a;
}

inline Vec chain_b0(ChainDim k) {
  Vec b = Vec::Zero(k);
  b(k - 1) = 1.0;
  return b;
}

namespace detail {

using RationalMat = std::vector<std::vector<Rational>>;

// Gauss-Jordan elimination with partial pivoting in exact arithmetic.
inline RationalMat exact_inverse(RationalMat a) {
  const int n = static_cast<int>(a.size());
  RationalMat inv(n, std::vector<Rational>(n, Rational(0)));
  for (int i = 0; i < n; ++i) inv[i][i] = 1;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (abs(a[r][c]) > abs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0) throw IllConditioned("N(1) is singular");
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const Rational p = a[c][c];
    for (int j = 0; j < n; ++j) {
      a[c][j] /= p;
      inv[c][j] /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      const Rational f = a[r][c];
      for (int j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

}  // namespace detail

// Largest tolerated cond_1(S N(1) S) * 2^-53 with S = diag(N(1)_ii^{-1/2}):
// beyond it the rounded inverse no longer carries two significant digits
// through the Theta quadratic form.
inline constexpr double kGramConditionLimit = 1e-2;

// N(1)[i][j] = (-1)^{p+q} / (p! q! (p+q+1)(p+q+2)), p = k-i, q = k-j.
// Both N(1) and its inverse are formed exactly and rounded once.
inline GramSet gram_n1(ChainDim k) {
  GramSet g;
  g.k = k;
  const int n = k.value();
  detail::RationalMat exact(n, std::vector<Rational>(n));
  g.n1.resize(n, n);
  g.n1_exact.assign(n, std::vector<std::string>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int p = detail::chain_power(n, i);
      const int q = detail::chain_power(n, j);
      Rational e = Rational(1) / (detail::factorial_exact(p) * detail::factorial_exact(q) *
                                  (p + q + 1) * (p + q + 2));
      if ((p + q) % 2 != 0) e = -e;
      exact[i][j] = e;
      g.n1(i, j) = e.convert_to<double>();
      g.n1_exact[i][j] = e.str();
    }
  }

  const detail::RationalMat inv = detail::exact_inverse(exact);
  g.n1_inv.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g.n1_inv(i, j) = inv[i][j].convert_to<double>();
  }

  const Vec s = g.n1.diagonal().cwiseSqrt();
  const Mat scaled = s.cwiseInverse().asDiagonal() * g.n1 * s.cwiseInverse().asDiagonal();
  const Mat scaled_inv = s.asDiagonal() * g.n1_inv * s.asDiagonal();
  const double cond = scaled.cwiseAbs().colwise().sum().maxCoeff() *
                      scaled_inv.cwiseAbs().colwise().sum().maxCoeff();
  if (!(cond * std::ldexp(1.0, -53) <= kGramConditionLimit)) {
    throw IllConditioned("N(1) for k=" + std::to_string(n) + " has scaled condition number " +
                         std::to_string(cond));
  }

  g.dil.resize(n);
  for (int j = 0; j < n; ++j) g.dil(j) = n - j - 0.5;
  return g;
}

// D(T) = diag(T^{-dil_j}).
inline Vec dilation_diag(const GramSet& g, double theta) {
  Vec d(g.dim());
  for (int j = 0; j < g.dim(); ++j) d(j) = std::pow(theta, -g.dil(j));
  return d;
}

// N(T)[i][j] = T^{2k-i-j+1} N(1)[i][j].
inline Mat gram_theta(const GramSet& g, double theta) {
  if (!(theta > 0)) throw ValidationError("gram_theta: theta must be positive");
  const Vec d = dilation_diag(g, theta);
  return d.cwiseInverse().asDiagonal() * g.n1 * d.cwiseInverse().asDiagonal();
}

// N^{-1}(T) = D(T) N^{-1}(1) D(T).
inline Mat gram_theta_inv(const GramSet& g, double theta) {
  if (!(theta > 0)) throw ValidationError("gram_theta_inv: theta must be positive");
  const Vec d = dilation_diag(g, theta);
  return d.asDiagonal() * g.n1_inv * d.asDiagonal();
}

namespace detail {

// (-1)^{p+q} T^{p+q} / (p! q! (p+q+shift))
inline Mat gram_moment(const GramSet& g, double theta, int shift) {
  if (!(theta > 0)) throw ValidationError("gramian moments need a positive theta");
  const int n = g.dim();
  Mat out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int p = chain_power(n, i);
      const int q = chain_power(n, j);
      const double sign = ((p + q) % 2 == 0) ? 1.0 : -1.0;
      out(i, j) = sign * std::pow(theta, p + q) / (factorial(p) * factorial(q) * (p + q + shift));
    }
  }
  return out;
}

}  // namespace detail

// N^(T) = (1/T) * integral_0^T e^{-A0 t} b0 b0* e^{-A0* t} dt
inline Mat gram_hat(const GramSet& g, double theta) { return detail::gram_moment(g, theta, 1); }

// N~(T) = (1/T^2) * integral_0^T t e^{-A0 t} b0 b0* e^{-A0* t} dt
inline Mat gram_tilde(const GramSet& g, double theta) { return detail::gram_moment(g, theta, 2); }

}  // namespace stepsynth
