#pragma once

// Numeric probe of block reducibility for x' = a(x) + B(x) beta(x, u).
//
// Lie brackets are taken by central differences, the columns of
// Q = (b_1..b_m, ad_a b_1..ad_a b_m, ...) are scanned left to right at each
// sample, and a column survives only if it raises the numeric rank at every
// sample. The survivors form K(x); their counts per field are the block sizes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/sobol.hpp>

#include "stepsynth/errors.hpp"

namespace stepsynth {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct VectorField {
  int dim = 0;
  std::function<Vec(const Vec&)> eval;

  Vec operator()(const Vec& x) const { return eval(x); }
};

using GradFn = std::function<Vec(const Vec&)>;

inline constexpr int kAdPowCap = 3;

// cbrt(eps) * max(1, ||x||)
inline double default_fd_step(const Vec& x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, x.norm());
}

// Central-difference Jacobian; column c is (f(x + h e_c) - f(x - h e_c)) / 2h.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Mat j(n, n);
  for (int c = 0; c < n; ++c) {
    Vec xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    j.col(c) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

// [a, b](x) = b_x(x) a(x) - a_x(x) b(x)
inline Vec lie_bracket(const VectorField& a, const VectorField& b, const Vec& x, double h) {
  if (!(h > 0)) throw ValidationError("lie_bracket: h must be positive");
  if (a.dim != b.dim || x.size() != a.dim) throw ValidationError("lie_bracket: dimension mismatch");
  return fd_jacobian(b.eval, x, h) * a(x) - fd_jacobian(a.eval, x, h) * b(x);
}

// ad_a^k b as a field; nested brackets reuse the same step h.
inline VectorField ad_field(const VectorField& a, const VectorField& b, int k, double h) {
  if (k < 0) throw ValidationError("ad_pow: k must be nonnegative");
  if (k > kAdPowCap) {
    throw CapExceeded("ad_pow: k=" + std::to_string(k) + " exceeds the nesting cap " +
                      std::to_string(kAdPowCap));
  }
  if (k == 0) return b;
  VectorField inner = ad_field(a, b, k - 1, h);
  return {a.dim, [a, inner, h](const Vec& x) { return lie_bracket(a, inner, x, h); }};
}

inline Vec ad_pow(const VectorField& a, const VectorField& b, int k, const Vec& x, double h) {
  return ad_field(a, b, k, h)(x);
}

// Numeric rank with a threshold relative to the largest singular value.
inline int numeric_rank(const Mat& m, double svd_tol) {
  if (m.cols() == 0) return 0;
  const Vec s = Eigen::JacobiSVD<Mat>(m).singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i) r += s(i) > svd_tol * s(0);
  return r;
}

struct ProbeReport {
  std::vector<std::pair<int, int>> kept;  // (field j, bracket order k), both 0-based
  std::vector<int> indices;               // n_1, ..., n_m
  std::vector<std::vector<int>> rank_history;  // per sample: rank after each scanned column
  std::vector<Vec> samples;
  double h = 0;  // 0 means the per-point default
  double svd_tol = 1e-6;
};

// Seeded low-discrepancy points in the box [lo, hi].
inline std::vector<Vec> sobol_samples(const Vec& lo, const Vec& hi, int count) {
  if (lo.size() != hi.size() || lo.size() == 0) throw ValidationError("sobol_samples: bad box");
  if (count < 1) throw ValidationError("sobol_samples: count must be positive");
  if (!((hi - lo).minCoeff() >= 0)) throw ValidationError("sobol_samples: box has lo > hi");
  boost::random::sobol gen(static_cast<std::size_t>(lo.size()));
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int p = 0; p < count; ++p) {
    Vec x(lo.size());
    for (int i = 0; i < lo.size(); ++i) {
      const double u = std::generate_canonical<double, 53>(gen);
      x(i) = lo(i) + u * (hi(i) - lo(i));
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

// Column deletion on Q(x). Pass h <= 0 for the per-point default step.
inline ProbeReport select_columns(const VectorField& a, const std::vector<VectorField>& bs,
                                  const std::vector<Vec>& samples, double h = 0.0,
                                  double svd_tol = 1e-6) {
  if (samples.empty()) throw ValidationError("select_columns: no samples");
  if (bs.empty()) throw ValidationError("select_columns: no input fields");
  const int n = a.dim;
  for (const auto& b : bs) {
    if (b.dim != n) throw ValidationError("select_columns: fields differ in dimension");
  }
  for (const auto& x : samples) {
    if (x.size() != n) throw ValidationError("select_columns: sample has the wrong dimension");
  }
  const int m = static_cast<int>(bs.size());

  ProbeReport rep;
  rep.samples = samples;
  rep.h = h;
  rep.svd_tol = svd_tol;
  rep.indices.assign(m, 0);
  rep.rank_history.assign(samples.size(), {});

  std::vector<Mat> kcols(samples.size(), Mat(n, 0));
  std::vector<bool> deleted(m, false);
  int rank = 0;

  for (int k = 0; k <= std::min(kAdPowCap, n - 1) && rank < n; ++k) {
    for (int j = 0; j < m && rank < n; ++j) {
      if (deleted[j]) continue;
      int raised = 0;
      std::vector<Vec> cols(samples.size());
      for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vec& x = samples[s];
        const double hs = h > 0 ? h : default_fd_step(x);
        cols[s] = ad_pow(a, bs[j], k, x, hs);
        Mat trial(n, kcols[s].cols() + 1);
        trial << kcols[s], cols[s];
        const int r = numeric_rank(trial, svd_tol);
        const bool up = r > static_cast<int>(kcols[s].cols());
        raised += up;
        rep.rank_history[s].push_back(r);
      }
      if (raised != 0 && raised != static_cast<int>(samples.size())) {
        throw RegularityViolation("column (" + std::to_string(j + 1) + "," + std::to_string(k) +
                                  ") raises the rank at " + std::to_string(raised) + " of " +
                                  std::to_string(samples.size()) + " samples");
      }
      if (raised == 0) {
        deleted[j] = true;
        continue;
      }
      for (std::size_t s = 0; s < samples.size(); ++s) {
        Mat grown(n, kcols[s].cols() + 1);
        grown << kcols[s], cols[s];
        kcols[s] = std::move(grown);
      }
      rep.kept.emplace_back(j, k);
      ++rep.indices[j];
      ++rank;
    }
  }
  if (rank < n) {
    throw RankDeficient("K(x) reached rank " + std::to_string(rank) + " of " + std::to_string(n));
  }
  std::sort(rep.kept.begin(), rep.kept.end());
  return rep;
}

// Orthogonality (phi_i)_x . ad^k b_j = 0 for k <= min(n_i - 2, n_j - 1) and
// non-vanishing of (phi_i)_x . ad^{n_i - 1} b_i, checked at every sample.
inline std::map<std::string, bool> verify_phi_conditions(const std::vector<GradFn>& phi_grads,
                                                         const ProbeReport& report,
                                                         const VectorField& a,
                                                         const std::vector<VectorField>& bs,
                                                         const std::vector<Vec>& samples) {
  const int m = static_cast<int>(report.indices.size());
  if (static_cast<int>(phi_grads.size()) != m || static_cast<int>(bs.size()) != m) {
    throw ValidationError("verify_phi_conditions: need one gradient and one field per block");
  }
  std::map<std::string, bool> out;
  for (int i = 0; i < m; ++i) {
    const int ni = report.indices[i];
    for (int j = 0; j < m; ++j) {
      const int kmax = std::min(ni - 2, report.indices[j] - 1);
      for (int k = 0; k <= kmax; ++k) {
        bool ok = true;
        for (const Vec& x : samples) {
          const double hs = report.h > 0 ? report.h : default_fd_step(x);
          const Vec g = phi_grads[i](x);
          const Vec col = ad_pow(a, bs[j], k, x, hs);
          const double scale = std::max(1.0, g.norm() * col.norm());
          ok = ok && std::abs(g.dot(col)) <= 1e-5 * scale;
        }
        out["orthogonal i=" + std::to_string(i + 1) + " j=" + std::to_string(j + 1) +
            " k=" + std::to_string(k)] = ok;
      }
    }
    bool ok = ni >= 1;
    for (const Vec& x : samples) {
      if (!ok) break;
      const double hs = report.h > 0 ? report.h : default_fd_step(x);
      const double v = phi_grads[i](x).dot(ad_pow(a, bs[i], ni - 1, x, hs));
      ok = std::abs(v) > report.svd_tol;
    }
    out["nonvanishing i=" + std::to_string(i + 1)] = ok;
  }
  return out;
}

}  // namespace stepsynth
