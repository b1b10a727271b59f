#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "stepsynth/mappability.hpp"
#include "stepsynth/scenarios.hpp"

using namespace stepsynth;

namespace {

using Kept = std::vector<std::pair<int, int>>;

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Polynomial pair with a closed-form bracket:
// a = (x1^2, x1 x2), b = (x2^3, x1).
const VectorField kPolyA{2, [](const Vec& x) { return vec({x(0) * x(0), x(0) * x(1)}); }};
const VectorField kPolyB{2, [](const Vec& x) { return vec({x(1) * x(1) * x(1), x(0)}); }};

Vec poly_bracket_exact(const Vec& x) {
  Mat bx(2, 2), ax(2, 2);
  bx << 0, 3 * x(1) * x(1), 1, 0;
  ax << 2 * x(0), 0, x(1), x(0);
  return bx * kPolyA(x) - ax * kPolyB(x);
}

std::vector<Vec> random_points(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> pts;
  for (int p = 0; p < count; ++p) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = u(rng);
    pts.push_back(x);
  }
  return pts;
}

}  // namespace

TEST(LieBracket, ZeroDriftGivesZero) {
  const VectorField a = detail::const_field(Vec::Zero(3));
  const VectorField b{3, [](const Vec& x) { return vec({std::sin(x(1)), x(0) * x(2), 1.0}); }};
  for (const Vec& x : random_points(3, 10, 1)) {
    EXPECT_LE(lie_bracket(a, b, x, 1e-4).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LieBracket, PendulumFirstColumn) {
  const Scenario s = pendulum();
  for (const Vec& x : random_points(4, 10, 2)) {
    const Vec br = lie_bracket(s.probe.a, s.probe.bs[0], x, 1e-4);
    EXPECT_LE((br - vec({-1, 0, 0, 0})).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(LieBracket, PlanarExample) {
  const VectorField a{2, [](const Vec& x) { return vec({x(1), 0.0}); }};
  const VectorField b = detail::const_field(vec({0, 1}));
  EXPECT_LE((lie_bracket(a, b, vec({0.3, -2.0}), 1e-4) - vec({-1, 0})).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LieBracket, RejectsBadStep) {
  const VectorField a = detail::const_field(Vec::Zero(2));
  EXPECT_THROW(lie_bracket(a, a, Vec::Zero(2), 0.0), ValidationError);
  EXPECT_THROW(lie_bracket(a, a, Vec::Zero(2), -1e-3), ValidationError);
  EXPECT_THROW(lie_bracket(a, a, Vec::Zero(3), 1e-3), ValidationError);
}

TEST(LieBracket, SecondOrderConvergence) {
  for (const Vec& x : random_points(2, 8, 3)) {
    const Vec exact = poly_bracket_exact(x);
    const double e1 = (lie_bracket(kPolyA, kPolyB, x, 1e-2) - exact).norm();
    const double e2 = (lie_bracket(kPolyA, kPolyB, x, 5e-3) - exact).norm();
    if (e1 < 1e-10) continue;  // truncation term vanishes at this point
    EXPECT_NEAR(e1 / e2, 4.0, 0.2) << "x=" << x.transpose();
  }
}

TEST(LieBracket, ConstantBracketsOfScenarios) {
  // pendulum: [a, b2] = (0, 0, -1, 0); polyodd: all brackets vanish.
  const Scenario p = pendulum();
  const Scenario q = polyodd(3);
  for (const Vec& x : random_points(4, 10, 4)) {
    EXPECT_LE((lie_bracket(p.probe.a, p.probe.bs[1], x, 1e-4) - vec({0, 0, -1, 0})).norm(), 1e-6);
  }
  for (const Vec& x : random_points(3, 10, 5)) {
    for (const auto& b : q.probe.bs) EXPECT_LE(lie_bracket(q.probe.a, b, x, 1e-4).norm(), 1e-6);
  }
}

TEST(AdPow, ZeroOrderIsTheField) {
  const Vec x = vec({0.4, -0.7});
  EXPECT_EQ(ad_pow(kPolyA, kPolyB, 0, x, 1e-3), kPolyB(x));
}

TEST(AdPow, CapAndSign) {
  const Vec x = Vec::Zero(2);
  EXPECT_NO_THROW(ad_pow(kPolyA, kPolyB, 3, x, 1e-3));
  EXPECT_THROW(ad_pow(kPolyA, kPolyB, 4, x, 1e-3), CapExceeded);
  EXPECT_THROW(ad_pow(kPolyA, kPolyB, -1, x, 1e-3), ValidationError);
}

TEST(AdPow, PendulumAndExample51) {
  const Scenario p = pendulum();
  const Vec xp = vec({0.1, 0.2, -0.3, 0.4});
  EXPECT_LE((ad_pow(p.probe.a, p.probe.bs[1], 1, xp, 1e-4) - vec({0, 0, -1, 0})).norm(), 1e-6);

  // A cubic f2 so that f2' varies with x2.
  Example51Fns fns;
  fns.f2 = [](double x2) { return x2 + x2 * x2 * x2; };
  fns.f2_prime = [](double x2) { return 1.0 + 3.0 * x2 * x2; };
  const Scenario e = example51(fns);
  for (double x2 : {-0.8, 0.0, 0.5}) {
    const Vec x = vec({0.3, x2, -0.2});
    const Vec got = ad_pow(e.probe.a, e.probe.bs[1], 1, x, 1e-4);
    EXPECT_LE((got - vec({0, 0, -(1.0 + 3.0 * x2 * x2)})).norm(), 1e-6) << "x2=" << x2;
  }
}

TEST(SelectColumns, Pendulum) {
  const Scenario s = pendulum();
  const ProbeReport r = select_columns(s.probe.a, s.probe.bs, sobol_samples(s.box_lo, s.box_hi, 32));
  EXPECT_EQ(r.indices, (std::vector<int>{2, 2}));
  EXPECT_EQ(r.kept, (Kept{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
  EXPECT_EQ(r.samples.size(), 32u);
  for (const auto& hist : r.rank_history) EXPECT_EQ(hist, (std::vector<int>{1, 2, 3, 4}));
}

TEST(SelectColumns, Example51) {
  const Scenario s = example51();
  const ProbeReport r = select_columns(s.probe.a, s.probe.bs, sobol_samples(s.box_lo, s.box_hi, 32));
  EXPECT_EQ(r.indices, (std::vector<int>{1, 2}));
  EXPECT_EQ(r.kept, (Kept{{0, 0}, {1, 0}, {1, 1}}));
}

TEST(SelectColumns, Trivial) {
  const ProbeReport r = select_columns(detail::const_field(Vec::Zero(1)),
                                       {detail::const_field(Vec::Ones(1))}, {Vec::Zero(1)});
  EXPECT_EQ(r.indices, std::vector<int>{1});
  EXPECT_EQ(r.kept, (Kept{{0, 0}}));
}

TEST(SelectColumns, DependentBracketIsDeleted) {
  // a = (x2, 0, x1), b1 = e2, b2 = e1: the column [a, b1] = -e1 duplicates
  // b2, so (1,1) is deleted while [a, b2] = -e3 completes the rank.
  const VectorField a{3, [](const Vec& x) { return vec({x(1), 0, x(0)}); }};
  const std::vector<VectorField> bs = {detail::const_field(vec({0, 1, 0})),
                                       detail::const_field(vec({1, 0, 0}))};
  const ProbeReport r = select_columns(a, bs, random_points(3, 6, 6));
  EXPECT_EQ(r.kept, (Kept{{0, 0}, {1, 0}, {1, 1}}));
  EXPECT_EQ(r.indices, (std::vector<int>{1, 2}));
}

TEST(SelectColumns, PermutationInvariant) {
  for (const std::string name : {"pendulum", "example51", "polyodd:4"}) {
    const Scenario s = make_scenario(name);
    auto pts = sobol_samples(s.box_lo, s.box_hi, 16);
    const ProbeReport r1 = select_columns(s.probe.a, s.probe.bs, pts);
    std::mt19937_64 rng(7);
    std::shuffle(pts.begin(), pts.end(), rng);
    const ProbeReport r2 = select_columns(s.probe.a, s.probe.bs, pts);
    EXPECT_EQ(r1.kept, r2.kept) << name;
    EXPECT_EQ(r1.indices, r2.indices) << name;
  }
}

TEST(SelectColumns, Errors) {
  const VectorField zero1 = detail::const_field(Vec::Zero(1));
  const VectorField ident{1, [](const Vec& x) { return x; }};
  EXPECT_THROW(select_columns(zero1, {ident}, {vec({0.0}), vec({1.0})}), RegularityViolation);
  EXPECT_THROW(select_columns(detail::const_field(Vec::Zero(2)), {detail::const_field(vec({1, 0}))},
                              {Vec::Zero(2)}),
               RankDeficient);
  EXPECT_THROW(select_columns(zero1, {ident}, {}), ValidationError);
  EXPECT_THROW(select_columns(zero1, {}, {Vec::Zero(1)}), ValidationError);
  EXPECT_THROW(select_columns(zero1, {detail::const_field(Vec::Zero(2))}, {Vec::Zero(1)}),
               ValidationError);
}

TEST(PhiConditions, ScenariosPass) {
  for (const std::string name : {"pendulum", "example51", "intro2d", "polyodd:3", "polyodd:5"}) {
    const Scenario s = make_scenario(name);
    const auto pts = sobol_samples(s.box_lo, s.box_hi, 32);
    const ProbeReport r = select_columns(s.probe.a, s.probe.bs, pts);
    const auto res = verify_phi_conditions(s.probe.phi_grads, r, s.probe.a, s.probe.bs, pts);
    ASSERT_FALSE(res.empty());
    for (const auto& [cond, ok] : res) EXPECT_TRUE(ok) << name << ": " << cond;
  }
}

TEST(PhiConditions, ZeroPhiFailsNonvanishing) {
  const Scenario s = pendulum();
  const auto pts = sobol_samples(s.box_lo, s.box_hi, 8);
  const ProbeReport r = select_columns(s.probe.a, s.probe.bs, pts);
  std::vector<GradFn> grads = s.probe.phi_grads;
  grads[0] = detail::const_grad(Vec::Zero(4));
  const auto res = verify_phi_conditions(grads, r, s.probe.a, s.probe.bs, pts);
  EXPECT_FALSE(res.at("nonvanishing i=1"));
  EXPECT_TRUE(res.at("nonvanishing i=2"));
}

TEST(Probe, IndicesMatchDeclaredBlocks) {
  for (const std::string name : {"intro2d", "example51", "pendulum", "polyodd:2", "polyodd:3",
                                 "polyodd:6"}) {
    const Scenario s = make_scenario(name);
    const ProbeReport r = select_columns(s.probe.a, s.probe.bs, sobol_samples(s.box_lo, s.box_hi, 32));
    EXPECT_EQ(r.indices, s.system.blocks.sizes()) << name;
    int total = 0;
    for (int v : r.indices) total += v;
    EXPECT_EQ(total, s.n) << name;
  }
}

TEST(Sobol, SamplesInsideBoxAndDeterministic) {
  const Vec lo = vec({-1, 0, 2}), hi = vec({1, 0.5, 3});
  const auto a = sobol_samples(lo, hi, 32);
  const auto b = sobol_samples(lo, hi, 32);
  ASSERT_EQ(a.size(), 32u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_TRUE(((a[i] - lo).array() >= 0).all() && ((hi - a[i]).array() >= 0).all());
  }
  EXPECT_THROW(sobol_samples(hi, lo, 4), ValidationError);
  EXPECT_THROW(sobol_samples(lo, hi, 0), ValidationError);
}
