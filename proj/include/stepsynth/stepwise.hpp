#pragma once

// Stepwise synthesis engine.
//
// The block system z' = A0 z + B0 H(z, u) is driven to the origin one block
// at a time: step i applies its own positional control until block i is at
// rest, while the controls of later steps keep the earlier blocks pinned.
// Switching laws are integrated with a fixed-step RK4 whose steps are split
// at localized surface crossings.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stepsynth/ctrl_fn.hpp"
#include "stepsynth/integrator.hpp"

namespace stepsynth {

// Block sizes (n_1, ..., n_m) and start offsets s_0 = 0, s_i = n_1 + ... + n_i.
class BlockPartition {
 public:
  BlockPartition() = default;
  explicit BlockPartition(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw ValidationError("block partition needs at least one block");
    offsets_.assign(1, 0);
    for (int s : sizes_) {
      if (s < 1) throw ValidationError("block sizes must be positive");
      offsets_.push_back(offsets_.back() + s);
    }
  }

  int m() const { return static_cast<int>(sizes_.size()); }
  int n() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int size(int i) const { return sizes_.at(i); }
  int offset(int i) const { return offsets_.at(i); }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<int>& offsets() const { return offsets_; }

  Vec block(const Vec& z, int i) const { return z.segment(offset(i), size(i)); }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
};

using ControlFn = std::function<double(const Vec& z)>;
// Signed residual of a switching curve in block coordinates; negative below.
using CurveFn = std::function<double(const Vec& zi)>;

// Theta-feedback switching: u- on S+ (sigma > 0), u+ on S- (sigma < 0) and
// u0 inside the surface band.
struct ThetaSwitch {
  LinearSynth synth;
  ControlFn u_plus;
  ControlFn u_minus;
  ControlFn u_zero;  // optional; empty means midpoint, Filippov sliding on the surface
  double surface_tol = 1e-9;
};

// Switching curve in a block's phase plane: u+ below, u- above. On the
// curve the + branch owns first coordinate >= 0, the - branch the rest.
struct CurveSwitch {
  CurveFn residual;
  ControlFn u_plus;
  ControlFn u_minus;
  double curve_tol = 1e-9;
};

// Constant levels against the sign of one block coordinate:
// -level_pos where it is positive, +level_neg where it is negative.
struct ConstSign {
  double level_pos = 1.0;
  double level_neg = 1.0;
  int coord = -1;  // index inside the block; -1 is the last one
};

using StepPolicy = std::variant<ThetaSwitch, CurveSwitch, ConstSign>;

inline std::string policy_name(const StepPolicy& p) {
  switch (p.index()) {
    case 0: return "theta-switch";
    case 1: return "curve-switch";
    default: return "const-sign";
  }
}

enum class Branch { Plus, Minus, Zero };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::Plus: return "plus";
    case Branch::Minus: return "minus";
    case Branch::Zero: return "zero";
  }
  return "?";
}

struct BlockSystem {
  BlockPartition blocks;
  std::function<Vec(const Vec& z, double u)> H;  // m residual dynamics

  // z'_{s} = z_{s+1} inside each block, z'_{s_i} = H_i(z, u).
  Vec rhs(const Vec& z, double u) const {
    Vec dz(z.size());
    const Vec h = H(z, u);
    for (int i = 0; i < blocks.m(); ++i) {
      const int off = blocks.offset(i);
      const int k = blocks.size(i);
      for (int j = 0; j + 1 < k; ++j) dz(off + j) = z(off + j + 1);
      dz(off + k - 1) = h(i);
    }
    return dz;
  }
};

// ||z^i||_inf <= delta, i 0-based.
inline bool step_done(const Vec& z, const BlockPartition& blocks, int i, double delta) {
  return blocks.block(z, i).cwiseAbs().maxCoeff() <= delta;
}

namespace detail {

// Per-step view of a policy: switching function, band, branch controls.
class StepSurface {
 public:
  StepSurface(const StepPolicy& p, const BlockPartition& blocks, int i)
      : policy_(p), blocks_(blocks), i_(i) {
    if (const auto* th = std::get_if<ThetaSwitch>(&policy_)) {
      if (th->synth.dim() != blocks_.size(i_)) {
        throw ValidationError("theta-switch synth dimension does not match block " +
                              std::to_string(i_ + 1));
      }
    }
  }

  Vec block(const Vec& z) const { return blocks_.block(z, i_); }

  double s(const Vec& z) const {
    const Vec zi = block(z);
    return std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ThetaSwitch>) {
            return theta_of(p.synth, zi).sigma;
          } else if constexpr (std::is_same_v<T, CurveSwitch>) {
            return p.residual(zi);
          } else {
            return zi(coord_index(p, zi));
          }
        },
        policy_);
  }

  double band(const Vec& z) const {
    return std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ThetaSwitch>) {
            return p.surface_tol * 2.0 * p.synth.d();
          } else if constexpr (std::is_same_v<T, CurveSwitch>) {
            return p.curve_tol * std::max(1.0, block(z).cwiseAbs().maxCoeff());
          } else {
            return 0.0;
          }
        },
        policy_);
  }

  // Branch owning state z with switching value sv (band and tie rules).
  Branch classify(double sv, const Vec& z) const {
    const double b = band(z);
    if (sv > b) return Branch::Minus;
    if (sv < -b) return Branch::Plus;
    if (std::holds_alternative<CurveSwitch>(policy_)) {
      return block(z)(0) >= 0.0 ? Branch::Plus : Branch::Minus;
    }
    if (std::holds_alternative<ConstSign>(policy_) && sv != 0.0) {
      return sv > 0 ? Branch::Minus : Branch::Plus;
    }
    return Branch::Zero;
  }

  Branch classify(const Vec& z) const { return classify(s(z), z); }

  // True once z has left the region of branch b by more than the band.
  bool leaves(Branch b, const Vec& z) const {
    const double sv = s(z);
    const double bd = band(z);
    switch (b) {
      case Branch::Plus: return sv > bd;
      case Branch::Minus: return sv < -bd;
      case Branch::Zero: return std::abs(sv) > bd;
    }
    return false;
  }

  // Branch after crossing out of b.
  Branch after(Branch b, const Vec& z) const {
    const double sv = s(z);
    Branch next = classify(sv, z);
    if (next == b || next == Branch::Zero) next = sv > 0 ? Branch::Minus : Branch::Plus;
    return next;
  }

  double control(Branch b, const Vec& z) const {
    return std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ThetaSwitch>) {
            if (b == Branch::Plus) return p.u_plus(z);
            if (b == Branch::Minus) return p.u_minus(z);
            return p.u_zero ? p.u_zero(z) : 0.5 * (p.u_plus(z) + p.u_minus(z));
          } else if constexpr (std::is_same_v<T, CurveSwitch>) {
            if (b == Branch::Zero) b = classify(z) == Branch::Plus ? Branch::Plus : Branch::Minus;
            return b == Branch::Plus ? p.u_plus(z) : p.u_minus(z);
          } else {
            if (b == Branch::Plus) return p.level_neg;
            if (b == Branch::Minus) return -p.level_pos;
            return 0.0;
          }
        },
        policy_);
  }

  bool has_u_zero() const {
    const auto* th = std::get_if<ThetaSwitch>(&policy_);
    return th && static_cast<bool>(th->u_zero);
  }

  // Curve steps finish where the last block coordinate returns to zero.
  bool has_arrival() const { return std::holds_alternative<CurveSwitch>(policy_); }
  double arrival(const Vec& z) const { return block(z)(blocks_.size(i_) - 1); }

  // Multi-dimensional Theta steps refine the step size as Theta -> 0.
  bool shrinks() const {
    return std::holds_alternative<ThetaSwitch>(policy_) && blocks_.size(i_) > 1;
  }

  std::optional<double> theta(const Vec& z) const {
    if (const auto* th = std::get_if<ThetaSwitch>(&policy_)) return theta_of(th->synth, block(z)).theta;
    return std::nullopt;
  }

 private:
  static int coord_index(const ConstSign& p, const Vec& zi) {
    const int k = static_cast<int>(zi.size());
    const int c = p.coord < 0 ? k + p.coord : p.coord;
    if (c < 0 || c >= k) throw ValidationError("const-sign coordinate outside the block");
    return c;
  }

  const StepPolicy& policy_;
  const BlockPartition& blocks_;
  int i_;
};

}  // namespace detail

// Control of step i (0-based) at z by the three-branch rule of the policy.
inline double eval_control(const StepPolicy& policy, const Vec& z, const BlockPartition& blocks,
                           int i) {
  detail::StepSurface surf(policy, blocks, i);
  return surf.control(surf.classify(z), z);
}

struct StepRecord {
  int i = 0;  // 1-based
  double t_start = 0;
  double t_end = 0;
  std::optional<double> theta_bound;
  std::string policy;
  std::vector<double> switch_times;
  int slide_entries = 0;
};

struct StepwiseRun {
  int active_step = 0;  // 1-based step being run; m once all are complete
  std::vector<double> step_times;  // T_1, ..., T_m
  double done_tol = 1e-8;
  std::vector<std::optional<double>> theta_bounds;
  std::vector<StepRecord> steps;
  std::vector<double> hold_residuals;  // per block: max ||z^j||_inf on [T_j, T]
  double total_time = 0;
};

struct OrchestrateResult {
  StepwiseRun run;
  Trajectory traj;
};

// Integration settings plus an optional original chart. With a chart the
// trajectory also records x = from_z(z); with integrate_x_chart the engine
// integrates x' = f(x, u) and reads switching functions through to_z.
class Simulator {
 public:
  explicit Simulator(IntegratorConfig cfg = {}, std::optional<Chart> chart = std::nullopt)
      : cfg_(cfg), chart_(std::move(chart)) {
    cfg_.validate();
    if (cfg_.integrate_x_chart && !chart_) {
      throw ValidationError("x-chart integration requested without a chart");
    }
  }

  const IntegratorConfig& config() const { return cfg_; }
  const std::optional<Chart>& chart() const { return chart_; }

 private:
  IntegratorConfig cfg_;
  std::optional<Chart> chart_;
};

namespace detail {

class Engine {
 public:
  Engine(const BlockSystem& sys, const std::vector<StepPolicy>& policies, const Simulator& sim,
         double delta)
      : sys_(sys), policies_(policies), sim_(sim), cfg_(sim.config()), delta_(delta) {
    run_.done_tol = delta;
    run_.hold_residuals.assign(sys.blocks.m(), 0.0);
  }

  OrchestrateResult run(const Vec& z0) {
    const bool xmode = cfg_.integrate_x_chart;
    y_ = xmode ? sim_.chart()->from_z(z0) : z0;
    z_ = z0;
    t_ = 0.0;
    record(0.0);
    for (int i = 0; i < sys_.blocks.m(); ++i) run_step(i);
    run_.active_step = sys_.blocks.m();
    run_.total_time = t_;
    return {std::move(run_), std::move(traj_)};
  }

 private:
  Vec to_z(const Vec& y) const {
    return cfg_.integrate_x_chart ? sim_.chart()->to_z(y) : y;
  }

  Vec rhs(const Vec& y, double u) const {
    return cfg_.integrate_x_chart ? sim_.chart()->f(y, u) : sys_.rhs(y, u);
  }

  void record(double u) {
    traj_.times.push_back(t_);
    traj_.z.push_back(z_);
    if (cfg_.integrate_x_chart) {
      traj_.x.push_back(y_);
    } else if (sim_.chart() && sim_.chart()->from_z) {
      traj_.x.push_back(sim_.chart()->from_z(z_));
    } else {
      traj_.x.push_back(z_);
    }
    traj_.controls.push_back(u);
  }

  void event(EventKind kind, int step, std::string detail) {
    traj_.events.push_back({t_, kind, step, std::move(detail), traj_.size() - 1});
  }

  void check_hold(int i) {
    for (int j = 0; j < i; ++j) {
      const double r = sys_.blocks.block(z_, j).cwiseAbs().maxCoeff();
      run_.hold_residuals[j] = std::max(run_.hold_residuals[j], r);
      if (r > 10.0 * delta_) {
        throw HoldViolation("block " + std::to_string(j + 1) + " drifted to " +
                            std::to_string(r) + " at t=" + std::to_string(t_) + " during step " +
                            std::to_string(i + 1));
      }
    }
  }

  void run_step(int i) {
    const StepPolicy& policy = policies_[i];
    StepSurface surf(policy, sys_.blocks, i);
    run_.active_step = i + 1;

    StepRecord rec;
    rec.i = i + 1;
    rec.t_start = t_;
    rec.policy = policy_name(policy);
    rec.theta_bound = surf.theta(z_);
    run_.theta_bounds.push_back(rec.theta_bound);

    const double t_start = t_;
    const double dt = cfg_.dt;
    Branch b = surf.classify(z_);
    if (!step_done(z_, sys_.blocks, i, delta_)) traj_.controls.back() = surf.control(b, z_);

    bool sliding = false;
    double last_switch = -std::numeric_limits<double>::infinity();

    while (!step_done(z_, sys_.blocks, i, delta_)) {
      if (rec.theta_bound && t_ - t_start > 2.0 * *rec.theta_bound + dt) {
        throw StepTimeout("step " + std::to_string(i + 1) + " exceeded twice its Theta bound " +
                          std::to_string(*rec.theta_bound));
      }
      if (t_ >= cfg_.t_max) {
        throw Timeout("t_max=" + std::to_string(cfg_.t_max) + " reached in step " +
                      std::to_string(i + 1));
      }

      double h = std::min(dt, cfg_.t_max - t_);
      if (surf.shrinks()) {
        h = std::min(h, std::max(0.01 * *surf.theta(z_), 1e-15));
      }

      auto advance_with = [&](Branch br, double tau) {
        return rk4_step([&](const Vec& y) { return rhs(y, surf.control(br, to_z(y))); }, y_, tau);
      };

      if (sliding && !surf.has_u_zero()) {
        const Vec zf = to_z(y_);
        const double rp = s_rate(surf, y_, rhs(y_, surf.control(Branch::Plus, zf)));
        const double rm = s_rate(surf, y_, rhs(y_, surf.control(Branch::Minus, zf)));
        if (rp > 0 && rm < 0) {
          Vec y1 = rk4_step([&](const Vec& y) { return filippov(surf, y, h).first; }, y_, h);
          if (!y1.allFinite()) {
            throw NonFinite("state left the finite range at t=" + std::to_string(t_));
          }
          t_ += h;
          y_ = std::move(y1);
          z_ = to_z(y_);
          record(filippov(surf, y_, h).second);
          check_hold(i);
          continue;
        }
        // Both fields cross the surface the same way: leave it transversally.
        sliding = false;
        last_switch = -std::numeric_limits<double>::infinity();
        b = surf.classify(z_);
        if (b == Branch::Zero) b = rp > 0 ? Branch::Minus : Branch::Plus;
        event(EventKind::SurfaceSlide, i + 1, "release");
      }

      std::optional<Vec> trial;
      if (sliding) {
        const double s0 = surf.s(z_);
        const Branch home = s0 > 0 ? Branch::Minus : Branch::Plus;
        Vec y_home = advance_with(home, h);
        const double s1 = surf.s(to_z(y_home));
        if (std::abs(s0) > surf.band(z_) && (s0 > 0) == (s1 > 0)) {
          sliding = false;
          b = home;
          trial = std::move(y_home);
          event(EventKind::SurfaceSlide, i + 1, "release");
        } else {
          b = Branch::Zero;
        }
      }

      auto advance = [&](double tau) { return advance_with(b, tau); };
      Vec y1 = trial ? *trial : advance(h);
      if (!y1.allFinite()) {
        throw NonFinite("state left the finite range at t=" + std::to_string(t_));
      }
      const Vec z1 = to_z(y1);

      double tau = h;
      Vec y_next = y1;
      bool switched = false;

      if (!sliding && surf.leaves(b, z1)) {
        auto [ts, ys] = localize(
            advance, [&](const Vec& y) { return surf.leaves(b, to_z(y)); }, h, y1,
            cfg_.event_tol);
        tau = ts;
        y_next = std::move(ys);
        switched = true;
      }
      if (surf.has_arrival()) {
        const double a0 = surf.arrival(z_);
        const double a1 = surf.arrival(to_z(y_next));
        if (a0 != 0.0 && (a0 > 0) != (a1 > 0) && a1 != 0.0) {
          auto [ta, ya] = localize(
              advance, [&](const Vec& y) { return (surf.arrival(to_z(y)) > 0) != (a0 > 0); },
              tau, y_next, cfg_.event_tol);
          if (ta < tau) {
            tau = ta;
            y_next = std::move(ya);
            switched = false;
          }
        }
      }

      t_ += tau;
      y_ = std::move(y_next);
      z_ = to_z(y_);

      if (switched) {
        const Branch next = surf.after(b, z_);
        record(surf.control(next, z_));
        event(EventKind::BranchSwitch, i + 1,
              std::string(to_string(b)) + "->" + to_string(next));
        rec.switch_times.push_back(t_);
        if (t_ - last_switch <= 4.0 * dt) {
          sliding = true;
          ++rec.slide_entries;
          event(EventKind::SurfaceSlide, i + 1, "enter");
        }
        last_switch = t_;
        b = next;
      } else {
        record(surf.control(b, z_));
      }
      check_hold(i);
    }

    rec.t_end = t_;
    run_.step_times.push_back(t_);
    run_.hold_residuals[i] =
        std::max(run_.hold_residuals[i], sys_.blocks.block(z_, i).cwiseAbs().maxCoeff());
    event(EventKind::StepComplete, i + 1, "T" + std::to_string(i + 1));
    run_.steps.push_back(std::move(rec));
  }

  // Rate of the switching function along the field f at y, by central differences.
  double s_rate(const StepSurface& surf, const Vec& y, const Vec& f) const {
    const double eta = 1e-7 * std::max(1.0, y.cwiseAbs().maxCoeff()) /
                       std::max(1.0, f.cwiseAbs().maxCoeff());
    return (surf.s(to_z(y + eta * f)) - surf.s(to_z(y - eta * f))) / (2.0 * eta);
  }

  // Filippov sliding field: the convex combination of the two branch fields
  // whose s-rate relaxes s to zero over one step h. Returns (field, control).
  std::pair<Vec, double> filippov(const StepSurface& surf, const Vec& y, double h) const {
    const Vec z = to_z(y);
    const double up = surf.control(Branch::Plus, z);
    const double um = surf.control(Branch::Minus, z);
    const Vec fp = rhs(y, up);
    const Vec fm = rhs(y, um);
    const double rp = s_rate(surf, y, fp);
    const double rm = s_rate(surf, y, fm);
    double lam = 0.5;
    if (rp - rm > 0) lam = std::clamp((-surf.s(z) / h - rm) / (rp - rm), 0.0, 1.0);
    return {lam * fp + (1.0 - lam) * fm, lam * up + (1.0 - lam) * um};
  }

  const BlockSystem& sys_;
  const std::vector<StepPolicy>& policies_;
  const Simulator& sim_;
  const IntegratorConfig& cfg_;
  double delta_;

  double t_ = 0;
  Vec y_;
  Vec z_;
  StepwiseRun run_;
  Trajectory traj_;
};

}  // namespace detail

// Runs the m steps in order from z0. Step i holds policy i until block i is
// within delta; earlier blocks are monitored against 10 * delta throughout.
inline OrchestrateResult orchestrate(const BlockSystem& sys, const Vec& z0,
                                     const std::vector<StepPolicy>& policies,
                                     const Simulator& sim, double delta = 1e-8) {
  if (static_cast<int>(policies.size()) != sys.blocks.m()) {
    throw ValidationError("orchestrate: expected " + std::to_string(sys.blocks.m()) +
                          " policies, got " + std::to_string(policies.size()));
  }
  if (z0.size() != sys.blocks.n()) throw ValidationError("orchestrate: z0 has the wrong size");
  if (!z0.allFinite()) throw ValidationError("orchestrate: z0 must be finite");
  if (!(delta > 0)) throw ValidationError("orchestrate: delta must be positive");
  detail::Engine engine(sys, policies, sim, delta);
  return engine.run(z0);
}

// Worst margins of H_i(z, u+) - d and -d - H_i(z, u-) over sampled states;
// both are >= 0 when the theta-switch precondition holds.
struct PolicyAudit {
  double plus_margin = std::numeric_limits<double>::infinity();
  double minus_margin = std::numeric_limits<double>::infinity();
};

inline PolicyAudit audit_theta_policy(const BlockSystem& sys, const ThetaSwitch& p, int i,
                                      const std::vector<Vec>& samples) {
  PolicyAudit a;
  const double d = p.synth.d();
  for (const Vec& z : samples) {
    a.plus_margin = std::min(a.plus_margin, sys.H(z, p.u_plus(z))(i) - d);
    a.minus_margin = std::min(a.minus_margin, -d - sys.H(z, p.u_minus(z))(i));
  }
  return a;
}

}  // namespace stepsynth
