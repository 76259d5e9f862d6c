#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "regime_lq/error.hpp"
#include "regime_lq/hamiltonians.hpp"
#include "regime_lq/model.hpp"

namespace regime_lq {

/// Uniform grid 0 = t_0 < ... < t_N = T.
class SolverGrid {
 public:
  SolverGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (steps == 0 || !(horizon > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, {"riccati"},
                  "solver grid needs a positive horizon and at least one step");
    }
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t nodes() const noexcept { return steps_ + 1; }
  double step() const noexcept { return horizon_ / static_cast<double>(steps_); }

  double node(std::size_t n) const noexcept {
    if (n >= steps_) return horizon_;
    return horizon_ * static_cast<double>(n) / static_cast<double>(steps_);
  }

  /// Largest node index n with t_n <= t, clamped to [0, N].
  std::size_t index_at_or_before(double t) const noexcept {
    if (t <= 0.0) return 0;
    if (t >= horizon_) return steps_;
    auto n = static_cast<std::size_t>(std::floor(t / step()));
    if (n > steps_) n = steps_;
    while (n > 0 && node(n) > t) --n;
    while (n < steps_ && node(n + 1) <= t) ++n;
    return n;
  }

 private:
  double horizon_;
  std::size_t steps_;
};

enum class RiccatiVariant { Full, Truncated, UpperBound, LowerBound };

inline std::string to_string(RiccatiVariant v) {
  switch (v) {
    case RiccatiVariant::Full: return "full";
    case RiccatiVariant::Truncated: return "truncated";
    case RiccatiVariant::UpperBound: return "upper_bound";
    case RiccatiVariant::LowerBound: return "lower_bound";
  }
  return "?";
}

struct MinimizerStats {
  std::size_t calls = 0;
  std::size_t closed_form = 0;
  std::size_t iterations = 0;
  int max_iterations = 0;

  void record(const HamiltonianResult& r) {
    ++calls;
    if (r.closed_form) ++closed_form;
    iterations += static_cast<std::size_t>(r.iterations);
    max_iterations = std::max(max_iterations, r.iterations);
  }
};

/// P1 and P2 for every regime on the solver grid, indexed [regime][node].
struct RiccatiSolution {
  SolverGrid grid;
  RiccatiVariant variant = RiccatiVariant::Full;
  std::optional<double> radius;
  std::vector<std::vector<double>> P1;
  std::vector<std::vector<double>> P2;
  MinimizerStats stats;

  std::size_t regimes() const noexcept { return P1.size(); }

  double p1(std::size_t i, double t) const { return interpolate(P1.at(i), t); }
  double p2(std::size_t i, double t) const { return interpolate(P2.at(i), t); }

  /// P1(0) (x+)^2 + P2(0) (x-)^2 for initial regime i0.
  double value(double x, std::size_t i0) const {
    const double xp = x > 0.0 ? x : 0.0;
    const double xm = x < 0.0 ? -x : 0.0;
    return P1.at(i0)[0] * xp * xp + P2.at(i0)[0] * xm * xm;
  }

  /// Largest |dP/dt| over all regimes and steps, by first differences.
  double max_slope() const {
    double s = 0.0;
    const double h = grid.step();
    for (const auto* table : {&P1, &P2})
      for (const auto& row : *table)
        for (std::size_t n = 0; n + 1 < row.size(); ++n)
          s = std::max(s, std::abs(row[n + 1] - row[n]) / h);
    return s;
  }

 private:
  double interpolate(const std::vector<double>& row, double t) const {
    if (!(t >= 0.0 && t <= grid.horizon())) {
      throw Error(ErrorCode::TimeOutOfRange, {"riccati", std::nullopt, t, std::nullopt},
                  "time outside [0, T]");
    }
    const std::size_t n = grid.index_at_or_before(t);
    if (n == grid.steps()) return row[n];
    const double w = (t - grid.node(n)) / grid.step();
    return (1.0 - w) * row[n] + w * row[n + 1];
  }
};

struct SolveOptions {
  RiccatiVariant variant = RiccatiVariant::Full;
  std::optional<double> radius;  // required for Truncated
  double tolerance = 1e-10;
  int max_iterations = 10000;
  bool warm_start = true;
};

/// Entries in [-1e-8, 0) are rounded up to zero in the standard case; anything
/// lower is reported as NegativeP.
inline constexpr double kUndershootClamp = 1e-8;

inline constexpr double kDefinitenessTolerance = 1e-12;

namespace detail {

class RiccatiDrift {
 public:
  RiccatiDrift(const RegimeModel& model, const SolveOptions& opt, MinimizerStats& stats)
      : model_(model), opt_(opt), stats_(stats) {
    const std::size_t ell = model.regimes();
    warm11_.assign(ell, {});
    warm21_.assign(ell, {});
    warm12_.assign(ell, std::vector<Eigen::VectorXd>(model.atoms()));
    warm22_.assign(ell, std::vector<Eigen::VectorXd>(model.atoms()));
  }

  // dP/dt = -f(t, P); fills f1, f2 given P1 = y1, P2 = y2.
  void operator()(double t, const std::vector<double>& y1, const std::vector<double>& y2,
                  std::vector<double>& f1, std::vector<double>& f2) {
    const std::size_t ell = model_.regimes();
    const auto& q = model_.generator();
    const auto& nu = model_.jumps();
    const bool optimize =
        opt_.variant == RiccatiVariant::Full || opt_.variant == RiccatiVariant::Truncated;

    for (std::size_t i = 0; i < ell; ++i) {
      const DiffusionSnapshot c = model_.diffusion(i, t);
      const double linear = 2.0 * c.A + c.C.squaredNorm();
      double g1 = linear * y1[i];
      double g2 = linear * y2[i];

      if (opt_.variant != RiccatiVariant::LowerBound) {
        g1 += c.Q;
        g2 += c.Q;
        RiccatiPoint pt;
        pt.P1 = y1[i];
        pt.P2 = y2[i];
        if (optimize) {
          g1 += minimize_cached(HamiltonianId::H11, c, pt, i, t, warm11_[i]);
          g2 += minimize_cached(HamiltonianId::H21, c, pt, i, t, warm21_[i]);
        }
        for (std::size_t a = 0; a < nu.size(); ++a) {
          const double w = nu.weight(a);
          if (w == 0.0) continue;
          const JumpSnapshot js = model_.jump(i, t, a);
          if (optimize) {
            g1 += w * minimize_jump_cached(HamiltonianId::H12, js, pt, i, t, a, warm12_[i][a]);
            g2 += w * minimize_jump_cached(HamiltonianId::H22, js, pt, i, t, a, warm22_[i][a]);
          } else {
            const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model_.dims().m2);
            g1 += w * eval_H12(js, zero, pt);
            g2 += w * eval_H22(js, zero, pt);
          }
        }
      }

      double c1 = 0.0, c2 = 0.0;
      for (std::size_t j = 0; j < ell; ++j) {
        c1 += q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * y1[j];
        c2 += q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * y2[j];
      }
      f1[i] = g1 + c1;
      f2[i] = g2 + c2;
    }
  }

 private:
  MinimizerOptions options(const Eigen::VectorXd& warm) const {
    MinimizerOptions m;
    m.tolerance = opt_.tolerance;
    m.max_iterations = opt_.max_iterations;
    if (opt_.variant == RiccatiVariant::Truncated) m.radius = opt_.radius;
    if (opt_.warm_start && warm.size() > 0) m.warm_start = warm;
    return m;
  }

  double minimize_cached(HamiltonianId id, const DiffusionSnapshot& c, const RiccatiPoint& pt,
                         std::size_t i, double t, Eigen::VectorXd& warm) {
    auto r = minimize_diffusion(id, c, pt, model_.control_cone(), options(warm),
                                {"riccati", i, t, std::nullopt});
    stats_.record(r);
    warm = r.argmin;
    return r.value;
  }

  double minimize_jump_cached(HamiltonianId id, const JumpSnapshot& c, const RiccatiPoint& pt,
                              std::size_t i, double t, std::size_t a, Eigen::VectorXd& warm) {
    auto r = minimize_jump(id, c, pt, model_.jump_cone(), options(warm), {"riccati", i, t, a});
    stats_.record(r);
    warm = r.argmin;
    return r.value;
  }

  const RegimeModel& model_;
  const SolveOptions& opt_;
  MinimizerStats& stats_;
  std::vector<Eigen::VectorXd> warm11_, warm21_;
  std::vector<std::vector<Eigen::VectorXd>> warm12_, warm22_;
};

inline double pd_margin(const DiffusionSnapshot& c, double P) {
  const Eigen::MatrixXd w = c.R1 + P * c.D.transpose() * c.D;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace detail

/// Integrates the coupled Riccati system backward from P(T) = G with
/// classical RK4. Coefficients are frozen at each step's midpoint, which is
/// exact for piecewise-constant tables whose knots sit on grid nodes.
inline RiccatiSolution solve(const RegimeModel& model, const CaseFlags& flags,
                             const SolverGrid& grid, const SolveOptions& opt = {}) {
  if (opt.variant == RiccatiVariant::Truncated && !(opt.radius && *opt.radius > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, {"riccati"}, "truncated variant needs a positive radius");
  }
  if (std::abs(grid.horizon() - model.horizon()) > 1e-12 * model.horizon()) {
    throw Error(ErrorCode::InvalidConfig, {"riccati"}, "solver grid horizon differs from model");
  }

  const std::size_t ell = model.regimes();
  const std::size_t N = grid.steps();
  RiccatiSolution sol{grid, opt.variant,
                      opt.variant == RiccatiVariant::Truncated ? opt.radius : std::nullopt,
                      std::vector<std::vector<double>>(ell, std::vector<double>(N + 1)),
                      std::vector<std::vector<double>>(ell, std::vector<double>(N + 1)),
                      {}};

  std::vector<double> y1(ell), y2(ell);
  for (std::size_t i = 0; i < ell; ++i) {
    const double terminal = opt.variant == RiccatiVariant::LowerBound ? 0.0 : model.terminal_weight(i);
    y1[i] = y2[i] = terminal;
    sol.P1[i][N] = sol.P2[i][N] = terminal;
  }

  detail::RiccatiDrift drift(model, opt, sol.stats);
  const double h = grid.step();
  std::vector<double> k1a(ell), k1b(ell), k2a(ell), k2b(ell), k3a(ell), k3b(ell), k4a(ell),
      k4b(ell), sa(ell), sb(ell);

  const bool optimize =
      opt.variant == RiccatiVariant::Full || opt.variant == RiccatiVariant::Truncated;

  auto check_node = [&](std::size_t n) {
    const double t = grid.node(n);
    for (std::size_t i = 0; i < ell; ++i) {
      for (auto* row : {&sol.P1[i], &sol.P2[i]}) {
        double& p = (*row)[n];
        if (!std::isfinite(p)) {
          throw Error(ErrorCode::NegativeP, {"riccati", i, t, std::nullopt},
                      "Riccati solution is not finite; grid too coarse or model unstable");
        }
        if (flags.standard && p < 0.0) {
          if (p < -kUndershootClamp) {
            throw Error(ErrorCode::NegativeP, {"riccati", i, t, std::nullopt},
                        "P = " + std::to_string(p) + " below zero; grid too coarse");
          }
          p = 0.0;
        }
      }
      if (optimize) {
        const DiffusionSnapshot c = model.diffusion(i, t);
        for (double p : {sol.P1[i][n], sol.P2[i][n]}) {
          if (detail::pd_margin(c, p) <= kDefinitenessTolerance) {
            throw Error(ErrorCode::DefinitenessLost, {"riccati", i, t, std::nullopt},
                        "R1 + P D'D is not positive definite at P = " + std::to_string(p));
          }
        }
      }
    }
  };

  check_node(N);
  for (std::size_t n = N; n-- > 0;) {
    const double t_hi = grid.node(n + 1);
    const double t_mid = 0.5 * (grid.node(n) + t_hi);
    drift(t_mid, y1, y2, k1a, k1b);
    for (std::size_t i = 0; i < ell; ++i) {
      sa[i] = y1[i] + 0.5 * h * k1a[i];
      sb[i] = y2[i] + 0.5 * h * k1b[i];
    }
    drift(t_mid, sa, sb, k2a, k2b);
    for (std::size_t i = 0; i < ell; ++i) {
      sa[i] = y1[i] + 0.5 * h * k2a[i];
      sb[i] = y2[i] + 0.5 * h * k2b[i];
    }
    drift(t_mid, sa, sb, k3a, k3b);
    for (std::size_t i = 0; i < ell; ++i) {
      sa[i] = y1[i] + h * k3a[i];
      sb[i] = y2[i] + h * k3b[i];
    }
    drift(t_mid, sa, sb, k4a, k4b);
    for (std::size_t i = 0; i < ell; ++i) {
      sol.P1[i][n] = y1[i] + h / 6.0 * (k1a[i] + 2.0 * k2a[i] + 2.0 * k3a[i] + k4a[i]);
      sol.P2[i][n] = y2[i] + h / 6.0 * (k1b[i] + 2.0 * k2b[i] + 2.0 * k3b[i] + k4b[i]);
    }
    check_node(n);
    for (std::size_t i = 0; i < ell; ++i) {
      y1[i] = sol.P1[i][n];
      y2[i] = sol.P2[i][n];
    }
  }
  return sol;
}

inline RiccatiSolution solve_truncated(const RegimeModel& model, const CaseFlags& flags,
                                       const SolverGrid& grid, double radius) {
  SolveOptions opt;
  opt.variant = RiccatiVariant::Truncated;
  opt.radius = radius;
  return solve(model, flags, grid, opt);
}

/// Linear comparison system whose jump Hamiltonians are evaluated at v = 0
/// instead of minimized. Dominates the full solution.
inline RiccatiSolution solve_upper_bound(const RegimeModel& model, const SolverGrid& grid) {
  SolveOptions opt;
  opt.variant = RiccatiVariant::UpperBound;
  return solve(model, CaseFlags{false, std::nullopt, 1.0}, grid, opt);
}

/// Linear comparison system without Q or Hamiltonians and zero terminal
/// value; its solution is identically zero.
inline RiccatiSolution solve_lower_bound(const RegimeModel& model, const SolverGrid& grid) {
  SolveOptions opt;
  opt.variant = RiccatiVariant::LowerBound;
  return solve(model, CaseFlags{false, std::nullopt, 1.0}, grid, opt);
}

/// Explicit positive lower bound for the singular cases. Case II decays
/// exponentially from delta; cases I and III follow the logistic-type curve
/// 1 / ((1/delta + 1) e^{c (T - t)} - 1).
struct SingularLowerBound {
  SingularCase kind = SingularCase::II;
  double delta = 1.0;
  double rate = 0.0;
  double horizon = 1.0;

  double operator()(double t) const {
    const double tau = horizon - t;
    if (kind == SingularCase::II) return delta * std::exp(-rate * tau);
    return 1.0 / ((1.0 / delta + 1.0) * std::exp(rate * tau) - 1.0);
  }
};

inline SingularLowerBound lower_bound_singular(const CaseFlags& flags, const RegimeModel& model) {
  if (!flags.singular) {
    throw Error(ErrorCode::NotSingular, {"riccati"}, "no singular case declared");
  }
  if (!(flags.delta > 0.0)) {
    throw Error(ErrorCode::NotSingular, {"riccati"}, "singular bound needs delta > 0");
  }
  const double delta = flags.delta;
  const SingularCase kind = *flags.singular;
  const auto& nu = model.jumps();

  // Smallest linear coefficient and largest quadratic coefficient of the
  // comparison drift, over regimes and every coefficient knot.
  double min_linear = 0.0;
  double max_quadratic = 0.0;
  for (std::size_t i = 0; i < model.regimes(); ++i) {
    for (double t : model.knot_times()) {
      const DiffusionSnapshot c = model.diffusion(i, t);
      const double base = 2.0 * c.A + c.C.squaredNorm();
      const double drift_gap = (c.B1 + c.D.transpose() * c.C).squaredNorm() / delta;
      double jump_b2 = 0.0, jump_mixed = 0.0;
      for (std::size_t a = 0; a < nu.size(); ++a) {
        const JumpSnapshot js = model.jump(i, t, a);
        jump_b2 += nu.weight(a) * js.B2.squaredNorm() / delta;
        jump_mixed += nu.weight(a) * (js.F.transpose() * js.E + js.B2).squaredNorm() / delta;
      }
      switch (kind) {
        case SingularCase::I:
          min_linear = std::min(min_linear, base - drift_gap);
          max_quadratic = std::max(max_quadratic, jump_b2);
          break;
        case SingularCase::II:
          min_linear = std::min(min_linear, base - drift_gap - jump_mixed);
          break;
        case SingularCase::III:
          min_linear = std::min(min_linear, base - jump_mixed);
          max_quadratic = std::max(max_quadratic, drift_gap);
          break;
      }
    }
  }
  return {kind, delta, std::max(-min_linear, max_quadratic), model.horizon()};
}

}  // namespace regime_lq
