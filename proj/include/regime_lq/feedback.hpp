#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "regime_lq/error.hpp"
#include "regime_lq/hamiltonians.hpp"
#include "regime_lq/model.hpp"
#include "regime_lq/riccati.hpp"

namespace regime_lq {

/// Gains of a sign-split linear feedback: u1 = u1_pos X+ + u1_neg X-, and
/// u2(z) = u2_pos[z] X+ + u2_neg[z] X- for every jump atom z.
struct SignSplitGains {
  Eigen::VectorXd u1_pos;
  Eigen::VectorXd u1_neg;
  std::vector<Eigen::VectorXd> u2_pos;
  std::vector<Eigen::VectorXd> u2_neg;
};

struct ControlValue {
  Eigen::VectorXd u1;
  std::vector<Eigen::VectorXd> u2;  // one entry per atom
};

/// Optimal state feedback built from a Riccati solution. Argmin tables live on
/// the solver grid and are held constant from each node to the next.
class FeedbackLaw {
 public:
  FeedbackLaw(RiccatiSolution solution, std::vector<std::vector<Eigen::VectorXd>> v11,
              std::vector<std::vector<Eigen::VectorXd>> v21,
              std::vector<std::vector<std::vector<Eigen::VectorXd>>> v12,
              std::vector<std::vector<std::vector<Eigen::VectorXd>>> v22)
      : solution_(std::move(solution)),
        v11_(std::move(v11)),
        v21_(std::move(v21)),
        v12_(std::move(v12)),
        v22_(std::move(v22)) {}

  const RiccatiSolution& solution() const noexcept { return solution_; }
  const SolverGrid& grid() const noexcept { return solution_.grid; }
  std::size_t regimes() const noexcept { return v11_.size(); }
  std::size_t atoms() const noexcept { return v12_.empty() || v12_[0].empty() ? 0 : v12_[0][0].size(); }

  const Eigen::VectorXd& v11(std::size_t i, std::size_t n) const { return v11_.at(i).at(n); }
  const Eigen::VectorXd& v21(std::size_t i, std::size_t n) const { return v21_.at(i).at(n); }
  const Eigen::VectorXd& v12(std::size_t i, std::size_t n, std::size_t a) const {
    return v12_.at(i).at(n).at(a);
  }
  const Eigen::VectorXd& v22(std::size_t i, std::size_t n, std::size_t a) const {
    return v22_.at(i).at(n).at(a);
  }

  /// Node index whose table entry applies at time t.
  std::size_t node_at(double t) const {
    if (!(t >= 0.0 && t <= grid().horizon())) {
      throw Error(ErrorCode::TimeOutOfRange, {"feedback", std::nullopt, t, std::nullopt},
                  "time outside [0, T]");
    }
    return grid().index_at_or_before(t);
  }

  SignSplitGains gains(std::size_t i, double t) const {
    const std::size_t n = node_at(t);
    return {v11_.at(i)[n], v21_.at(i)[n], v12_.at(i)[n], v22_.at(i)[n]};
  }

  /// Times at which the gains may change.
  std::vector<double> breakpoints() const {
    std::vector<double> b(grid().steps());
    for (std::size_t n = 0; n < b.size(); ++n) b[n] = grid().node(n);
    return b;
  }

  /// Control at time t given the left limits X(t-) = x_left and regime(t-).
  ControlValue control_at(double t, double x_left, std::size_t regime) const {
    const std::size_t n = node_at(t);
    const std::size_t na = atoms();
    ControlValue out;
    if (x_left > 0.0) {
      out.u1 = v11_.at(regime)[n] * x_left;
      out.u2.reserve(na);
      for (std::size_t a = 0; a < na; ++a) out.u2.push_back(v12_[regime][n][a] * x_left);
    } else if (x_left < 0.0) {
      out.u1 = v21_.at(regime)[n] * (-x_left);
      out.u2.reserve(na);
      for (std::size_t a = 0; a < na; ++a) out.u2.push_back(v22_[regime][n][a] * (-x_left));
    } else {
      out.u1 = Eigen::VectorXd::Zero(v11_.at(regime)[n].size());
      const Eigen::Index m2 = na ? v12_[regime][n][0].size() : 0;
      out.u2.assign(na, Eigen::VectorXd::Zero(m2));
    }
    return out;
  }

 private:
  RiccatiSolution solution_;
  std::vector<std::vector<Eigen::VectorXd>> v11_, v21_;
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> v12_, v22_;
};

/// Minimizes every Hamiltonian at every node, starting each search from zero
/// so the selected minimizer does not depend on evaluation order.
inline FeedbackLaw build_law(const RegimeModel& model, const RiccatiSolution& solution) {
  const std::size_t ell = model.regimes();
  const std::size_t nodes = solution.grid.nodes();
  const std::size_t na = model.atoms();
  if (solution.regimes() != ell) {
    throw Error(ErrorCode::DimensionMismatch, {"feedback"},
                "solution and model disagree on the number of regimes");
  }

  MinimizerOptions opt;
  opt.radius = solution.radius;

  std::vector<std::vector<Eigen::VectorXd>> v11(ell, std::vector<Eigen::VectorXd>(nodes));
  auto v21 = v11;
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> v12(
      ell, std::vector<std::vector<Eigen::VectorXd>>(nodes, std::vector<Eigen::VectorXd>(na)));
  auto v22 = v12;

  for (std::size_t i = 0; i < ell; ++i) {
    for (std::size_t n = 0; n < nodes; ++n) {
      const double t = solution.grid.node(n);
      RiccatiPoint pt;
      pt.P1 = solution.P1[i][n];
      pt.P2 = solution.P2[i][n];
      const DiffusionSnapshot c = model.diffusion(i, t);
      const ErrorContext ctx{"feedback", i, t, std::nullopt};
      v11[i][n] = minimize_diffusion(HamiltonianId::H11, c, pt, model.control_cone(), opt, ctx).argmin;
      v21[i][n] = minimize_diffusion(HamiltonianId::H21, c, pt, model.control_cone(), opt, ctx).argmin;
      for (std::size_t a = 0; a < na; ++a) {
        const JumpSnapshot js = model.jump(i, t, a);
        const ErrorContext actx{"feedback", i, t, a};
        v12[i][n][a] = minimize_jump(HamiltonianId::H12, js, pt, model.jump_cone(), opt, actx).argmin;
        v22[i][n][a] = minimize_jump(HamiltonianId::H22, js, pt, model.jump_cone(), opt, actx).argmin;
      }
    }
  }
  return FeedbackLaw(solution, std::move(v11), std::move(v21), std::move(v12), std::move(v22));
}

}  // namespace regime_lq
