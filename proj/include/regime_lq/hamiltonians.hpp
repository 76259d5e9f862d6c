#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "regime_lq/cone.hpp"
#include "regime_lq/error.hpp"
#include "regime_lq/model.hpp"

namespace regime_lq {

enum class HamiltonianId { H11, H12, H21, H22 };

inline std::string to_string(HamiltonianId id) {
  switch (id) {
    case HamiltonianId::H11: return "H11";
    case HamiltonianId::H12: return "H12";
    case HamiltonianId::H21: return "H21";
    case HamiltonianId::H22: return "H22";
  }
  return "?";
}

/// Arguments (P1, P2, Lambda1, Lambda2, Gamma1, Gamma2) of the Hamiltonians.
/// Lambda vectors have n1 entries and Gamma vectors n2 entries taken at the
/// atom being evaluated; an empty vector stands for zero. With deterministic
/// coefficients every Lambda and Gamma is zero.
struct RiccatiPoint {
  double P1 = 0.0;
  double P2 = 0.0;
  Eigen::VectorXd Lambda1;
  Eigen::VectorXd Lambda2;
  Eigen::VectorXd Gamma1;
  Eigen::VectorXd Gamma2;
};

struct HamiltonianResult {
  double value = 0.0;
  Eigen::VectorXd argmin;
  int iterations = 0;
  bool converged = false;
  bool closed_form = false;
};

struct MinimizerOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  std::optional<double> radius;              // feasible set becomes cone ∩ {|v| <= radius}
  std::optional<Eigen::VectorXd> warm_start; // used only if it beats v = 0
  bool throw_on_no_convergence = true;
};

/// Weights P + Gamma that dip below zero by at most this much are clamped.
inline constexpr double kWeightClampTolerance = 1e-10;

namespace detail {

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }
inline double negative_part(double x) { return x < 0.0 ? -x : 0.0; }

inline double clamp_weight(double w) {
  if (w < -kWeightClampTolerance) {
    throw Error(ErrorCode::NegativeP, {"hamiltonians"},
                "Riccati weight " + std::to_string(w) + " is negative beyond clamp tolerance");
  }
  return w > 0.0 ? w : 0.0;
}

inline double entry_or_zero(const Eigen::VectorXd& v, Eigen::Index k) {
  return v.size() == 0 ? 0.0 : v[k];
}

}  // namespace detail

/// v'(R1 + P D'D) v + 2 s (P (B1 + D'C) + D'Lambda)' v with s = +1 for H11 and
/// s = -1 for H21.
class DiffusionHamiltonian {
 public:
  DiffusionHamiltonian(const DiffusionSnapshot& c, double P, const Eigen::VectorXd& Lambda,
                       double sign)
      : weight_(c.R1 + P * c.D.transpose() * c.D) {
    linear_ = P * (c.B1 + c.D.transpose() * c.C);
    if (Lambda.size() != 0) linear_ += c.D.transpose() * Lambda;
    linear_ *= sign;
  }

  static DiffusionHamiltonian h11(const DiffusionSnapshot& c, const RiccatiPoint& pt) {
    return {c, pt.P1, pt.Lambda1, 1.0};
  }
  static DiffusionHamiltonian h21(const DiffusionSnapshot& c, const RiccatiPoint& pt) {
    return {c, pt.P2, pt.Lambda2, -1.0};
  }

  double value(const Eigen::VectorXd& v) const {
    return v.dot(weight_ * v) + 2.0 * linear_.dot(v);
  }

  void gradient(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.noalias() = 2.0 * (weight_ * v);
    out += 2.0 * linear_;
  }

  double lipschitz() const { return 2.0 * weight_.norm(); }

  const Eigen::MatrixXd& weight() const { return weight_; }
  const Eigen::VectorXd& linear() const { return linear_; }

 private:
  Eigen::MatrixXd weight_;
  Eigen::VectorXd linear_;
};

/// Jump Hamiltonians H12 and H22 for a single atom. The positive- and
/// negative-part squares make them convex and continuously differentiable
/// whenever the weights P + Gamma are nonnegative.
class JumpHamiltonian {
 public:
  JumpHamiltonian(HamiltonianId id, const JumpSnapshot& c, const RiccatiPoint& pt)
      : reflected_(id == HamiltonianId::H22), c_(c), P1_(pt.P1), P2_(pt.P2) {
    const Eigen::Index n2 = c.E.size();
    w1_.resize(n2);
    w2_.resize(n2);
    for (Eigen::Index k = 0; k < n2; ++k) {
      w1_[k] = detail::clamp_weight(pt.P1 + detail::entry_or_zero(pt.Gamma1, k));
      w2_[k] = detail::clamp_weight(pt.P2 + detail::entry_or_zero(pt.Gamma2, k));
    }
    fv_.resize(n2);
  }

  double value(const Eigen::VectorXd& v) const {
    fv_.noalias() = c_.F * v;
    double sum = v.dot(c_.R2 * v);
    const Eigen::Index n2 = fv_.size();
    if (!reflected_) {
      for (Eigen::Index k = 0; k < n2; ++k) {
        const double s = 1.0 + c_.E[k] + fv_[k];
        const double sp = detail::positive_part(s);
        const double sn = detail::negative_part(s);
        sum += w1_[k] * (sp * sp - 1.0) - 2.0 * P1_ * (c_.E[k] + fv_[k]) + w2_[k] * sn * sn;
      }
      sum += 2.0 * P1_ * c_.B2.dot(v);
    } else {
      for (Eigen::Index k = 0; k < n2; ++k) {
        const double s = -1.0 - c_.E[k] + fv_[k];
        const double sp = detail::positive_part(s);
        const double sn = detail::negative_part(s);
        sum += w2_[k] * (sn * sn - 1.0) - 2.0 * P2_ * (c_.E[k] - fv_[k]) + w1_[k] * sp * sp;
      }
      sum -= 2.0 * P2_ * c_.B2.dot(v);
    }
    return sum;
  }

  void gradient(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    fv_.noalias() = c_.F * v;
    out.noalias() = 2.0 * (c_.R2 * v);
    const Eigen::Index n2 = fv_.size();
    // coef_k multiplies the k-th row of F.
    for (Eigen::Index k = 0; k < n2; ++k) {
      double coef;
      if (!reflected_) {
        const double s = 1.0 + c_.E[k] + fv_[k];
        coef = 2.0 * w1_[k] * detail::positive_part(s) - 2.0 * P1_ -
               2.0 * w2_[k] * detail::negative_part(s);
      } else {
        const double s = -1.0 - c_.E[k] + fv_[k];
        coef = -2.0 * w2_[k] * detail::negative_part(s) + 2.0 * P2_ +
               2.0 * w1_[k] * detail::positive_part(s);
      }
      out += coef * c_.F.row(k).transpose();
    }
    if (!reflected_) out += 2.0 * P1_ * c_.B2;
    else out -= 2.0 * P2_ * c_.B2;
  }

  double lipschitz() const {
    const double w = std::max(w1_.size() ? w1_.maxCoeff() : 0.0, w2_.size() ? w2_.maxCoeff() : 0.0);
    return 2.0 * c_.R2.norm() + 2.0 * w * c_.F.squaredNorm();
  }

 private:
  bool reflected_;
  const JumpSnapshot& c_;
  double P1_;
  double P2_;
  Eigen::VectorXd w1_;
  Eigen::VectorXd w2_;
  mutable Eigen::VectorXd fv_;
};

inline double eval_H11(const DiffusionSnapshot& c, const Eigen::VectorXd& v, const RiccatiPoint& pt) {
  return DiffusionHamiltonian::h11(c, pt).value(v);
}
inline double eval_H21(const DiffusionSnapshot& c, const Eigen::VectorXd& v, const RiccatiPoint& pt) {
  return DiffusionHamiltonian::h21(c, pt).value(v);
}
inline double eval_H12(const JumpSnapshot& c, const Eigen::VectorXd& v, const RiccatiPoint& pt) {
  return JumpHamiltonian(HamiltonianId::H12, c, pt).value(v);
}
inline double eval_H22(const JumpSnapshot& c, const Eigen::VectorXd& v, const RiccatiPoint& pt) {
  return JumpHamiltonian(HamiltonianId::H22, c, pt).value(v);
}

inline double eval_H11(const RegimeModel& m, std::size_t i, double t, const Eigen::VectorXd& v,
                       const RiccatiPoint& pt) {
  return eval_H11(m.diffusion(i, t), v, pt);
}
inline double eval_H21(const RegimeModel& m, std::size_t i, double t, const Eigen::VectorXd& v,
                       const RiccatiPoint& pt) {
  return eval_H21(m.diffusion(i, t), v, pt);
}
inline double eval_H12(const RegimeModel& m, std::size_t i, double t, std::size_t atom,
                       const Eigen::VectorXd& v, const RiccatiPoint& pt) {
  return eval_H12(m.jump(i, t, atom), v, pt);
}
inline double eval_H22(const RegimeModel& m, std::size_t i, double t, std::size_t atom,
                       const Eigen::VectorXd& v, const RiccatiPoint& pt) {
  return eval_H22(m.jump(i, t, atom), v, pt);
}

/// Analytic gradients, exposed for finite-difference checks.
inline Eigen::VectorXd gradient_H11(const DiffusionSnapshot& c, const Eigen::VectorXd& v,
                                    const RiccatiPoint& pt) {
  Eigen::VectorXd g(v.size());
  DiffusionHamiltonian::h11(c, pt).gradient(v, g);
  return g;
}
inline Eigen::VectorXd gradient_H21(const DiffusionSnapshot& c, const Eigen::VectorXd& v,
                                    const RiccatiPoint& pt) {
  Eigen::VectorXd g(v.size());
  DiffusionHamiltonian::h21(c, pt).gradient(v, g);
  return g;
}
inline Eigen::VectorXd gradient_H12(const JumpSnapshot& c, const Eigen::VectorXd& v,
                                    const RiccatiPoint& pt) {
  Eigen::VectorXd g(v.size());
  JumpHamiltonian(HamiltonianId::H12, c, pt).gradient(v, g);
  return g;
}
inline Eigen::VectorXd gradient_H22(const JumpSnapshot& c, const Eigen::VectorXd& v,
                                    const RiccatiPoint& pt) {
  Eigen::VectorXd g(v.size());
  JumpHamiltonian(HamiltonianId::H22, c, pt).gradient(v, g);
  return g;
}

/// Projected gradient descent with backtracking from v = 0 (or a better warm
/// start). Stops once the projected step |v - proj(v - g/L)| drops below the
/// tolerance.
template <class Objective>
HamiltonianResult projected_gradient(const Objective& f, const Cone& cone,
                                     const MinimizerOptions& opt) {
  const Eigen::Index m = cone.dimension();
  auto proj = [&](const Eigen::VectorXd& v) {
    return opt.radius ? cone.project(v, *opt.radius) : cone.project(v);
  };

  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  double fv = f.value(v);
  if (opt.warm_start && opt.warm_start->size() == m) {
    Eigen::VectorXd w = proj(*opt.warm_start);
    const double fw = f.value(w);
    if (fw < fv) {
      v = std::move(w);
      fv = fw;
    }
  }

  double L = std::max(f.lipschitz(), 1e-8);
  Eigen::VectorXd g(m), cand(m), step(m);
  for (int it = 0; it < opt.max_iterations; ++it) {
    f.gradient(v, g);
    double fc = 0.0;
    for (int bt = 0; bt < 64; ++bt) {
      cand = proj(v - g / L);
      step = cand - v;
      fc = f.value(cand);
      const double model = fv + g.dot(step) + 0.5 * L * step.squaredNorm();
      if (fc <= model + 1e-14 * (1.0 + std::abs(fv))) break;
      L *= 2.0;
    }
    if (step.norm() <= opt.tolerance) {
      HamiltonianResult r;
      if (fc <= fv) {
        r.value = fc;
        r.argmin = std::move(cand);
      } else {
        r.value = fv;
        r.argmin = std::move(v);
      }
      r.iterations = it + 1;
      r.converged = true;
      return r;
    }
    v.swap(cand);
    fv = fc;
  }
  HamiltonianResult r;
  r.value = fv;
  r.argmin = std::move(v);
  r.iterations = opt.max_iterations;
  r.converged = false;
  return r;
}

namespace detail {

// Vertex of the smooth quadratic on the full space, when its weight is
// numerically positive definite.
inline std::optional<HamiltonianResult> diffusion_closed_form(const DiffusionHamiltonian& f,
                                                              const MinimizerOptions& opt) {
  Eigen::LLT<Eigen::MatrixXd> llt(f.weight());
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  if (diag.size() > 0 && diag.cwiseAbs2().minCoeff() <= 1e-12) return std::nullopt;
  Eigen::VectorXd v = -llt.solve(f.linear());
  if (opt.radius && v.norm() > *opt.radius) return std::nullopt;
  HamiltonianResult r;
  r.value = f.value(v);
  r.argmin = std::move(v);
  r.converged = true;
  r.closed_form = true;
  return r;
}

inline void check_converged(const HamiltonianResult& r, HamiltonianId id,
                            const MinimizerOptions& opt, const ErrorContext& ctx) {
  if (!r.converged && opt.throw_on_no_convergence) {
    throw Error(ErrorCode::NoConvergence, ctx,
                "minimizing " + to_string(id) + " hit the iteration cap of " +
                    std::to_string(opt.max_iterations));
  }
}

}  // namespace detail

/// Infimum and argmin of H11 or H21 over the control cone (optionally
/// truncated to a ball).
inline HamiltonianResult minimize_diffusion(HamiltonianId id, const DiffusionSnapshot& c,
                                            const RiccatiPoint& pt, const Cone& cone,
                                            const MinimizerOptions& opt = {},
                                            const ErrorContext& ctx = {"hamiltonians"}) {
  if (id != HamiltonianId::H11 && id != HamiltonianId::H21) {
    throw Error(ErrorCode::InvalidConfig, ctx, "minimize_diffusion takes H11 or H21");
  }
  const auto f = id == HamiltonianId::H11 ? DiffusionHamiltonian::h11(c, pt)
                                          : DiffusionHamiltonian::h21(c, pt);
  if (std::holds_alternative<FullSpace>(cone.shape())) {
    if (auto r = detail::diffusion_closed_form(f, opt)) return *r;
  }
  auto r = projected_gradient(f, cone, opt);
  detail::check_converged(r, id, opt, ctx);
  return r;
}

/// Infimum and argmin of H12 or H22 at one atom over the jump cone.
inline HamiltonianResult minimize_jump(HamiltonianId id, const JumpSnapshot& c,
                                       const RiccatiPoint& pt, const Cone& cone,
                                       const MinimizerOptions& opt = {},
                                       const ErrorContext& ctx = {"hamiltonians"}) {
  if (id != HamiltonianId::H12 && id != HamiltonianId::H22) {
    throw Error(ErrorCode::InvalidConfig, ctx, "minimize_jump takes H12 or H22");
  }
  const JumpHamiltonian f(id, c, pt);
  auto r = projected_gradient(f, cone, opt);
  detail::check_converged(r, id, opt, ctx);
  return r;
}

inline HamiltonianResult minimize(HamiltonianId id, const RegimeModel& model, std::size_t i,
                                  double t, std::optional<std::size_t> atom,
                                  const RiccatiPoint& pt, const Cone& cone,
                                  const MinimizerOptions& opt = {}) {
  const ErrorContext ctx{"hamiltonians", i, t, atom};
  if (id == HamiltonianId::H11 || id == HamiltonianId::H21) {
    return minimize_diffusion(id, model.diffusion(i, t), pt, cone, opt, ctx);
  }
  if (!atom) throw Error(ErrorCode::InvalidConfig, ctx, to_string(id) + " needs a jump atom");
  return minimize_jump(id, model.jump(i, t, *atom), pt, cone, opt, ctx);
}

}  // namespace regime_lq
