#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "regime_lq/model.hpp"

namespace regime_lq::reference {

inline Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }
inline Eigen::MatrixXd mat1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

/// One regime, no jumps, A = C = Q = 0 and B1 = D = R1 = G = 1 on the whole
/// line. The Riccati equation becomes P' = P^2 / (1 + P).
inline RegimeModel classical_lq(double horizon = 2.0) {
  ModelDimensions d;
  auto r = RegimeCoefficients::zeros(d, 0);
  r.B1 = vec1(1.0);
  r.D = mat1(1.0);
  r.R1 = mat1(1.0);
  r.G = 1.0;
  return RegimeModel(d, horizon, Eigen::MatrixXd::Zero(1, 1), JumpMeasure{},
                     Cone::full_space(1), Cone::full_space(1), {r});
}

/// Root of ln P - 1/P = t - T - 1, the closed-form solution of classical_lq.
inline double classical_lq_exact(double t, double horizon) {
  const double target = t - horizon - 1.0;
  double lo = 1e-300, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::log(mid) - 1.0 / mid < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Everything zero except the control weights and G; the state never moves.
inline RegimeModel zero_dynamics(double G = 1.0, double horizon = 1.0) {
  ModelDimensions d;
  auto r = RegimeCoefficients::zeros(d, 1);
  r.R1 = mat1(1.0);
  r.G = G;
  r.atoms[0].R2 = mat1(1.0);
  return RegimeModel(d, horizon, Eigen::MatrixXd::Zero(1, 1), JumpMeasure({{vec1(0.0), 1.0}}),
                     Cone::full_space(1), Cone::full_space(1), {r});
}

/// Two regimes and one jump atom with E = -1.5, so an uncontrolled jump maps
/// X to -0.5 X. The jump control cone is the whole line when `symmetric` and
/// the nonnegative half-line otherwise.
inline RegimeModel sign_flip(bool symmetric, double horizon = 1.0) {
  ModelDimensions d;
  Eigen::MatrixXd q(2, 2);
  q << -1.0, 1.0, 2.0, -2.0;

  auto r1 = RegimeCoefficients::zeros(d, 1);
  r1.A = 0.3;
  r1.B1 = vec1(1.0);
  r1.C = vec1(0.4);
  r1.D = mat1(0.5);
  r1.R1 = mat1(1.0);
  r1.Q = 1.0;
  r1.G = 1.0;
  r1.atoms[0] = {vec1(0.3), vec1(-1.5), mat1(0.5), mat1(1.0)};

  auto r2 = RegimeCoefficients::zeros(d, 1);
  r2.A = -0.2;
  r2.B1 = vec1(0.5);
  r2.C = vec1(0.2);
  r2.D = mat1(1.0);
  r2.R1 = mat1(2.0);
  r2.Q = 0.5;
  r2.G = 2.0;
  r2.atoms[0] = {vec1(-0.2), vec1(-1.5), mat1(0.8), mat1(1.5)};

  return RegimeModel(d, horizon, q, JumpMeasure({{vec1(1.0), 1.0}}), Cone::full_space(1),
                     symmetric ? Cone::full_space(1) : Cone::nonnegative_orthant(1), {r1, r2});
}

/// Singular case II: G = 1, D = F = 1 and no control weights.
inline RegimeModel singular_case_ii(double horizon = 1.0) {
  ModelDimensions d;
  Eigen::MatrixXd q(2, 2);
  q << -0.5, 0.5, 1.0, -1.0;

  auto r1 = RegimeCoefficients::zeros(d, 1);
  r1.A = -0.5;
  r1.B1 = vec1(1.0);
  r1.C = vec1(0.5);
  r1.D = mat1(1.0);
  r1.G = 1.0;
  r1.atoms[0] = {vec1(0.3), vec1(0.2), mat1(1.0), mat1(0.0)};

  auto r2 = r1;
  r2.A = 0.2;
  r2.B1 = vec1(-0.5);
  r2.C = vec1(0.1);
  r2.atoms[0] = {vec1(-0.4), vec1(-0.5), mat1(1.0), mat1(0.0)};

  return RegimeModel(d, horizon, q, JumpMeasure({{vec1(1.0), 0.5}}), Cone::full_space(1),
                     Cone::full_space(1), {r1, r2});
}

/// Standard-case model whose optimal feedback gains reach a few units, so a
/// ball of radius 1 truncates the Hamiltonian minimization while radius 8
/// does not.
inline RegimeModel large_gain(double horizon = 1.0) {
  ModelDimensions d;
  Eigen::MatrixXd q(2, 2);
  q << -1.0, 1.0, 1.0, -1.0;

  auto r1 = RegimeCoefficients::zeros(d, 1);
  r1.A = 0.2;
  r1.B1 = vec1(2.5);
  r1.C = vec1(0.3);
  r1.D = mat1(0.5);
  r1.R1 = mat1(1.0);
  r1.Q = 1.0;
  r1.G = 2.0;
  r1.atoms[0] = {vec1(1.5), vec1(-0.6), mat1(0.7), mat1(1.0)};

  auto r2 = r1;
  r2.A = -0.1;
  r2.B1 = vec1(-2.0);
  r2.atoms[0] = {vec1(-1.2), vec1(0.4), mat1(0.5), mat1(0.8)};

  return RegimeModel(d, horizon, q, JumpMeasure({{vec1(1.0), 0.8}}), Cone::full_space(1),
                     Cone::full_space(1), {r1, r2});
}

}  // namespace regime_lq::reference
