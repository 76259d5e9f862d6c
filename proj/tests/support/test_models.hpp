#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "regime_lq/hamiltonians.hpp"
#include "regime_lq/model.hpp"

namespace regime_lq::test_support {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

/// delta I plus a random PSD part.
inline Eigen::MatrixXd random_weight(std::mt19937_64& rng, Eigen::Index m, double delta) {
  const Eigen::MatrixXd l = random_matrix(rng, m, m, 0.7);
  return delta * Eigen::MatrixXd::Identity(m, m) + l * l.transpose();
}

inline Cone random_cone(std::mt19937_64& rng, Eigen::Index m) {
  switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0: return Cone::full_space(m);
    case 1: return Cone::nonnegative_orthant(m);
    case 2: return Cone::half_line(random_vector(rng, m) + Eigen::VectorXd::Constant(m, 1e-3));
    case 3: return Cone::generated(random_matrix(rng, m, std::uniform_int_distribution<int>(1, 3)(rng)));
    default: return Cone::zero(m);
  }
}

inline Eigen::MatrixXd random_generator(std::mt19937_64& rng, Eigen::Index ell) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(ell, ell);
  for (Eigen::Index i = 0; i < ell; ++i) {
    for (Eigen::Index j = 0; j < ell; ++j)
      if (i != j) q(i, j) = u(rng);
    q(i, i) = -(q.row(i).sum());
  }
  return q;
}

/// Random bounded model satisfying the standard-case assumptions with the
/// given delta. Some coefficients switch value at T/2.
inline RegimeModel random_standard_model(std::mt19937_64& rng, double delta = 0.5,
                                         double horizon = 1.0) {
  std::uniform_int_distribution<int> pick(1, 2);
  ModelDimensions d{pick(rng), pick(rng), pick(rng), pick(rng)};
  const auto ell = static_cast<Eigen::Index>(std::uniform_int_distribution<int>(1, 3)(rng));
  const auto na = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 2)(rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<JumpAtom> atoms;
  for (std::size_t a = 0; a < na; ++a) atoms.push_back({random_vector(rng, 1), 0.2 + unit(rng)});

  std::vector<RegimeCoefficients> regimes;
  for (Eigen::Index i = 0; i < ell; ++i) {
    auto r = RegimeCoefficients::zeros(d, na);
    r.A = TimeTable<double>({0.0, horizon / 2}, {unit(rng) - 0.5, unit(rng) - 0.5});
    r.B1 = random_vector(rng, d.m1);
    r.C = random_vector(rng, d.n1, 0.5);
    r.D = TimeTable<Eigen::MatrixXd>({0.0, horizon / 2},
                                     {random_matrix(rng, d.n1, d.m1), random_matrix(rng, d.n1, d.m1)});
    r.R1 = random_weight(rng, d.m1, delta);
    r.Q = unit(rng);
    r.G = 2.0 * unit(rng);
    for (std::size_t a = 0; a < na; ++a) {
      r.atoms[a].B2 = random_vector(rng, d.m2);
      r.atoms[a].E = random_vector(rng, d.n2, 1.5);
      r.atoms[a].F = random_matrix(rng, d.n2, d.m2);
      r.atoms[a].R2 = random_weight(rng, d.m2, delta);
    }
    regimes.push_back(std::move(r));
  }
  return RegimeModel(d, horizon, random_generator(rng, ell), JumpMeasure(std::move(atoms)),
                     random_cone(rng, d.m1), random_cone(rng, d.m2), std::move(regimes));
}

inline JumpSnapshot random_jump(std::mt19937_64& rng, Eigen::Index n2, Eigen::Index m2) {
  return {random_vector(rng, m2), random_vector(rng, n2, 2.0),
          random_matrix(rng, n2, m2), random_weight(rng, m2, 0.0)};
}

inline DiffusionSnapshot random_diffusion(std::mt19937_64& rng, Eigen::Index n1, Eigen::Index m1) {
  return {0.3, random_vector(rng, m1), random_vector(rng, n1),
          random_matrix(rng, n1, m1), random_weight(rng, m1, 0.1), 0.0};
}

/// P1, P2 in [0, 2); Gamma entries in [0, 1) when requested.
inline RiccatiPoint random_point(std::mt19937_64& rng, Eigen::Index n2, bool with_gamma) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  RiccatiPoint p;
  p.P1 = u(rng);
  p.P2 = u(rng);
  if (with_gamma) {
    p.Gamma1 = (random_vector(rng, n2, 0.5).array() + 0.5).matrix();
    p.Gamma2 = (random_vector(rng, n2, 0.5).array() + 0.5).matrix();
  }
  return p;
}

}  // namespace regime_lq::test_support
