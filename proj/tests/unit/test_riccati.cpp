#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "regime_lq/reference_models.hpp"
#include "regime_lq/riccati.hpp"
#include "regime_lq/validation.hpp"
#include "support/test_models.hpp"

using namespace regime_lq;
using reference::mat1;
using reference::vec1;

namespace {

const CaseFlags kStandard = CaseFlags::standard_case(1.0);

double sup_gap(const RiccatiSolution& a, const RiccatiSolution& b) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.regimes(); ++i)
    for (std::size_t n = 0; n < a.grid.nodes(); ++n)
      g = std::max({g, std::abs(a.P1[i][n] - b.P1[i][n]), std::abs(a.P2[i][n] - b.P2[i][n])});
  return g;
}

// Coarse-grid comparison: sup over the coarse nodes of |P_coarse - P_fine|.
double coarse_gap(const RiccatiSolution& coarse, const RiccatiSolution& fine) {
  const std::size_t r = fine.grid.steps() / coarse.grid.steps();
  double g = 0.0;
  for (std::size_t i = 0; i < coarse.regimes(); ++i)
    for (std::size_t n = 0; n < coarse.grid.nodes(); ++n)
      g = std::max({g, std::abs(coarse.P1[i][n] - fine.P1[i][n * r]),
                    std::abs(coarse.P2[i][n] - fine.P2[i][n * r])});
  return g;
}

RegimeModel no_jump_model(const RegimeCoefficients& r1, const RegimeCoefficients& r2,
                          const Eigen::MatrixXd& q) {
  return RegimeModel(ModelDimensions{}, 1.0, q, JumpMeasure{}, Cone::full_space(1),
                     Cone::full_space(1), {r1, r2});
}

}  // namespace

TEST(SolverGrid, Nodes) {
  SolverGrid g(2.0, 8);
  EXPECT_EQ(g.node(0), 0.0);
  EXPECT_EQ(g.node(8), 2.0);
  EXPECT_EQ(g.node(3), 0.75);
  EXPECT_EQ(g.index_at_or_before(0.75), 3u);
  EXPECT_EQ(g.index_at_or_before(0.7499), 2u);
  EXPECT_EQ(g.index_at_or_before(2.0), 8u);
  EXPECT_THROW(SolverGrid(1.0, 0), Error);
}

TEST(Riccati, ClassicalLqMatchesImplicitRelation) {
  const double T = 3.0;
  const auto m = reference::classical_lq(T);
  const auto sol = solve(m, kStandard, SolverGrid(T, 3000));
  for (int k = 0; k < 10; ++k) {
    const double t = T * k / 10.0;
    const double P = sol.p1(0, t);
    EXPECT_NEAR(std::log(P) - 1.0 / P, t - T - 1.0, 1e-9) << "t=" << t;
    EXPECT_NEAR(P, reference::classical_lq_exact(t, T), 1e-9);
  }
  EXPECT_NEAR(sol.p1(0, T - 1.0), 0.6422007040598738, 1e-9);
}

TEST(Riccati, TerminalSliceIsExact) {
  const auto m = reference::sign_flip(false);
  const auto sol = solve(m, kStandard, SolverGrid(1.0, 50));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(sol.P1[i][50], m.terminal_weight(i));
    EXPECT_EQ(sol.P2[i][50], m.terminal_weight(i));
  }
}

TEST(Riccati, ZeroCostGivesZeroSolution) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    auto base = test_support::random_standard_model(rng);
    std::vector<RegimeCoefficients> regimes;
    for (std::size_t i = 0; i < base.regimes(); ++i) {
      auto r = base.regime(i);
      r.Q = 0.0;
      r.G = 0.0;
      regimes.push_back(r);
    }
    RegimeModel m(base.dims(), base.horizon(), base.generator(), base.jumps(), base.control_cone(),
                  base.jump_cone(), regimes);
    const auto sol = solve(m, CaseFlags::standard_case(0.5), SolverGrid(1.0, 20));
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < 21; ++n) {
        EXPECT_EQ(sol.P1[i][n], 0.0);
        EXPECT_EQ(sol.P2[i][n], 0.0);
      }
  }
}

TEST(Riccati, SymmetricConesCollapse) {
  const auto m = reference::sign_flip(true);
  const auto sol = solve(m, kStandard, SolverGrid(1.0, 200));
  double gap = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t n = 0; n <= 200; ++n) gap = std::max(gap, std::abs(sol.P1[i][n] - sol.P2[i][n]));
  EXPECT_LE(gap, 1e-10);

  // The orthant jump cone breaks the symmetry.
  const auto asym = solve(reference::sign_flip(false), kStandard, SolverGrid(1.0, 200));
  EXPECT_GT(std::abs(asym.P1[0][0] - asym.P2[0][0]), 1e-4);
}

// Without jumps and on the full space, H11* = -P^2 |b|^2 / (R1 + P D^2) in
// closed form; an independent RK4 over that drift is the oracle.
TEST(Riccati, AgreesWithClosedFormDrift) {
  auto r1 = RegimeCoefficients::zeros(ModelDimensions{}, 0);
  r1.A = TimeTable<double>({0.0, 0.5}, {0.3, -0.4});
  r1.B1 = vec1(1.2);
  r1.C = vec1(0.5);
  r1.D = mat1(0.7);
  r1.R1 = mat1(1.5);
  r1.Q = TimeTable<double>({0.0, 0.5}, {1.0, 0.2});
  r1.G = 1.0;
  auto r2 = r1;
  r2.A = 0.1;
  r2.B1 = vec1(-0.6);
  r2.R1 = mat1(0.8);
  r2.G = 0.5;
  Eigen::MatrixXd q(2, 2);
  q << -1.5, 1.5, 0.5, -0.5;
  const auto m = no_jump_model(r1, r2, q);

  const std::size_t N = 100;
  const auto sol = solve(m, kStandard, SolverGrid(1.0, N));

  auto coef = [&](int i, double t, double& lin, double& Q, double& b, double& R, double& D) {
    const auto& r = i == 0 ? r1 : r2;
    const double A = r.A.at(t), C = r.C.at(t)[0];
    D = r.D.at(t)(0, 0);
    lin = 2 * A + C * C;
    Q = r.Q.at(t);
    b = r.B1.at(t)[0] + D * C;
    R = r.R1.at(t)(0, 0);
  };
  // P1 and P2 obey the same scalar equation here (b enters squared).
  auto f = [&](double t, const std::array<double, 2>& p) {
    std::array<double, 2> out{};
    for (int i = 0; i < 2; ++i) {
      double lin, Q, b, R, D;
      coef(i, t, lin, Q, b, R, D);
      out[i] = lin * p[i] + Q - p[i] * p[i] * b * b / (R + p[i] * D * D) + q(i, 0) * p[0] + q(i, 1) * p[1];
    }
    return out;
  };
  std::array<double, 2> y{1.0, 0.5};
  const double h = 1.0 / N;
  for (std::size_t n = N; n-- > 0;) {
    const double tm = (n + 0.5) * h;
    auto add = [](const std::array<double, 2>& a, const std::array<double, 2>& k, double s) {
      return std::array<double, 2>{a[0] + s * k[0], a[1] + s * k[1]};
    };
    const auto k1 = f(tm, y), k2 = f(tm, add(y, k1, h / 2)), k3 = f(tm, add(y, k2, h / 2)),
               k4 = f(tm, add(y, k3, h));
    for (int i = 0; i < 2; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    for (int i = 0; i < 2; ++i) {
      ASSERT_NEAR(sol.P1[i][n], y[i], 1e-12);
      ASSERT_NEAR(sol.P2[i][n], y[i], 1e-12);
    }
  }
}

TEST(Riccati, FourthOrderConvergence) {
  auto r1 = RegimeCoefficients::zeros(ModelDimensions{}, 0);
  r1.A = 0.4;
  r1.B1 = vec1(1.0);
  r1.C = vec1(0.3);
  r1.D = mat1(0.5);
  r1.R1 = mat1(1.0);
  r1.Q = 1.0;
  r1.G = 2.0;
  auto r2 = r1;
  r2.A = -0.3;
  r2.G = 0.5;
  Eigen::MatrixXd q(2, 2);
  q << -1.0, 1.0, 2.0, -2.0;
  for (const auto& m : {reference::classical_lq(4.0), no_jump_model(r1, r2, q)}) {
    const auto s10 = solve(m, kStandard, SolverGrid(m.horizon(), 10));
    const auto s20 = solve(m, kStandard, SolverGrid(m.horizon(), 20));
    const auto s40 = solve(m, kStandard, SolverGrid(m.horizon(), 40));
    const auto s80 = solve(m, kStandard, SolverGrid(m.horizon(), 80));
    const double ratio = coarse_gap(s10, s20) / coarse_gap(s20, s40);
    EXPECT_GE(ratio, 8.0);
    EXPECT_LE(ratio, 32.0);
    const double ratio2 = coarse_gap(s20, s40) / coarse_gap(s40, s80);
    EXPECT_GE(ratio2, 8.0);
    EXPECT_LE(ratio2, 32.0);
  }
}

TEST(Riccati, TruncationMonotoneAndExact) {
  const auto m = reference::large_gain();
  const SolverGrid grid(1.0, 100);
  const auto full = solve(m, kStandard, grid);
  std::vector<RiccatiSolution> trunc;
  for (double k : {1.0, 2.0, 4.0, 8.0}) trunc.push_back(solve_truncated(m, kStandard, grid, k));
  for (std::size_t r = 0; r + 1 < trunc.size(); ++r)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        EXPECT_GE(trunc[r].P1[i][n], trunc[r + 1].P1[i][n] - 1e-8);
        EXPECT_GE(trunc[r].P2[i][n], trunc[r + 1].P2[i][n] - 1e-8);
      }
  EXPECT_LE(sup_gap(trunc.back(), full), 1e-8);
  EXPECT_GT(sup_gap(trunc.front(), full), 1e-3);
  EXPECT_EQ(trunc[0].radius.value(), 1.0);
  EXPECT_EQ(trunc[0].variant, RiccatiVariant::Truncated);
}

TEST(Riccati, UpperAndLowerBoundSystems) {
  ModelDimensions d;
  auto r = RegimeCoefficients::zeros(d, 1);
  r.G = 1.0;
  RegimeModel only_g(d, 1.0, Eigen::MatrixXd::Zero(1, 1), JumpMeasure({{vec1(0), 1.0}}),
                     Cone::full_space(1), Cone::full_space(1), {r});
  const auto up = solve_upper_bound(only_g, SolverGrid(1.0, 10));
  for (std::size_t n = 0; n <= 10; ++n) {
    EXPECT_EQ(up.P1[0][n], 1.0);
    EXPECT_EQ(up.P2[0][n], 1.0);
  }

  const auto m = reference::sign_flip(false);
  const auto low = solve_lower_bound(m, SolverGrid(1.0, 10));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t n = 0; n <= 10; ++n) EXPECT_EQ(low.P1[i][n], 0.0);
}

TEST(Riccati, SandwichOnRandomModels) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = test_support::random_standard_model(rng);
    const SolverGrid grid(1.0, 40);
    const auto sol = solve(m, CaseFlags::standard_case(0.5), grid);
    const auto up = solve_upper_bound(m, grid);
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        EXPECT_GE(sol.P1[i][n], -1e-8);
        EXPECT_GE(sol.P2[i][n], -1e-8);
        EXPECT_LE(sol.P1[i][n], up.P1[i][n] + 1e-8);
        EXPECT_LE(sol.P2[i][n], up.P2[i][n] + 1e-8);
      }
  }
}

TEST(Riccati, InnerIterationCapDoesNotChangeResult) {
  const auto m = reference::sign_flip(false);
  SolveOptions a, b;
  a.max_iterations = 10000;
  b.max_iterations = 2000;
  b.warm_start = false;
  const SolverGrid grid(1.0, 50);
  EXPECT_LE(sup_gap(solve(m, kStandard, grid, a), solve(m, kStandard, grid, b)), 1e-9);
}

TEST(Riccati, SingularLowerBoundExamples) {
  EXPECT_NEAR((SingularLowerBound{SingularCase::II, 1.0, 2.0, 1.0})(0.0), std::exp(-2.0), 1e-15);
  EXPECT_EQ((SingularLowerBound{SingularCase::II, 0.7, 2.0, 1.0})(1.0), 0.7);
  for (double t : {0.0, 0.3, 1.0}) EXPECT_EQ((SingularLowerBound{SingularCase::I, 1.0, 0.0, 1.0})(t), 1.0);
  EXPECT_EQ((SingularLowerBound{SingularCase::III, 0.5, 1.0, 1.0})(1.0), 0.5);
}

TEST(Riccati, SingularCaseIIStaysAboveBound) {
  const auto m = reference::singular_case_ii();
  const auto flags = CaseFlags::singular_case(SingularCase::II, 1.0);
  ASSERT_TRUE(validate(m, flags).accepted);
  const auto bound = lower_bound_singular(flags, m);
  // Worst regime: 2A + C^2 - (B1 + D C)^2 - w (F E + B2)^2 = -1 + 0.25 - 2.25 - 0.5 * 0.25.
  EXPECT_NEAR(bound.rate, 3.125, 1e-14);
  const auto sol = solve(m, flags, SolverGrid(1.0, 200));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t n = 0; n <= 200; ++n) {
      const double t = sol.grid.node(n);
      EXPECT_GE(sol.P1[i][n], bound(t) - 1e-8);
      EXPECT_GE(sol.P2[i][n], bound(t) - 1e-8);
    }
  EXPECT_THROW(lower_bound_singular(kStandard, m), Error);
}

TEST(Riccati, DefinitenessLostIsReported) {
  ModelDimensions d;
  auto r = RegimeCoefficients::zeros(d, 0);
  r.D = mat1(1.0);
  RegimeModel m(d, 1.0, Eigen::MatrixXd::Zero(1, 1), JumpMeasure{}, Cone::full_space(1),
                Cone::full_space(1), {r});
  try {
    solve(m, CaseFlags::singular_case(SingularCase::II, 1.0), SolverGrid(1.0, 10));
    FAIL() << "expected DefinitenessLost";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DefinitenessLost);
    EXPECT_EQ(e.context().time.value(), 1.0);
    EXPECT_EQ(e.context().regime.value(), 0u);
  }
}

TEST(Riccati, CoarseGridUndershootRaisesNegativeP) {
  ModelDimensions d;
  auto r = RegimeCoefficients::zeros(d, 0);
  r.B1 = vec1(10.0);
  r.R1 = mat1(1.0);
  r.G = 10.0;
  RegimeModel m(d, 1.0, Eigen::MatrixXd::Zero(1, 1), JumpMeasure{}, Cone::full_space(1),
                Cone::full_space(1), {r});
  try {
    solve(m, kStandard, SolverGrid(1.0, 1));
    FAIL() << "expected NegativeP";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeP);
  }
  EXPECT_NO_THROW(solve(m, kStandard, SolverGrid(1.0, 2000)));
}

TEST(Riccati, InterpolationAndValue) {
  const auto m = reference::sign_flip(false);
  const auto sol = solve(m, kStandard, SolverGrid(1.0, 10));
  EXPECT_EQ(sol.p1(1, 0.3), sol.P1[1][3]);
  EXPECT_DOUBLE_EQ(sol.p2(0, 0.35), 0.5 * (sol.P2[0][3] + sol.P2[0][4]));
  EXPECT_THROW(sol.p1(0, 1.5), Error);
  EXPECT_DOUBLE_EQ(sol.value(2.0, 0), 4.0 * sol.P1[0][0]);
  EXPECT_DOUBLE_EQ(sol.value(-3.0, 1), 9.0 * sol.P2[1][0]);
  EXPECT_GT(sol.stats.calls, 0u);
}
