// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "regime_lq/regime_lq.hpp"
#include "support/test_models.hpp"

using namespace regime_lq;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double sup_abs_diff(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t n = 0; n < a[i].size(); ++n) g = std::max(g, std::abs(a[i][n] - b[i][n]));
  return g;
}

// Largest amount by which `hi` falls below `lo` at any node, for P1 and P2.
double worst_order(const RiccatiSolution& lo, const RiccatiSolution& hi) {
  double v = 0.0;
  for (std::size_t i = 0; i < lo.regimes(); ++i)
    for (std::size_t n = 0; n < lo.grid.nodes(); ++n)
      v = std::max({v, hi.P1[i][n] - lo.P1[i][n], hi.P2[i][n] - lo.P2[i][n]});
  return v;
}

Outcome classical_lq_reduction() {
  const double T = 2.0;
  const auto t0 = Clock::now();
  const auto m = reference::classical_lq(T);
  const auto sol = solve(m, CaseFlags::standard_case(1.0), SolverGrid(T, 2000));
  const double elapsed = seconds_since(t0);

  double residual = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double t = T * k / 10.0;
    const double P = sol.p1(0, t);
    residual = std::max(residual, std::abs(std::log(P) - 1.0 / P - (t - T - 1.0)));
  }
  // Root of the implicit relation at t = T - 1, found by bisection.
  const double oracle = reference::classical_lq_exact(T - 1.0, T);
  const double p = sol.p1(0, T - 1.0);
  const bool ok = residual <= 1e-4 && std::abs(p - oracle) <= 1e-4 && elapsed < 1.0;
  return {ok, "max residual " + fmt("%.2e", residual) + ", P(T-1) = " + fmt("%.9f", p) +
                  " (root " + fmt("%.9f", oracle) + "; the quoted 0.64239 has residual " +
                  fmt("%.1e", std::abs(std::log(0.64239) - 1.0 / 0.64239 + 2.0)) + "), " +
                  fmt("%.3f s", elapsed)};
}

Outcome value_cost_consistency() {
  const auto m = reference::sign_flip(false);
  const auto t0 = Clock::now();
  const auto sol = solve(m, CaseFlags::standard_case(1.0), SolverGrid(1.0, 200));
  const auto law = build_law(m, sol);
  SimulationOptions opt;
  opt.n_paths = 100000;
  opt.steps = 200;
  opt.seed = 2024;
  const auto est = estimate_cost(m, law, 1.0, 0, opt);
  const double elapsed = seconds_since(t0);

  const double V = sol.value(1.0, 0);
  const double bias = 2.0 * (1.0 / 200.0) * sol.max_slope();
  const double gap = std::abs(est.mean - V);
  const double rel = gap / V;
  const bool ok = gap <= 3.0 * est.std_error + bias && rel <= 0.02 && elapsed < 60.0;
  return {ok, "V = " + fmt("%.6f", V) + ", J = " + fmt("%.6f", est.mean) + " +- " +
                  fmt("%.6f", est.std_error) + ", bias allowance " + fmt("%.4f", bias) +
                  ", rel. error " + fmt("%.2e", rel) + ", " + fmt("%.1f s", elapsed) + " on " +
                  std::to_string(resolve_workers(0)) + " worker(s)"};
}

Outcome optimality_inequality() {
  VerifyOptions opt;
  opt.seed = 5;
  const auto r = verify(reference::sign_flip(false), CaseFlags::standard_case(1.0), opt);
  bool all = r.adversaries.size() >= 9;
  double strongest = -std::numeric_limits<double>::infinity();
  for (const auto& a : r.adversaries) {
    all &= a.estimate.mean >= r.value - 3.0 * a.estimate.std_error - r.bias_allowance;
    strongest = std::max(strongest, a.excess);
  }
  const bool ok = all && strongest > 5.0;
  return {ok, std::to_string(r.adversaries.size()) + " adversaries, all above V - 3 se: " +
                  (all ? "yes" : "no") + ", largest excess " + fmt("%.1f se", strongest)};
}

Outcome monotone_truncation() {
  const auto m = reference::large_gain();
  const SolverGrid grid(1.0, 200);
  const CaseFlags flags = CaseFlags::standard_case(1.0);
  const auto full = solve(m, flags, grid);
  std::vector<RiccatiSolution> trunc;
  for (double k : {1.0, 2.0, 4.0, 8.0}) trunc.push_back(solve_truncated(m, flags, grid, k));
  double violation = 0.0;
  for (std::size_t r = 0; r + 1 < trunc.size(); ++r)
    violation = std::max(violation, worst_order(trunc[r], trunc[r + 1]));
  const double gap =
      std::max(sup_abs_diff(trunc.back().P1, full.P1), sup_abs_diff(trunc.back().P2, full.P2));
  const double k1_gap = std::max(sup_abs_diff(trunc[0].P1, full.P1), sup_abs_diff(trunc[0].P2, full.P2));
  const bool ok = violation <= 1e-8 && gap <= 1e-8;
  return {ok, "max monotonicity violation " + fmt("%.1e", violation) + ", |P(8) - P| = " +
                  fmt("%.1e", gap) + ", |P(1) - P| = " + fmt("%.3f", k1_gap)};
}

Outcome sandwich_bounds() {
  std::mt19937_64 rng(20240501);
  double below_zero = 0.0, above_upper = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = test_support::random_standard_model(rng);
    const SolverGrid grid(m.horizon(), 100);
    const auto sol = solve(m, CaseFlags::standard_case(0.5), grid);
    const auto up = solve_upper_bound(m, grid);
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        below_zero = std::max({below_zero, -sol.P1[i][n], -sol.P2[i][n]});
        above_upper = std::max({above_upper, sol.P1[i][n] - up.P1[i][n], sol.P2[i][n] - up.P2[i][n]});
      }
  }
  const bool ok = below_zero <= 1e-8 && above_upper <= 1e-8;
  return {ok, "20 random models, max(-P) = " + fmt("%.1e", below_zero) + ", max(P - upper) = " +
                  fmt("%.1e", above_upper)};
}

Outcome uniform_positivity() {
  const auto m = reference::singular_case_ii();
  const auto flags = CaseFlags::singular_case(SingularCase::II, 1.0);
  ensure_valid(validate(m, flags));
  const auto bound = lower_bound_singular(flags, m);
  const auto sol = solve(m, flags, SolverGrid(1.0, 200));
  const double floor = flags.delta * std::exp(-bound.rate * m.horizon());
  double min_p = std::numeric_limits<double>::infinity(), curve_violation = 0.0;
  for (std::size_t i = 0; i < m.regimes(); ++i)
    for (std::size_t n = 0; n < sol.grid.nodes(); ++n) {
      const double t = sol.grid.node(n);
      min_p = std::min({min_p, sol.P1[i][n], sol.P2[i][n]});
      curve_violation = std::max({curve_violation, bound(t) - sol.P1[i][n], bound(t) - sol.P2[i][n]});
    }
  const bool ok = min_p >= floor - 1e-8 && curve_violation <= 1e-8;
  return {ok, "c3 = " + fmt("%.4f", bound.rate) + ", min P = " + fmt("%.6f", min_p) +
                  " >= delta e^{-c3 T} = " + fmt("%.6f", floor) + ", pointwise curve violation " +
                  fmt("%.1e", curve_violation)};
}

Outcome symmetry_collapse() {
  const auto m = reference::sign_flip(true);
  const CaseFlags flags = CaseFlags::standard_case(1.0);
  const auto sol = solve(m, flags, SolverGrid(1.0, 200));
  const double gap = sup_abs_diff(sol.P1, sol.P2);

  VerifyOptions opt;
  opt.seed = 11;
  opt.x0 = 1.0;
  const auto plus = verify(m, flags, opt);
  opt.x0 = -1.0;
  const auto minus = verify(m, flags, opt);
  const double v_gap = std::abs(plus.value - minus.value);
  const double j_gap = std::abs(plus.optimal.mean - minus.optimal.mean);
  const double tol = 3.0 * std::hypot(plus.optimal.std_error, minus.optimal.std_error) +
                     plus.bias_allowance + minus.bias_allowance;
  const bool ok = gap <= 1e-10 && v_gap <= 1e-10 && j_gap <= tol && plus.passed && minus.passed;
  return {ok, "|P1 - P2| = " + fmt("%.1e", gap) + ", V(1) - V(-1) = " + fmt("%.1e", v_gap) +
                  ", |J(1) - J(-1)| = " + fmt("%.4f", j_gap) + " (tolerance " + fmt("%.4f", tol) + ")"};
}

Outcome reflection_and_gradients() {
  std::mt19937_64 rng(8);
  double reflection = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n2 = 1 + trial % 3, m2 = 1 + (trial / 3) % 3;
    const auto c = test_support::random_jump(rng, n2, m2);
    const auto p = test_support::random_point(rng, n2, true);
    RiccatiPoint swapped = p;
    std::swap(swapped.P1, swapped.P2);
    std::swap(swapped.Gamma1, swapped.Gamma2);
    const Eigen::VectorXd v = test_support::random_vector(rng, m2, 3.0);
    reflection = std::max(reflection, std::abs(eval_H22(c, -v, p) - eval_H12(c, v, swapped)));
  }

  const double h = 1e-6;
  double worst = 0.0;
  int checked = 0;
  while (checked < 100) {
    const Eigen::Index n2 = 1 + checked % 2, m = 1 + checked % 3;
    const auto jc = test_support::random_jump(rng, n2, m);
    const auto dc = test_support::random_diffusion(rng, 2, m);
    const auto p = test_support::random_point(rng, n2, false);
    const Eigen::VectorXd v = test_support::random_vector(rng, m, 2.0);
    const Eigen::VectorXd fv = jc.F * v;
    bool smooth = true;
    for (Eigen::Index k = 0; k < n2; ++k)
      smooth &= std::abs(1 + jc.E[k] + fv[k]) > 1e-3 && std::abs(-1 - jc.E[k] + fv[k]) > 1e-3;
    if (!smooth) continue;
    ++checked;
    auto check = [&](auto&& f, const Eigen::VectorXd& g) {
      for (Eigen::Index k = 0; k < m; ++k) {
        Eigen::VectorXd a = v, b = v;
        a[k] += h;
        b[k] -= h;
        const double fd = (f(a) - f(b)) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
      }
    };
    check([&](const Eigen::VectorXd& x) { return eval_H11(dc, x, p); }, gradient_H11(dc, v, p));
    check([&](const Eigen::VectorXd& x) { return eval_H21(dc, x, p); }, gradient_H21(dc, v, p));
    check([&](const Eigen::VectorXd& x) { return eval_H12(jc, x, p); }, gradient_H12(jc, v, p));
    check([&](const Eigen::VectorXd& x) { return eval_H22(jc, x, p); }, gradient_H22(jc, v, p));
  }
  const bool ok = reflection <= 1e-12 && worst <= 1e-5;
  return {ok, "reflection max error " + fmt("%.1e", reflection) + " over 1000 inputs, gradient max rel. error " +
                  fmt("%.1e", worst) + " over 100 points"};
}

Outcome determinism() {
  const auto m = reference::sign_flip(false);
  VerifyOptions opt;
  opt.seed = 99;
  opt.n_paths = 20000;
  std::vector<std::string> dumps;
  for (std::size_t w : {1u, 4u, 8u}) {
    opt.workers = w;
    dumps.push_back(to_json(verify(m, CaseFlags::standard_case(1.0), opt)).dump());
  }
  const bool ok = dumps[0] == dumps[1] && dumps[0] == dumps[2];
  return {ok, "reports for 1, 4, 8 workers " + std::string(ok ? "identical" : "DIFFER") + " (" +
                  std::to_string(dumps[0].size()) + " bytes)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"classical LQ reduction", classical_lq_reduction},
      {"value-cost consistency", value_cost_consistency},
      {"optimality inequality", optimality_inequality},
      {"monotone truncation", monotone_truncation},
      {"sandwich bounds", sandwich_bounds},
      {"uniform positivity", uniform_positivity},
      {"symmetry collapse", symmetry_collapse},
      {"reflection identity and gradients", reflection_and_gradients},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.passed ? 0 : 1;
    std::printf("%s  [%zu] %s: %s\n", o.passed ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
