#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "regime_lq/error.hpp"
#include "regime_lq/feedback.hpp"
#include "regime_lq/model.hpp"
#include "regime_lq/random.hpp"
#include "regime_lq/riccati.hpp"
#include "regime_lq/simulation.hpp"
#include "regime_lq/validation.hpp"

namespace regime_lq {

struct VerifyOptions {
  std::size_t grid_steps = 200;
  std::size_t sim_steps = 200;
  double x0 = 1.0;
  std::size_t i0 = 0;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::size_t n_adversaries = 9;
  std::size_t workers = 0;  // never affects the report
  double band = 3.0;        // width of the acceptance band in standard errors
};

struct AdversaryResult {
  std::string name;
  McEstimate estimate;
  double excess = 0.0;  // (J - V) / std_error of this adversary
  bool passed = false;
};

struct VerificationReport {
  VerifyOptions options;
  double P1_0 = 0.0;
  double P2_0 = 0.0;
  double value = 0.0;
  double bias_allowance = 0.0;
  McEstimate optimal;
  double optimal_gap = 0.0;  // |J(u*) - V|
  bool optimal_passed = false;
  std::vector<AdversaryResult> adversaries;
  bool adversaries_passed = false;
  bool passed = false;
};

/// Absolute slack for exact (zero-variance) comparisons.
inline double roundoff_slack(double value) { return 1e-12 * std::max(1.0, std::abs(value)); }

/// Factors applied to u* by the first comparison controls. The zero control
/// comes next, then random rays v |X| with v drawn in the control cone.
inline std::vector<double> adversary_scales() { return {1.25, 0.75, 1.5, 0.5}; }

inline Eigen::VectorXd random_cone_ray(const Cone& cone, std::uint64_t seed, std::uint64_t index) {
  Philox4x32 rng(seed, streams::kAdversary, index);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(cone.dimension());
  for (int attempt = 0; attempt < 16; ++attempt) {
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
    Eigen::VectorXd p = cone.project(v);
    if (p.norm() > 0.0) return p;
  }
  return Eigen::VectorXd::Zero(cone.dimension());
}

/// Solves the Riccati system, simulates the optimal feedback and a family of
/// admissible alternatives, and compares the costs with the predicted value.
inline VerificationReport verify(const RegimeModel& model, const CaseFlags& flags,
                                 const VerifyOptions& opt) {
  ensure_valid(validate(model, flags));
  if (opt.i0 >= model.regimes()) {
    throw Error(ErrorCode::InvalidConfig, {"sim"}, "initial regime out of range");
  }
  const SolverGrid grid(model.horizon(), opt.grid_steps);
  const RiccatiSolution sol = solve(model, flags, grid);
  const FeedbackLaw law = build_law(model, sol);

  VerificationReport r;
  r.options = opt;
  r.options.workers = 0;
  r.P1_0 = sol.P1[opt.i0][0];
  r.P2_0 = sol.P2[opt.i0][0];
  r.value = sol.value(opt.x0, opt.i0);
  r.bias_allowance = 2.0 * (model.horizon() / static_cast<double>(opt.sim_steps)) * opt.x0 *
                     opt.x0 * sol.max_slope();

  SimulationOptions sim;
  sim.n_paths = opt.n_paths;
  sim.steps = opt.sim_steps;
  sim.seed = opt.seed;
  sim.workers = opt.workers;

  r.optimal = estimate_cost(model, law, opt.x0, opt.i0, sim);
  r.optimal_gap = std::abs(r.optimal.mean - r.value);
  r.optimal_passed =
      r.optimal_gap <= opt.band * r.optimal.std_error + r.bias_allowance + roundoff_slack(r.value);

  auto judge = [&](std::string name, const McEstimate& e) {
    AdversaryResult a{std::move(name), e, 0.0, false};
    const double diff = e.mean - r.value;
    a.excess = e.std_error > 0.0 ? diff / e.std_error
                                 : (diff > roundoff_slack(r.value)    ? std::numeric_limits<double>::infinity()
                                    : diff < -roundoff_slack(r.value) ? -std::numeric_limits<double>::infinity()
                                                                      : 0.0);
    a.passed = e.mean >= r.value - opt.band * e.std_error - r.bias_allowance - roundoff_slack(r.value);
    r.adversaries.push_back(std::move(a));
  };

  const auto scales = adversary_scales();
  for (std::size_t k = 0; k < opt.n_adversaries; ++k) {
    if (k < scales.size()) {
      const ScaledPolicy<FeedbackLaw> p{&law, scales[k]};
      char name[32];
      std::snprintf(name, sizeof name, "scaled_%+.2f", scales[k] - 1.0);
      judge(name, estimate_cost(model, p, opt.x0, opt.i0, sim));
    } else if (k == scales.size()) {
      judge("zero", estimate_cost(model, ZeroPolicy::for_model(model), opt.x0, opt.i0, sim));
    } else {
      const std::size_t ray = k - scales.size() - 1;
      const RayPolicy p{random_cone_ray(model.control_cone(), opt.seed, ray), model.dims().m2,
                        model.atoms()};
      judge("ray_" + std::to_string(ray + 1), estimate_cost(model, p, opt.x0, opt.i0, sim));
    }
  }

  r.adversaries_passed = true;
  for (const auto& a : r.adversaries) r.adversaries_passed &= a.passed;
  r.passed = r.optimal_passed && r.adversaries_passed;
  return r;
}

/// Throws VerificationFailed naming the first statistic outside its band.
inline void ensure_passed(const VerificationReport& r) {
  if (!r.optimal_passed) {
    throw Error(ErrorCode::VerificationFailed, {"sim"},
                "optimal cost " + std::to_string(r.optimal.mean) + " differs from value " +
                    std::to_string(r.value) + " by " + std::to_string(r.optimal_gap));
  }
  for (const auto& a : r.adversaries) {
    if (!a.passed) {
      throw Error(ErrorCode::VerificationFailed, {"sim"},
                  "adversary " + a.name + " cost " + std::to_string(a.estimate.mean) +
                      " is below value " + std::to_string(r.value));
    }
  }
}

}  // namespace regime_lq
