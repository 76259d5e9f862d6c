#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "regime_lq/feedback.hpp"
#include "regime_lq/riccati.hpp"
#include "regime_lq/simulation.hpp"
#include "regime_lq/verification.hpp"

namespace regime_lq {

using ordered_json = nlohmann::ordered_json;

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns t, regime, P1, P2 with one-based regimes, time-major.
inline void write_riccati_csv(std::ostream& os, const RiccatiSolution& s) {
  os << "t,regime,P1,P2\n";
  for (std::size_t n = 0; n < s.grid.nodes(); ++n)
    for (std::size_t i = 0; i < s.regimes(); ++i)
      os << fmt17(s.grid.node(n)) << ',' << (i + 1) << ',' << fmt17(s.P1[i][n]) << ','
         << fmt17(s.P2[i][n]) << '\n';
}

inline ordered_json riccati_metadata(const RiccatiSolution& s) {
  ordered_json j;
  j["variant"] = to_string(s.variant);
  j["radius"] = s.radius ? ordered_json(*s.radius) : ordered_json(nullptr);
  j["grid"] = {{"horizon", s.grid.horizon()}, {"steps", s.grid.steps()}};
  j["regimes"] = s.regimes();
  j["minimizer_stats"] = {{"calls", s.stats.calls},
                          {"closed_form", s.stats.closed_form},
                          {"iterations", s.stats.iterations},
                          {"max_iterations", s.stats.max_iterations}};
  return j;
}

/// Long format: t, regime, table, atom, component, value. The atom column is
/// empty for the diffusion tables.
inline void write_law_csv(std::ostream& os, const FeedbackLaw& law) {
  os << "t,regime,table,atom,component,value\n";
  const auto& g = law.grid();
  auto put = [&](double t, std::size_t i, const char* name, const std::string& atom,
                 const Eigen::VectorXd& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k)
      os << fmt17(t) << ',' << (i + 1) << ',' << name << ',' << atom << ',' << (k + 1) << ','
         << fmt17(v[k]) << '\n';
  };
  for (std::size_t n = 0; n < g.nodes(); ++n) {
    const double t = g.node(n);
    for (std::size_t i = 0; i < law.regimes(); ++i) {
      put(t, i, "v11", "", law.v11(i, n));
      put(t, i, "v21", "", law.v21(i, n));
      for (std::size_t a = 0; a < law.atoms(); ++a) {
        put(t, i, "v12", std::to_string(a + 1), law.v12(i, n, a));
        put(t, i, "v22", std::to_string(a + 1), law.v22(i, n, a));
      }
    }
  }
}

inline void write_trace_csv(std::ostream& os, const PathRecord& p, Eigen::Index m1) {
  os << "t,X,regime";
  for (Eigen::Index k = 0; k < m1; ++k) os << ",u1_" << (k + 1);
  os << ",jump_component,jump_atom,regime_switch\n";
  for (const auto& pt : p.trace) {
    os << fmt17(pt.t) << ',' << fmt17(pt.x) << ',' << (pt.regime + 1);
    for (Eigen::Index k = 0; k < m1; ++k) os << ',' << fmt17(k < pt.u1.size() ? pt.u1[k] : 0.0);
    os << ',' << (pt.jump_component >= 0 ? std::to_string(pt.jump_component + 1) : "") << ','
       << (pt.jump_atom >= 0 ? std::to_string(pt.jump_atom + 1) : "") << ','
       << (pt.regime_switch ? 1 : 0) << '\n';
  }
}

inline ordered_json to_json(const McEstimate& e) {
  return {{"mean", e.mean},
          {"std_error", e.std_error},
          {"n_paths", e.n_paths},
          {"exploded", e.exploded},
          {"ci95", {e.ci95[0], e.ci95[1]}}};
}

// JSON has no infinity; unbounded excess ratios are written as strings.
inline ordered_json ratio_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

/// Full report. Contains no timing or worker information, so reruns with a
/// fixed seed serialize identically.
inline ordered_json to_json(const VerificationReport& r) {
  ordered_json j;
  j["status"] = r.passed ? "PASS" : "FAIL";
  j["options"] = {{"grid_steps", r.options.grid_steps}, {"sim_steps", r.options.sim_steps},
                  {"x0", r.options.x0},                 {"i0", r.options.i0 + 1},
                  {"n_paths", r.options.n_paths},       {"seed", r.options.seed},
                  {"n_adversaries", r.options.n_adversaries}, {"band", r.options.band}};
  j["P1_0"] = r.P1_0;
  j["P2_0"] = r.P2_0;
  j["value"] = r.value;
  j["bias_allowance"] = r.bias_allowance;
  j["optimal"] = to_json(r.optimal);
  j["optimal"]["gap"] = r.optimal_gap;
  j["optimal"]["passed"] = r.optimal_passed;
  ordered_json adv = ordered_json::array();
  for (const auto& a : r.adversaries) {
    ordered_json e = to_json(a.estimate);
    e["name"] = a.name;
    e["excess_std_errors"] = ratio_json(a.excess);
    e["passed"] = a.passed;
    adv.push_back(std::move(e));
  }
  j["adversaries"] = std::move(adv);
  j["adversaries_passed"] = r.adversaries_passed;
  return j;
}

}  // namespace regime_lq
