#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "regime_lq/config.hpp"
#include "regime_lq/error.hpp"
#include "regime_lq/feedback.hpp"
#include "regime_lq/io.hpp"
#include "regime_lq/reference_models.hpp"
#include "regime_lq/riccati.hpp"
#include "regime_lq/simulation.hpp"
#include "regime_lq/validation.hpp"
#include "regime_lq/verification.hpp"

namespace regime_lq::cli {

enum class Command { Solve, Bounds, Simulate, Verify, Selfcheck };

struct RunConfig {
  Command command = Command::Selfcheck;
  std::string model_path;
  std::optional<std::string> case_name;  // standard, I, II, III
  std::optional<double> delta;
  std::size_t grid_n = 200;
  std::size_t grid_sim = 200;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::size_t n_adversaries = 9;
  std::string output_dir = "out";
  double x0 = 1.0;
  std::size_t i0 = 1;  // one-based
  std::vector<double> radii{1.0, 2.0, 4.0, 8.0};
  std::string policy = "optimal";
  std::size_t traces = 0;
  std::size_t threads = 0;
};

/// Fills `cfg` from the command line. Returns an exit code when the process
/// should stop right away (help, parse errors).
inline std::optional<int> parse_args(int argc, const char* const* argv, RunConfig& cfg) {
  CLI::App app{"Regime-switching cone-constrained LQ: Riccati solver and Monte Carlo verifier",
               "regime-lq"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub, bool needs_model) {
    auto* m = sub->add_option("--model,-m", cfg.model_path, "model JSON file");
    if (needs_model) m->required()->check(CLI::ExistingFile);
    sub->add_option("--case", cfg.case_name, "definiteness case overriding the file")
        ->check(CLI::IsMember({"standard", "I", "II", "III"}));
    sub->add_option("--delta", cfg.delta, "definiteness constant")->check(CLI::PositiveNumber);
    sub->add_option("--grid-n", cfg.grid_n, "Riccati grid steps")->check(CLI::PositiveNumber);
    sub->add_option("--out,-o", cfg.output_dir, "output directory");
  };
  auto monte_carlo = [&](CLI::App* sub) {
    sub->add_option("--grid-sim", cfg.grid_sim, "Euler steps")->check(CLI::PositiveNumber);
    sub->add_option("--mc-paths", cfg.n_paths, "Monte Carlo paths")->check(CLI::Range(2ul, 1ul << 40));
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--x0", cfg.x0, "initial state");
    sub->add_option("--i0", cfg.i0, "initial regime (1-based)")->check(CLI::PositiveNumber);
    sub->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  };

  auto* solve_cmd = app.add_subcommand("solve", "solve the Riccati system and build the feedback law");
  common(solve_cmd, true);

  auto* bounds_cmd = app.add_subcommand("bounds", "compare full, truncated and bounding solutions");
  common(bounds_cmd, true);
  bounds_cmd->add_option("--k", cfg.radii, "truncation radii")->delimiter(',')->check(CLI::PositiveNumber);

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo cost of a control");
  common(sim_cmd, true);
  monte_carlo(sim_cmd);
  sim_cmd->add_option("--policy", cfg.policy, "control to simulate")
      ->check(CLI::IsMember({"optimal", "zero"}));
  sim_cmd->add_option("--traces", cfg.traces, "write per-path traces for the first N paths");

  auto* verify_cmd = app.add_subcommand("verify", "check the value against simulated costs");
  common(verify_cmd, true);
  monte_carlo(verify_cmd);
  verify_cmd->add_option("--adversaries", cfg.n_adversaries, "number of comparison controls");

  auto* self_cmd = app.add_subcommand("selfcheck", "run the built-in analytic checks");
  self_cmd->add_option("--out,-o", cfg.output_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*solve_cmd) cfg.command = Command::Solve;
  else if (*bounds_cmd) cfg.command = Command::Bounds;
  else if (*sim_cmd) cfg.command = Command::Simulate;
  else if (*verify_cmd) cfg.command = Command::Verify;
  else cfg.command = Command::Selfcheck;
  return std::nullopt;
}

namespace detail {

inline CaseFlags resolve_flags(const RunConfig& cfg, const std::optional<CaseFlags>& from_file) {
  CaseFlags f = from_file.value_or(CaseFlags::standard_case(1.0));
  if (cfg.case_name) {
    const std::string& c = *cfg.case_name;
    if (c == "standard") f = CaseFlags::standard_case(f.delta);
    else if (c == "I") f = CaseFlags::singular_case(SingularCase::I, f.delta);
    else if (c == "II") f = CaseFlags::singular_case(SingularCase::II, f.delta);
    else f = CaseFlags::singular_case(SingularCase::III, f.delta);
  }
  if (cfg.delta) f.delta = *cfg.delta;
  return f;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::InvalidConfig, {"cli"}, "cannot write '" + p.string() + "'");
  return os;
}

inline void write_json(const std::filesystem::path& p, const ordered_json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

inline std::size_t regime_index(const RunConfig& cfg, const RegimeModel& m) {
  if (cfg.i0 < 1 || cfg.i0 > m.regimes()) {
    throw Error(ErrorCode::InvalidConfig, {"cli"},
                "--i0 must lie in 1.." + std::to_string(m.regimes()));
  }
  return cfg.i0 - 1;
}

inline int cmd_solve(const RunConfig& cfg, const RegimeModel& m, const CaseFlags& flags,
                     std::ostream& out) {
  const RiccatiSolution sol = solve(m, flags, SolverGrid(m.horizon(), cfg.grid_n));
  const FeedbackLaw law = build_law(m, sol);
  const std::filesystem::path dir(cfg.output_dir);
  {
    auto os = open_out(dir / "riccati.csv");
    write_riccati_csv(os, sol);
  }
  write_json(dir / "riccati_meta.json", riccati_metadata(sol));
  {
    auto os = open_out(dir / "law.csv");
    write_law_csv(os, law);
  }
  out << "solved " << m.regimes() << " regime(s) on " << cfg.grid_n << " steps\n";
  for (std::size_t i = 0; i < m.regimes(); ++i)
    out << "  regime " << (i + 1) << ": P1(0) = " << fmt17(sol.P1[i][0])
        << ", P2(0) = " << fmt17(sol.P2[i][0]) << '\n';
  out << "wrote " << (dir / "riccati.csv").string() << ", riccati_meta.json, law.csv\n";
  return 0;
}

inline int cmd_bounds(const RunConfig& cfg, const RegimeModel& m, const CaseFlags& flags,
                      std::ostream& out) {
  const SolverGrid grid(m.horizon(), cfg.grid_n);
  std::vector<double> radii = cfg.radii;
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  const RiccatiSolution full = solve(m, flags, grid);
  std::vector<RiccatiSolution> trunc;
  for (double k : radii) trunc.push_back(solve_truncated(m, flags, grid, k));
  const RiccatiSolution upper = solve_upper_bound(m, grid);
  std::optional<SingularLowerBound> lower;
  if (flags.singular) lower = lower_bound_singular(flags, m);

  const std::filesystem::path dir(cfg.output_dir);
  {
    auto os = open_out(dir / "bounds.csv");
    os << "t,regime";
    for (double k : radii) os << ",k" << fmt17(k) << "_P1,k" << fmt17(k) << "_P2";
    os << ",full_P1,full_P2,upper_P1,upper_P2";
    if (lower) os << ",singular_lower";
    os << '\n';
    for (std::size_t n = 0; n < grid.nodes(); ++n) {
      for (std::size_t i = 0; i < m.regimes(); ++i) {
        os << fmt17(grid.node(n)) << ',' << (i + 1);
        for (const auto& s : trunc) os << ',' << fmt17(s.P1[i][n]) << ',' << fmt17(s.P2[i][n]);
        os << ',' << fmt17(full.P1[i][n]) << ',' << fmt17(full.P2[i][n]) << ','
           << fmt17(upper.P1[i][n]) << ',' << fmt17(upper.P2[i][n]);
        if (lower) os << ',' << fmt17((*lower)(grid.node(n)));
        os << '\n';
      }
    }
  }

  // Largest violation of each ordering; nonpositive means it holds.
  auto worst = [&](const RiccatiSolution& hi, const RiccatiSolution& lo) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < grid.nodes(); ++n)
        v = std::max({v, lo.P1[i][n] - hi.P1[i][n], lo.P2[i][n] - hi.P2[i][n]});
    return v;
  };
  constexpr double tol = 1e-8;
  ordered_json report;
  report["grid"] = {{"horizon", grid.horizon()}, {"steps", grid.steps()}};
  report["radii"] = radii;
  ordered_json checks = ordered_json::array();
  bool ok = true;
  auto add = [&](const std::string& name, double violation) {
    const bool pass = violation <= tol;
    ok &= pass;
    checks.push_back({{"check", name}, {"max_violation", violation}, {"passed", pass}});
    out << (pass ? "  ok    " : "  FAIL  ") << name << "  (max violation " << fmt17(violation) << ")\n";
  };
  out << "ordering checks (tolerance 1e-8):\n";
  for (std::size_t r = 0; r + 1 < radii.size(); ++r)
    add("P(k=" + fmt17(radii[r]) + ") >= P(k=" + fmt17(radii[r + 1]) + ")", worst(trunc[r], trunc[r + 1]));
  if (!radii.empty()) add("P(k=" + fmt17(radii.back()) + ") >= P(full)", worst(trunc.back(), full));
  add("upper >= P(full)", worst(upper, full));
  if (flags.standard) {
    double neg = 0.0;
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < grid.nodes(); ++n)
        neg = std::max({neg, -full.P1[i][n], -full.P2[i][n]});
    add("P(full) >= 0", neg);
  }
  if (lower) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        const double b = (*lower)(grid.node(n));
        v = std::max({v, b - full.P1[i][n], b - full.P2[i][n]});
      }
    add("P(full) >= singular lower bound", v);
    report["singular_lower_bound"] = {{"case", to_string(lower->kind)},
                                      {"delta", lower->delta},
                                      {"rate", lower->rate}};
  }
  if (!radii.empty()) {
    double gap = 0.0;
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < grid.nodes(); ++n)
        gap = std::max({gap, std::abs(trunc.back().P1[i][n] - full.P1[i][n]),
                        std::abs(trunc.back().P2[i][n] - full.P2[i][n])});
    report["largest_radius_gap"] = gap;
    out << "sup |P(k=" << fmt17(radii.back()) << ") - P(full)| = " << fmt17(gap) << '\n';
  }
  report["checks"] = std::move(checks);
  report["status"] = ok ? "PASS" : "FAIL";
  write_json(dir / "bounds_report.json", report);
  out << "wrote " << (dir / "bounds.csv").string() << ", bounds_report.json\n";
  return ok ? 0 : 3;
}

inline int cmd_simulate(const RunConfig& cfg, const RegimeModel& m, const CaseFlags& flags,
                        std::ostream& out) {
  const std::size_t i0 = regime_index(cfg, m);
  SimulationOptions opt;
  opt.n_paths = cfg.n_paths;
  opt.steps = cfg.grid_sim;
  opt.seed = cfg.seed;
  opt.workers = cfg.threads;
  opt.traced_paths = cfg.traces;

  std::optional<RiccatiSolution> sol;
  PathBundle bundle;
  if (cfg.policy == "optimal") {
    sol = solve(m, flags, SolverGrid(m.horizon(), cfg.grid_n));
    bundle = simulate_paths(m, build_law(m, *sol), cfg.x0, i0, opt);
  } else {
    bundle = simulate_paths(m, ZeroPolicy::for_model(m), cfg.x0, i0, opt);
  }
  const McEstimate est = summarize(bundle);

  const std::filesystem::path dir(cfg.output_dir);
  ordered_json j;
  j["policy"] = cfg.policy;
  j["x0"] = cfg.x0;
  j["i0"] = cfg.i0;
  j["seed"] = cfg.seed;
  j["sim_steps"] = cfg.grid_sim;
  j["estimate"] = to_json(est);
  if (sol) j["value"] = sol->value(cfg.x0, i0);
  write_json(dir / "estimate.json", j);

  if (cfg.traces > 0) {
    std::filesystem::create_directories(dir / "traces");
    for (std::size_t p = 0; p < std::min(cfg.traces, bundle.paths.size()); ++p) {
      auto os = open_out(dir / "traces" / ("path_" + std::to_string(p + 1) + ".csv"));
      write_trace_csv(os, bundle.paths[p], m.dims().m1);
    }
  }
  out << "J = " << fmt17(est.mean) << " +- " << fmt17(est.std_error) << " (" << est.n_paths
      << " paths";
  if (est.exploded) out << ", " << est.exploded << " exploded";
  out << ")\n";
  if (sol) out << "V = " << fmt17(sol->value(cfg.x0, i0)) << '\n';
  out << "wrote " << (dir / "estimate.json").string() << '\n';
  return 0;
}

inline int cmd_verify(const RunConfig& cfg, const RegimeModel& m, const CaseFlags& flags,
                      std::ostream& out) {
  VerifyOptions opt;
  opt.grid_steps = cfg.grid_n;
  opt.sim_steps = cfg.grid_sim;
  opt.x0 = cfg.x0;
  opt.i0 = regime_index(cfg, m);
  opt.n_paths = cfg.n_paths;
  opt.seed = cfg.seed;
  opt.n_adversaries = cfg.n_adversaries;
  opt.workers = cfg.threads;
  const VerificationReport r = verify(m, flags, opt);
  const std::filesystem::path dir(cfg.output_dir);
  write_json(dir / "verification.json", to_json(r));

  char line[160];
  std::snprintf(line, sizeof line, "V = %.6f   J(u*) = %.6f +- %.6f   bias allowance %.3g\n",
                r.value, r.optimal.mean, r.optimal.std_error, r.bias_allowance);
  out << line;
  for (const auto& a : r.adversaries) {
    std::snprintf(line, sizeof line, "  %-14s J = %.6f +- %.6f  %s\n", a.name.c_str(),
                  a.estimate.mean, a.estimate.std_error, a.passed ? "ok" : "BELOW VALUE");
    out << line;
  }
  out << (r.passed ? "PASS" : "FAIL") << "  (report in " << (dir / "verification.json").string() << ")\n";
  return r.passed ? 0 : 3;
}

/// Built-in analytic checks that need no input files.
inline int cmd_selfcheck(std::ostream& out) {
  bool all = true;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    all &= pass;
    out << (pass ? "PASS  " : "FAIL  ") << name << "  " << detail << '\n';
  };

  {
    const double T = 2.0;
    const auto m = reference::classical_lq(T);
    const auto sol = solve(m, CaseFlags::standard_case(1.0), SolverGrid(T, 2000));
    const double p = sol.p1(0, T - 1.0);
    const double exact = reference::classical_lq_exact(T - 1.0, T);
    report("classical LQ reduction", std::abs(p - exact) <= 1e-4,
           "P(T-1) = " + fmt17(p) + ", implicit relation gives " + fmt17(exact));
  }
  {
    const auto m = reference::sign_flip(true);
    const auto sol = solve(m, CaseFlags::standard_case(1.0), SolverGrid(m.horizon(), 400));
    double gap = 0.0;
    for (std::size_t i = 0; i < m.regimes(); ++i)
      for (std::size_t n = 0; n < sol.grid.nodes(); ++n)
        gap = std::max(gap, std::abs(sol.P1[i][n] - sol.P2[i][n]));
    report("symmetry collapse", gap <= 1e-10, "sup |P1 - P2| = " + fmt17(gap));
  }
  {
    const auto m = reference::zero_dynamics(1.0);
    VerifyOptions opt;
    opt.x0 = 2.0;
    opt.n_paths = 200;
    opt.seed = 7;
    const auto r = verify(m, CaseFlags::standard_case(1.0), opt);
    report("zero model", r.passed && r.value == 4.0 && r.optimal.mean == 4.0,
           "V = " + fmt17(r.value) + ", J(u*) = " + fmt17(r.optimal.mean));
  }
  return all ? 0 : 3;
}

}  // namespace detail

/// Executes one command. Errors are reported on `err` and mapped to the
/// exit code contract (1 validation, 2 solver, 3 verification).
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    std::filesystem::create_directories(cfg.output_dir);
    if (cfg.command == Command::Selfcheck) return detail::cmd_selfcheck(out);

    const ModelConfig mc = load_model(cfg.model_path);
    const CaseFlags flags = detail::resolve_flags(cfg, mc.flags);
    const ValidationReport vr = validate(mc.model, flags);
    ensure_valid(vr);

    switch (cfg.command) {
      case Command::Solve: return detail::cmd_solve(cfg, mc.model, flags, out);
      case Command::Bounds: return detail::cmd_bounds(cfg, mc.model, flags, out);
      case Command::Simulate: return detail::cmd_simulate(cfg, mc.model, flags, out);
      case Command::Verify: return detail::cmd_verify(cfg, mc.model, flags, out);
      case Command::Selfcheck: break;
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: [cli] " << e.what() << '\n';
    return 1;
  }
}

}  // namespace regime_lq::cli
