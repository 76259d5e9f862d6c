#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "regime_lq/error.hpp"
#include "regime_lq/feedback.hpp"
#include "regime_lq/model.hpp"
#include "regime_lq/random.hpp"

namespace regime_lq {

// ---------------------------------------------------------------------------
// Regime chain

/// Right-continuous piecewise-constant path: states[k] holds on
/// [times[k], times[k+1]).
struct RegimeTrajectory {
  std::vector<double> times;
  std::vector<std::size_t> states;

  std::size_t at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    return states[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  double occupation(std::size_t state, double horizon) const {
    double total = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double end = k + 1 < times.size() ? times[k + 1] : horizon;
      if (states[k] == state) total += end - times[k];
    }
    return total;
  }
};

template <class Engine>
RegimeTrajectory simulate_chain(const Eigen::MatrixXd& generator, std::size_t i0, double horizon,
                                Engine& engine) {
  RegimeTrajectory path{{0.0}, {i0}};
  std::size_t i = i0;
  double t = 0.0;
  const auto ell = generator.rows();
  std::vector<double> exits(static_cast<std::size_t>(ell));
  for (;;) {
    const double rate = -generator(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    if (!(rate > 0.0)) break;
    t += std::exponential_distribution<double>(rate)(engine);
    if (t >= horizon) break;
    for (Eigen::Index j = 0; j < ell; ++j) {
      exits[static_cast<std::size_t>(j)] =
          static_cast<std::size_t>(j) == i ? 0.0
                                           : std::max(0.0, generator(static_cast<Eigen::Index>(i), j));
    }
    i = std::discrete_distribution<std::size_t>(exits.begin(), exits.end())(engine);
    path.times.push_back(t);
    path.states.push_back(i);
  }
  return path;
}

inline RegimeTrajectory simulate_chain(const Eigen::MatrixXd& generator, std::size_t i0,
                                       double horizon, std::uint64_t seed) {
  Philox4x32 engine(seed, streams::kChain, 0);
  return simulate_chain(generator, i0, horizon, engine);
}

// ---------------------------------------------------------------------------
// Control sources

/// Sign-split linear feedback: anything exposing gains(i, t) and the times at
/// which those gains may change.
template <class P>
concept SignSplitPolicy = requires(const P& p, std::size_t i, double t) {
  { p.gains(i, t) } -> std::convertible_to<SignSplitGains>;
  { p.breakpoints() } -> std::convertible_to<std::vector<double>>;
};

struct ZeroPolicy {
  Eigen::Index m1 = 1;
  Eigen::Index m2 = 1;
  std::size_t atoms = 0;

  static ZeroPolicy for_model(const RegimeModel& m) { return {m.dims().m1, m.dims().m2, m.atoms()}; }

  SignSplitGains gains(std::size_t, double) const {
    return {Eigen::VectorXd::Zero(m1), Eigen::VectorXd::Zero(m1),
            std::vector<Eigen::VectorXd>(atoms, Eigen::VectorXd::Zero(m2)),
            std::vector<Eigen::VectorXd>(atoms, Eigen::VectorXd::Zero(m2))};
  }
  std::vector<double> breakpoints() const { return {}; }
};

/// u1 = v |X| for a fixed direction v in the control cone, u2 = 0.
struct RayPolicy {
  Eigen::VectorXd direction;
  Eigen::Index m2 = 1;
  std::size_t atoms = 0;

  SignSplitGains gains(std::size_t, double) const {
    return {direction, direction, std::vector<Eigen::VectorXd>(atoms, Eigen::VectorXd::Zero(m2)),
            std::vector<Eigen::VectorXd>(atoms, Eigen::VectorXd::Zero(m2))};
  }
  std::vector<double> breakpoints() const { return {}; }
};

/// Multiplies every gain of another policy by a nonnegative factor.
template <SignSplitPolicy Base>
struct ScaledPolicy {
  const Base* base;
  double factor;

  SignSplitGains gains(std::size_t i, double t) const {
    SignSplitGains g = base->gains(i, t);
    g.u1_pos *= factor;
    g.u1_neg *= factor;
    for (auto& v : g.u2_pos) v *= factor;
    for (auto& v : g.u2_neg) v *= factor;
    return g;
  }
  std::vector<double> breakpoints() const { return base->breakpoints(); }
};

static_assert(SignSplitPolicy<FeedbackLaw>);
static_assert(SignSplitPolicy<ZeroPolicy>);
static_assert(SignSplitPolicy<RayPolicy>);

// ---------------------------------------------------------------------------
// Closed-loop coefficients

/// Closed-loop dynamics of one regime on one cell, per unit of X+ and X-.
struct CellAggregates {
  double drift_pos = 0.0;
  double drift_neg = 0.0;
  Eigen::VectorXd vol_pos;  // n1
  Eigen::VectorXd vol_neg;
  double cost_pos = 0.0;    // running cost per (X+)^2
  double cost_neg = 0.0;
  std::vector<double> jump_pos;  // post-jump multiplier, index k * atoms + a
  std::vector<double> jump_neg;
  Eigen::VectorXd u1_pos;
  Eigen::VectorXd u1_neg;
};

/// Piecewise-constant closed-loop coefficients. Cells start at every
/// coefficient knot and every policy breakpoint.
class ClosedLoop {
 public:
  template <SignSplitPolicy P>
  ClosedLoop(const RegimeModel& model, const P& policy) : horizon_(model.horizon()) {
    starts_ = model.knot_times();
    for (double b : policy.breakpoints())
      if (b > 0.0 && b < horizon_) starts_.push_back(b);
    std::sort(starts_.begin(), starts_.end());
    starts_.erase(std::unique(starts_.begin(), starts_.end()), starts_.end());

    const std::size_t ell = model.regimes();
    cells_.resize(ell);
    terminal_.resize(ell);
    for (std::size_t i = 0; i < ell; ++i) {
      terminal_[i] = model.terminal_weight(i);
      cells_[i].reserve(starts_.size());
      for (double s : starts_) cells_[i].push_back(aggregate(model, i, s, policy.gains(i, s)));
    }
  }

  double horizon() const noexcept { return horizon_; }
  const std::vector<double>& starts() const noexcept { return starts_; }
  std::size_t cells() const noexcept { return starts_.size(); }
  double cell_end(std::size_t m) const { return m + 1 < starts_.size() ? starts_[m + 1] : horizon_; }
  const CellAggregates& cell(std::size_t i, std::size_t m) const { return cells_[i][m]; }
  double terminal_weight(std::size_t i) const { return terminal_[i]; }

 private:
  static CellAggregates aggregate(const RegimeModel& model, std::size_t i, double s,
                                  const SignSplitGains& g) {
    const DiffusionSnapshot c = model.diffusion(i, s);
    const auto& nu = model.jumps();
    const std::size_t na = nu.size();
    const auto n2 = model.dims().n2;

    CellAggregates out;
    out.u1_pos = g.u1_pos;
    out.u1_neg = g.u1_neg;
    out.drift_pos = c.A + c.B1.dot(g.u1_pos);
    out.drift_neg = -c.A + c.B1.dot(g.u1_neg);
    out.vol_pos = c.C + c.D * g.u1_pos;
    out.vol_neg = -c.C + c.D * g.u1_neg;
    out.cost_pos = g.u1_pos.dot(c.R1 * g.u1_pos) + c.Q;
    out.cost_neg = g.u1_neg.dot(c.R1 * g.u1_neg) + c.Q;
    out.jump_pos.assign(static_cast<std::size_t>(n2) * na, 1.0);
    out.jump_neg.assign(static_cast<std::size_t>(n2) * na, -1.0);

    for (std::size_t a = 0; a < na; ++a) {
      const double w = nu.weight(a);
      const JumpSnapshot js = model.jump(i, s, a);
      const Eigen::VectorXd fp = js.F * g.u2_pos[a];
      const Eigen::VectorXd fn = js.F * g.u2_neg[a];
      // Compensator: the drift loses w * sum_k (E_k X + F_k u2).
      double comp_pos = 0.0, comp_neg = 0.0;
      for (Eigen::Index k = 0; k < n2; ++k) {
        comp_pos += js.E[k] + fp[k];
        comp_neg += -js.E[k] + fn[k];
        const std::size_t idx = static_cast<std::size_t>(k) * na + a;
        out.jump_pos[idx] = 1.0 + js.E[k] + fp[k];
        out.jump_neg[idx] = -1.0 - js.E[k] + fn[k];
      }
      out.drift_pos += w * (js.B2.dot(g.u2_pos[a]) - comp_pos);
      out.drift_neg += w * (js.B2.dot(g.u2_neg[a]) - comp_neg);
      out.cost_pos += w * g.u2_pos[a].dot(js.R2 * g.u2_pos[a]);
      out.cost_neg += w * g.u2_neg[a].dot(js.R2 * g.u2_neg[a]);
    }
    return out;
  }

  double horizon_;
  std::vector<double> starts_;
  std::vector<std::vector<CellAggregates>> cells_;
  std::vector<double> terminal_;
};

// ---------------------------------------------------------------------------
// Paths

inline constexpr double kExplosionThreshold = 1e12;

struct TracePoint {
  double t = 0.0;
  double x = 0.0;
  std::size_t regime = 0;
  Eigen::VectorXd u1;
  int jump_component = -1;  // -1: no jump at this point
  int jump_atom = -1;
  bool regime_switch = false;
};

struct PathRecord {
  std::uint64_t path_id = 0;
  double cost = 0.0;
  double terminal_state = 0.0;
  std::size_t terminal_regime = 0;
  std::size_t jumps = 0;
  std::size_t switches = 0;
  bool exploded = false;
  std::optional<double> explosion_time;
  std::vector<TracePoint> trace;
};

struct PathBundle {
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::vector<PathRecord> paths;
};

/// Euler-Maruyama on a uniform grid, refined at coefficient/policy
/// breakpoints and at the exact regime switch and jump epochs.
class PathSimulator {
 public:
  PathSimulator(const RegimeModel& model, const ClosedLoop& loop, std::size_t steps,
                std::uint64_t seed)
      : model_(model), loop_(loop), steps_(steps), seed_(seed) {
    if (steps == 0) throw Error(ErrorCode::InvalidConfig, {"sim"}, "simulation grid needs a step");
    std::vector<double> w;
    for (std::size_t a = 0; a < model.atoms(); ++a) w.push_back(model.jumps().weight(a));
    marks_ = std::discrete_distribution<int>::param_type(w.begin(), w.end());
  }

  PathRecord run(double x0, std::size_t i0, std::uint64_t path_id, bool trace = false) const {
    const double T = model_.horizon();
    const std::size_t na = model_.atoms();
    const auto n1 = model_.dims().n1;
    const auto n2 = model_.dims().n2;

    Philox4x32 chain_rng(seed_, streams::kChain, path_id);
    const RegimeTrajectory regimes = simulate_chain(model_.generator(), i0, T, chain_rng);

    struct JumpEvent {
      double t;
      int component;
      int atom;
    };
    std::vector<JumpEvent> jumps;
    const double mass = model_.jumps().total_mass();
    if (mass > 0.0 && na > 0) {
      for (Eigen::Index k = 0; k < n2; ++k) {
        Philox4x32 rng(seed_, streams::kJumpBase + static_cast<std::uint32_t>(k), path_id);
        std::exponential_distribution<double> gap(mass);
        std::discrete_distribution<int> mark(marks_);
        for (double t = gap(rng); t < T; t += gap(rng))
          jumps.push_back({t, static_cast<int>(k), mark(rng)});
      }
      std::stable_sort(jumps.begin(), jumps.end(),
                       [](const JumpEvent& a, const JumpEvent& b) { return a.t < b.t; });
    }

    Philox4x32 bm_rng(seed_, streams::kBrownian, path_id);
    std::normal_distribution<double> normal;

    PathRecord rec;
    rec.path_id = path_id;
    double t = 0.0, x = x0, cost = 0.0;
    std::size_t regime = i0;
    std::size_t node = 1, je = 0, se = 1, cell = 0;
    const double inf = std::numeric_limits<double>::infinity();

    auto grid_time = [&](std::size_t n) {
      return n >= steps_ ? T : T * static_cast<double>(n) / static_cast<double>(steps_);
    };
    auto record = [&](int comp, int atom, bool sw) {
      if (!trace) return;
      const auto& c = loop_.cell(regime, cell);
      TracePoint p;
      p.t = t;
      p.x = x;
      p.regime = regime;
      p.u1 = x > 0.0 ? Eigen::VectorXd(c.u1_pos * x)
                     : Eigen::VectorXd(c.u1_neg * (x < 0.0 ? -x : 0.0));
      p.jump_component = comp;
      p.jump_atom = atom;
      p.regime_switch = sw;
      rec.trace.push_back(std::move(p));
    };
    record(-1, -1, false);

    Eigen::VectorXd vol(n1);
    while (t < T) {
      const double t_grid = grid_time(node);
      const double t_jump = je < jumps.size() ? jumps[je].t : inf;
      const double t_switch = se < regimes.times.size() ? regimes.times[se] : inf;
      const double t_cell = loop_.cell_end(cell);
      const double next = std::min(std::min(t_grid, t_jump), std::min(t_switch, t_cell));

      const double h = next - t;
      if (h > 0.0) {
        const CellAggregates& c = loop_.cell(regime, cell);
        const double xp = x > 0.0 ? x : 0.0;
        const double xm = x < 0.0 ? -x : 0.0;
        const double run0 = xp * xp * c.cost_pos + xm * xm * c.cost_neg;
        double dx = (xp * c.drift_pos + xm * c.drift_neg) * h;
        const double sq = std::sqrt(h);
        for (Eigen::Index j = 0; j < n1; ++j)
          dx += (xp * c.vol_pos[j] + xm * c.vol_neg[j]) * sq * normal(bm_rng);
        x += dx;
        const double yp = x > 0.0 ? x : 0.0;
        const double ym = x < 0.0 ? -x : 0.0;
        cost += 0.5 * h * (run0 + yp * yp * c.cost_pos + ym * ym * c.cost_neg);
      }
      t = next;
      bool event = false;
      if (next == t_grid) ++node;
      while (je < jumps.size() && jumps[je].t == next) {
        if (trace && !event) record(-1, -1, false);
        event = true;
        const CellAggregates& c = loop_.cell(regime, cell);
        const std::size_t idx = static_cast<std::size_t>(jumps[je].component) * na +
                                static_cast<std::size_t>(jumps[je].atom);
        if (x > 0.0) x *= c.jump_pos[idx];
        else if (x < 0.0) x = -x * c.jump_neg[idx];
        ++rec.jumps;
        record(jumps[je].component, jumps[je].atom, false);
        ++je;
      }
      while (se < regimes.times.size() && regimes.times[se] == next) {
        if (trace && !event) record(-1, -1, false);
        event = true;
        regime = regimes.states[se];
        ++rec.switches;
        ++se;
        record(-1, -1, true);
      }
      if (next == t_cell && cell + 1 < loop_.cells()) ++cell;
      if (!event && next == t_grid) record(-1, -1, false);

      if (!(std::abs(x) <= kExplosionThreshold)) {
        rec.exploded = true;
        rec.explosion_time = t;
        rec.cost = std::numeric_limits<double>::quiet_NaN();
        rec.terminal_state = x;
        rec.terminal_regime = regime;
        return rec;
      }
    }
    cost += loop_.terminal_weight(regime) * x * x;
    rec.cost = cost;
    rec.terminal_state = x;
    rec.terminal_regime = regime;
    return rec;
  }

 private:
  const RegimeModel& model_;
  const ClosedLoop& loop_;
  std::size_t steps_;
  std::uint64_t seed_;
  std::discrete_distribution<int>::param_type marks_;
};

// ---------------------------------------------------------------------------
// Parallel execution and reduction

/// Worker count: `requested` (0 means hardware concurrency), capped by the
/// REGIME_LQ_THREADS environment variable when it is set.
inline std::size_t resolve_workers(std::size_t requested) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REGIME_LQ_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(n, 1);
}

/// Calls fn(path_id) for every id in [0, n), split into contiguous blocks.
template <class Fn>
void for_each_path(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t p = 0; p < n; ++p) fn(p);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t p = lo; p < hi; ++p) fn(p);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Pairwise summation over a fixed binary tree of indices.
inline double tree_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += v[k];
    return s;
  }
  const std::size_t half = n / 2;
  return tree_sum(v, half) + tree_sum(v + half, n - half);
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::size_t exploded = 0;
  std::array<double, 2> ci95{0.0, 0.0};
};

/// Mean and standard error of per-path costs listed in path order. NaN
/// entries mark exploded paths and are excluded.
inline McEstimate summarize(const std::vector<double>& costs) {
  std::vector<double> ok;
  ok.reserve(costs.size());
  for (double c : costs)
    if (!std::isnan(c)) ok.push_back(c);

  McEstimate e;
  e.n_paths = ok.size();
  e.exploded = costs.size() - ok.size();
  if (e.exploded * 1000 > costs.size()) {
    throw Error(ErrorCode::ExplodedPath, {"sim"},
                std::to_string(e.exploded) + " of " + std::to_string(costs.size()) +
                    " paths exceeded |X| = 1e12");
  }
  if (ok.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, {"sim"}, "cost estimate needs at least two paths");
  }
  const double n = static_cast<double>(ok.size());
  e.mean = tree_sum(ok.data(), ok.size()) / n;
  for (double& c : ok) c = (c - e.mean) * (c - e.mean);
  e.std_error = std::sqrt(tree_sum(ok.data(), ok.size()) / (n - 1.0) / n);
  e.ci95 = {e.mean - 1.96 * e.std_error, e.mean + 1.96 * e.std_error};
  return e;
}

struct SimulationOptions {
  std::size_t n_paths = 10000;
  std::size_t steps = 200;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::size_t traced_paths = 0;  // keep full traces for the first few paths
};

template <SignSplitPolicy P>
PathBundle simulate_paths(const RegimeModel& model, const P& policy, double x0, std::size_t i0,
                          const SimulationOptions& opt) {
  if (i0 >= model.regimes()) {
    throw Error(ErrorCode::InvalidConfig, {"sim"}, "initial regime out of range");
  }
  const ClosedLoop loop(model, policy);
  const PathSimulator sim(model, loop, opt.steps, opt.seed);
  PathBundle bundle{opt.seed, opt.n_paths, std::vector<PathRecord>(opt.n_paths)};
  for_each_path(opt.n_paths, resolve_workers(opt.workers), [&](std::size_t p) {
    bundle.paths[p] = sim.run(x0, i0, p, p < opt.traced_paths);
  });
  return bundle;
}

inline McEstimate summarize(const PathBundle& bundle) {
  std::vector<double> costs(bundle.paths.size());
  for (std::size_t p = 0; p < costs.size(); ++p) costs[p] = bundle.paths[p].cost;
  return summarize(costs);
}

/// Monte Carlo estimate of the cost of `policy` started from (x0, i0).
template <SignSplitPolicy P>
McEstimate estimate_cost(const RegimeModel& model, const P& policy, double x0, std::size_t i0,
                         const SimulationOptions& opt) {
  if (opt.n_paths < 2) throw Error(ErrorCode::InvalidConfig, {"sim"}, "need at least two paths");
  if (i0 >= model.regimes()) {
    throw Error(ErrorCode::InvalidConfig, {"sim"}, "initial regime out of range");
  }
  const ClosedLoop loop(model, policy);
  const PathSimulator sim(model, loop, opt.steps, opt.seed);
  std::vector<double> costs(opt.n_paths);
  for_each_path(opt.n_paths, resolve_workers(opt.workers),
                [&](std::size_t p) { costs[p] = sim.run(x0, i0, p).cost; });
  return summarize(costs);
}

}  // namespace regime_lq
