#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "regime_lq/error.hpp"
#include "regime_lq/model.hpp"

namespace regime_lq {

inline constexpr double kAssumptionTolerance = 1e-12;

enum class CheckGroup { Basic, Standard, Singular };

inline std::string to_string(CheckGroup g) {
  switch (g) {
    case CheckGroup::Basic: return "basic";
    case CheckGroup::Standard: return "standard";
    case CheckGroup::Singular: return "singular";
  }
  return "?";
}

/// One assumption check. `margin` is the worst observed slack (negative when
/// violated) and the location fields point at where it was observed.
struct AssumptionCheck {
  std::string name;
  CheckGroup group = CheckGroup::Basic;
  bool passed = true;
  double margin = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> regime;
  std::optional<double> time;
  std::optional<std::size_t> atom;
  ErrorCode failure = ErrorCode::InvalidConfig;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  bool basic_passed = false;
  std::optional<bool> standard_passed;
  std::optional<bool> singular_passed;
  bool accepted = false;

  const AssumptionCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.passed && (c.group == CheckGroup::Basic)) return &c;
    for (const auto& c : checks)
      if (!c.passed) return &c;
    return nullptr;
  }
};

namespace detail {

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

class CheckBuilder {
 public:
  CheckBuilder(std::string name, CheckGroup group, ErrorCode failure) {
    check_.name = std::move(name);
    check_.group = group;
    check_.failure = failure;
  }

  void observe(double margin, std::optional<std::size_t> regime, std::optional<double> time,
               std::optional<std::size_t> atom = std::nullopt) {
    if (std::isnan(margin)) margin = -std::numeric_limits<double>::infinity();
    if (margin < check_.margin) {
      check_.margin = margin;
      check_.regime = regime;
      check_.time = time;
      check_.atom = atom;
    }
  }

  AssumptionCheck finish(double tolerance = kAssumptionTolerance) {
    check_.passed = check_.margin >= -tolerance;
    return check_;
  }

 private:
  AssumptionCheck check_;
};

template <class V, class F>
void for_each_knot(const TimeTable<V>& table, F&& f) {
  for (std::size_t k = 0; k < table.size(); ++k) f(table.knots()[k], table.values()[k]);
}

}  // namespace detail

/// Checks the standing boundedness/sign assumptions plus whichever
/// definiteness case `flags` declares. Never throws; see `ensure_valid`.
inline ValidationReport validate(const RegimeModel& model, const CaseFlags& flags) {
  using detail::CheckBuilder;
  using detail::for_each_knot;
  using detail::min_eigenvalue;

  ValidationReport report;
  const std::size_t ell = model.regimes();
  const std::size_t n_atoms = model.atoms();
  const double inf = std::numeric_limits<double>::infinity();

  {
    // Off-diagonal entries must be nonnegative exactly; row sums vanish to tolerance.
    CheckBuilder gen("generator", CheckGroup::Basic, ErrorCode::NonConservativeGenerator);
    const auto& q = model.generator();
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      double row = 0.0;
      for (Eigen::Index j = 0; j < q.cols(); ++j) {
        row += q(i, j);
        if (i != j && q(i, j) < 0.0) gen.observe(q(i, j) - 1.0, static_cast<std::size_t>(i), {});
      }
      gen.observe(-std::abs(row), static_cast<std::size_t>(i), {});
    }
    report.checks.push_back(gen.finish());
  }

  CheckBuilder bounded("bounded", CheckGroup::Basic, ErrorCode::UnboundedCoefficient);
  CheckBuilder q_sign("nonnegative_Q", CheckGroup::Basic, ErrorCode::NegativeWeight);
  CheckBuilder g_sign("nonnegative_G", CheckGroup::Basic, ErrorCode::NegativeWeight);
  CheckBuilder r1_psd("psd_R1", CheckGroup::Basic, ErrorCode::DefinitenessFailure);
  CheckBuilder r2_psd("psd_R2", CheckGroup::Basic, ErrorCode::DefinitenessFailure);
  CheckBuilder r1_delta("R1_ge_delta", CheckGroup::Standard, ErrorCode::DefinitenessFailure);
  CheckBuilder r2_delta("R2_ge_delta", CheckGroup::Standard, ErrorCode::DefinitenessFailure);
  CheckBuilder dtd_delta("DtD_ge_delta", CheckGroup::Singular, ErrorCode::DefinitenessFailure);
  CheckBuilder ftf_delta("FtF_ge_delta", CheckGroup::Singular, ErrorCode::DefinitenessFailure);
  CheckBuilder g_delta("G_ge_delta", CheckGroup::Singular, ErrorCode::DefinitenessFailure);
  CheckBuilder r1_delta_s("R1_ge_delta", CheckGroup::Singular, ErrorCode::DefinitenessFailure);
  CheckBuilder r2_delta_s("R2_ge_delta", CheckGroup::Singular, ErrorCode::DefinitenessFailure);

  const double delta = flags.delta;
  auto finite_margin = [&](bool ok) { return ok ? inf : -inf; };

  if (!model.generator().allFinite()) bounded.observe(-inf, {}, {});

  for (std::size_t i = 0; i < ell; ++i) {
    const auto& r = model.regime(i);
    for_each_knot(r.A, [&](double t, double v) { bounded.observe(finite_margin(std::isfinite(v)), i, t); });
    for_each_knot(r.B1, [&](double t, const Eigen::VectorXd& v) { bounded.observe(finite_margin(v.allFinite()), i, t); });
    for_each_knot(r.C, [&](double t, const Eigen::VectorXd& v) { bounded.observe(finite_margin(v.allFinite()), i, t); });
    for_each_knot(r.D, [&](double t, const Eigen::MatrixXd& d) {
      bounded.observe(finite_margin(d.allFinite()), i, t);
      if (d.allFinite()) dtd_delta.observe(min_eigenvalue(d.transpose() * d) - delta, i, t);
    });
    for_each_knot(r.R1, [&](double t, const Eigen::MatrixXd& m) {
      bounded.observe(finite_margin(m.allFinite()), i, t);
      if (!m.allFinite()) return;
      const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
      const double lo = min_eigenvalue(m);
      r1_psd.observe(std::min(lo, -asym), i, t);
      r1_delta.observe(lo - delta, i, t);
      r1_delta_s.observe(lo - delta, i, t);
    });
    for_each_knot(r.Q, [&](double t, double v) {
      bounded.observe(finite_margin(std::isfinite(v)), i, t);
      q_sign.observe(v, i, t);
    });
    bounded.observe(finite_margin(std::isfinite(r.G)), i, model.horizon());
    g_sign.observe(r.G, i, model.horizon());
    g_delta.observe(r.G - delta, i, model.horizon());

    for (std::size_t a = 0; a < n_atoms; ++a) {
      const auto& ac = r.atoms[a];
      for_each_knot(ac.B2, [&](double t, const Eigen::VectorXd& v) { bounded.observe(finite_margin(v.allFinite()), i, t, a); });
      for_each_knot(ac.E, [&](double t, const Eigen::VectorXd& v) { bounded.observe(finite_margin(v.allFinite()), i, t, a); });
      for_each_knot(ac.F, [&](double t, const Eigen::MatrixXd& f) {
        bounded.observe(finite_margin(f.allFinite()), i, t, a);
        if (f.allFinite()) ftf_delta.observe(min_eigenvalue(f.transpose() * f) - delta, i, t, a);
      });
      for_each_knot(ac.R2, [&](double t, const Eigen::MatrixXd& m) {
        bounded.observe(finite_margin(m.allFinite()), i, t, a);
        if (!m.allFinite()) return;
        const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
        const double lo = min_eigenvalue(m);
        r2_psd.observe(std::min(lo, -asym), i, t, a);
        r2_delta.observe(lo - delta, i, t, a);
        r2_delta_s.observe(lo - delta, i, t, a);
      });
    }
  }

  for (auto* b : {&bounded, &q_sign, &g_sign, &r1_psd, &r2_psd}) report.checks.push_back(b->finish());
  report.basic_passed = true;
  for (const auto& c : report.checks) report.basic_passed &= c.passed;

  if (!(delta > 0.0) && (flags.standard || flags.singular)) {
    CheckBuilder d("delta_positive", flags.standard ? CheckGroup::Standard : CheckGroup::Singular,
                   ErrorCode::DefinitenessFailure);
    d.observe(-inf, {}, {});
    report.checks.push_back(d.finish());
  }

  if (flags.standard) {
    auto a = r1_delta.finish();
    auto b = r2_delta.finish();
    const bool delta_ok = delta > 0.0;
    report.standard_passed = a.passed && b.passed && delta_ok;
    report.checks.push_back(std::move(a));
    report.checks.push_back(std::move(b));
  }

  if (flags.singular) {
    std::vector<AssumptionCheck> pair;
    pair.push_back(g_delta.finish());
    switch (*flags.singular) {
      case SingularCase::I:
        pair.push_back(dtd_delta.finish());
        pair.push_back(r2_delta_s.finish());
        break;
      case SingularCase::II:
        pair.push_back(dtd_delta.finish());
        pair.push_back(ftf_delta.finish());
        break;
      case SingularCase::III:
        pair.push_back(r1_delta_s.finish());
        pair.push_back(ftf_delta.finish());
        break;
    }
    bool ok = delta > 0.0;
    for (auto& c : pair) {
      ok &= c.passed;
      report.checks.push_back(std::move(c));
    }
    report.singular_passed = ok;
  }

  report.accepted = report.basic_passed &&
                    (report.standard_passed.value_or(false) || report.singular_passed.value_or(false));
  return report;
}

/// Throws the error matching the first failed check when the model is rejected.
inline void ensure_valid(const ValidationReport& report) {
  if (report.accepted) return;
  if (const auto* c = report.first_failure()) {
    throw Error(c->failure, {"model", c->regime, c->time, c->atom},
                "assumption check '" + c->name + "' (" + to_string(c->group) +
                    ") failed with margin " + std::to_string(c->margin));
  }
  throw Error(ErrorCode::DefinitenessFailure, {"model"},
              "no definiteness case declared (need standard or singular flags)");
}

}  // namespace regime_lq
