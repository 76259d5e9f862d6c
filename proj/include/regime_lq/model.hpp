#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "regime_lq/cone.hpp"
#include "regime_lq/error.hpp"
#include "regime_lq/time_table.hpp"

namespace regime_lq {

struct JumpAtom {
  Eigen::VectorXd mark;
  double weight = 0.0;
};

/// Finite jump intensity measure represented by weighted atoms. An empty
/// measure describes a pure diffusion model.
class JumpMeasure {
 public:
  JumpMeasure() = default;

  explicit JumpMeasure(std::vector<JumpAtom> atoms) : atoms_(std::move(atoms)) {
    for (std::size_t a = 0; a < atoms_.size(); ++a) {
      const double w = atoms_[a].weight;
      if (!std::isfinite(w) || w < 0.0) {
        throw Error(ErrorCode::NegativeWeight, {"model", std::nullopt, std::nullopt, a},
                    "jump atom weight must be finite and nonnegative");
      }
      total_mass_ += w;
    }
  }

  const std::vector<JumpAtom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  double weight(std::size_t a) const { return atoms_[a].weight; }
  double total_mass() const noexcept { return total_mass_; }

 private:
  std::vector<JumpAtom> atoms_;
  double total_mass_ = 0.0;
};

struct ModelDimensions {
  Eigen::Index n1 = 1;  // Brownian components
  Eigen::Index n2 = 1;  // Poisson random measure components
  Eigen::Index m1 = 1;  // diffusion control
  Eigen::Index m2 = 1;  // jump-size control
};

/// Coefficients attached to one jump atom z of one regime.
struct AtomCoefficients {
  TimeTable<Eigen::VectorXd> B2;  // m2
  TimeTable<Eigen::VectorXd> E;   // n2
  TimeTable<Eigen::MatrixXd> F;   // n2 x m2
  TimeTable<Eigen::MatrixXd> R2;  // m2 x m2

  static AtomCoefficients zeros(const ModelDimensions& d) {
    return {Eigen::VectorXd(Eigen::VectorXd::Zero(d.m2)), Eigen::VectorXd(Eigen::VectorXd::Zero(d.n2)),
            Eigen::MatrixXd(Eigen::MatrixXd::Zero(d.n2, d.m2)),
            Eigen::MatrixXd(Eigen::MatrixXd::Zero(d.m2, d.m2))};
  }
};

struct RegimeCoefficients {
  TimeTable<double> A;
  TimeTable<Eigen::VectorXd> B1;  // m1
  TimeTable<Eigen::VectorXd> C;   // n1
  TimeTable<Eigen::MatrixXd> D;   // n1 x m1
  TimeTable<Eigen::MatrixXd> R1;  // m1 x m1
  TimeTable<double> Q;
  double G = 0.0;
  std::vector<AtomCoefficients> atoms;  // one entry per jump atom

  static RegimeCoefficients zeros(const ModelDimensions& d, std::size_t n_atoms) {
    RegimeCoefficients c;
    c.A = 0.0;
    c.B1 = Eigen::VectorXd(Eigen::VectorXd::Zero(d.m1));
    c.C = Eigen::VectorXd(Eigen::VectorXd::Zero(d.n1));
    c.D = Eigen::MatrixXd(Eigen::MatrixXd::Zero(d.n1, d.m1));
    c.R1 = Eigen::MatrixXd(Eigen::MatrixXd::Zero(d.m1, d.m1));
    c.Q = 0.0;
    c.atoms.assign(n_atoms, AtomCoefficients::zeros(d));
    return c;
  }
};

/// Diffusion-side coefficients of one regime frozen at one time.
struct DiffusionSnapshot {
  double A = 0.0;
  Eigen::VectorXd B1;
  Eigen::VectorXd C;
  Eigen::MatrixXd D;
  Eigen::MatrixXd R1;
  double Q = 0.0;
};

/// Jump-side coefficients of one regime and atom frozen at one time.
struct JumpSnapshot {
  Eigen::VectorXd B2;
  Eigen::VectorXd E;
  Eigen::MatrixXd F;
  Eigen::MatrixXd R2;
};

enum class SingularCase { I, II, III };

inline std::string to_string(SingularCase c) {
  switch (c) {
    case SingularCase::I: return "I";
    case SingularCase::II: return "II";
    case SingularCase::III: return "III";
  }
  return "?";
}

/// Which definiteness assumption the caller claims, with its constant delta.
struct CaseFlags {
  bool standard = true;
  std::optional<SingularCase> singular;
  double delta = 1.0;

  static CaseFlags standard_case(double delta) { return {true, std::nullopt, delta}; }
  static CaseFlags singular_case(SingularCase c, double delta) { return {false, c, delta}; }
};

/// Scalar-state LQ problem with Markov regime switching and Poisson jumps.
/// Immutable after construction.
class RegimeModel {
 public:
  RegimeModel(ModelDimensions dims, double horizon, Eigen::MatrixXd generator,
              JumpMeasure jumps, Cone control_cone, Cone jump_cone,
              std::vector<RegimeCoefficients> regimes)
      : dims_(dims),
        horizon_(horizon),
        generator_(std::move(generator)),
        jumps_(std::move(jumps)),
        control_cone_(std::move(control_cone)),
        jump_cone_(std::move(jump_cone)),
        regimes_(std::move(regimes)) {
    check_shapes();
    collect_knots();
  }

  const ModelDimensions& dims() const noexcept { return dims_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t regimes() const noexcept { return regimes_.size(); }
  std::size_t atoms() const noexcept { return jumps_.size(); }
  const Eigen::MatrixXd& generator() const noexcept { return generator_; }
  const JumpMeasure& jumps() const noexcept { return jumps_; }
  const Cone& control_cone() const noexcept { return control_cone_; }
  const Cone& jump_cone() const noexcept { return jump_cone_; }
  const RegimeCoefficients& regime(std::size_t i) const { return regimes_.at(i); }
  double terminal_weight(std::size_t i) const { return regimes_.at(i).G; }

  DiffusionSnapshot diffusion(std::size_t i, double t) const {
    const auto& r = regimes_.at(i);
    return {r.A.at(t), r.B1.at(t), r.C.at(t), r.D.at(t), r.R1.at(t), r.Q.at(t)};
  }

  JumpSnapshot jump(std::size_t i, double t, std::size_t atom) const {
    const auto& a = regimes_.at(i).atoms.at(atom);
    return {a.B2.at(t), a.E.at(t), a.F.at(t), a.R2.at(t)};
  }

  /// Every coefficient knot inside [0, T], sorted and deduplicated, with 0
  /// always present.
  const std::vector<double>& knot_times() const noexcept { return knots_; }

 private:
  template <class V>
  static void check_table(const TimeTable<V>& table, Eigen::Index rows, Eigen::Index cols,
                          const char* name, std::size_t i) {
    for (std::size_t k = 0; k < table.size(); ++k) {
      const auto& v = table.values()[k];
      if (v.rows() != rows || v.cols() != cols) {
        throw Error(ErrorCode::DimensionMismatch, {"model", i, table.knots()[k], std::nullopt},
                    std::string("coefficient ") + name + " has shape " + std::to_string(v.rows()) +
                        "x" + std::to_string(v.cols()) + ", expected " + std::to_string(rows) +
                        "x" + std::to_string(cols));
      }
    }
  }

  void check_shapes() const {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
      throw Error(ErrorCode::InvalidConfig, {"model"}, "horizon must be positive and finite");
    }
    if (dims_.n1 < 1 || dims_.n2 < 1 || dims_.m1 < 1 || dims_.m2 < 1) {
      throw Error(ErrorCode::DimensionMismatch, {"model"}, "all dimensions must be positive");
    }
    if (regimes_.empty()) {
      throw Error(ErrorCode::InvalidConfig, {"model"}, "at least one regime is required");
    }
    const auto ell = static_cast<Eigen::Index>(regimes_.size());
    if (generator_.rows() != ell || generator_.cols() != ell) {
      throw Error(ErrorCode::DimensionMismatch, {"model"},
                  "generator must be " + std::to_string(ell) + "x" + std::to_string(ell));
    }
    if (control_cone_.dimension() != dims_.m1 || jump_cone_.dimension() != dims_.m2) {
      throw Error(ErrorCode::DimensionMismatch, {"model"}, "cone dimensions must equal (m1, m2)");
    }
    for (std::size_t i = 0; i < regimes_.size(); ++i) {
      const auto& r = regimes_[i];
      check_table(r.B1, dims_.m1, 1, "B1", i);
      check_table(r.C, dims_.n1, 1, "C", i);
      check_table(r.D, dims_.n1, dims_.m1, "D", i);
      check_table(r.R1, dims_.m1, dims_.m1, "R1", i);
      if (r.atoms.size() != jumps_.size()) {
        throw Error(ErrorCode::DimensionMismatch, {"model", i, std::nullopt, std::nullopt},
                    "regime lists " + std::to_string(r.atoms.size()) +
                        " atom coefficient sets but the jump measure has " +
                        std::to_string(jumps_.size()) + " atoms");
      }
      for (const auto& a : r.atoms) {
        check_table(a.B2, dims_.m2, 1, "B2", i);
        check_table(a.E, dims_.n2, 1, "E", i);
        check_table(a.F, dims_.n2, dims_.m2, "F", i);
        check_table(a.R2, dims_.m2, dims_.m2, "R2", i);
      }
    }
  }

  void collect_knots() {
    knots_ = {0.0};
    auto add = [&](const auto& table) {
      for (double k : table.knots())
        if (k > 0.0 && k < horizon_) knots_.push_back(k);
    };
    for (const auto& r : regimes_) {
      add(r.A), add(r.B1), add(r.C), add(r.D), add(r.R1), add(r.Q);
      for (const auto& a : r.atoms) add(a.B2), add(a.E), add(a.F), add(a.R2);
    }
    std::sort(knots_.begin(), knots_.end());
    knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
  }

  ModelDimensions dims_;
  double horizon_;
  Eigen::MatrixXd generator_;
  JumpMeasure jumps_;
  Cone control_cone_;
  Cone jump_cone_;
  std::vector<RegimeCoefficients> regimes_;
  std::vector<double> knots_;
};

}  // namespace regime_lq
