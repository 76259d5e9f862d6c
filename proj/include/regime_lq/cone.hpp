#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string_view>
#include <variant>
#include <vector>

#include "regime_lq/error.hpp"

namespace regime_lq {

struct FullSpace {};
struct ZeroCone {};
struct NonnegativeOrthant {};
struct HalfLine {
  Eigen::VectorXd direction;  // unit length
};
struct Generated {
  Eigen::MatrixXd generators;  // one generator per column
};

namespace detail {

// Lawson-Hanson active set method for min ||G x - b|| subject to x >= 0.
inline Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& G,
                                                 const Eigen::VectorXd& b) {
  const Eigen::Index cols = G.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
  std::vector<bool> passive(static_cast<std::size_t>(cols), false);
  const double tol = 1e-14 * (1.0 + G.norm() * b.norm());
  Eigen::VectorXd w = G.transpose() * b;

  const int max_outer = 3 * static_cast<int>(cols) + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::Index entering = -1;
    double best = tol;
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!passive[k] && w[k] > best) {
        best = w[k];
        entering = k;
      }
    }
    if (entering < 0) break;
    passive[entering] = true;

    for (int inner = 0; inner < 3 * static_cast<int>(cols) + 10; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index k = 0; k < cols; ++k)
        if (passive[k]) idx.push_back(k);
      Eigen::MatrixXd sub(G.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c)
        sub.col(static_cast<Eigen::Index>(c)) = G.col(idx[c]);
      const Eigen::VectorXd s = sub.completeOrthogonalDecomposition().solve(b);

      bool feasible = true;
      for (Eigen::Index c = 0; c < s.size(); ++c) feasible &= s[c] > 0.0;
      if (feasible) {
        x.setZero();
        for (std::size_t c = 0; c < idx.size(); ++c)
          x[idx[c]] = s[static_cast<Eigen::Index>(c)];
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const double sc = s[static_cast<Eigen::Index>(c)];
        const double xc = x[idx[c]];
        if (sc <= 0.0 && xc - sc > 0.0) alpha = std::min(alpha, xc / (xc - sc));
      }
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const double sc = s[static_cast<Eigen::Index>(c)];
        x[idx[c]] += alpha * (sc - x[idx[c]]);
        if (x[idx[c]] <= tol) {
          x[idx[c]] = 0.0;
          passive[idx[c]] = false;
        }
      }
    }
    w = G.transpose() * (b - G * x);
  }
  return x;
}

}  // namespace detail

/// Closed convex cone with an exact Euclidean projection.
///
/// Membership is decided through the projection itself, so `project(v) == v`
/// bit for bit whenever `v` already lies in the cone (up to a relative
/// residual of 1e-13), which makes `project` idempotent.
class Cone {
 public:
  using Shape = std::variant<FullSpace, ZeroCone, NonnegativeOrthant, HalfLine, Generated>;

  static constexpr Eigen::Index kMaxGenerators = 16;

  static Cone full_space(Eigen::Index m) { return Cone(m, FullSpace{}); }
  static Cone zero(Eigen::Index m) { return Cone(m, ZeroCone{}); }
  static Cone nonnegative_orthant(Eigen::Index m) { return Cone(m, NonnegativeOrthant{}); }

  static Cone half_line(const Eigen::VectorXd& direction) {
    const double n = direction.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(ErrorCode::InvalidConfig, {"model"}, "half-line direction must be nonzero");
    }
    return Cone(direction.size(), HalfLine{direction / n});
  }

  static Cone generated(const Eigen::MatrixXd& generators) {
    if (generators.cols() == 0 || generators.cols() > kMaxGenerators) {
      throw Error(ErrorCode::InvalidConfig, {"model"},
                  "generated cone needs between 1 and 16 generators");
    }
    if (!generators.allFinite()) {
      throw Error(ErrorCode::InvalidConfig, {"model"}, "cone generators must be finite");
    }
    return Cone(generators.rows(), Generated{generators});
  }

  Eigen::Index dimension() const noexcept { return dim_; }
  const Shape& shape() const noexcept { return shape_; }

  std::string_view kind() const {
    return std::visit(
        [](const auto& s) -> std::string_view {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, FullSpace>) return "full_space";
          else if constexpr (std::is_same_v<S, ZeroCone>) return "zero";
          else if constexpr (std::is_same_v<S, NonnegativeOrthant>) return "nonnegative_orthant";
          else if constexpr (std::is_same_v<S, HalfLine>) return "half_line";
          else return "generated";
        },
        shape_);
  }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const {
    if (v.size() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, {"model"},
                  "vector of size " + std::to_string(v.size()) + " projected onto cone of dimension " +
                      std::to_string(dim_));
    }
    return std::visit([&](const auto& s) { return project_onto(s, v); }, shape_);
  }

  /// Projection onto the cone intersected with the closed ball of the given
  /// radius. For a closed convex cone this is the ball projection of the cone
  /// projection.
  Eigen::VectorXd project(const Eigen::VectorXd& v, double radius) const {
    Eigen::VectorXd p = project(v);
    const double n = p.norm();
    if (n > radius) p *= radius / n;
    return p;
  }

  bool contains(const Eigen::VectorXd& v, double tol = 1e-12) const {
    return (project(v) - v).norm() <= tol * std::max(1.0, v.norm());
  }

  /// True when the cone equals its negation, e.g. a full space or a subspace.
  bool is_symmetric() const {
    if (std::holds_alternative<FullSpace>(shape_) || std::holds_alternative<ZeroCone>(shape_))
      return true;
    if (const auto* g = std::get_if<Generated>(&shape_)) {
      for (Eigen::Index c = 0; c < g->generators.cols(); ++c)
        if (!contains(-g->generators.col(c), 1e-10)) return false;
      return true;
    }
    return false;
  }

 private:
  Cone(Eigen::Index m, Shape shape) : dim_(m), shape_(std::move(shape)) {
    if (m <= 0) throw Error(ErrorCode::InvalidConfig, {"model"}, "cone dimension must be positive");
  }

  static Eigen::VectorXd project_onto(const FullSpace&, const Eigen::VectorXd& v) { return v; }

  static Eigen::VectorXd project_onto(const ZeroCone&, const Eigen::VectorXd& v) {
    return Eigen::VectorXd::Zero(v.size());
  }

  static Eigen::VectorXd project_onto(const NonnegativeOrthant&, const Eigen::VectorXd& v) {
    return v.cwiseMax(0.0);
  }

  static Eigen::VectorXd project_onto(const HalfLine& h, const Eigen::VectorXd& v) {
    const double along = v.dot(h.direction);
    if (along <= 0.0) return Eigen::VectorXd::Zero(v.size());
    Eigen::VectorXd p = along * h.direction;
    if ((v - p).norm() <= 1e-13 * v.norm()) return v;
    return p;
  }

  static Eigen::VectorXd project_onto(const Generated& g, const Eigen::VectorXd& v) {
    const Eigen::VectorXd weights = detail::nonnegative_least_squares(g.generators, v);
    Eigen::VectorXd p = g.generators * weights;
    if ((v - p).norm() <= 1e-13 * std::max(1.0, v.norm())) return v;
    return p;
  }

  Eigen::Index dim_;
  Shape shape_;
};

}  // namespace regime_lq
