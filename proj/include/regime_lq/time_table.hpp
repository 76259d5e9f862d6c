#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "regime_lq/error.hpp"

namespace regime_lq {

// Piecewise-constant function of time. The value attached to knot k holds on
// [knot_k, knot_{k+1}); times before the first knot take the first value.
template <class Value>
class TimeTable {
 public:
  TimeTable() : knots_{0.0}, values_(1) {}

  // Implicit on purpose: a constant coefficient is the common case.
  TimeTable(Value constant) : knots_{0.0}, values_{std::move(constant)} {}

  TimeTable(std::vector<double> knots, std::vector<Value> values)
      : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.empty() || knots_.size() != values_.size()) {
      throw Error(ErrorCode::InvalidConfig, {"model"},
                  "time table needs one value per knot and at least one knot");
    }
    for (std::size_t k = 1; k < knots_.size(); ++k) {
      if (!(knots_[k] > knots_[k - 1])) {
        throw Error(ErrorCode::InvalidConfig, {"model"},
                    "time table knots must be strictly increasing");
      }
    }
  }

  const Value& at(double t) const { return values_[index(t)]; }

  std::size_t index(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return 0;
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
  }

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<Value>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> knots_;
  std::vector<Value> values_;
};

}  // namespace regime_lq
