#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "regime_lq/cone.hpp"
#include "regime_lq/error.hpp"
#include "regime_lq/model.hpp"

namespace regime_lq {

inline constexpr int kConfigSchema = 1;

struct ModelConfig {
  RegimeModel model;
  std::optional<CaseFlags> flags;
};

namespace config_detail {

using json = nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what,
                              ErrorCode code = ErrorCode::InvalidConfig) {
  throw Error(code, {"config"}, path + ": " + what);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline Eigen::VectorXd vector(const json& j, Eigen::Index n, const std::string& path) {
  if (j.is_number()) {
    if (n != 1) fail(path, "scalar given where a vector of size " + std::to_string(n) + " is required",
                     ErrorCode::DimensionMismatch);
    return Eigen::VectorXd::Constant(1, j.get<double>());
  }
  if (!j.is_array()) fail(path, "expected a number or an array");
  if (static_cast<Eigen::Index>(j.size()) != n)
    fail(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()),
         ErrorCode::DimensionMismatch);
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k)
    v[k] = number(j[static_cast<std::size_t>(k)], path + "[" + std::to_string(k) + "]");
  return v;
}

/// Rows of numbers; a bare number is a 1x1 matrix and a flat array is
/// accepted for a single row or a single column.
inline Eigen::MatrixXd matrix(const json& j, Eigen::Index rows, Eigen::Index cols,
                              const std::string& path) {
  const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
  if (j.is_number()) {
    if (rows != 1 || cols != 1) fail(path, "scalar given for a " + shape + " matrix", ErrorCode::DimensionMismatch);
    return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  }
  if (!j.is_array()) fail(path, "expected a matrix");
  const bool flat = !j.empty() && j[0].is_number();
  Eigen::MatrixXd m(rows, cols);
  if (flat) {
    if (rows != 1 && cols != 1) fail(path, "flat array given for a " + shape + " matrix", ErrorCode::DimensionMismatch);
    const Eigen::VectorXd v = vector(j, rows * cols, path);
    for (Eigen::Index k = 0; k < v.size(); ++k) m(rows == 1 ? 0 : k, rows == 1 ? k : 0) = v[k];
    return m;
  }
  if (static_cast<Eigen::Index>(j.size()) != rows) fail(path, "expected " + shape, ErrorCode::DimensionMismatch);
  for (Eigen::Index r = 0; r < rows; ++r)
    m.row(r) = vector(j[static_cast<std::size_t>(r)], cols, path + "[" + std::to_string(r) + "]").transpose();
  return m;
}

/// A constant, or {"knots": [...], "values": [...]} for a piecewise-constant
/// coefficient.
template <class V, class Parse>
TimeTable<V> table(const json& parent, const char* key, const V& zero, const std::string& path,
                   Parse&& parse) {
  const std::string here = path + "." + key;
  if (!parent.contains(key)) return TimeTable<V>(zero);
  const json& j = parent.at(key);
  if (j.is_object()) {
    if (!j.contains("knots") || !j.contains("values")) fail(here, "table needs knots and values");
    const json& k = j.at("knots");
    const json& v = j.at("values");
    if (!k.is_array() || !v.is_array() || k.size() != v.size())
      fail(here, "knots and values must be arrays of equal length");
    std::vector<double> knots;
    std::vector<V> values;
    for (std::size_t n = 0; n < k.size(); ++n) {
      knots.push_back(number(k[n], here + ".knots[" + std::to_string(n) + "]"));
      values.push_back(parse(v[n], here + ".values[" + std::to_string(n) + "]"));
    }
    return TimeTable<V>(std::move(knots), std::move(values));
  }
  return TimeTable<V>(parse(j, here));
}

inline Cone cone(const json& j, Eigen::Index dim, const std::string& path) {
  if (!j.is_object() || !j.contains("kind")) fail(path, "cone needs a kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "full_space") return Cone::full_space(dim);
  if (kind == "zero") return Cone::zero(dim);
  if (kind == "nonnegative_orthant") return Cone::nonnegative_orthant(dim);
  if (kind == "half_line") {
    if (!j.contains("direction")) fail(path, "half_line needs a direction");
    return Cone::half_line(vector(j.at("direction"), dim, path + ".direction"));
  }
  if (kind == "generated") {
    if (!j.contains("generators") || !j.at("generators").is_array() || j.at("generators").empty())
      fail(path, "generated cone needs a nonempty generators array");
    const json& g = j.at("generators");
    Eigen::MatrixXd cols(dim, static_cast<Eigen::Index>(g.size()));
    for (std::size_t c = 0; c < g.size(); ++c)
      cols.col(static_cast<Eigen::Index>(c)) = vector(g[c], dim, path + ".generators[" + std::to_string(c) + "]");
    return Cone::generated(cols);
  }
  fail(path, "unknown cone kind '" + kind + "'");
}

inline std::optional<CaseFlags> flags(const json& root) {
  if (!root.contains("flags")) return std::nullopt;
  const json& f = root.at("flags");
  const double delta = f.contains("delta") ? number(f.at("delta"), "flags.delta") : 1.0;
  const std::string c = f.contains("case") ? f.at("case").get<std::string>() : "standard";
  if (c == "standard") return CaseFlags::standard_case(delta);
  if (c == "I") return CaseFlags::singular_case(SingularCase::I, delta);
  if (c == "II") return CaseFlags::singular_case(SingularCase::II, delta);
  if (c == "III") return CaseFlags::singular_case(SingularCase::III, delta);
  fail("flags.case", "expected standard, I, II or III");
}

}  // namespace config_detail

/// Builds a model from its JSON description. Missing coefficients are zero;
/// a scalar stands for a vector or matrix of size one.
inline ModelConfig parse_model(const nlohmann::json& root) {
  using namespace config_detail;
  if (!root.is_object()) fail("$", "model config must be an object");
  if (root.contains("schema") && root.at("schema") != kConfigSchema)
    fail("schema", "unsupported schema version (expected " + std::to_string(kConfigSchema) + ")");
  if (!root.contains("horizon")) fail("horizon", "missing");
  const double horizon = number(root.at("horizon"), "horizon");

  ModelDimensions d;
  if (root.contains("dimensions")) {
    const json& dj = root.at("dimensions");
    auto dim = [&](const char* key) -> Eigen::Index {
      if (!dj.contains(key)) return 1;
      if (!dj.at(key).is_number_integer()) fail(std::string("dimensions.") + key, "expected an integer");
      return dj.at(key).get<Eigen::Index>();
    };
    d = {dim("n1"), dim("n2"), dim("m1"), dim("m2")};
  }
  if (d.n1 < 1 || d.n2 < 1 || d.m1 < 1 || d.m2 < 1)
    fail("dimensions", "all dimensions must be positive", ErrorCode::DimensionMismatch);

  if (!root.contains("regimes") || !root.at("regimes").is_array() || root.at("regimes").empty())
    fail("regimes", "need a nonempty array");
  const json& rj = root.at("regimes");
  const auto ell = static_cast<Eigen::Index>(rj.size());

  Eigen::MatrixXd generator = Eigen::MatrixXd::Zero(ell, ell);
  if (root.contains("generator")) generator = matrix(root.at("generator"), ell, ell, "generator");

  std::vector<JumpAtom> atoms;
  if (root.contains("jump_atoms")) {
    const json& aj = root.at("jump_atoms");
    if (!aj.is_array()) fail("jump_atoms", "expected an array");
    for (std::size_t a = 0; a < aj.size(); ++a) {
      const std::string p = "jump_atoms[" + std::to_string(a) + "]";
      if (!aj[a].is_object() || !aj[a].contains("weight")) fail(p, "atom needs a weight");
      JumpAtom atom;
      atom.weight = number(aj[a].at("weight"), p + ".weight");
      if (aj[a].contains("mark")) {
        const json& m = aj[a].at("mark");
        atom.mark = vector(m, m.is_array() ? static_cast<Eigen::Index>(m.size()) : 1, p + ".mark");
      }
      atoms.push_back(std::move(atom));
    }
  }
  const std::size_t na = atoms.size();

  Cone u1 = Cone::full_space(d.m1);
  Cone u2 = Cone::full_space(d.m2);
  if (root.contains("cones")) {
    const json& cj = root.at("cones");
    if (cj.contains("u1")) u1 = cone(cj.at("u1"), d.m1, "cones.u1");
    if (cj.contains("u2")) u2 = cone(cj.at("u2"), d.m2, "cones.u2");
  }

  auto num = [](const json& j, const std::string& p) { return number(j, p); };
  auto vec = [](Eigen::Index n) {
    return [n](const json& j, const std::string& p) { return vector(j, n, p); };
  };
  auto mat = [](Eigen::Index r, Eigen::Index c) {
    return [r, c](const json& j, const std::string& p) { return matrix(j, r, c, p); };
  };

  std::vector<RegimeCoefficients> regimes;
  for (std::size_t i = 0; i < rj.size(); ++i) {
    const std::string p = "regimes[" + std::to_string(i) + "]";
    const json& r = rj[i];
    if (!r.is_object()) fail(p, "expected an object");
    RegimeCoefficients c;
    c.A = table<double>(r, "A", 0.0, p, num);
    c.B1 = table<Eigen::VectorXd>(r, "B1", Eigen::VectorXd::Zero(d.m1), p, vec(d.m1));
    c.C = table<Eigen::VectorXd>(r, "C", Eigen::VectorXd::Zero(d.n1), p, vec(d.n1));
    c.D = table<Eigen::MatrixXd>(r, "D", Eigen::MatrixXd::Zero(d.n1, d.m1), p, mat(d.n1, d.m1));
    c.R1 = table<Eigen::MatrixXd>(r, "R1", Eigen::MatrixXd::Zero(d.m1, d.m1), p, mat(d.m1, d.m1));
    c.Q = table<double>(r, "Q", 0.0, p, num);
    c.G = r.contains("G") ? number(r.at("G"), p + ".G") : 0.0;
    c.atoms.assign(na, AtomCoefficients::zeros(d));
    if (r.contains("atoms")) {
      const json& aj = r.at("atoms");
      if (!aj.is_array() || aj.size() != na)
        fail(p + ".atoms", "need one entry per jump atom (" + std::to_string(na) + ")",
             ErrorCode::DimensionMismatch);
      for (std::size_t a = 0; a < na; ++a) {
        const std::string ap = p + ".atoms[" + std::to_string(a) + "]";
        const json& x = aj[a];
        auto& ac = c.atoms[a];
        ac.B2 = table<Eigen::VectorXd>(x, "B2", Eigen::VectorXd::Zero(d.m2), ap, vec(d.m2));
        ac.E = table<Eigen::VectorXd>(x, "E", Eigen::VectorXd::Zero(d.n2), ap, vec(d.n2));
        ac.F = table<Eigen::MatrixXd>(x, "F", Eigen::MatrixXd::Zero(d.n2, d.m2), ap, mat(d.n2, d.m2));
        ac.R2 = table<Eigen::MatrixXd>(x, "R2", Eigen::MatrixXd::Zero(d.m2, d.m2), ap, mat(d.m2, d.m2));
      }
    }
    regimes.push_back(std::move(c));
  }

  return {RegimeModel(d, horizon, std::move(generator), JumpMeasure(std::move(atoms)),
                      std::move(u1), std::move(u2), std::move(regimes)),
          flags(root)};
}

inline ModelConfig load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, {"config"}, "cannot open model file '" + path + "'");
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, {"config"}, path + ": " + e.what());
  }
  try {
    return parse_model(root);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, {"config"}, path + ": " + e.what());
  }
}

}  // namespace regime_lq
