#pragma once

#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace regime_lq {

enum class ErrorCode {
  // model / configuration
  NonConservativeGenerator,
  NegativeWeight,
  DefinitenessFailure,
  UnboundedCoefficient,
  DimensionMismatch,
  InvalidConfig,
  // solvers
  NoConvergence,
  DefinitenessLost,
  NegativeP,
  NotSingular,
  TimeOutOfRange,
  ExplodedPath,
  // verification
  VerificationFailed,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConservativeGenerator: return "NonConservativeGenerator";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::DefinitenessFailure: return "DefinitenessFailure";
    case ErrorCode::UnboundedCoefficient: return "UnboundedCoefficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DefinitenessLost: return "DefinitenessLost";
    case ErrorCode::NegativeP: return "NegativeP";
    case ErrorCode::NotSingular: return "NotSingular";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::ExplodedPath: return "ExplodedPath";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
  }
  return "Unknown";
}

/// Where an error happened. Regime and atom indices are zero-based here and
/// printed one-based, matching the CLI and CSV outputs.
struct ErrorContext {
  ErrorContext(std::string module_name = {}, std::optional<std::size_t> regime_index = {},
               std::optional<double> at_time = {}, std::optional<std::size_t> atom_index = {})
      : module(std::move(module_name)), regime(regime_index), time(at_time), atom(atom_index) {}

  std::string module;
  std::optional<std::size_t> regime;
  std::optional<double> time;
  std::optional<std::size_t> atom;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, ErrorContext context, const std::string& message)
      : std::runtime_error(format(code, context, message)),
        code_(code),
        context_(std::move(context)) {}

  ErrorCode code() const noexcept { return code_; }
  const ErrorContext& context() const noexcept { return context_; }

 private:
  static std::string format(ErrorCode code, const ErrorContext& ctx,
                            const std::string& message) {
    std::ostringstream os;
    os << '[' << (ctx.module.empty() ? "regime_lq" : ctx.module) << "] "
       << to_string(code) << ": " << message;
    if (ctx.regime || ctx.time || ctx.atom) {
      os << " (";
      const char* sep = "";
      if (ctx.regime) {
        os << "regime=" << (*ctx.regime + 1);
        sep = ", ";
      }
      if (ctx.time) {
        os << sep << "t=" << *ctx.time;
        sep = ", ";
      }
      if (ctx.atom) os << sep << "atom=" << (*ctx.atom + 1);
      os << ')';
    }
    return os.str();
  }

  ErrorCode code_;
  ErrorContext context_;
};

/// Exit code contract of the command line front end: 1 validation,
/// 2 solver, 3 verification.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConservativeGenerator:
    case ErrorCode::NegativeWeight:
    case ErrorCode::DefinitenessFailure:
    case ErrorCode::UnboundedCoefficient:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidConfig:
      return 1;
    case ErrorCode::VerificationFailed:
      return 3;
    default:
      return 2;
  }
}

}  // namespace regime_lq
