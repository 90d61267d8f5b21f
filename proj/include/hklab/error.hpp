#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hklab {

enum class ErrorCode {
  InvalidArgument,
  DegenerateTriple,
  IncompatibleTriple,
  NotSO3,
  OutOfChart,
  InconsistentModel,
  SingularLattice,
  DegeneratePeriods,
  NonconstantRatio,
  NondegeneracyFailure,
  NotClosed,
  ConstantMismatch,
  DegenerateGram,
  HarmonicComponent,
  NotSPD,
  FarFromIdentity,
  DivergenceDetected,
  MaxIterations,
  SingularPairing,
  RankDeficient,
  EmptySeries,
  ConfigError,
  IoError,
};

inline constexpr std::string_view error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateTriple: return "DegenerateTriple";
    case ErrorCode::IncompatibleTriple: return "IncompatibleTriple";
    case ErrorCode::NotSO3: return "NotSO3";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::InconsistentModel: return "InconsistentModel";
    case ErrorCode::SingularLattice: return "SingularLattice";
    case ErrorCode::DegeneratePeriods: return "DegeneratePeriods";
    case ErrorCode::NonconstantRatio: return "NonconstantRatio";
    case ErrorCode::NondegeneracyFailure: return "NondegeneracyFailure";
    case ErrorCode::NotClosed: return "NotClosed";
    case ErrorCode::ConstantMismatch: return "ConstantMismatch";
    case ErrorCode::DegenerateGram: return "DegenerateGram";
    case ErrorCode::HarmonicComponent: return "HarmonicComponent";
    case ErrorCode::NotSPD: return "NotSPD";
    case ErrorCode::FarFromIdentity: return "FarFromIdentity";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::SingularPairing: return "SingularPairing";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace hklab
