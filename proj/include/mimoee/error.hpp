#pragma once

#include <stdexcept>
#include <string>

namespace mimoee {

/// Coarse failure class; the CLI maps each category to its own exit code.
enum class ErrorCategory {
  Config = 2,     ///< invalid system / power configuration
  Validity = 3,   ///< closed form evaluated outside its region of validity
  Numerical = 4,  ///< solver failed (bracketing, convergence, singular matrix)
  Input = 5,      ///< malformed scenario file or command line
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

enum class ConfigErrc {
  NonPositiveCount,
  PilotReuseOutOfRange,
  TrainingExceedsBlock,
  BasisTooLarge,
  ChiOutOfRange,
  NonPositivePower,
  NonPositiveGain,
  NonPositiveBandwidth,
  InvalidPowerModel,
  UnknownPreset,
  PilotGroupsUneven,
  EmptyUserRange,
};

inline const char* to_string(ConfigErrc code) {
  switch (code) {
    case ConfigErrc::NonPositiveCount: return "NonPositiveCount";
    case ConfigErrc::PilotReuseOutOfRange: return "PilotReuseOutOfRange";
    case ConfigErrc::TrainingExceedsBlock: return "TrainingExceedsBlock";
    case ConfigErrc::BasisTooLarge: return "BasisTooLarge";
    case ConfigErrc::ChiOutOfRange: return "ChiOutOfRange";
    case ConfigErrc::NonPositivePower: return "NonPositivePower";
    case ConfigErrc::NonPositiveGain: return "NonPositiveGain";
    case ConfigErrc::NonPositiveBandwidth: return "NonPositiveBandwidth";
    case ConfigErrc::InvalidPowerModel: return "InvalidPowerModel";
    case ConfigErrc::UnknownPreset: return "UnknownPreset";
    case ConfigErrc::PilotGroupsUneven: return "PilotGroupsUneven";
    case ConfigErrc::EmptyUserRange: return "EmptyUserRange";
  }
  return "Unknown";
}

class ConfigError : public Error {
 public:
  ConfigError(ConfigErrc code, const std::string& detail)
      : Error(ErrorCategory::Config, std::string(to_string(code)) + ": " + detail), code_(code) {}

  ConfigErrc code() const noexcept { return code_; }

 private:
  ConfigErrc code_;
};

/// A deterministic-equivalent term came out non-positive (small M relative to K).
class NonPositiveTerm : public Error {
 public:
  explicit NonPositiveTerm(const std::string& detail)
      : Error(ErrorCategory::Validity, "NonPositiveTerm: " + detail) {}
};

/// The optimal-rate gap is unbounded because the interference term is zero.
class InfiniteGap : public Error {
 public:
  InfiniteGap() : Error(ErrorCategory::Validity, "InfiniteGap: interference term is zero") {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& detail)
      : Error(ErrorCategory::Validity, "DomainError: " + detail) {}
};

class BracketFailure : public Error {
 public:
  explicit BracketFailure(const std::string& detail)
      : Error(ErrorCategory::Numerical, "BracketFailure: " + detail) {}
};

class NonConvergence : public Error {
 public:
  NonConvergence(double residual, long iterations)
      : Error(ErrorCategory::Numerical,
              "NonConvergence: residual " + std::to_string(residual) + " after " +
                  std::to_string(iterations) + " iterations"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

class SingularEstimate : public Error {
 public:
  explicit SingularEstimate(int cell)
      : Error(ErrorCategory::Numerical,
              "SingularEstimate: estimated channel matrix of cell " + std::to_string(cell) +
                  " is rank deficient"),
        cell_(cell) {}

  int cell() const noexcept { return cell_; }

 private:
  int cell_;
};

}  // namespace mimoee
