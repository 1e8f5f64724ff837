#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpig {

enum class Errc {
  NotPositiveDefinite,
  AsymmetricInput,
  DomainViolation,
  InsufficientSpectrum,
  UnboundedTail,
  InvalidProfile,
  GridTooSmall,
  InsufficientData,
  EmptyGrid,
  MissingGamma,
  MismatchedHorizons,
  NumericalHealth,
  InvalidArgument,
  ConfigError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::AsymmetricInput: return "AsymmetricInput";
    case Errc::DomainViolation: return "DomainViolation";
    case Errc::InsufficientSpectrum: return "InsufficientSpectrum";
    case Errc::UnboundedTail: return "UnboundedTail";
    case Errc::InvalidProfile: return "InvalidProfile";
    case Errc::GridTooSmall: return "GridTooSmall";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::MissingGamma: return "MissingGamma";
    case Errc::MismatchedHorizons: return "MismatchedHorizons";
    case Errc::NumericalHealth: return "NumericalHealth";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gpig
