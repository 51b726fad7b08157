#pragma once

#include <stdexcept>
#include <string>

namespace hosdetect {

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorKind {
  Domain,                // argument outside the mathematical domain
  OutOfRange,            // value outside the invertible / representable range
  UnsupportedOrder,      // harmonic order without a closed form
  InsufficientData,      // record too short for the requested operation
  Config,                // inconsistent configuration
  NoDominantTone,        // spectrum has no bin above the dominance ratio
  NumericalDivergence,   // simulation state left the trust region
  Parse,                 // malformed input file
  Io,                    // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "Domain";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::Config: return "Config";
    case ErrorKind::NoDominantTone: return "NoDominantTone";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace hosdetect
