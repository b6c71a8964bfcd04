#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ead {

enum class ErrorKind {
  InvalidInput,
  InvalidConfig,
  BackendUnavailable,  // retriable transport failure
  BackendCorrupt,      // backend answered, but with garbage
  IncompatiblePair,
  MisconfiguredPair,
  Parse,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::BackendUnavailable: return "backend-unavailable";
    case ErrorKind::BackendCorrupt: return "backend-corrupt";
    case ErrorKind::IncompatiblePair: return "incompatible-pair";
    case ErrorKind::MisconfiguredPair: return "misconfigured-pair";
    case ErrorKind::Parse: return "parse-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ead
