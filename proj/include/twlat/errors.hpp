#pragma once

#include <stdexcept>
#include <string>

namespace twlat {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user input: unknown cells, malformed documents, out-of-range parameters.
struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

/// A computation produced NaN or Inf where a finite value is required.
/// The message names the offending cell so the failure is actionable.
struct NonFinite : Error {
  explicit NonFinite(const std::string& msg) : Error(msg) {}
};

}  // namespace twlat
