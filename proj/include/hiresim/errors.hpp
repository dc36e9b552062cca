#pragma once

#include <stdexcept>
#include <string>

namespace hiresim {

/// Invalid specs, dimension mismatches, malformed configs.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Diagnostics called on unusable input (empty samples, single-group populations).
class DiagnosticError : public std::runtime_error {
 public:
  explicit DiagnosticError(const std::string& what) : std::runtime_error(what) {}
};

/// A documented precondition was violated by the caller.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// A property asserted from the theory failed empirically beyond tolerance.
class LemmaViolationError : public std::runtime_error {
 public:
  explicit LemmaViolationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hiresim
