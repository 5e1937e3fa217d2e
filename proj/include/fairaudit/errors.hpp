#pragma once

#include <stdexcept>
#include <string>

namespace fairaudit {

/// Exit codes used by the CLI: 0 success, 1 config error, 2 backend error,
/// 3 data error.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitBackend = 2,
  kExitData = 3,
};

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  /// Stable machine-readable identifier, e.g. "replay_miss".
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Bad or inconsistent configuration (schemas, plans, prompt sets, flags).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string code = "config")
      : Error(std::move(code), what) {}
};

/// Problems with input data (malformed rows, length mismatches).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::string code = "data")
      : Error(std::move(code), what) {}
};

/// Classifier backend failures.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, std::string code = "backend")
      : Error(std::move(code), what) {}
};

class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& what)
      : BackendError(what, "transport_failure") {}
};

class UnparseableOutputError : public BackendError {
 public:
  explicit UnparseableOutputError(const std::string& what)
      : BackendError(what, "unparseable_output") {}
};

class ReplayMissError : public BackendError {
 public:
  explicit ReplayMissError(const std::string& what)
      : BackendError(what, "replay_miss") {}
};

/// A perturbation plan whose axis domains do not cover a record's values.
class PlanCoverageError : public DataError {
 public:
  explicit PlanCoverageError(const std::string& what)
      : DataError(what, "plan_not_covered") {}
};

}  // namespace fairaudit
