#pragma once

#include <stdexcept>
#include <string>

namespace planarfab {

// Exit codes surfaced by the CLI. Library code throws; the CLI maps.
enum class ExitCode : int {
  Ok = 0,
  ConfigError = 2,
  Infeasible = 3,
  TimeLimitNoFeasible = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::ConfigError)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed input, inconsistent parameters, missing files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::ConfigError) {}
};

/// The instance admits no feasible solution (pigeonhole, missing dispenser, ...).
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(what, ExitCode::Infeasible) {}
};

/// A size guard or iteration cap was exceeded.
class LimitError : public Error {
 public:
  explicit LimitError(const std::string& what) : Error(what, ExitCode::TimeLimitNoFeasible) {}
};

}  // namespace planarfab
