#pragma once

#include <stdexcept>
#include <string>

namespace nvrr {

/// Bad physical parameter, class mix, or other caller-supplied value.
class invalid_parameter : public std::invalid_argument {
 public:
  explicit invalid_parameter(const std::string& what) : std::invalid_argument(what) {}
};

/// File or stream failure while reading/writing artifacts.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// An internal invariant did not hold (non-Hermitian Hamiltonian, corrupt file, ...).
class contract_error : public std::logic_error {
 public:
  explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

/// Bisection bracket did not contain the calibration target.
class calibration_error : public std::runtime_error {
 public:
  explicit calibration_error(const std::string& what) : std::runtime_error(what) {}
};

// Process exit codes used by the CLI, one per error family.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitIoError = 3,
  kExitContractError = 4,
};

}  // namespace nvrr
