#pragma once

#include <stdexcept>
#include <string>

namespace bbeval {

// Error taxonomy shared across the library. The CLI maps these onto process
// exit codes, so the distinction is part of the external contract:
//   ConfigError       -> exit 2 (bad inputs, domain/proviso violations, bad JSON)
//   VerificationError -> exit 3 (a checked construction failed its certificate)
//   BudgetError       -> exit 4 (enumeration or round budget exceeded)

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class VerificationError : public std::runtime_error {
 public:
  explicit VerificationError(const std::string& what) : std::runtime_error(what) {}
};

class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// A black-box handle misbehaved (non-deterministic model, loss out of range,
// comparison not antisymmetric, fit failure, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bbeval
