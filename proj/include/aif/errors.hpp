#pragma once

#include <stdexcept>
#include <string>

namespace aif {

/// Invalid user-supplied configuration (bad ids, out-of-range parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, duplicate key).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace aif
