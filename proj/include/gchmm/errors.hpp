#pragma once

#include <stdexcept>
#include <string>

namespace gchmm {

// Argument outside the mathematical domain of a kernel (e.g. n' > n_f).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid or infeasible configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, missing or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordering constraints on parameters could not be satisfied within the
// rejection budget, or a sampler hit a numerically impossible state.
class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ROC/AUC requested on instances that contain only one class.
class UndefinedAucError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gchmm
