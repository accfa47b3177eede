#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scd {

// A value outside the domain of a model: unknown table key, action not in the
// action space, Bellman query outside |g - x| > 1.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative solver hit its iteration cap before meeting its threshold.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Violation {
  std::string field;
  std::string message;
};

// Document or scenario validation failure carrying every violation found.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(std::vector<Violation> violations);
  SchemaError(std::string field, std::string message);

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

}  // namespace scd
