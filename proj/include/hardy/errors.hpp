#pragma once

#include <stdexcept>
#include <string>

namespace hardy {

enum class ErrorKind {
  Domain,        // point outside the closure of the domain, singular point demanded finite
  Parameter,     // kernel/solver parameter outside its admissible regime
  Precondition,  // operation called outside its contract (mesh mismatch, mu <= lambda, ...)
  Convergence,   // iterative solver failed
  Config,        // run-configuration problems
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hardy
