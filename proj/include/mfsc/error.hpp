#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfsc {

// Precondition violation on caller-supplied data.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A forward integration produced a non-finite state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// Sampled |H(xi)| / (1 + |xi|) exceeded the declared growth constant.
class GrowthBoundViolation : public std::runtime_error {
 public:
  GrowthBoundViolation(double estimate, double declared, std::vector<double> witness)
      : std::runtime_error("growth estimate " + std::to_string(estimate) +
                           " exceeds declared constant " + std::to_string(declared)),
        estimate_(estimate),
        declared_(declared),
        witness_(std::move(witness)) {}
  double estimate() const noexcept { return estimate_; }
  double declared() const noexcept { return declared_; }
  const std::vector<double>& witness() const noexcept { return witness_; }

 private:
  double estimate_;
  double declared_;
  std::vector<double> witness_;
};

}  // namespace mfsc
