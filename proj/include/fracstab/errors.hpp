#pragma once

#include <stdexcept>
#include <string>

namespace fracstab {

/// Raised when an argument lies outside the mathematical domain of an
/// operation (invalid order, non-positive height, inadmissible exponent...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a numerical procedure cannot certify the accuracy it was asked
/// for. Carries the achieved and required error so callers can report both.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double achieved, double required)
      : std::runtime_error(what), achieved_(achieved), required_(required) {}

  double achieved() const noexcept { return achieved_; }
  double required() const noexcept { return required_; }

 private:
  double achieved_;
  double required_;
};

}  // namespace fracstab
