#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ciasr {

// Invalid argument or parameter outside its domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Argument would overflow the representable result.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// Oscillatory quadrature did not settle within the segment budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double partial_sum, std::size_t segments)
      : std::runtime_error(what), partial_sum_(partial_sum), segments_(segments) {}

  double partial_sum() const noexcept { return partial_sum_; }
  std::size_t segments() const noexcept { return segments_; }

 private:
  double partial_sum_;
  std::size_t segments_;
};

// Malformed raster or sample file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The delta scan saw no sign change of the Bessel moment.
class SearchFailure : public std::runtime_error {
 public:
  SearchFailure(const std::string& what, double last_moment, double last_a)
      : std::runtime_error(what), last_moment_(last_moment), last_a_(last_a) {}

  double last_moment() const noexcept { return last_moment_; }
  double last_a() const noexcept { return last_a_; }

 private:
  double last_moment_;
  double last_a_;
};

// A log in the closed-form alpha/gamma inversion is undefined.
class MomentDomainError : public std::domain_error {
 public:
  MomentDomainError(const std::string& what, int index, double a)
      : std::domain_error(what), index_(index), a_(a) {}

  // 1, 2 or 3: which hyperparameter a_i triggered the violation.
  int index() const noexcept { return index_; }
  double a() const noexcept { return a_; }

 private:
  int index_;
  double a_;
};

}  // namespace ciasr
