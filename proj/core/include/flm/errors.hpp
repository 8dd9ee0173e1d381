#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up (vector length, matrix size, action count).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a domain invariant (non-stochastic row, bad weight, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The requested pair of norms has no supported closed form.
class UnsupportedNormError : public Error {
 public:
  using Error::Error;
};

/// The compressed Bellman operator is not certified to contract.
class NotContractiveError : public Error {
 public:
  explicit NotContractiveError(double modulus);
  double modulus() const noexcept { return modulus_; }

 private:
  double modulus_;
};

/// A forced iteration blew past the overflow guard.
class DivergedError : public Error {
 public:
  DivergedError(std::size_t iterations, double iterate_norm);
  std::size_t iterations() const noexcept { return iterations_; }
  double iterate_norm() const noexcept { return iterate_norm_; }

 private:
  std::size_t iterations_;
  double iterate_norm_;
};

class MaxIterError : public Error {
 public:
  MaxIterError(std::size_t iterations, double residual);
  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

/// A theorem's hypothesis does not hold on the given instance.
class AssumptionViolated : public Error {
 public:
  AssumptionViolated(std::string assumption, const std::string& detail);
  const std::string& assumption() const noexcept { return assumption_; }

 private:
  std::string assumption_;
};

}  // namespace flm
