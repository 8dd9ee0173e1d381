#include "flm/errors.hpp"

#include <cstdio>
#include <string>
#include <utility>

namespace flm {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

NotContractiveError::NotContractiveError(double modulus)
    : Error("compressed Bellman operator is not a contraction: modulus " + fmt_double(modulus) +
            " >= 1 (pass force to iterate anyway)"),
      modulus_(modulus) {}

DivergedError::DivergedError(std::size_t iterations, double iterate_norm)
    : Error("compressed value iteration diverged after " + std::to_string(iterations) +
            " iterations (iterate norm " + fmt_double(iterate_norm) + ")"),
      iterations_(iterations),
      iterate_norm_(iterate_norm) {}

MaxIterError::MaxIterError(std::size_t iterations, double residual)
    : Error("iteration limit " + std::to_string(iterations) + " reached with residual " +
            fmt_double(residual)),
      iterations_(iterations),
      residual_(residual) {}

AssumptionViolated::AssumptionViolated(std::string assumption, const std::string& detail)
    : Error("assumption violated [" + assumption + "]: " + detail),
      assumption_(std::move(assumption)) {}

}  // namespace flm
