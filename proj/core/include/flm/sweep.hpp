#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flm/bounds.hpp"
#include "flm/random.hpp"

namespace flm {

/// Batch-audit configuration. JSON form:
///   {"seed": 7, "trials": 500, "states": [2, 30], "compressed": [1, 10],
///    "actions": [1, 4], "gamma": [0.1, 0.95], "perturbation": 0.3,
///    "soft_fraction": 0.25, "p": "cycle" | 1 | 2 | "inf", "tol": 1e-10,
///    "gamma_sweep": [0.5, 0.9]?, "output": "out.csv"?}
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  InstanceRanges ranges;
  /// Probability that a trial uses a soft (non-join-homomorphic) R.
  double soft_fraction = 0.25;
  /// Fixed exponent, or cycle through 1, 2, inf by trial index when absent.
  std::optional<LpExponent> p;
  double tol = 1e-10;
  /// Frozen-instance mode: re-evaluate eps2 at each listed discount.
  std::vector<double> gamma_sweep;
  std::string output;

  /// Throws ValidationError when a range is empty or a discount leaves [0, 1).
  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& text);

inline constexpr const char* kSweepSchema = "flm_sweep_schema_v1";
inline constexpr const char* kGammaSweepSchema = "flm_gamma_sweep_schema_v1";

/// Theorem columns of the sweep CSV, in order.
const std::vector<std::string>& sweep_theorems();

struct TheoremCell {
  bool applicable = false;
  double total = 0.0;
  bool holds = true;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  Index m = 0;
  Index n = 0;
  Index k = 0;
  double gamma = 0.0;
  bool soft = false;
  LpExponent p = LpExponent::One;
  double actual_sup = 0.0;
  double actual_wsup = 0.0;
  double actual_lp = 0.0;
  std::vector<TheoremCell> theorems;  // parallel to sweep_theorems()
  double concentrability = 0.0;
  double b = 0.0;
  double modulus = 0.0;
  std::size_t iterations = 0;
  /// ||u* - R U*|| (join-hom R only; NaN otherwise).
  double identity_gap = 0.0;
  /// ||U* - M T_{QR} U*|| (join-hom R only; NaN otherwise).
  double lift_gap = 0.0;
  /// ||u* - u*'|| for a second run from a random start.
  double start_gap = 0.0;
  int violations = 0;
  /// Empty on success, otherwise the error message.
  std::string error;
  /// Frozen-instance rows: (gamma', eps2 at gamma').
  std::vector<std::pair<double, double>> eps2_frozen;
};

struct SweepResult {
  std::vector<TrialResult> trials;
  int violations = 0;
  std::size_t errors = 0;
};

/// One trial; depends only on (config, index).
TrialResult run_trial(const ExperimentConfig& config, std::size_t index);

/// Runs all trials on up to `jobs` threads; results are in trial order.
SweepResult run_sweep(const ExperimentConfig& config, unsigned jobs = 1);

void write_sweep_csv(const ExperimentConfig& config, const SweepResult& result, std::ostream& out);

}  // namespace flm
