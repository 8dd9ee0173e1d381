#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "flm/factored_model.hpp"
#include "flm/mdp.hpp"
#include "flm/norms.hpp"

namespace flm {

struct PlanOptions {
  double tol = 1e-10;
  std::size_t max_iter = 1'000'000;
  /// Iterate even when the modulus is not below one.
  bool force = false;
  /// Starting point; zero when absent.
  std::optional<Vector> initial;
  bool record_history = false;
};

struct CompressedIterationResult {
  Vector u_star;
  std::size_t iterations = 0;
  /// Bound on ||u_k - u*|| in the W norm (the last step when forced).
  double residual = 0.0;
  double modulus = 0.0;
  /// Step sizes ||u_{k+1} - u_k||, when requested.
  std::vector<double> steps;
};

/// Iterates u <- M' T_{Pi^A Q} u. Stops once the step is at most
/// tol (1 - kappa) / max(kappa, 1e-3), kappa the modulus in `w_spec`.
CompressedIterationResult compressed_value_iteration(const FactoredLinearModel& model,
                                                     const NormSpec& w_spec,
                                                     const PlanOptions& options = {});

/// U* = M T_Q u*.
Vector lift(const FactoredLinearModel& model, const Vector& u_star);

/// pi_hat = G T_Q u*.
Policy extract_policy(const FactoredLinearModel& model, const Vector& u_star);

struct PlanResult {
  Vector u_star;
  Vector U_star;
  Policy pi_hat;
  std::size_t iterations = 0;
  double residual = 0.0;
  double modulus = 0.0;
  /// ||u* - R U*|| in the W norm, only for join-homomorphism R.
  std::optional<double> identity_gap;
  std::vector<double> steps;
};

PlanResult plan(const Mdp& mdp, const FactoredLinearModel& model, const NormSpec& w_spec,
                const PlanOptions& options = {});

/// Power-Lipschitz estimates Lip((M T_{QR})^j) <= B' gamma^j Lip(R), with
/// B' = ||Q|| (sup norms), for j = 1..depth.
struct PowerLipschitz {
  double b_prime = 0.0;
  double lip_r = 0.0;
  std::vector<double> estimates;
};

PowerLipschitz power_lipschitz(const FactoredLinearModel& model, int depth = 8);

}  // namespace flm
