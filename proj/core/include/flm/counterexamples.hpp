#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flm/factored_model.hpp"
#include "flm/linalg.hpp"
#include "flm/mdp.hpp"

namespace flm {

enum class Relation { Equal, AtMost };

/// A claimed value of a named quantity. Scalars are length-1 vectors.
///
/// Quantities understood by verify_example:
///   V_star, U_star, u_star, V_pihat          value vectors
///   pi_hat[i], pi_star[i]                    action index at state i
///   sup_error                                ||V* - V^pi_hat||_inf
///   model_error_bound                        (2 gamma/(1-gamma)) ||(P - QR) U*||_inf
///   gap_vstar_ustar, gap_vpihat_ustar        ||V* - U*||_inf, ||V^pi_hat - U*||_inf
///   sup_bound                                sup-norm theorem total
///   modulus_sup                              gamma ||Pi^A Q|| in sup
///   l1_error:<measure>                       ||V* - V^pi_hat||_{mu,1}; <measure> is an
///                                            instance measure, stationary_pi_star or
///                                            stationary_pi_hat
///   claimed_V_star_residual                  ||V - M T_P V||_inf at the claimed V*
struct Expectation {
  std::string quantity;
  Vector value;
  Relation relation = Relation::Equal;
  std::string note;
};

struct ExampleInstance {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
  Mdp mdp;
  FactoredLinearModel model;
  std::vector<Expectation> expected;
  /// Named state measures for l1_error quantities.
  std::vector<std::pair<std::string, Vector>> measures;
};

/// Fork MDP on which the sup-norm bound is attained up to a factor 1 - eps.
/// Requires gamma in (0, 1), tau >= 0, eps in (0, 1).
ExampleInstance tightness_mdp(double gamma, double tau, double eps);

/// Tightness MDP (eps = 1/2) plus a state x4 that is absorbing under a1 and
/// jumps to x1 under a2. Requires gamma in (0, 1), tau > 0.
ExampleInstance harsh_mdp(double gamma, double tau);

/// One-dimensional model with ||V* - U*|| = tau1 and ||V^pi_hat - U*|| = tau2.
/// Requires gamma in (0, 1), tau1, tau2 >= 0.
ExampleInstance error_gaps_mdp(double gamma, double tau1, double tau2);

struct AssertionOutcome {
  std::string quantity;
  Relation relation = Relation::Equal;
  Vector expected;
  Vector actual;
  /// Max |actual - expected| for Equal, max(actual - expected, 0) for AtMost.
  double deviation = 0.0;
  bool pass = false;
  std::string note;
};

struct VerificationRecord {
  std::string example;
  std::vector<AssertionOutcome> assertions;

  bool all_pass() const;
  std::size_t failures() const;
};

/// Plans (tolerance 1e-13), solves exactly and checks every expectation.
VerificationRecord verify_example(const ExampleInstance& instance, double tol = 1e-9);

}  // namespace flm
