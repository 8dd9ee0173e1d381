#pragma once

#include <cstddef>
#include <vector>

#include "flm/linalg.hpp"

namespace flm {

/// Action-value function: one column per action, one row per state.
///
/// The same type is used for uncompressed values (rows = states) and for
/// compressed values (rows = compressed coordinates).
class ActionValue {
 public:
  ActionValue() = default;
  explicit ActionValue(Matrix values);
  static ActionValue from_components(const std::vector<Vector>& components);

  Index size() const noexcept { return values_.rows(); }
  Index actions() const noexcept { return values_.cols(); }

  auto component(Index action) const { return values_.col(action); }
  const Matrix& matrix() const noexcept { return values_; }

  ActionValue operator-(const ActionValue& other) const;

 private:
  Matrix values_;
};

/// Deterministic stationary policy, one action index per state.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<Index> choice);

  Index size() const noexcept { return static_cast<Index>(choice_.size()); }
  Index operator[](Index state) const { return choice_[static_cast<std::size_t>(state)]; }
  const std::vector<Index>& choices() const noexcept { return choice_; }

  /// Throws ValidationError unless every entry lies in [0, actions).
  void validate(Index states, Index actions) const;

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::vector<Index> choice_;
};

/// Finite discounted MDP with per-action row-stochastic kernels.
class Mdp {
 public:
  static constexpr double kStochasticTolerance = 1e-12;

  /// Validates shapes, finiteness, row-stochasticity and the discount. With
  /// `renormalize_rows` set, nonnegative rows are rescaled to sum to one
  /// instead of being rejected.
  Mdp(MatrixFamily transitions, std::vector<Vector> rewards, double gamma,
      bool renormalize_rows = false);

  Index states() const noexcept { return states_; }
  Index actions() const noexcept { return static_cast<Index>(transitions_.size()); }
  double gamma() const noexcept { return gamma_; }

  const Matrix& transition(Index action) const { return transitions_[static_cast<std::size_t>(action)]; }
  const Vector& reward(Index action) const { return rewards_[static_cast<std::size_t>(action)]; }
  const MatrixFamily& transitions() const noexcept { return transitions_; }
  const std::vector<Vector>& rewards() const noexcept { return rewards_; }

  /// Rewards as an ActionValue (column a = r^a).
  ActionValue reward_table() const;

  /// Same kernels and rewards under a different discount.
  Mdp with_gamma(double gamma) const;

 private:
  MatrixFamily transitions_;
  std::vector<Vector> rewards_;
  double gamma_;
  Index states_;
};

/// T_P V = r + gamma P V, per action.
ActionValue bellman_return(const Mdp& mdp, const Vector& values);

/// Componentwise maximum over actions.
Vector max_select(const ActionValue& values);

/// Picks the pi(x)-th component at each x.
Vector policy_select(const ActionValue& values, const Policy& policy);

/// Per-row argmax; ties go to the lowest action index.
Policy greedy(const ActionValue& values);

struct ValueIterationResult {
  Vector values;
  std::size_t iterations = 0;
  /// Upper bound on the distance to V* in the sup norm.
  double residual = 0.0;
};

/// Iterates V <- M T_P V from zero until the last step is at most
/// tol (1 - gamma) / gamma, which puts the iterate within tol of V*.
ValueIterationResult value_iteration(const Mdp& mdp, double tol = 1e-10,
                                     std::size_t max_iter = 1'000'000);

/// P^pi(x, .) = P^{pi(x)}(x, .)
Matrix policy_transition(const Mdp& mdp, const Policy& policy);
Vector policy_reward(const Mdp& mdp, const Policy& policy);

/// Exact solve of (I - gamma P^pi) V = r^pi.
Vector policy_evaluation(const Mdp& mdp, const Policy& policy);

struct OptimalSolution {
  Vector values;
  Policy policy;
};

/// V* to linear-solve precision: value iteration seeds a greedy policy,
/// then policy improvement runs until the greedy policy is stable.
OptimalSolution solve_optimal(const Mdp& mdp, double tol = 1e-10);

/// A stationary distribution of a row-stochastic matrix (mu P = mu,
/// sum mu = 1), computed by a least-squares solve of the balance equations.
Vector stationary_distribution(const Matrix& kernel);

}  // namespace flm
