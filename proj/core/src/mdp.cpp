#include "flm/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include "flm/errors.hpp"

namespace flm {

ActionValue::ActionValue(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw ValidationError("action-value entries must be finite");
  }
}

ActionValue ActionValue::from_components(const std::vector<Vector>& components) {
  if (components.empty()) {
    return ActionValue(Matrix(0, 0));
  }
  const Index rows = components.front().size();
  Matrix values(rows, static_cast<Index>(components.size()));
  for (std::size_t a = 0; a < components.size(); ++a) {
    if (components[a].size() != rows) {
      throw DimensionError("action-value components have different lengths");
    }
    values.col(static_cast<Index>(a)) = components[a];
  }
  return ActionValue(std::move(values));
}

ActionValue ActionValue::operator-(const ActionValue& other) const {
  if (other.size() != size() || other.actions() != actions()) {
    throw DimensionError("action-value shapes differ");
  }
  return ActionValue(values_ - other.values_);
}

Policy::Policy(std::vector<Index> choice) : choice_(std::move(choice)) {}

void Policy::validate(Index states, Index actions) const {
  if (size() != states) {
    throw DimensionError("policy has " + std::to_string(size()) + " entries, expected " +
                         std::to_string(states));
  }
  for (std::size_t x = 0; x < choice_.size(); ++x) {
    if (choice_[x] < 0 || choice_[x] >= actions) {
      throw ValidationError("policy entry " + std::to_string(x) + " = " +
                            std::to_string(choice_[x]) + " is not an action in [0, " +
                            std::to_string(actions) + ")");
    }
  }
}

Mdp::Mdp(MatrixFamily transitions, std::vector<Vector> rewards, double gamma,
         bool renormalize_rows)
    : transitions_(std::move(transitions)), rewards_(std::move(rewards)), gamma_(gamma) {
  if (transitions_.empty()) {
    throw ValidationError("an MDP needs at least one action");
  }
  if (rewards_.size() != transitions_.size()) {
    throw DimensionError("got " + std::to_string(transitions_.size()) + " transition matrices but " +
                         std::to_string(rewards_.size()) + " reward vectors");
  }
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) {
    throw ValidationError("discount gamma must lie in [0, 1)");
  }
  states_ = transitions_.front().rows();
  if (states_ < 1) {
    throw ValidationError("an MDP needs at least one state");
  }
  for (std::size_t a = 0; a < transitions_.size(); ++a) {
    Matrix& p = transitions_[a];
    const std::string where = "transitions[" + std::to_string(a) + "]";
    if (p.rows() != states_ || p.cols() != states_) {
      throw DimensionError(where + " must be " + std::to_string(states_) + "x" +
                           std::to_string(states_));
    }
    if (rewards_[a].size() != states_) {
      throw DimensionError("rewards[" + std::to_string(a) + "] must have length " +
                           std::to_string(states_));
    }
    if (!rewards_[a].allFinite()) {
      throw ValidationError("rewards[" + std::to_string(a) + "] has a non-finite entry");
    }
    for (Index x = 0; x < states_; ++x) {
      const std::string row = where + "[" + std::to_string(x) + "]";
      if (!p.row(x).allFinite()) {
        throw ValidationError(row + " has a non-finite entry");
      }
      if (p.row(x).minCoeff() < 0.0) {
        throw ValidationError(row + " has a negative probability");
      }
      const double sum = p.row(x).sum();
      if (std::abs(sum - 1.0) > kStochasticTolerance) {
        if (renormalize_rows && sum > 0.0) {
          p.row(x) /= sum;
        } else {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.17g", sum);
          throw ValidationError(row + " sums to " + buf + ", expected 1");
        }
      }
    }
  }
}

ActionValue Mdp::reward_table() const { return ActionValue::from_components(rewards_); }

Mdp Mdp::with_gamma(double gamma) const { return Mdp(transitions_, rewards_, gamma); }

ActionValue bellman_return(const Mdp& mdp, const Vector& values) {
  if (values.size() != mdp.states()) {
    throw DimensionError("value vector has length " + std::to_string(values.size()) +
                         ", MDP has " + std::to_string(mdp.states()) + " states");
  }
  Matrix out(mdp.states(), mdp.actions());
  for (Index a = 0; a < mdp.actions(); ++a) {
    out.col(a) = mdp.reward(a) + mdp.gamma() * (mdp.transition(a) * values);
  }
  return ActionValue(std::move(out));
}

Vector max_select(const ActionValue& values) {
  if (values.actions() == 0) {
    throw DimensionError("max over an empty action set");
  }
  return values.matrix().rowwise().maxCoeff();
}

Vector policy_select(const ActionValue& values, const Policy& policy) {
  policy.validate(values.size(), values.actions());
  Vector out(values.size());
  for (Index x = 0; x < values.size(); ++x) {
    out(x) = values.matrix()(x, policy[x]);
  }
  return out;
}

Policy greedy(const ActionValue& values) {
  std::vector<Index> choice(static_cast<std::size_t>(values.size()), 0);
  const Matrix& m = values.matrix();
  for (Index x = 0; x < m.rows(); ++x) {
    Index best = 0;
    for (Index a = 1; a < m.cols(); ++a) {
      if (m(x, a) > m(x, best)) {
        best = a;
      }
    }
    choice[static_cast<std::size_t>(x)] = best;
  }
  return Policy(std::move(choice));
}

ValueIterationResult value_iteration(const Mdp& mdp, double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) {
    throw ValidationError("value iteration tolerance must be positive");
  }
  const double gamma = mdp.gamma();
  // With gamma = 0 a single application is exact.
  const double threshold = gamma > 0.0 ? tol * (1.0 - gamma) / gamma : INFINITY;
  Vector v = Vector::Zero(mdp.states());
  double step = INFINITY;
  for (std::size_t k = 1; k <= max_iter; ++k) {
    Vector next = max_select(bellman_return(mdp, v));
    step = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (step <= threshold) {
      const double residual = gamma > 0.0 ? step * gamma / (1.0 - gamma) : 0.0;
      return {std::move(v), k, residual};
    }
  }
  throw MaxIterError(max_iter, step * gamma / (1.0 - gamma));
}

Matrix policy_transition(const Mdp& mdp, const Policy& policy) {
  policy.validate(mdp.states(), mdp.actions());
  Matrix out(mdp.states(), mdp.states());
  for (Index x = 0; x < mdp.states(); ++x) {
    out.row(x) = mdp.transition(policy[x]).row(x);
  }
  return out;
}

Vector policy_reward(const Mdp& mdp, const Policy& policy) {
  policy.validate(mdp.states(), mdp.actions());
  Vector out(mdp.states());
  for (Index x = 0; x < mdp.states(); ++x) {
    out(x) = mdp.reward(policy[x])(x);
  }
  return out;
}

Vector policy_evaluation(const Mdp& mdp, const Policy& policy) {
  const Index m = mdp.states();
  Matrix system = Matrix::Identity(m, m) - mdp.gamma() * policy_transition(mdp, policy);
  Vector values = system.partialPivLu().solve(policy_reward(mdp, policy));
  if (!values.allFinite()) {
    throw Error("internal error: policy evaluation produced non-finite values");
  }
  return values;
}

OptimalSolution solve_optimal(const Mdp& mdp, double tol) {
  const ValueIterationResult vi = value_iteration(mdp, tol);
  Policy policy = greedy(bellman_return(mdp, vi.values));
  Vector values = policy_evaluation(mdp, policy);
  // Policy improvement; only strict gains beyond rounding switch an action so
  // that ties cannot make the loop cycle.
  for (int round = 0; round < 1000; ++round) {
    const Matrix q = bellman_return(mdp, values).matrix();
    std::vector<Index> choice = policy.choices();
    bool changed = false;
    for (Index x = 0; x < mdp.states(); ++x) {
      auto& current = choice[static_cast<std::size_t>(x)];
      const double margin = 1e-12 * (1.0 + std::abs(q(x, current)));
      for (Index a = 0; a < mdp.actions(); ++a) {
        if (q(x, a) > q(x, current) + margin) {
          current = a;
          changed = true;
        }
      }
    }
    if (!changed) {
      break;
    }
    policy = Policy(std::move(choice));
    values = policy_evaluation(mdp, policy);
  }
  return {std::move(values), std::move(policy)};
}

Vector stationary_distribution(const Matrix& kernel) {
  const Index m = kernel.rows();
  if (kernel.cols() != m) {
    throw DimensionError("stationary distribution needs a square kernel");
  }
  Matrix system(m + 1, m);
  system.topRows(m) = kernel.transpose() - Matrix::Identity(m, m);
  system.row(m).setOnes();
  Vector rhs = Vector::Zero(m + 1);
  rhs(m) = 1.0;
  Vector mu = system.colPivHouseholderQr().solve(rhs);
  mu = mu.cwiseMax(0.0);
  const double total = mu.sum();
  if (!(total > 0.0)) {
    throw Error("internal error: stationary distribution solve failed");
  }
  return mu / total;
}

}  // namespace flm
