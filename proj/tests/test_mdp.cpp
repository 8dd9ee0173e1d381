#include <gtest/gtest.h>

#include "flm/errors.hpp"
#include "flm/mdp.hpp"
#include "flm/norms.hpp"
#include "oracles.hpp"

using namespace flm;

namespace {

Mdp two_state() {
  Matrix p0(2, 2), p1(2, 2);
  p0 << 0.5, 0.5, 1.0, 0.0;
  p1 << 0.0, 1.0, 0.25, 0.75;
  Vector r0(2), r1(2);
  r0 << 1.0, -1.0;
  r1 << 0.0, 2.0;
  return Mdp({p0, p1}, {r0, r1}, 0.5);
}

}  // namespace

TEST(Mdp, BellmanReturnByHand) {
  const Mdp mdp = two_state();
  Vector v(2);
  v << 2.0, 4.0;
  const ActionValue q = bellman_return(mdp, v);
  EXPECT_DOUBLE_EQ(q.matrix()(0, 0), 1.0 + 0.5 * 3.0);
  EXPECT_DOUBLE_EQ(q.matrix()(1, 0), -1.0 + 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(q.matrix()(0, 1), 0.0 + 0.5 * 4.0);
  EXPECT_DOUBLE_EQ(q.matrix()(1, 1), 2.0 + 0.5 * 3.5);
  const Vector best = max_select(q);
  EXPECT_DOUBLE_EQ(best(0), 2.5);
  EXPECT_DOUBLE_EQ(best(1), 3.75);
}

TEST(Mdp, GreedyBreaksTiesTowardLowestIndex) {
  Matrix q(3, 3);
  q << 1, 1, 0,
       0, 2, 2,
       5, 5, 5;
  const Policy pi = greedy(ActionValue(q));
  EXPECT_EQ(pi.choices(), (std::vector<Index>{0, 1, 0}));
  const Vector sel = policy_select(ActionValue(q), Policy({2, 0, 1}));
  Vector expect(3);
  expect << 0, 0, 5;
  EXPECT_EQ(sel, expect);
}

TEST(Mdp, PolicyEvaluationMatchesIterativeOracle) {
  auto& g = oracle::engine(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Index m = 2 + trial % 9, k = 1 + trial % 3;
    const Mdp mdp = oracle::random_mdp(g, m, k, oracle::unif(g, 0.1, 0.95));
    std::vector<Index> pi(static_cast<std::size_t>(m));
    for (auto& a : pi) a = static_cast<Index>(g() % static_cast<std::uint64_t>(k));
    const Vector expect = oracle::policy_value(mdp, pi);
    EXPECT_LE(oracle::sup(policy_evaluation(mdp, Policy(pi)) - expect), 1e-10);
  }
}

TEST(Mdp, SolveOptimalMatchesPolicyEnumeration) {
  auto& g = oracle::engine(12);
  for (int trial = 0; trial < 25; ++trial) {
    const Index m = 2 + trial % 4, k = 1 + trial % 3;
    const Mdp mdp = oracle::random_mdp(g, m, k, oracle::unif(g, 0.1, 0.95));
    const Vector v_star = oracle::brute_force_optimal(mdp);
    const OptimalSolution sol = solve_optimal(mdp, 1e-12);
    EXPECT_LE(oracle::sup(sol.values - v_star), 1e-10);
    EXPECT_LE(oracle::sup(oracle::policy_value(mdp, sol.policy.choices()) - v_star), 1e-10);
  }
}

TEST(Mdp, ValueIterationResidualIsAnUpperBound) {
  auto& g = oracle::engine(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Mdp mdp = oracle::random_mdp(g, 6, 3, oracle::unif(g, 0.1, 0.95));
    const ValueIterationResult vi = value_iteration(mdp, 1e-8);
    const Vector v_star = oracle::brute_force_optimal(mdp);
    EXPECT_LE(vi.residual, 1e-8);
    EXPECT_LE(oracle::sup(vi.values - v_star), vi.residual + 1e-12);
  }
}

TEST(Mdp, ContractionLemmaAtDeskScale) {
  // ||V - V*|| <= ||V - M T_P V|| / (1 - gamma) for the optimality operator.
  auto& g = oracle::engine(14);
  for (int trial = 0; trial < 200; ++trial) {
    const Mdp mdp = oracle::random_mdp(g, 5, 2, oracle::unif(g, 0.05, 0.95));
    const Vector v_star = oracle::brute_force_optimal(mdp);
    const Vector v = oracle::random_vector(g, 5, -10.0, 10.0);
    const double lhs = oracle::sup(v - v_star);
    const double rhs = oracle::sup(v - max_select(bellman_return(mdp, v))) / (1.0 - mdp.gamma());
    EXPECT_LE(lhs, rhs * (1.0 + 1e-12) + 1e-12);
  }
}

TEST(Mdp, ValidationRejectsBadInput) {
  Matrix bad(2, 2);
  bad << 0.5, 0.6, 0.0, 1.0;
  const Vector r = Vector::Zero(2);
  EXPECT_THROW(Mdp({bad}, {r}, 0.5), ValidationError);
  Matrix neg(2, 2);
  neg << 1.5, -0.5, 0.0, 1.0;
  EXPECT_THROW(Mdp({neg}, {r}, 0.5, true), ValidationError);
  const Matrix id = Matrix::Identity(2, 2);
  EXPECT_THROW(Mdp({id}, {r}, 1.0), ValidationError);
  EXPECT_THROW(Mdp({id}, {r}, -0.1), ValidationError);
  EXPECT_THROW(Mdp({id}, {Vector::Zero(3)}, 0.5), DimensionError);
  EXPECT_THROW(Mdp({Matrix::Identity(3, 3), id}, {Vector::Zero(3), r}, 0.5), DimensionError);
  Vector nan_r = r;
  nan_r(0) = std::nan("");
  EXPECT_THROW(Mdp({id}, {nan_r}, 0.5), ValidationError);

  Matrix unnormalized(2, 2);
  unnormalized << 2.0, 2.0, 0.0, 3.0;
  const Mdp fixed({unnormalized}, {r}, 0.5, true);
  EXPECT_DOUBLE_EQ(fixed.transition(0)(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(fixed.transition(0)(1, 1), 1.0);
}

TEST(Mdp, PolicyValidation) {
  EXPECT_NO_THROW(Policy({0, 1}).validate(2, 2));
  EXPECT_THROW(Policy({0, 2}).validate(2, 2), ValidationError);
  EXPECT_THROW(Policy({0}).validate(2, 2), Error);
}

TEST(Mdp, StationaryDistributionIsInvariant) {
  auto& g = oracle::engine(15);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix p = oracle::stochastic(g, 7, 7);
    const Vector mu = stationary_distribution(p);
    EXPECT_NEAR(mu.sum(), 1.0, 1e-12);
    EXPECT_LE((p.transpose() * mu - mu).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(mu.minCoeff(), -1e-14);
  }
}

TEST(Mdp, WithGammaKeepsKernels) {
  const Mdp mdp = two_state();
  const Mdp other = mdp.with_gamma(0.9);
  EXPECT_EQ(other.gamma(), 0.9);
  EXPECT_EQ(other.transition(1), mdp.transition(1));
  EXPECT_EQ(other.reward(0), mdp.reward(0));
}
