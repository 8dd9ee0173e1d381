#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "flm/errors.hpp"
#include "flm/mdp.hpp"
#include "flm/norms.hpp"
#include "oracles.hpp"

using namespace flm;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector positive(std::mt19937_64& g, Index n) { return oracle::random_vector(g, n, 0.2, 2.0); }

std::vector<NormSpec> families(std::mt19937_64& g, Index n) {
  Vector mu = positive(g, n);
  mu /= mu.sum();
  return {NormSpec::sup(), NormSpec::weighted_sup(positive(g, n)), NormSpec::lp(LpExponent::One, mu),
          NormSpec::lp(LpExponent::Two, mu), NormSpec::lp(LpExponent::Inf, mu)};
}

}  // namespace

TEST(Norms, VectorNormsByHand) {
  const Vector v = vec({3.0, -4.0, 1.0});
  EXPECT_DOUBLE_EQ(vec_norm(v, NormSpec::sup()), 4.0);
  EXPECT_DOUBLE_EQ(vec_norm(v, NormSpec::weighted_sup(vec({1.0, 8.0, 0.25}))), 4.0);
  const Vector mu = vec({0.5, 0.25, 0.25});
  EXPECT_DOUBLE_EQ(vec_norm(v, NormSpec::lp(LpExponent::One, mu)), 1.5 + 1.0 + 0.25);
  EXPECT_DOUBLE_EQ(vec_norm(v, NormSpec::lp(LpExponent::Two, mu)), std::sqrt(4.5 + 4.0 + 0.25));
  EXPECT_DOUBLE_EQ(vec_norm(v, NormSpec::lp(LpExponent::Inf, mu)), 4.0);
  // The L^inf(mu) norm ignores null coordinates.
  EXPECT_DOUBLE_EQ(vec_norm(v, NormSpec::lp(LpExponent::Inf, vec({1.0, 0.0, 1.0}))), 3.0);
}

TEST(Norms, SpecValidation) {
  EXPECT_THROW(NormSpec::weighted_sup(vec({1.0, 0.0})), ValidationError);
  EXPECT_THROW(NormSpec::weighted_sup(vec({1.0, -1.0})), ValidationError);
  EXPECT_THROW(NormSpec::lp(LpExponent::One, vec({1.0, -0.5})), ValidationError);
  EXPECT_THROW(vec_norm(vec({1.0, 2.0, 3.0}), NormSpec::weighted_sup(vec({1.0, 1.0}))), DimensionError);
}

TEST(Norms, MixedNormIsBaseNormOfPointwiseMax) {
  auto& g = oracle::engine(21);
  for (int t = 0; t < 50; ++t) {
    const Matrix values = oracle::random_matrix(g, 6, 3);
    Vector pointwise(6);
    for (Index x = 0; x < 6; ++x) pointwise(x) = values.row(x).cwiseAbs().maxCoeff();
    for (const NormSpec& spec : families(g, 6)) {
      EXPECT_DOUBLE_EQ(mixed_norm(ActionValue(values), spec), vec_norm(pointwise, spec));
    }
  }
}

TEST(Norms, LyapunovBetaMatchesSignPatternBruteForce) {
  auto& g = oracle::engine(22);
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + t % 12;
    const Index k = 1 + t % 3;
    std::vector<Matrix> ops;
    for (Index a = 0; a < k; ++a) ops.push_back(oracle::random_matrix(g, n, n));
    const Vector w = positive(g, n);
    const double gamma = oracle::unif(g, 0.1, 0.99);
    const double expect = gamma * oracle::vertex_sup_norm(ops, w, w);
    EXPECT_NEAR(lyapunov_beta(w, ops, gamma), expect, 1e-12 * std::max(1.0, expect));
  }
}

TEST(Norms, SupTypeInducedNormMatchesVertices) {
  auto& g = oracle::engine(23);
  for (int t = 0; t < 60; ++t) {
    const Index rows = 1 + t % 7, cols = 1 + t % 10;
    const Matrix j = oracle::random_matrix(g, rows, cols);
    const Vector w_in = positive(g, cols), w_out = positive(g, rows);
    const double expect = oracle::vertex_sup_norm({j}, w_in, w_out);
    const InducedNorm got =
        induced_norm({j, NormSpec::weighted_sup(w_in), NormSpec::weighted_sup(w_out)});
    EXPECT_NEAR(got.value, expect, 1e-12 * std::max(1.0, expect));
    EXPECT_TRUE(got.exact);
    const double plain = oracle::vertex_sup_norm({j}, Vector::Ones(cols), Vector::Ones(rows));
    EXPECT_NEAR(op_norm({j, NormSpec::sup(), NormSpec::sup()}), plain, 1e-12 * std::max(1.0, plain));
  }
}

TEST(Norms, L1InducedNormMatchesBasisVectors) {
  auto& g = oracle::engine(24);
  for (int t = 0; t < 60; ++t) {
    const Index rows = 1 + t % 8, cols = 1 + t % 6;
    const Matrix j = oracle::random_matrix(g, rows, cols);
    const Vector mu_in = positive(g, cols), mu_out = positive(g, rows);
    const NormSpec in = NormSpec::lp(LpExponent::One, mu_in);
    const NormSpec out = NormSpec::lp(LpExponent::One, mu_out);
    double expect = 0.0;
    for (Index c = 0; c < cols; ++c) {
      const Vector e = Vector::Unit(cols, c) / mu_in(c);
      expect = std::max(expect, vec_norm(j * e, out) / vec_norm(e, in));
    }
    EXPECT_NEAR(op_norm({j, in, out}), expect, 1e-12 * std::max(1.0, expect));
  }
}

TEST(Norms, L2InducedNormMatchesSvdAndRestart) {
  auto& g = oracle::engine(25);
  for (int t = 0; t < 40; ++t) {
    const Index rows = 1 + t % 9, cols = 1 + t % 7;
    const Matrix j = oracle::random_matrix(g, rows, cols);
    const Vector mu_in = positive(g, cols), mu_out = positive(g, rows);
    const Matrix scaled = mu_out.cwiseSqrt().asDiagonal() * j * mu_in.cwiseSqrt().cwiseInverse().asDiagonal();
    const double expect = Eigen::JacobiSVD<Matrix>(scaled).singularValues()(0);
    const double got =
        op_norm({j, NormSpec::lp(LpExponent::Two, mu_in), NormSpec::lp(LpExponent::Two, mu_out)});
    EXPECT_NEAR(got, expect, 1e-8 * std::max(1.0, expect));
    const double first = power_iteration_sigma(j, 1);
    const double second = power_iteration_sigma(j, 99);
    EXPECT_NEAR(first, second, 1e-8 * std::max(1.0, first));
  }
}

TEST(Norms, CrossFamilyBoundDominatesAndIsExactForNonnegative) {
  auto& g = oracle::engine(26);
  for (int t = 0; t < 40; ++t) {
    const Index n = 1 + t % 8, rows = 1 + t % 5;
    const Matrix j = oracle::random_matrix(g, rows, n);
    const Vector w = positive(g, n);
    Vector mu = positive(g, rows);
    mu /= mu.sum();
    for (LpExponent p : {LpExponent::One, LpExponent::Two, LpExponent::Inf}) {
      const NormSpec out = NormSpec::lp(p, mu);
      const Matrix s = oracle::sign_patterns(n);
      double brute = 0.0;
      for (Index c = 0; c < s.cols(); ++c) brute = std::max(brute, vec_norm(j * s.col(c).cwiseProduct(w), out));
      const InducedNorm bound = induced_norm({j, NormSpec::weighted_sup(w), out});
      EXPECT_GE(bound.value, brute * (1.0 - 1e-12));
      const Matrix nonneg = j.cwiseAbs();
      EXPECT_NEAR(op_norm({nonneg, NormSpec::weighted_sup(w), out}), vec_norm(nonneg * w, out), 1e-12);
    }
  }
}

TEST(Norms, StackedNormMatchesBruteForce) {
  auto& g = oracle::engine(27);
  for (int t = 0; t < 40; ++t) {
    const Index n = 1 + t % 8, rows = 2 + t % 5, k = 1 + t % 4;
    std::vector<Matrix> blocks;
    for (Index a = 0; a < k; ++a) blocks.push_back(oracle::random_matrix(g, rows, n));
    const Vector w_in = positive(g, n), w_out = positive(g, rows);
    const double expect = oracle::vertex_sup_norm(blocks, w_in, w_out);
    const double got =
        stacked_op_norm(blocks, NormSpec::weighted_sup(w_in), NormSpec::weighted_sup(w_out)).value;
    EXPECT_NEAR(got, expect, 1e-12 * std::max(1.0, expect));
  }
}

TEST(Norms, UnsupportedPairingThrows) {
  const Matrix j = Matrix::Identity(2, 2);
  const Vector mu = vec({0.5, 0.5});
  EXPECT_THROW(op_norm({j, NormSpec::lp(LpExponent::One, mu), NormSpec::sup()}), UnsupportedNormError);
  EXPECT_THROW(op_norm({j, NormSpec::lp(LpExponent::Two, mu), NormSpec::lp(LpExponent::One, mu)}),
               UnsupportedNormError);
}

TEST(Norms, LyapunovWeightIsLyapunov) {
  auto& g = oracle::engine(28);
  for (int t = 0; t < 30; ++t) {
    const Index n = 2 + t % 9;
    std::vector<Matrix> ops = {oracle::stochastic(g, n, n), oracle::stochastic(g, n, n)};
    const double gamma = oracle::unif(g, 0.1, 0.9);
    const double gamma_prime = oracle::unif(g, gamma, 0.99);
    const Vector w = lyapunov_weight(ops, gamma_prime);
    EXPECT_GT(w.minCoeff(), 0.0);
    EXPECT_LT(lyapunov_beta(w, ops, gamma), 1.0);
  }
}

TEST(Norms, PointEvaluatorLipschitzConstant) {
  auto& g = oracle::engine(29);
  for (int t = 0; t < 30; ++t) {
    const Index m = 3 + t % 6;
    Vector mu = positive(g, m);
    mu /= mu.sum();
    const std::vector<Index> anchors = {0, m - 1, 1};
    Vector rho = positive(g, 3);
    rho /= rho.sum();
    // rho pushed onto the anchor states; the L1 constant is max rho'(x) / mu(x).
    Vector pushed = Vector::Zero(m);
    for (std::size_t i = 0; i < anchors.size(); ++i) pushed(anchors[i]) += rho(static_cast<Index>(i));
    const double l1 = (pushed.array() / mu.array()).maxCoeff();
    EXPECT_NEAR(lip_point_evaluator_lp(rho, mu, anchors, LpExponent::One), l1, 1e-12 * l1);
    EXPECT_NEAR(lip_point_evaluator_lp(rho, mu, anchors, LpExponent::Two), std::sqrt(l1), 1e-12 * l1);
    Vector holes = mu;
    holes(anchors[0]) = 0.0;
    EXPECT_TRUE(std::isinf(lip_point_evaluator_lp(rho, holes, anchors, LpExponent::One)));
  }
}

// Max-type operators are non-expansions from the mixed norm to the base norm.
TEST(Norms, MaxOperatorsAreNonExpansive) {
  auto& g = oracle::engine(30);
  for (Index rows : {Index{7}, Index{3}}) {  // V^A and the compressed W^A
    for (const NormSpec& spec : families(g, rows)) {
      for (int t = 0; t < 1000; ++t) {
        const Index k = 1 + t % 4;
        const ActionValue v(oracle::random_matrix(g, rows, k) * 5.0);
        const ActionValue u(oracle::random_matrix(g, rows, k) * 5.0);
        std::vector<Index> pi(static_cast<std::size_t>(rows));
        for (auto& a : pi) a = static_cast<Index>(g() % static_cast<std::uint64_t>(k));
        const double mixed = mixed_norm(v - u, spec);
        EXPECT_LE(vec_norm(max_select(v) - max_select(u), spec), mixed + 1e-12);
        EXPECT_LE(vec_norm(policy_select(v, Policy(pi)) - policy_select(u, Policy(pi)), spec),
                  mixed + 1e-12);
      }
    }
  }
}
