#include <gtest/gtest.h>

#include "flm/errors.hpp"
#include "flm/factored_model.hpp"
#include "flm/random.hpp"
#include "oracles.hpp"

using namespace flm;

namespace {

Matrix random_join_hom(std::mt19937_64& g, Index n, Index m) {
  Matrix r = Matrix::Zero(n, m);
  for (Index i = 0; i < n; ++i) {
    if (oracle::unif(g) < 0.1) continue;  // all-zero row
    r(i, static_cast<Index>(g() % static_cast<std::uint64_t>(m))) = oracle::unif(g, 0.01, 3.0);
  }
  return r;
}

Matrix random_violator(std::mt19937_64& g, Index n, Index m) {
  Matrix r = random_join_hom(g, n, m);
  const Index row = static_cast<Index>(g() % static_cast<std::uint64_t>(n));
  r.row(row).setZero();
  if (m >= 2 && oracle::unif(g) < 0.6) {
    const Index c1 = static_cast<Index>(g() % static_cast<std::uint64_t>(m));
    const Index c2 = (c1 + 1 + static_cast<Index>(g() % static_cast<std::uint64_t>(m - 1))) % m;
    r(row, c1) = oracle::unif(g, 0.01, 2.0) * (oracle::unif(g) < 0.5 ? -1.0 : 1.0);
    r(row, c2) = oracle::unif(g, 0.01, 2.0) * (oracle::unif(g) < 0.5 ? -1.0 : 1.0);
  } else {
    r(row, static_cast<Index>(g() % static_cast<std::uint64_t>(m))) = -oracle::unif(g, 0.01, 2.0);
  }
  return r;
}

}  // namespace

TEST(JoinHom, DecompositionRoundTripsExactly) {
  auto& g = oracle::engine(31);
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + t % 10, m = 1 + t % 13;
    const Matrix r = random_join_hom(g, n, m);
    const auto result = validate_join_hom(r);
    ASSERT_TRUE(std::holds_alternative<JoinHom>(result));
    const JoinHom& jh = std::get<JoinHom>(result);
    Matrix rebuilt = Matrix::Zero(n, m);
    for (Index i = 0; i < n; ++i) rebuilt(i, jh.index[static_cast<std::size_t>(i)]) += jh.scale(i);
    EXPECT_EQ(rebuilt, r);
    const RightFactor f = RightFactor::join_hom(jh.scale, jh.index, m);
    EXPECT_EQ(f.dense(), r);
  }
}

TEST(JoinHom, RejectionWitnessesAreGenuine) {
  auto& g = oracle::engine(32);
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + t % 10, m = 1 + t % 13;
    const Matrix r = random_violator(g, n, m);
    const auto result = validate_join_hom(r);
    ASSERT_TRUE(std::holds_alternative<JoinHomRejection>(result)) << r;
    const JoinHomRejection& w = std::get<JoinHomRejection>(result);
    // Recompute both sides independently of the reported values.
    const double lhs = (r * w.u.cwiseMax(w.v))(w.row);
    const double rhs = std::max((r * w.u)(w.row), (r * w.v)(w.row));
    EXPECT_NE(lhs, rhs);
    EXPECT_DOUBLE_EQ(lhs, w.lhs);
    EXPECT_DOUBLE_EQ(rhs, w.rhs);
  }
}

TEST(JoinHom, GeneralFactorRefusesJoinHomConstruction) {
  Matrix r(1, 2);
  r << 0.5, 0.5;
  EXPECT_THROW(RightFactor::join_hom((Vector(1) << 1.0).finished(), {3}, 2), Error);
  EXPECT_FALSE(RightFactor::general(r).is_join_hom());
  EXPECT_TRUE(RightFactor::identity(3).is_join_hom());
  const auto anchors = RightFactor::point_evaluator({2, 0}, 3).anchors();
  ASSERT_TRUE(anchors.has_value());
  EXPECT_EQ(*anchors, (std::vector<Index>{2, 0}));
}

TEST(Model, OperatorsMatchDenseAlgebra) {
  auto& g = oracle::engine(33);
  for (int t = 0; t < 30; ++t) {
    const Mdp mdp = oracle::random_mdp(g, 6, 3, 0.8);
    MatrixFamily q;
    for (int a = 0; a < 3; ++a) q.push_back(oracle::random_matrix(g, 6, 4));
    const Matrix r = oracle::random_matrix(g, 4, 6);
    const FactoredLinearModel model(ModelShape::of(mdp), q, RightFactor::general(r));
    const Vector u = oracle::random_vector(g, 4);
    const Vector v = oracle::random_vector(g, 6);
    const ActionValue tq = t_q(model, u);
    const ActionValue tpq = t_piaq(model, u);
    const ActionValue tqr = t_qr(model, v);
    for (Index a = 0; a < 3; ++a) {
      const Vector want = mdp.reward(a) + 0.8 * q[static_cast<std::size_t>(a)] * u;
      EXPECT_LE(oracle::sup(tq.component(a) - want), 1e-13);
      EXPECT_LE(oracle::sup(tpq.component(a) - r * want), 1e-13);
      EXPECT_LE(oracle::sup(tqr.component(a) - (mdp.reward(a) + 0.8 * q[static_cast<std::size_t>(a)] * (r * v))),
                1e-13);
    }
    double rowsum = 0.0;
    for (Index a = 0; a < 3; ++a) {
      rowsum = std::max(rowsum, (r * q[static_cast<std::size_t>(a)]).cwiseAbs().rowwise().sum().maxCoeff());
    }
    EXPECT_NEAR(contraction_modulus(model, NormSpec::sup()), 0.8 * rowsum, 1e-12);
  }
}

TEST(Model, ShapeValidation) {
  auto& g = oracle::engine(34);
  const Mdp mdp = oracle::random_mdp(g, 4, 2, 0.9);
  const MatrixFamily q = {Matrix::Zero(4, 2), Matrix::Zero(4, 2)};
  EXPECT_THROW(FactoredLinearModel(ModelShape::of(mdp), {Matrix::Zero(4, 2)}, RightFactor::identity(4)),
               DimensionError);
  EXPECT_THROW(FactoredLinearModel(ModelShape::of(mdp), q, RightFactor::identity(4)), DimensionError);
  EXPECT_THROW(FactoredLinearModel(ModelShape::of(mdp), {Matrix::Zero(3, 2), Matrix::Zero(3, 2)},
                                   RightFactor::point_evaluator({0, 1}, 4)),
               DimensionError);
  MatrixFamily bad = q;
  bad[0](0, 0) = std::nan("");
  EXPECT_THROW(FactoredLinearModel(ModelShape::of(mdp), bad, RightFactor::point_evaluator({0, 1}, 4)),
               ValidationError);
  // A join-homomorphism R must come with piA = R.
  std::vector<RightFactor> other = {RightFactor::point_evaluator({1, 2}, 4),
                                    RightFactor::point_evaluator({1, 2}, 4)};
  EXPECT_THROW(FactoredLinearModel(ModelShape::of(mdp), q, RightFactor::point_evaluator({0, 1}, 4), other),
               ValidationError);
}

TEST(Model, UnfactoredIdentity) {
  auto& g = oracle::engine(35);
  const Mdp mdp = oracle::random_mdp(g, 5, 2, 0.7);
  const FactoredLinearModel model = unfactored_identity(mdp);
  EXPECT_EQ(model.compressed_dim(), 5);
  EXPECT_EQ(model.q(1), mdp.transition(1));
  EXPECT_EQ(model.r().dense(), Matrix::Identity(5, 5));
  EXPECT_NEAR(contraction_modulus(model, NormSpec::sup()), 0.7, 1e-15);
}

TEST(Model, HardAggregationStructure) {
  auto& g = oracle::engine(36);
  const Mdp mdp = oracle::random_mdp(g, 6, 2, 0.9);
  const std::vector<Index> blocks = {1, 0, 1, 2, 0, 2};
  const FactoredLinearModel model = hard_aggregation(mdp, blocks);
  ASSERT_EQ(model.compressed_dim(), 3);
  EXPECT_EQ(*model.r().anchors(), (std::vector<Index>{1, 0, 3}));
  for (Index a = 0; a < 2; ++a) {
    for (Index x = 0; x < 6; ++x) {
      for (Index b = 0; b < 3; ++b) {
        double mass = 0.0;
        for (Index y = 0; y < 6; ++y)
          if (blocks[static_cast<std::size_t>(y)] == b) mass += mdp.transition(a)(x, y);
        EXPECT_NEAR(model.q(a)(x, b), mass, 1e-15);
      }
    }
    const Matrix qr = model.product_kernels()[static_cast<std::size_t>(a)];
    EXPECT_LE((qr.rowwise().sum() - Vector::Ones(6)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(hard_aggregation(mdp, {0, 0, 2, 2, 0, 0}), ValidationError);
  EXPECT_THROW(hard_aggregation(mdp, {0, 1}), DimensionError);
}

TEST(Model, PointEvaluatorAndKernelRowsAreStochastic) {
  auto& g = oracle::engine(37);
  const Mdp mdp = oracle::random_mdp(g, 7, 2, 0.9);
  const FactoredLinearModel pe = point_evaluator(mdp, {0, 3, 6});
  const Matrix embedding = oracle::random_matrix(g, 7, 2);
  const FactoredLinearModel kb = kbrl_model(mdp, {1, 4}, embedding, 0.5);
  for (Index a = 0; a < 2; ++a) {
    EXPECT_LE((pe.q(a).rowwise().sum() - Vector::Ones(7)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(pe.q(a).minCoeff(), 0.0);
    EXPECT_LE((kb.q(a).rowwise().sum() - Vector::Ones(7)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_NEAR(contraction_modulus(pe, NormSpec::sup()), 0.9, 1e-12);
  EXPECT_THROW(point_evaluator(mdp, {}), ValidationError);
  EXPECT_THROW(point_evaluator(mdp, {7}), Error);
  EXPECT_THROW(kbrl_model(mdp, {1}, embedding, 0.0), ValidationError);
}

TEST(Model, SoftAggregation) {
  auto& g = oracle::engine(38);
  const Mdp mdp = oracle::random_mdp(g, 5, 2, 0.6);
  const Matrix d = oracle::stochastic(g, 3, 5);
  const FactoredLinearModel model = soft_aggregation(mdp, d);
  EXPECT_FALSE(model.r().is_join_hom());
  EXPECT_LE((model.r().dense() - d).cwiseAbs().maxCoeff(), 0.0);
  // D P Phi is stochastic, so the modulus in sup is gamma.
  EXPECT_NEAR(contraction_modulus(model, NormSpec::sup()), 0.6, 1e-12);
  Matrix bad = d;
  bad(0, 0) += 0.5;
  EXPECT_THROW(soft_aggregation(mdp, bad), ValidationError);
  // A one-hot D is a join-homomorphism and is stored as one.
  Matrix hot = Matrix::Zero(2, 5);
  hot(0, 1) = 1.0;
  hot(1, 4) = 1.0;
  EXPECT_TRUE(soft_aggregation(mdp, hot).r().is_join_hom());
}

TEST(Model, RandomNormalizedHasModulusGamma) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    InstanceRanges ranges;
    ranges.soft = seed % 3 == 0;
    const RandomInstance inst = random_instance(seed, ranges);
    EXPECT_NEAR(contraction_modulus(inst.model, NormSpec::sup()), inst.mdp.gamma(), 1e-12);
    if (!ranges.soft) {
      EXPECT_TRUE(inst.model.r().is_join_hom());
    }
    EXPECT_LE(inst.model.compressed_dim(), inst.mdp.states());
  }
}

TEST(Model, WithGamma) {
  auto& g = oracle::engine(39);
  const Mdp mdp = oracle::random_mdp(g, 4, 2, 0.5);
  const FactoredLinearModel model = point_evaluator(mdp, {0, 2});
  const FactoredLinearModel other = model.with_gamma(0.9);
  EXPECT_EQ(other.gamma(), 0.9);
  EXPECT_EQ(other.q(0), model.q(0));
  EXPECT_NEAR(contraction_modulus(other, NormSpec::sup()), 0.9, 1e-12);
}

TEST(Random, SeedsAreReproducibleAndIndependentOfOrder) {
  EXPECT_EQ(trial_seed(5, 3), trial_seed(5, 3));
  EXPECT_NE(trial_seed(5, 3), trial_seed(5, 4));
  EXPECT_NE(trial_seed(5, 3), trial_seed(6, 3));
  const RandomInstance a = random_instance(trial_seed(9, 2));
  (void)random_instance(trial_seed(9, 1));
  const RandomInstance b = random_instance(trial_seed(9, 2));
  EXPECT_EQ(a.mdp.transition(0), b.mdp.transition(0));
  EXPECT_EQ(a.model.q(0), b.model.q(0));
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const Index k = rng.integer(2, 5);
    EXPECT_GE(k, 2);
    EXPECT_LE(k, 5);
  }
  const Vector d = rng.dirichlet(6);
  EXPECT_NEAR(d.sum(), 1.0, 1e-15);
  EXPECT_GE(d.minCoeff(), 0.0);
}
