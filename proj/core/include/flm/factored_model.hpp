#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "flm/linalg.hpp"
#include "flm/mdp.hpp"
#include "flm/norms.hpp"

namespace flm {

/// Linear join-homomorphism (Rv)_i = scale_i * v[index_i] with scale >= 0.
struct JoinHom {
  Vector scale;
  std::vector<Index> index;
};

/// Proof that a matrix is not a join-homomorphism: at `row`,
/// (R(u v w))_row = lhs differs from ((Ru) v (Rw))_row = rhs.
struct JoinHomRejection {
  Index row = 0;
  Vector u;
  Vector v;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Accepts iff every row has at most one nonzero entry and that entry is
/// positive. All-zero rows decompose to scale 0, index 0.
std::variant<JoinHom, JoinHomRejection> validate_join_hom(const Matrix& r);

/// The right factor R : V -> W, either a dense matrix or a join-homomorphism.
class RightFactor {
 public:
  static RightFactor general(Matrix matrix);
  static RightFactor join_hom(Vector scale, std::vector<Index> index, Index source_dim);
  /// Point evaluator (Rv)_i = v(anchors_i).
  static RightFactor point_evaluator(std::vector<Index> anchors, Index source_dim);
  static RightFactor identity(Index dim);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  bool is_join_hom() const noexcept { return std::holds_alternative<JoinHom>(rep_); }
  const JoinHom* as_join_hom() const noexcept { return std::get_if<JoinHom>(&rep_); }
  /// Anchors of a join-hom factor with unit scales, if it is one.
  std::optional<std::vector<Index>> anchors() const;

  Vector apply(const Vector& v) const;
  /// Applies R to every column.
  Matrix apply_columns(const Matrix& v) const;
  Matrix dense() const;

 private:
  RightFactor(std::variant<Matrix, JoinHom> rep, Index rows, Index cols);

  std::variant<Matrix, JoinHom> rep_;
  Index rows_;
  Index cols_;
};

/// apply_R(R, v)
Vector apply_R(const RightFactor& r, const Vector& v);

/// The part of the true MDP a factored model keeps: sizes, discount and the
/// shared reward.
struct ModelShape {
  Index states = 0;
  Index actions = 0;
  double gamma = 0.0;
  ActionValue rewards;

  static ModelShape of(const Mdp& mdp);
};

/// Factored linear model <X, A, Q, R, r>: P^a is approximated by Q^a R with
/// Q^a an m x n matrix and R : R^m -> R^n. The per-action extension piA
/// defaults to R for every action.
class FactoredLinearModel {
 public:
  FactoredLinearModel(ModelShape shape, MatrixFamily q, RightFactor r,
                      std::optional<std::vector<RightFactor>> pi_a = std::nullopt);

  const ModelShape& shape() const noexcept { return shape_; }
  Index states() const noexcept { return shape_.states; }
  Index actions() const noexcept { return shape_.actions; }
  Index compressed_dim() const noexcept { return r_.rows(); }
  double gamma() const noexcept { return shape_.gamma; }

  const MatrixFamily& q() const noexcept { return q_; }
  const Matrix& q(Index action) const { return q_[static_cast<std::size_t>(action)]; }
  const RightFactor& r() const noexcept { return r_; }
  const std::vector<RightFactor>& pi_a() const noexcept { return pi_a_; }
  const RightFactor& pi_a(Index action) const { return pi_a_[static_cast<std::size_t>(action)]; }

  /// True when every piA^a is R (so piA is the plain action-wise extension).
  bool pi_a_is_r() const noexcept { return pi_a_is_r_; }

  /// The blocks (piA^a Q^a)_a of Pi^A Q : W -> W^A, each n x n.
  MatrixFamily compressed_kernels() const;
  /// The blocks (Q^a R)_a, each m x m.
  MatrixFamily product_kernels() const;

  /// Same Q, R and rewards under a different discount.
  FactoredLinearModel with_gamma(double gamma) const;

 private:
  ModelShape shape_;
  MatrixFamily q_;
  RightFactor r_;
  std::vector<RightFactor> pi_a_;
  bool pi_a_is_r_ = true;
};

/// T_Q u = r + gamma Q u.
ActionValue t_q(const FactoredLinearModel& model, const Vector& u);

/// T_{Pi^A Q} u = Pi^A T_Q u, a compressed action-value (n rows).
ActionValue t_piaq(const FactoredLinearModel& model, const Vector& u);

/// T_{QR} V = r + gamma Q R V.
ActionValue t_qr(const FactoredLinearModel& model, const Vector& v);

/// Pi^A applied action-wise to an uncompressed action-value.
ActionValue apply_pi_a(const FactoredLinearModel& model, const ActionValue& values);

/// gamma * ||Pi^A Q|| from (W, w_spec) into the mixed norm on W^A. For a
/// weighted sup norm this equals lyapunov_beta(w, Pi^A Q, gamma).
double contraction_modulus(const FactoredLinearModel& model, const NormSpec& w_spec);

// Constructors -------------------------------------------------------------

/// R = identity, Q = P.
FactoredLinearModel unfactored_identity(const Mdp& mdp);

/// Point evaluator on `anchors`; Q^a(x, i) is P^a(x, anchors_i) renormalised
/// over the anchors (uniform when a row puts no mass on any anchor).
FactoredLinearModel point_evaluator(const Mdp& mdp, std::vector<Index> anchors);

/// `block_of[x]` names the block of state x; blocks are 0..n-1 and all
/// nonempty. R evaluates each block at its lowest-index state and
/// Q^a(x, i) = sum over y in block i of P^a(x, y).
FactoredLinearModel hard_aggregation(const Mdp& mdp, const std::vector<Index>& block_of);

/// Soft aggregation with an n x m row-stochastic R = D. The disaggregation
/// Phi(x, i) is D(i, x) normalised over i (uniform for an all-zero column),
/// and Q^a = P^a Phi.
FactoredLinearModel soft_aggregation(const Mdp& mdp, const Matrix& aggregation);

/// Kernel-based model: R is the point evaluator on `anchors` and
/// Q^a = P^a K with K(y, i) proportional to exp(-|phi(y) - phi(x_i)|^2 / (2 h^2)),
/// rows normalised. `embedding` has one row per state.
FactoredLinearModel kbrl_model(const Mdp& mdp, std::vector<Index> anchors, const Matrix& embedding,
                               double bandwidth);

struct RandomModelOptions {
  Index compressed_dim = 2;
  /// Half-width of the uniform noise added to the exact aggregation Q.
  double perturbation = 0.3;
  /// Use a stochastic soft-aggregation R instead of a point evaluator.
  bool soft = false;
};

/// Random hard (or soft) aggregation of `mdp` with a perturbed Q, rescaled
/// so that ||Pi^A Q|| = 1 in the sup norm (contraction modulus gamma).
FactoredLinearModel random_normalized(const Mdp& mdp, std::uint64_t seed,
                                      const RandomModelOptions& options = {});

}  // namespace flm
