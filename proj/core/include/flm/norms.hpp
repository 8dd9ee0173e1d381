#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flm/linalg.hpp"
#include "flm/mdp.hpp"

namespace flm {

enum class NormKind { Sup, WeightedSup, Lp };

/// Exponents with closed-form induced norms. General p is not supported.
enum class LpExponent { One, Two, Inf };

double exponent_value(LpExponent p);

/// Tagged norm over a finite coordinate set: sup, weighted sup with a
/// strictly positive weight, or L^p with a nonnegative measure.
class NormSpec {
 public:
  static NormSpec sup();
  static NormSpec weighted_sup(Vector weights);
  static NormSpec lp(LpExponent p, Vector measure);

  NormKind kind() const noexcept { return kind_; }
  LpExponent exponent() const noexcept { return exponent_; }
  const Vector& weights() const noexcept { return vec_; }
  const Vector& measure() const noexcept { return vec_; }

  /// Sup is dimension-free; the other kinds carry a vector of fixed length.
  std::optional<Index> dimension() const;
  void check_dimension(Index d) const;

  /// True for Sup, WeightedSup and Lp(inf): norms that commute with a max.
  bool is_sup_type() const noexcept;

  /// Weights w such that the norm equals max |v_i| / w_i over its support:
  /// ones for Sup, w for WeightedSup, ones for Lp(inf).
  Vector sup_weights(Index d) const;

  std::string describe() const;

 private:
  NormSpec(NormKind kind, LpExponent p, Vector vec);

  NormKind kind_;
  LpExponent exponent_;
  Vector vec_;
};

double vec_norm(const Vector& v, const NormSpec& spec);

/// Mixed max-norm: the base norm of x -> max_a |V^a(x)|.
double mixed_norm(const ActionValue& values, const NormSpec& spec);

/// Per-state maximum absolute value across actions.
Vector abs_max_select(const ActionValue& values);

struct NormedOperator {
  Matrix matrix;
  NormSpec in_spec;
  NormSpec out_spec;
};

struct InducedNorm {
  double value = 0.0;  // may be +inf
  /// A vector attaining the norm (exact for sup-type and L1 pairings; the
  /// power-iteration singular vector for L2). Empty for bound-only pairings.
  Vector witness;
  /// False when `value` is the sign-aligned upper bound of a cross-family pairing.
  bool exact = true;
};

/// Induced operator norm ||J|| = sup ||Jv||_out / ||v||_in.
///
/// Supported pairings:
///   - {Sup, WeightedSup, Lp(inf)} -> {Sup, WeightedSup, Lp(inf)}: weighted row sums
///   - Lp(1, mu_in) -> Lp(1, mu_out): weighted column sums
///   - Lp(2, mu_in) -> Lp(2, mu_out): top singular value by power iteration
///   - {Sup, WeightedSup} -> Lp(any): sign-aligned upper bound (exact when J >= 0)
/// Anything else throws UnsupportedNormError.
InducedNorm induced_norm(const NormedOperator& op);
double op_norm(const NormedOperator& op);

/// Norm of the stacked operator v -> (J^a v)_a from `in` into the mixed
/// max-norm built on `out`. Exact for sup-type pairings; for sup-type input
/// and an Lp output it is the sign-aligned upper bound; a single block
/// defers to induced_norm.
InducedNorm stacked_op_norm(std::span<const Matrix> blocks, const NormSpec& in,
                            const NormSpec& out);

/// Largest singular value of `m` by power iteration on m^T m. The start
/// vector is drawn from `seed`.
double power_iteration_sigma(const Matrix& m, std::uint64_t seed, Vector* right_vector = nullptr);

/// beta_{w,J} = gamma * max_{a,x} sum_y |J^a(x,y)| w(y) / w(x).
double lyapunov_beta(const Vector& weights, std::span<const Matrix> operators, double gamma);

/// A weight w with w = 1 + gamma' max_a |J^a| w (fixed-point iteration). For
/// operators with row abs-sums at most one this is gamma-Lyapunov whenever
/// gamma <= gamma' < 1.
Vector lyapunov_weight(std::span<const Matrix> operators, double gamma_prime);

/// Lip of the point evaluator R : L^p(mu) -> L^p(rho) over anchors x_i,
/// namely ||d rho' / d mu||_inf^{1/p} with rho' the anchor push-forward of
/// rho; +inf when rho' is not absolutely continuous w.r.t. mu.
double lip_point_evaluator_lp(const Vector& rho, const Vector& mu, std::span<const Index> anchors,
                              LpExponent p);

}  // namespace flm
