#include "flm/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "flm/errors.hpp"

namespace flm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Coordinates that the norm actually sees (the measure support for Lp).
std::vector<bool> support_mask(const NormSpec& spec, Index d) {
  std::vector<bool> mask(static_cast<std::size_t>(d), true);
  if (spec.kind() == NormKind::Lp) {
    for (Index i = 0; i < d; ++i) {
      mask[static_cast<std::size_t>(i)] = spec.measure()(i) > 0.0;
    }
  }
  return mask;
}

Vector unit(Index d, Index i) {
  Vector e = Vector::Zero(d);
  e(i) = 1.0;
  return e;
}

bool is_lp(const NormSpec& spec, LpExponent p) {
  return spec.kind() == NormKind::Lp && spec.exponent() == p;
}

// Sup-type input into sup-type output: weighted row sums.
InducedNorm sup_to_sup(const Matrix& j, const NormSpec& in, const NormSpec& out) {
  const Vector w_in = in.sup_weights(j.cols());
  const Vector w_out = out.sup_weights(j.rows());
  const auto in_mask = support_mask(in, j.cols());
  const auto out_mask = support_mask(out, j.rows());
  InducedNorm result;
  result.witness = Vector::Zero(j.cols());
  Index best_row = -1;
  for (Index x = 0; x < j.rows(); ++x) {
    if (!out_mask[static_cast<std::size_t>(x)]) continue;
    double sum = 0.0;
    for (Index y = 0; y < j.cols(); ++y) {
      if (j(x, y) == 0.0) continue;
      if (!in_mask[static_cast<std::size_t>(y)]) {
        result.value = kInf;
        result.witness = unit(j.cols(), y);
        return result;
      }
      sum += std::abs(j(x, y)) * w_in(y);
    }
    sum /= w_out(x);
    if (best_row < 0 || sum > result.value) {
      result.value = sum;
      best_row = x;
    }
  }
  if (best_row >= 0) {
    for (Index y = 0; y < j.cols(); ++y) {
      if (in_mask[static_cast<std::size_t>(y)]) {
        result.witness(y) = (j(best_row, y) < 0.0 ? -1.0 : 1.0) * w_in(y);
      }
    }
  }
  return result;
}

InducedNorm l1_to_l1(const Matrix& j, const Vector& mu_in, const Vector& mu_out) {
  InducedNorm result;
  result.witness = Vector::Zero(j.cols());
  Index best = -1;
  for (Index y = 0; y < j.cols(); ++y) {
    const double mass = mu_out.dot(j.col(y).cwiseAbs());
    if (mu_in(y) == 0.0) {
      if (mass > 0.0) {
        result.value = kInf;
        result.witness = unit(j.cols(), y);
        return result;
      }
      continue;
    }
    const double ratio = mass / mu_in(y);
    if (best < 0 || ratio > result.value) {
      result.value = ratio;
      best = y;
    }
  }
  if (best >= 0) {
    result.witness = unit(j.cols(), best);
  }
  return result;
}

InducedNorm l2_to_l2(const Matrix& j, const Vector& mu_in, const Vector& mu_out) {
  InducedNorm result;
  std::vector<Index> kept;
  for (Index y = 0; y < j.cols(); ++y) {
    if (mu_in(y) > 0.0) {
      kept.push_back(y);
      continue;
    }
    if (mu_out.dot(j.col(y).cwiseAbs2()) > 0.0) {
      result.value = kInf;
      result.witness = unit(j.cols(), y);
      return result;
    }
  }
  result.witness = Vector::Zero(j.cols());
  if (kept.empty()) {
    return result;
  }
  Matrix scaled(j.rows(), static_cast<Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const Index y = kept[c];
    scaled.col(static_cast<Index>(c)) =
        mu_out.cwiseSqrt().cwiseProduct(j.col(y)) / std::sqrt(mu_in(y));
  }
  Vector right;
  result.value = power_iteration_sigma(scaled, 0x9e3779b97f4a7c15ULL, &right);
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const Index y = kept[c];
    result.witness(y) = right(static_cast<Index>(c)) / std::sqrt(mu_in(y));
  }
  return result;
}

// g(x) = max_a sum_y |J^a(x,y)| w_in(y): the image of the sign-aligned
// vector, which dominates |J^a f| for every |f| <= w_in.
InducedNorm sign_aligned(std::span<const Matrix> blocks, const NormSpec& in, const NormSpec& out) {
  const Index cols = blocks.front().cols();
  const Index rows = blocks.front().rows();
  const Vector w_in = in.sup_weights(cols);
  const auto in_mask = support_mask(in, cols);
  const auto out_mask = support_mask(out, rows);
  InducedNorm result;
  Vector g = Vector::Zero(rows);
  bool nonnegative = true;
  for (const Matrix& j : blocks) {
    for (Index x = 0; x < rows; ++x) {
      double sum = 0.0;
      for (Index y = 0; y < cols; ++y) {
        if (j(x, y) == 0.0) continue;
        nonnegative = nonnegative && j(x, y) > 0.0;
        if (!in_mask[static_cast<std::size_t>(y)]) {
          if (out_mask[static_cast<std::size_t>(x)]) {
            result.value = kInf;
            result.witness = unit(cols, y);
            return result;
          }
          continue;
        }
        sum += std::abs(j(x, y)) * w_in(y);
      }
      g(x) = std::max(g(x), sum);
    }
  }
  result.value = vec_norm(g, out);
  result.exact = nonnegative;
  if (nonnegative) {
    result.witness = Vector::Zero(cols);
    for (Index y = 0; y < cols; ++y) {
      if (in_mask[static_cast<std::size_t>(y)]) result.witness(y) = w_in(y);
    }
  }
  return result;
}

}  // namespace

double exponent_value(LpExponent p) {
  switch (p) {
    case LpExponent::One:
      return 1.0;
    case LpExponent::Two:
      return 2.0;
    case LpExponent::Inf:
      return kInf;
  }
  return kInf;
}

NormSpec::NormSpec(NormKind kind, LpExponent p, Vector vec)
    : kind_(kind), exponent_(p), vec_(std::move(vec)) {}

NormSpec NormSpec::sup() { return NormSpec(NormKind::Sup, LpExponent::Inf, Vector()); }

NormSpec NormSpec::weighted_sup(Vector weights) {
  if (weights.size() == 0) {
    throw ValidationError("weighted sup norm needs a nonempty weight vector");
  }
  for (Index i = 0; i < weights.size(); ++i) {
    if (!(std::isfinite(weights(i)) && weights(i) > 0.0)) {
      throw ValidationError("weighted sup norm weight " + std::to_string(i) +
                            " must be finite and strictly positive");
    }
  }
  return NormSpec(NormKind::WeightedSup, LpExponent::Inf, std::move(weights));
}

NormSpec NormSpec::lp(LpExponent p, Vector measure) {
  if (measure.size() == 0) {
    throw ValidationError("Lp norm needs a nonempty measure");
  }
  bool positive = false;
  for (Index i = 0; i < measure.size(); ++i) {
    if (!(std::isfinite(measure(i)) && measure(i) >= 0.0)) {
      throw ValidationError("Lp measure entry " + std::to_string(i) +
                            " must be finite and nonnegative");
    }
    positive = positive || measure(i) > 0.0;
  }
  if (!positive) {
    throw ValidationError("Lp measure must have at least one positive entry");
  }
  return NormSpec(NormKind::Lp, p, std::move(measure));
}

std::optional<Index> NormSpec::dimension() const {
  if (kind_ == NormKind::Sup) return std::nullopt;
  return vec_.size();
}

void NormSpec::check_dimension(Index d) const {
  const auto dim = dimension();
  if (dim && *dim != d) {
    throw DimensionError("norm " + describe() + " has dimension " + std::to_string(*dim) +
                         " but is applied to a space of dimension " + std::to_string(d));
  }
}

bool NormSpec::is_sup_type() const noexcept {
  return kind_ != NormKind::Lp || exponent_ == LpExponent::Inf;
}

Vector NormSpec::sup_weights(Index d) const {
  check_dimension(d);
  if (kind_ == NormKind::WeightedSup) return vec_;
  return Vector::Ones(d);
}

std::string NormSpec::describe() const {
  switch (kind_) {
    case NormKind::Sup:
      return "sup";
    case NormKind::WeightedSup:
      return "wsup";
    case NormKind::Lp:
      switch (exponent_) {
        case LpExponent::One:
          return "lp(1)";
        case LpExponent::Two:
          return "lp(2)";
        case LpExponent::Inf:
          return "lp(inf)";
      }
  }
  return "?";
}

double vec_norm(const Vector& v, const NormSpec& spec) {
  spec.check_dimension(v.size());
  switch (spec.kind()) {
    case NormKind::Sup:
      return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
    case NormKind::WeightedSup:
      return v.cwiseAbs().cwiseQuotient(spec.weights()).maxCoeff();
    case NormKind::Lp: {
      const Vector& mu = spec.measure();
      switch (spec.exponent()) {
        case LpExponent::One:
          return mu.dot(v.cwiseAbs());
        case LpExponent::Two:
          return std::sqrt(mu.dot(v.cwiseAbs2()));
        case LpExponent::Inf: {
          double best = 0.0;
          for (Index i = 0; i < v.size(); ++i) {
            if (mu(i) > 0.0) best = std::max(best, std::abs(v(i)));
          }
          return best;
        }
      }
    }
  }
  return 0.0;
}

Vector abs_max_select(const ActionValue& values) {
  if (values.actions() == 0) {
    throw DimensionError("max over an empty action set");
  }
  return values.matrix().cwiseAbs().rowwise().maxCoeff();
}

double mixed_norm(const ActionValue& values, const NormSpec& spec) {
  return vec_norm(abs_max_select(values), spec);
}

InducedNorm induced_norm(const NormedOperator& op) {
  const Matrix& j = op.matrix;
  op.in_spec.check_dimension(j.cols());
  op.out_spec.check_dimension(j.rows());
  if (op.in_spec.is_sup_type() && op.out_spec.is_sup_type()) {
    return sup_to_sup(j, op.in_spec, op.out_spec);
  }
  if (is_lp(op.in_spec, LpExponent::One) && is_lp(op.out_spec, LpExponent::One)) {
    return l1_to_l1(j, op.in_spec.measure(), op.out_spec.measure());
  }
  if (is_lp(op.in_spec, LpExponent::Two) && is_lp(op.out_spec, LpExponent::Two)) {
    return l2_to_l2(j, op.in_spec.measure(), op.out_spec.measure());
  }
  if (op.in_spec.is_sup_type() && op.out_spec.kind() == NormKind::Lp) {
    return sign_aligned(std::span<const Matrix>(&j, 1), op.in_spec, op.out_spec);
  }
  throw UnsupportedNormError("no induced-norm formula for " + op.in_spec.describe() + " -> " +
                             op.out_spec.describe());
}

double op_norm(const NormedOperator& op) { return induced_norm(op).value; }

InducedNorm stacked_op_norm(std::span<const Matrix> blocks, const NormSpec& in,
                            const NormSpec& out) {
  if (blocks.empty()) {
    throw DimensionError("stacked operator needs at least one block");
  }
  for (const Matrix& b : blocks) {
    if (b.rows() != blocks.front().rows() || b.cols() != blocks.front().cols()) {
      throw DimensionError("stacked operator blocks have different shapes");
    }
  }
  in.check_dimension(blocks.front().cols());
  out.check_dimension(blocks.front().rows());
  if (blocks.size() == 1) {
    return induced_norm({blocks.front(), in, out});
  }
  if (in.is_sup_type() && out.is_sup_type()) {
    InducedNorm best;
    for (const Matrix& b : blocks) {
      InducedNorm candidate = sup_to_sup(b, in, out);
      if (candidate.value > best.value || best.witness.size() == 0) {
        best = std::move(candidate);
      }
    }
    return best;
  }
  if (in.is_sup_type() && out.kind() == NormKind::Lp) {
    return sign_aligned(blocks, in, out);
  }
  throw UnsupportedNormError("no stacked-operator norm formula for " + in.describe() +
                             " -> mixed " + out.describe());
}

double power_iteration_sigma(const Matrix& m, std::uint64_t seed, Vector* right_vector) {
  constexpr int kMaxIter = 10'000;
  constexpr double kTol = 1e-12;
  if (m.size() == 0) {
    if (right_vector) *right_vector = Vector::Zero(m.cols());
    return 0.0;
  }
  std::mt19937_64 rng(seed);
  Vector v(m.cols());
  for (Index i = 0; i < v.size(); ++i) {
    // Uniform on [0.5, 1.5): a positive start never misses the top singular
    // space of a nonnegative matrix, and is generic otherwise.
    v(i) = 0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  v.normalize();
  const Matrix gram = m.transpose() * m;
  double lambda = v.dot(gram * v);
  for (int it = 0; it < kMaxIter; ++it) {
    Vector next = gram * v;
    const double norm = next.norm();
    if (norm == 0.0) {
      lambda = 0.0;
      break;
    }
    v = next / norm;
    const double updated = v.dot(gram * v);
    const bool done = std::abs(updated - lambda) <= kTol * std::max(updated, 1e-300);
    lambda = updated;
    if (done) break;
  }
  if (right_vector) *right_vector = v;
  return std::sqrt(std::max(lambda, 0.0));
}

double lyapunov_beta(const Vector& weights, std::span<const Matrix> operators, double gamma) {
  for (Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0.0)) {
      throw ValidationError("Lyapunov weight " + std::to_string(i) + " must be strictly positive");
    }
  }
  double worst = 0.0;
  for (const Matrix& j : operators) {
    if (j.rows() != weights.size() || j.cols() != weights.size()) {
      throw DimensionError("Lyapunov operator must be square with the weight's dimension");
    }
    const Vector image = j.cwiseAbs() * weights;
    worst = std::max(worst, image.cwiseQuotient(weights).maxCoeff());
  }
  return gamma * worst;
}

Vector lyapunov_weight(std::span<const Matrix> operators, double gamma_prime) {
  if (operators.empty()) {
    throw DimensionError("need at least one operator");
  }
  if (!(gamma_prime >= 0.0 && gamma_prime < 1.0)) {
    throw ValidationError("gamma' must lie in [0, 1)");
  }
  const Index d = operators.front().rows();
  Vector w = Vector::Ones(d);
  for (int it = 0; it < 100'000; ++it) {
    Vector best = Vector::Zero(d);
    for (const Matrix& j : operators) {
      best = best.cwiseMax(j.cwiseAbs() * w);
    }
    Vector next = Vector::Ones(d) + gamma_prime * best;
    const double change = (next - w).cwiseAbs().maxCoeff();
    w = std::move(next);
    if (!w.allFinite()) break;
    if (change <= 1e-14 * w.maxCoeff()) return w;
  }
  throw ValidationError("Lyapunov weight iteration did not converge (spectral radius too large)");
}

double lip_point_evaluator_lp(const Vector& rho, const Vector& mu, std::span<const Index> anchors,
                              LpExponent p) {
  if (static_cast<Index>(anchors.size()) != rho.size()) {
    throw DimensionError("need one anchor per compressed coordinate");
  }
  Vector pushed = Vector::Zero(mu.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Index x = anchors[i];
    if (x < 0 || x >= mu.size()) {
      throw DimensionError("anchor " + std::to_string(x) + " is not a state");
    }
    pushed(x) += rho(static_cast<Index>(i));
  }
  double ratio = 0.0;
  for (Index x = 0; x < mu.size(); ++x) {
    if (pushed(x) <= 0.0) continue;
    if (mu(x) <= 0.0) return kInf;
    ratio = std::max(ratio, pushed(x) / mu(x));
  }
  if (p == LpExponent::Inf) {
    return ratio > 0.0 ? 1.0 : 0.0;
  }
  return std::pow(ratio, 1.0 / exponent_value(p));
}

}  // namespace flm
