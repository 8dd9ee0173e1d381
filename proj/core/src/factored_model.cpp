#include "flm/factored_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flm/errors.hpp"
#include "flm/random.hpp"

namespace flm {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(what) + " has non-finite entries");
  }
}

void check_index(Index i, Index bound, const char* what) {
  if (i < 0 || i >= bound) {
    throw ValidationError(std::string(what) + " index " + std::to_string(i) + " outside [0, " +
                          std::to_string(bound) + ")");
  }
}

bool same_operator(const RightFactor& a, const RightFactor& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a.dense() == b.dense();
}

}  // namespace

std::variant<JoinHom, JoinHomRejection> validate_join_hom(const Matrix& r) {
  const Index n = r.rows();
  const Index m = r.cols();
  JoinHom out{Vector::Zero(n), std::vector<Index>(static_cast<std::size_t>(n), 0)};
  for (Index i = 0; i < n; ++i) {
    std::vector<Index> nonzero;
    for (Index j = 0; j < m; ++j) {
      if (r(i, j) != 0.0) nonzero.push_back(j);
    }
    if (nonzero.empty()) continue;
    const Index j = nonzero[0];
    if (nonzero.size() == 1 && r(i, j) > 0.0) {
      out.scale(i) = r(i, j);
      out.index[static_cast<std::size_t>(i)] = j;
      continue;
    }
    JoinHomRejection rej;
    rej.row = i;
    rej.u = Vector::Unit(m, j);
    if (nonzero.size() >= 2) {
      rej.v = Vector::Unit(m, nonzero[1]);
    } else if (m >= 2) {
      rej.v = Vector::Unit(m, j == 0 ? 1 : 0);
    } else {
      rej.v = Vector::Zero(m);
    }
    const Vector join = rej.u.cwiseMax(rej.v);
    rej.lhs = r.row(i).dot(join);
    rej.rhs = std::max(r.row(i).dot(rej.u), r.row(i).dot(rej.v));
    return rej;
  }
  return out;
}

RightFactor::RightFactor(std::variant<Matrix, JoinHom> rep, Index rows, Index cols)
    : rep_(std::move(rep)), rows_(rows), cols_(cols) {}

RightFactor RightFactor::general(Matrix matrix) {
  require_finite(matrix, "R");
  const Index n = matrix.rows();
  const Index m = matrix.cols();
  return RightFactor(std::move(matrix), n, m);
}

RightFactor RightFactor::join_hom(Vector scale, std::vector<Index> index, Index source_dim) {
  if (static_cast<Index>(index.size()) != scale.size()) {
    throw DimensionError("join-hom scale and index lengths differ");
  }
  for (Index i = 0; i < scale.size(); ++i) {
    if (!std::isfinite(scale(i)) || scale(i) < 0.0) {
      throw ValidationError("join-hom scale a[" + std::to_string(i) + "] must be finite and >= 0");
    }
    check_index(index[static_cast<std::size_t>(i)], source_dim, "join-hom");
  }
  const Index n = scale.size();
  return RightFactor(JoinHom{std::move(scale), std::move(index)}, n, source_dim);
}

RightFactor RightFactor::point_evaluator(std::vector<Index> anchors, Index source_dim) {
  const auto n = static_cast<Index>(anchors.size());
  return join_hom(Vector::Ones(n), std::move(anchors), source_dim);
}

RightFactor RightFactor::identity(Index dim) {
  std::vector<Index> idx(static_cast<std::size_t>(dim));
  std::iota(idx.begin(), idx.end(), Index{0});
  return point_evaluator(std::move(idx), dim);
}

std::optional<std::vector<Index>> RightFactor::anchors() const {
  const JoinHom* jh = as_join_hom();
  if (jh == nullptr || (jh->scale.array() != 1.0).any()) return std::nullopt;
  return jh->index;
}

Vector RightFactor::apply(const Vector& v) const {
  if (v.size() != cols_) {
    throw DimensionError("R expects length " + std::to_string(cols_) + ", got " +
                         std::to_string(v.size()));
  }
  if (const JoinHom* jh = as_join_hom()) {
    Vector out(rows_);
    for (Index i = 0; i < rows_; ++i) out(i) = jh->scale(i) * v(jh->index[static_cast<std::size_t>(i)]);
    return out;
  }
  return std::get<Matrix>(rep_) * v;
}

Matrix RightFactor::apply_columns(const Matrix& v) const {
  if (v.rows() != cols_) {
    throw DimensionError("R expects " + std::to_string(cols_) + " rows, got " +
                         std::to_string(v.rows()));
  }
  if (const JoinHom* jh = as_join_hom()) {
    Matrix out(rows_, v.cols());
    for (Index i = 0; i < rows_; ++i) {
      out.row(i) = jh->scale(i) * v.row(jh->index[static_cast<std::size_t>(i)]);
    }
    return out;
  }
  return std::get<Matrix>(rep_) * v;
}

Matrix RightFactor::dense() const {
  if (const JoinHom* jh = as_join_hom()) {
    Matrix out = Matrix::Zero(rows_, cols_);
    for (Index i = 0; i < rows_; ++i) out(i, jh->index[static_cast<std::size_t>(i)]) = jh->scale(i);
    return out;
  }
  return std::get<Matrix>(rep_);
}

Vector apply_R(const RightFactor& r, const Vector& v) { return r.apply(v); }

ModelShape ModelShape::of(const Mdp& mdp) {
  return {mdp.states(), mdp.actions(), mdp.gamma(), mdp.reward_table()};
}

FactoredLinearModel::FactoredLinearModel(ModelShape shape, MatrixFamily q, RightFactor r,
                                         std::optional<std::vector<RightFactor>> pi_a)
    : shape_(std::move(shape)), q_(std::move(q)), r_(std::move(r)) {
  const Index m = shape_.states;
  const Index k = shape_.actions;
  const Index n = r_.rows();
  if (m < 1 || k < 1) throw ValidationError("model needs at least one state and one action");
  if (!(shape_.gamma >= 0.0 && shape_.gamma < 1.0)) {
    throw ValidationError("gamma must lie in [0, 1)");
  }
  if (shape_.rewards.size() != m || shape_.rewards.actions() != k) {
    throw DimensionError("rewards must be " + std::to_string(m) + " x " + std::to_string(k));
  }
  require_finite(shape_.rewards.matrix(), "rewards");
  if (r_.cols() != m) {
    throw DimensionError("R must have " + std::to_string(m) + " columns, got " +
                         std::to_string(r_.cols()));
  }
  if (static_cast<Index>(q_.size()) != k) {
    throw DimensionError("Q needs one matrix per action (" + std::to_string(k) + ")");
  }
  for (std::size_t a = 0; a < q_.size(); ++a) {
    if (q_[a].rows() != m || q_[a].cols() != n) {
      throw DimensionError("Q[" + std::to_string(a) + "] must be " + std::to_string(m) + " x " +
                           std::to_string(n));
    }
    require_finite(q_[a], "Q");
  }
  if (pi_a) {
    if (static_cast<Index>(pi_a->size()) != k) {
      throw DimensionError("piA needs one right factor per action");
    }
    for (const RightFactor& f : *pi_a) {
      if (f.rows() != n || f.cols() != m) throw DimensionError("piA factors must be n x m");
    }
    pi_a_is_r_ = std::all_of(pi_a->begin(), pi_a->end(),
                             [&](const RightFactor& f) { return same_operator(f, r_); });
    if (r_.is_join_hom() && !pi_a_is_r_) {
      throw ValidationError("piA must equal R when R is a join-homomorphism");
    }
    pi_a_ = std::move(*pi_a);
  } else {
    pi_a_.assign(static_cast<std::size_t>(k), r_);
  }
}

MatrixFamily FactoredLinearModel::compressed_kernels() const {
  MatrixFamily out;
  out.reserve(q_.size());
  for (std::size_t a = 0; a < q_.size(); ++a) out.push_back(pi_a_[a].apply_columns(q_[a]));
  return out;
}

MatrixFamily FactoredLinearModel::product_kernels() const {
  const Matrix rd = r_.dense();
  MatrixFamily out;
  out.reserve(q_.size());
  for (const Matrix& qa : q_) out.push_back(qa * rd);
  return out;
}

FactoredLinearModel FactoredLinearModel::with_gamma(double gamma) const {
  ModelShape s = shape_;
  s.gamma = gamma;
  return FactoredLinearModel(std::move(s), q_, r_, pi_a_);
}

ActionValue t_q(const FactoredLinearModel& model, const Vector& u) {
  if (u.size() != model.compressed_dim()) {
    throw DimensionError("u must have length " + std::to_string(model.compressed_dim()));
  }
  Matrix out = model.shape().rewards.matrix();
  for (Index a = 0; a < model.actions(); ++a) out.col(a) += model.gamma() * (model.q(a) * u);
  return ActionValue(std::move(out));
}

ActionValue apply_pi_a(const FactoredLinearModel& model, const ActionValue& values) {
  if (values.size() != model.states() || values.actions() != model.actions()) {
    throw DimensionError("action-value shape does not match the model");
  }
  Matrix out(model.compressed_dim(), model.actions());
  for (Index a = 0; a < model.actions(); ++a) {
    out.col(a) = model.pi_a(a).apply(values.component(a));
  }
  return ActionValue(std::move(out));
}

ActionValue t_piaq(const FactoredLinearModel& model, const Vector& u) {
  return apply_pi_a(model, t_q(model, u));
}

ActionValue t_qr(const FactoredLinearModel& model, const Vector& v) {
  return t_q(model, model.r().apply(v));
}

double contraction_modulus(const FactoredLinearModel& model, const NormSpec& w_spec) {
  w_spec.check_dimension(model.compressed_dim());
  const MatrixFamily kernels = model.compressed_kernels();
  return model.gamma() * stacked_op_norm(kernels, w_spec, w_spec).value;
}

FactoredLinearModel unfactored_identity(const Mdp& mdp) {
  return FactoredLinearModel(ModelShape::of(mdp), mdp.transitions(),
                             RightFactor::identity(mdp.states()));
}

FactoredLinearModel point_evaluator(const Mdp& mdp, std::vector<Index> anchors) {
  const Index m = mdp.states();
  const auto n = static_cast<Index>(anchors.size());
  if (n < 1) throw ValidationError("point evaluator needs at least one anchor");
  for (Index x : anchors) check_index(x, m, "anchor");
  MatrixFamily q;
  for (Index a = 0; a < mdp.actions(); ++a) {
    Matrix qa(m, n);
    for (Index i = 0; i < n; ++i) qa.col(i) = mdp.transition(a).col(anchors[static_cast<std::size_t>(i)]);
    for (Index x = 0; x < m; ++x) {
      const double mass = qa.row(x).sum();
      if (mass > 0.0) {
        qa.row(x) /= mass;
      } else {
        qa.row(x).setConstant(1.0 / static_cast<double>(n));
      }
    }
    q.push_back(std::move(qa));
  }
  return FactoredLinearModel(ModelShape::of(mdp), std::move(q),
                             RightFactor::point_evaluator(std::move(anchors), m));
}

FactoredLinearModel hard_aggregation(const Mdp& mdp, const std::vector<Index>& block_of) {
  const Index m = mdp.states();
  if (static_cast<Index>(block_of.size()) != m) {
    throw DimensionError("partition must assign a block to each of the " + std::to_string(m) +
                         " states");
  }
  Index n = 0;
  for (Index b : block_of) {
    if (b < 0) throw ValidationError("block indices must be nonnegative");
    n = std::max(n, b + 1);
  }
  std::vector<Index> rep(static_cast<std::size_t>(n), -1);
  for (Index x = m - 1; x >= 0; --x) rep[static_cast<std::size_t>(block_of[static_cast<std::size_t>(x)])] = x;
  for (Index i = 0; i < n; ++i) {
    if (rep[static_cast<std::size_t>(i)] < 0) {
      throw ValidationError("block " + std::to_string(i) + " is empty");
    }
  }
  MatrixFamily q;
  for (Index a = 0; a < mdp.actions(); ++a) {
    Matrix qa = Matrix::Zero(m, n);
    for (Index y = 0; y < m; ++y) qa.col(block_of[static_cast<std::size_t>(y)]) += mdp.transition(a).col(y);
    q.push_back(std::move(qa));
  }
  return FactoredLinearModel(ModelShape::of(mdp), std::move(q),
                             RightFactor::point_evaluator(std::move(rep), m));
}

namespace {

// Phi(x, i) = D(i, x) / sum_j D(j, x), uniform for states no block covers.
Matrix disaggregation(const Matrix& d) {
  Matrix phi = d.transpose();
  for (Index x = 0; x < phi.rows(); ++x) {
    const double s = phi.row(x).sum();
    if (s > 0.0) {
      phi.row(x) /= s;
    } else {
      phi.row(x).setConstant(1.0 / static_cast<double>(phi.cols()));
    }
  }
  return phi;
}

RightFactor factor_from_matrix(const Matrix& d) {
  auto decomposed = validate_join_hom(d);
  if (auto* jh = std::get_if<JoinHom>(&decomposed)) {
    return RightFactor::join_hom(jh->scale, jh->index, d.cols());
  }
  return RightFactor::general(d);
}

}  // namespace

FactoredLinearModel soft_aggregation(const Mdp& mdp, const Matrix& aggregation) {
  const Index m = mdp.states();
  if (aggregation.cols() != m || aggregation.rows() < 1) {
    throw DimensionError("aggregation matrix must be n x " + std::to_string(m));
  }
  for (Index i = 0; i < aggregation.rows(); ++i) {
    if ((aggregation.row(i).array() < 0.0).any() || !aggregation.row(i).allFinite() ||
        std::abs(aggregation.row(i).sum() - 1.0) > Mdp::kStochasticTolerance) {
      throw ValidationError("aggregation row " + std::to_string(i) + " is not a distribution");
    }
  }
  const Matrix phi = disaggregation(aggregation);
  MatrixFamily q;
  for (Index a = 0; a < mdp.actions(); ++a) q.push_back(mdp.transition(a) * phi);
  return FactoredLinearModel(ModelShape::of(mdp), std::move(q), factor_from_matrix(aggregation));
}

FactoredLinearModel kbrl_model(const Mdp& mdp, std::vector<Index> anchors, const Matrix& embedding,
                               double bandwidth) {
  const Index m = mdp.states();
  const auto n = static_cast<Index>(anchors.size());
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ValidationError("kernel bandwidth must be positive");
  }
  if (n < 1) throw ValidationError("kbrl model needs at least one anchor");
  if (embedding.rows() != m) {
    throw DimensionError("embedding needs one row per state (" + std::to_string(m) + ")");
  }
  require_finite(embedding, "embedding");
  for (Index x : anchors) check_index(x, m, "anchor");
  Matrix k(m, n);
  for (Index y = 0; y < m; ++y) {
    Vector d2(n);
    for (Index i = 0; i < n; ++i) {
      d2(i) = (embedding.row(y) - embedding.row(anchors[static_cast<std::size_t>(i)])).squaredNorm();
    }
    // Shift by the nearest anchor so at least one weight is exp(0) = 1.
    const double nearest = d2.minCoeff();
    for (Index i = 0; i < n; ++i) k(y, i) = std::exp(-(d2(i) - nearest) / (2.0 * bandwidth * bandwidth));
    k.row(y) /= k.row(y).sum();
  }
  MatrixFamily q;
  for (Index a = 0; a < mdp.actions(); ++a) q.push_back(mdp.transition(a) * k);
  return FactoredLinearModel(ModelShape::of(mdp), std::move(q),
                             RightFactor::point_evaluator(std::move(anchors), m));
}

FactoredLinearModel random_normalized(const Mdp& mdp, std::uint64_t seed,
                                      const RandomModelOptions& options) {
  const Index m = mdp.states();
  const Index n = options.compressed_dim;
  if (n < 1 || n > m) {
    throw ValidationError("compressed dimension must lie in [1, " + std::to_string(m) + "]");
  }
  if (!(options.perturbation >= 0.0)) throw ValidationError("perturbation must be >= 0");
  Rng rng(seed);

  // Random partition into n nonempty blocks: shuffle, seed one state per block.
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = m - 1; i > 0; --i) {
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.integer(0, i))]);
  }
  std::vector<Index> block_of(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    block_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i < n ? i : rng.integer(0, n - 1);
  }

  RightFactor r = RightFactor::identity(1);
  MatrixFamily q;
  if (options.soft) {
    Matrix d = Matrix::Zero(n, m);
    for (Index i = 0; i < n; ++i) {
      std::vector<Index> members;
      for (Index x = 0; x < m; ++x) {
        if (block_of[static_cast<std::size_t>(x)] == i) members.push_back(x);
      }
      const Vector w = rng.dirichlet(static_cast<Index>(members.size()));
      for (std::size_t j = 0; j < members.size(); ++j) d(i, members[j]) = w(static_cast<Index>(j));
    }
    const Matrix phi = disaggregation(d);
    for (Index a = 0; a < mdp.actions(); ++a) q.push_back(mdp.transition(a) * phi);
    r = factor_from_matrix(d);
  } else {
    FactoredLinearModel exact = hard_aggregation(mdp, block_of);
    q = exact.q();
    r = exact.r();
  }
  for (Matrix& qa : q) {
    for (Index x = 0; x < m; ++x) {
      for (Index i = 0; i < n; ++i) qa(x, i) += rng.uniform(-options.perturbation, options.perturbation);
    }
  }
  double norm = 0.0;
  for (const Matrix& qa : q) {
    norm = std::max(norm, r.apply_columns(qa).cwiseAbs().rowwise().sum().maxCoeff());
  }
  if (norm > 0.0) {
    for (Matrix& qa : q) qa /= norm;
  }
  return FactoredLinearModel(ModelShape::of(mdp), std::move(q), std::move(r));
}

}  // namespace flm
