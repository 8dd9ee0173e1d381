#include "flm/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flm/errors.hpp"

namespace flm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// c * x with 0 * inf = 0, so a vacuous coefficient on an exact term stays 0.
double scaled(double c, double x) { return x == 0.0 ? 0.0 : c * x; }

// (P^a - Q^a R) V for every action.
ActionValue model_residual(const Mdp& mdp, const FactoredLinearModel& model, const Vector& v) {
  const Vector rv = model.r().apply(v);
  Matrix out(mdp.states(), mdp.actions());
  for (Index a = 0; a < mdp.actions(); ++a) {
    out.col(a) = mdp.transition(a) * v - model.q(a) * rv;
  }
  return ActionValue(std::move(out));
}

void require_shapes(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan) {
  if (mdp.states() != model.states() || mdp.actions() != model.actions()) {
    throw DimensionError("model shape does not match the MDP");
  }
  if (plan.u_star.size() != model.compressed_dim() || plan.U_star.size() != model.states()) {
    throw DimensionError("plan result does not match the model");
  }
}

void require_join_hom(const FactoredLinearModel& model) {
  if (!model.r().is_join_hom()) {
    throw AssumptionViolated("join-homomorphism R", "R is a general linear map");
  }
}

void require_bounded_norm(const FactoredLinearModel& model, const NormSpec& w, const char* which) {
  const double kappa = contraction_modulus(model, w);
  const double gamma = model.gamma();
  if (kappa > gamma * (1.0 + kAssumptionSlack) + kAssumptionSlack * 1e-3) {
    throw AssumptionViolated("||Pi^A Q|| <= 1",
                             std::string("gamma ||Pi^A Q|| = ") + std::to_string(kappa) + " > gamma = " +
                                 std::to_string(gamma) + " in the " + which + " norm");
  }
}

double require_finite_b(double b) {
  if (!std::isfinite(b)) throw AssumptionViolated("B = ||Q|| finite", "||Q|| is infinite");
  return b;
}

void check_positive(const Vector& w, Index d, const char* what) {
  if (w.size() != d) {
    throw DimensionError(std::string(what) + " must have length " + std::to_string(d));
  }
  if (!((w.array() > 0.0).all()) || !w.allFinite()) {
    throw ValidationError(std::string(what) + " must be strictly positive");
  }
}

void finish(TheoremRecord& rec) {
  rec.holds = rec.total_bound >= rec.actual_error - kViolationTolerance;
}

double min_or(std::optional<double> a, double b) { return a ? std::min(*a, b) : b; }

}  // namespace

ExactReference ExactReference::compute(const Mdp& mdp, const Policy& pi_hat, double tol) {
  OptimalSolution opt = solve_optimal(mdp, tol);
  ExactReference ref;
  ref.v_star = std::move(opt.values);
  ref.pi_star = std::move(opt.policy);
  ref.v_pihat = policy_evaluation(mdp, pi_hat);
  return ref;
}

double baseline_bound(const Mdp& mdp, const MatrixFamily& p_tilde, const Vector& v_tilde) {
  if (static_cast<Index>(p_tilde.size()) != mdp.actions()) {
    throw DimensionError("need one approximate kernel per action");
  }
  if (v_tilde.size() != mdp.states()) throw DimensionError("V~ must have one entry per state");
  Matrix diff(mdp.states(), mdp.actions());
  for (Index a = 0; a < mdp.actions(); ++a) {
    const Matrix& pt = p_tilde[static_cast<std::size_t>(a)];
    if (pt.rows() != mdp.states() || pt.cols() != mdp.states()) {
      throw DimensionError("approximate kernels must be m x m");
    }
    for (Index x = 0; x < pt.rows(); ++x) {
      if ((pt.row(x).array() < 0.0).any() ||
          std::abs(pt.row(x).sum() - 1.0) > Mdp::kStochasticTolerance) {
        throw ValidationError("approximate kernel " + std::to_string(a) + " row " +
                              std::to_string(x) + " is not stochastic");
      }
    }
    diff.col(a) = (mdp.transition(a) - pt) * v_tilde;
  }
  const double gamma = mdp.gamma();
  return 2.0 * gamma / (1.0 - gamma) * mixed_norm(ActionValue(std::move(diff)), NormSpec::sup());
}

TheoremRecord baseline_record(const Mdp& mdp, const MatrixFamily& p_tilde, const ExactReference& ref) {
  const Mdp approx(p_tilde, mdp.rewards(), mdp.gamma());
  const Vector v_tilde = solve_optimal(approx).values;
  const Policy pi_tilde = greedy(bellman_return(approx, v_tilde));
  TheoremRecord rec;
  rec.name = "baseline";
  rec.total_bound = baseline_bound(mdp, p_tilde, v_tilde);
  rec.actual_error = vec_norm(ref.v_star - policy_evaluation(mdp, pi_tilde), NormSpec::sup());
  rec.norm_pairing_note = "sup; V~ = fixed point of M T_{P~}, pi~ = G T_{P~} V~";
  finish(rec);
  return rec;
}

TheoremRecord bound_sup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                        const ExactReference& ref) {
  require_shapes(mdp, model, plan);
  require_join_hom(model);
  const NormSpec sup = NormSpec::sup();
  require_bounded_norm(model, sup, "sup");
  const double b = require_finite_b(stacked_op_norm(model.q(), sup, sup).value);
  const double gamma = mdp.gamma();

  auto eps1 = [&](const Vector& v) {
    const ActionValue res = model_residual(mdp, model, v);
    return gamma * mixed_norm(res, sup) +
           scaled(b * gamma * gamma / (1.0 - gamma), mixed_norm(apply_pi_a(model, res), sup));
  };
  TheoremRecord rec;
  rec.name = "sup";
  rec.eps1_vstar = eps1(ref.v_star);
  rec.eps1_vpihat = eps1(ref.v_pihat);
  rec.eps2 = gamma / (1.0 - gamma) * mixed_norm(model_residual(mdp, model, plan.U_star), sup);
  rec.total_bound = std::min(*rec.eps1_vstar, *rec.eps2) + std::min(*rec.eps1_vpihat, *rec.eps2);
  rec.actual_error = vec_norm(ref.v_star - ref.v_pihat, sup);
  rec.norm_pairing_note = "V: sup, W: sup, B = ||Q|| sup -> mixed sup";
  rec.extras = {{"B", b}};
  finish(rec);
  return rec;
}

TheoremRecord bound_sup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan) {
  return bound_sup(mdp, model, plan, ExactReference::compute(mdp, plan.pi_hat));
}

TheoremRecord bound_wsup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                         const Vector& nu, const Vector& eta, const ExactReference& ref) {
  require_shapes(mdp, model, plan);
  require_join_hom(model);
  check_positive(nu, mdp.states(), "nu");
  check_positive(eta, model.compressed_dim(), "eta");
  const double gamma = mdp.gamma();
  const double beta_nu = lyapunov_beta(nu, mdp.transitions(), gamma);
  const MatrixFamily kernels = model.compressed_kernels();
  const double beta_eta = lyapunov_beta(eta, kernels, gamma);
  if (!(beta_nu < 1.0)) {
    throw AssumptionViolated("nu gamma-Lyapunov for P", "beta_{nu,P} = " + std::to_string(beta_nu));
  }
  if (!(beta_eta < 1.0)) {
    throw AssumptionViolated("eta gamma-Lyapunov for Pi^A Q",
                             "beta_{eta,Pi^A Q} = " + std::to_string(beta_eta));
  }
  const NormSpec v_norm = NormSpec::weighted_sup(nu);
  const NormSpec w_norm = NormSpec::weighted_sup(eta);
  const double b = require_finite_b(stacked_op_norm(model.q(), w_norm, v_norm).value);

  auto eps1 = [&](const Vector& v) {
    const ActionValue res = model_residual(mdp, model, v);
    return gamma * mixed_norm(res, v_norm) +
           scaled(b * gamma * gamma / (1.0 - beta_eta), mixed_norm(apply_pi_a(model, res), w_norm));
  };
  TheoremRecord rec;
  rec.name = "wsup";
  rec.eps1_vstar = eps1(ref.v_star);
  rec.eps1_vpihat = eps1(ref.v_pihat);
  rec.eps2 = gamma / (1.0 - beta_nu) * mixed_norm(model_residual(mdp, model, plan.U_star), v_norm);
  rec.total_bound = std::min(*rec.eps1_vstar, *rec.eps2) + std::min(*rec.eps1_vpihat, *rec.eps2);
  rec.actual_error = vec_norm(ref.v_star - ref.v_pihat, v_norm);
  rec.norm_pairing_note = "V: sup_nu, W: sup_eta, B = ||Q|| sup_eta -> mixed sup_nu";
  rec.extras = {{"B", b}, {"beta_nu_P", beta_nu}, {"beta_eta_PiAQ", beta_eta}};
  finish(rec);
  return rec;
}

TheoremRecord bound_wsup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                         const Vector& nu, const Vector& eta) {
  return bound_wsup(mdp, model, plan, nu, eta, ExactReference::compute(mdp, plan.pi_hat));
}

double concentrability(const Mdp& mdp, const Policy& pi, const Vector& mu, const Vector& xi,
                       LpExponent p) {
  pi.validate(mdp.states(), mdp.actions());
  const Index m = mdp.states();
  const double gamma = mdp.gamma();
  const Matrix system = Matrix::Identity(m, m) - gamma * policy_transition(mdp, pi);
  const Matrix inverse = system.partialPivLu().inverse();
  const double norm = op_norm({inverse, NormSpec::lp(p, xi), NormSpec::lp(p, mu)});
  return std::isinf(norm) ? kInf : (1.0 - gamma) * norm;
}

namespace {

struct LpSetup {
  NormSpec mu_norm;
  NormSpec xi_norm;
  NormSpec w_norm;
  double b;
  double c;
};

LpSetup lp_setup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                 const LpBoundInputs& in) {
  check_positive(in.eta, model.compressed_dim(), "eta");
  LpSetup s{NormSpec::lp(in.p, in.mu), NormSpec::lp(in.p, in.xi.value_or(in.mu)),
            NormSpec::weighted_sup(in.eta), 0.0, 0.0};
  s.mu_norm.check_dimension(mdp.states());
  s.xi_norm.check_dimension(mdp.states());
  require_bounded_norm(model, s.w_norm, "eta-weighted sup");
  s.b = require_finite_b(stacked_op_norm(model.q(), s.w_norm, s.mu_norm).value);
  s.c = concentrability(mdp, plan.pi_hat, in.mu, in.xi.value_or(in.mu), in.p);
  return s;
}

}  // namespace

TheoremRecord bound_lp(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                       const LpBoundInputs& in, const ExactReference& ref) {
  require_shapes(mdp, model, plan);
  require_join_hom(model);
  const LpSetup s = lp_setup(mdp, model, plan, in);
  const double gamma = mdp.gamma();

  auto eps1 = [&](const Vector& v) {
    const ActionValue res = model_residual(mdp, model, v);
    return gamma * mixed_norm(res, s.mu_norm) +
           scaled(s.b * gamma * gamma / (1.0 - gamma), mixed_norm(apply_pi_a(model, res), s.w_norm));
  };
  TheoremRecord rec;
  rec.name = "lp";
  rec.eps1_vstar = eps1(ref.v_star);
  rec.eps1_vpihat = eps1(ref.v_pihat);
  const double residual = mixed_norm(model_residual(mdp, model, plan.U_star), s.xi_norm);
  rec.eps2 = std::isinf(s.c) ? kInf : s.c * gamma / (1.0 - gamma) * residual;
  rec.total_bound = *rec.eps1_vstar + std::min(*rec.eps1_vpihat, *rec.eps2);
  rec.actual_error = vec_norm(ref.v_star - ref.v_pihat, s.mu_norm);
  rec.norm_pairing_note = "V: " + s.mu_norm.describe() + "(mu), W: sup_eta, B = ||Q|| sup_eta -> mixed " +
                          s.mu_norm.describe() + "(mu), sign-aligned";
  rec.extras = {{"B", s.b}, {"C", s.c}};
  finish(rec);
  return rec;
}

TheoremRecord bound_lp(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                       const LpBoundInputs& in) {
  return bound_lp(mdp, model, plan, in, ExactReference::compute(mdp, plan.pi_hat));
}

TheoremRecord bound_lp_linear_r(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const LpBoundInputs& in,
                                const ExactReference& ref) {
  require_shapes(mdp, model, plan);
  const LpSetup s = lp_setup(mdp, model, plan, in);
  const double gamma = mdp.gamma();
  const Policy compressed_greedy = greedy(t_piaq(model, plan.u_star));

  // N' = M' for V*, and M' restricted to the compressed greedy policy for V^pi_hat.
  auto eps1 = [&](const Vector& v, bool restricted) {
    const ActionValue res = model_residual(mdp, model, v);
    const ActionValue lookahead = apply_pi_a(model, bellman_return(mdp, v));
    const Vector selected =
        restricted ? policy_select(lookahead, compressed_greedy) : max_select(lookahead);
    const double mismatch = vec_norm(model.r().apply(v) - selected, s.w_norm);
    const double projected = mixed_norm(apply_pi_a(model, res), s.w_norm);
    return gamma * mixed_norm(res, s.mu_norm) +
           scaled(s.b * gamma / (1.0 - gamma), mismatch + gamma * projected);
  };
  Matrix gap(mdp.states(), mdp.actions());
  for (Index a = 0; a < mdp.actions(); ++a) {
    gap.col(a) = mdp.transition(a) * plan.U_star - model.q(a) * plan.u_star;
  }
  const double residual = mixed_norm(ActionValue(std::move(gap)), s.xi_norm);

  TheoremRecord rec;
  rec.name = "lp_linear_r";
  rec.eps1_vstar = eps1(ref.v_star, false);
  rec.eps1_vpihat = eps1(ref.v_pihat, true);
  rec.eps2 = std::isinf(s.c) ? kInf : s.c * gamma / (1.0 - gamma) * residual;
  const double eps2_printed = std::isinf(s.c) ? kInf : s.c / (1.0 - gamma) * residual;
  rec.total_bound = *rec.eps1_vstar + std::min(*rec.eps1_vpihat, *rec.eps2);
  rec.actual_error = vec_norm(ref.v_star - ref.v_pihat, s.mu_norm);
  rec.norm_pairing_note = "V: " + s.mu_norm.describe() + "(mu), W: sup_eta; eps2 uses gamma/(1-gamma) "
                          "(T_Q u* - T_P U* = gamma (Q u* - P U*)); eps2_as_printed uses 1/(1-gamma)";
  rec.extras = {{"B", s.b}, {"C", s.c}, {"eps2_as_printed", eps2_printed}};
  finish(rec);
  return rec;
}

TheoremRecord bound_lp_linear_r(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const LpBoundInputs& in) {
  return bound_lp_linear_r(mdp, model, plan, in, ExactReference::compute(mdp, plan.pi_hat));
}

TheoremRecord bound_lp_via_wsup(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const Vector& mu, LpExponent p,
                                const Vector& nu, const Vector& eta, const ExactReference& ref) {
  TheoremRecord rec = bound_wsup(mdp, model, plan, nu, eta, ref);
  const NormSpec mu_norm = NormSpec::lp(p, mu);
  const double nu_size = vec_norm(nu, mu_norm);
  rec.name = "lp_via_wsup";
  rec.total_bound = nu_size * (min_or(rec.eps1_vstar, *rec.eps2) + min_or(rec.eps1_vpihat, *rec.eps2));
  rec.actual_error = vec_norm(ref.v_star - ref.v_pihat, mu_norm);
  rec.norm_pairing_note = "||nu||_{mu,p} times the sup_nu bound; eps terms in sup_nu";
  rec.extras.emplace_back("nu_norm", nu_size);
  finish(rec);
  return rec;
}

TheoremRecord bound_lp_via_wsup(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const Vector& mu, LpExponent p,
                                const Vector& nu, const Vector& eta) {
  return bound_lp_via_wsup(mdp, model, plan, mu, p, nu, eta,
                           ExactReference::compute(mdp, plan.pi_hat));
}

double adp_general_bound(const Mdp& mdp, const ActionValue& v_tilde, const Vector& v_star) {
  const double gamma = mdp.gamma();
  const ActionValue target = bellman_return(mdp, v_star);
  if (v_tilde.size() != target.size() || v_tilde.actions() != target.actions()) {
    throw DimensionError("V~ must be an m x k action-value");
  }
  return 2.0 * (1.0 + gamma) / (1.0 - gamma) * mixed_norm(v_tilde - target, NormSpec::sup());
}

double adp_specific_bound(const Mdp& mdp, const Vector& v_tilde, const Vector& v_star) {
  if (v_tilde.size() != v_star.size()) throw DimensionError("V~ must have one entry per state");
  const double gamma = mdp.gamma();
  return 2.0 * gamma / (1.0 - gamma) * vec_norm(v_tilde - v_star, NormSpec::sup());
}

AdpBounds adp_bounds(const Mdp& mdp, const ActionValue& v_tilde_action, const Vector& v_tilde) {
  const Vector v_star = solve_optimal(mdp, 1e-12).values;
  return {adp_general_bound(mdp, v_tilde_action, v_star), adp_specific_bound(mdp, v_tilde, v_star)};
}

const TheoremRecord* BoundReport::find(const std::string& name) const {
  for (const TheoremRecord& rec : theorems) {
    if (rec.name == name) return &rec;
  }
  return nullptr;
}

namespace {

bool stochastic(const MatrixFamily& kernels) {
  for (const Matrix& k : kernels) {
    for (Index x = 0; x < k.rows(); ++x) {
      if ((k.row(x).array() < 0.0).any() ||
          std::abs(k.row(x).sum() - 1.0) > Mdp::kStochasticTolerance) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

BoundReport audit(const Mdp& mdp, const FactoredLinearModel& model, const AuditConfig& config) {
  BoundReport report;
  report.plan = plan(mdp, model, config.w_spec, config.plan);
  report.reference = ExactReference::compute(mdp, report.plan.pi_hat, config.solve_tol);
  const ExactReference& ref = report.reference;
  const PlanResult& pr = report.plan;
  const Index m = mdp.states();
  const Index n = model.compressed_dim();
  const double gamma = mdp.gamma();
  const NormSpec sup = NormSpec::sup();

  const Vector nu = config.nu.value_or(Vector::Ones(m));
  const Vector eta = config.eta.value_or(Vector::Ones(n));
  const Vector mu = config.mu.value_or(Vector::Constant(m, 1.0 / static_cast<double>(m)));
  LpBoundInputs lp_in{mu, config.p, config.lp_eta.value_or(eta), config.xi};

  report.actual_sup = vec_norm(ref.v_star - ref.v_pihat, sup);
  report.error_gaps = {vec_norm(ref.v_star - pr.U_star, sup), vec_norm(ref.v_pihat - pr.U_star, sup),
                       report.actual_sup};
  report.b_sup = stacked_op_norm(model.q(), sup, sup).value;
  report.beta_nu_p = lyapunov_beta(nu, mdp.transitions(), gamma);
  report.beta_eta_piaq = lyapunov_beta(eta, model.compressed_kernels(), gamma);
  report.concentrability = concentrability(mdp, pr.pi_hat, mu, config.xi.value_or(mu), config.p);
  report.diagnostics = power_lipschitz(model);

  auto attempt = [&](const std::string& name, auto&& fn) {
    try {
      report.theorems.push_back(fn());
    } catch (const AssumptionViolated& e) {
      report.skipped.push_back({name, e.what()});
    }
  };

  if (config.baseline_kernels) {
    attempt("baseline", [&] { return baseline_record(mdp, *config.baseline_kernels, ref); });
  } else {
    const MatrixFamily qr = model.product_kernels();
    if (stochastic(qr)) {
      attempt("baseline", [&] { return baseline_record(mdp, qr, ref); });
    } else {
      report.skipped.push_back({"baseline", "QR is not stochastic and no P~ was supplied"});
    }
  }
  attempt("sup", [&] { return bound_sup(mdp, model, pr, ref); });
  attempt("wsup", [&] { return bound_wsup(mdp, model, pr, nu, eta, ref); });
  attempt("lp", [&] { return bound_lp(mdp, model, pr, lp_in, ref); });
  attempt("lp_linear_r", [&] { return bound_lp_linear_r(mdp, model, pr, lp_in, ref); });
  attempt("lp_via_wsup",
          [&] { return bound_lp_via_wsup(mdp, model, pr, mu, config.p, nu, eta, ref); });

  {
    // pi~ = G (T_Q u*) is pi_hat itself.
    TheoremRecord rec;
    rec.name = "adp_general";
    rec.total_bound = adp_general_bound(mdp, t_q(model, pr.u_star), ref.v_star);
    rec.actual_error = report.actual_sup;
    rec.norm_pairing_note = "sup; V~ = T_Q u*, pi~ = G V~";
    finish(rec);
    report.theorems.push_back(std::move(rec));
  }
  {
    const Policy pi_tilde = greedy(bellman_return(mdp, pr.U_star));
    TheoremRecord rec;
    rec.name = "adp_specific";
    rec.total_bound = adp_specific_bound(mdp, pr.U_star, ref.v_star);
    rec.actual_error = vec_norm(ref.v_star - policy_evaluation(mdp, pi_tilde), sup);
    rec.norm_pairing_note = "sup; V~ = U*, pi~ = G T_P U*";
    finish(rec);
    report.theorems.push_back(std::move(rec));
  }

  for (const TheoremRecord& rec : report.theorems) {
    if (!rec.holds) ++report.violations;
  }
  return report;
}

}  // namespace flm
