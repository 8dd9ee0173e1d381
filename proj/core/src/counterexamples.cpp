#include "flm/counterexamples.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "flm/bounds.hpp"
#include "flm/errors.hpp"
#include "flm/planner.hpp"

namespace flm {

namespace {

void require_range(bool ok, const std::string& constraint) {
  if (!ok) throw ValidationError("parameter out of range: " + constraint);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector scalar(double x) { return Vector::Constant(1, x); }

Matrix mat(Index rows, Index cols, std::initializer_list<double> xs) {
  Matrix m(rows, cols);
  auto it = xs.begin();
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = *it++;
  }
  return m;
}

FactoredLinearModel make_model(const Mdp& mdp, MatrixFamily q, std::vector<Index> anchors) {
  return FactoredLinearModel(ModelShape::of(mdp), std::move(q),
                             RightFactor::point_evaluator(std::move(anchors), mdp.states()));
}

struct TightnessParts {
  MatrixFamily p;
  MatrixFamily q;
  std::vector<Vector> r;
};

TightnessParts tightness_parts(double gamma, double tau, double eps) {
  const double fork = tau / 4.0 * (2.0 * eps + gamma - 1.0);
  const double tail = tau * (1.0 - gamma * gamma) / (4.0 * gamma);
  TightnessParts t;
  t.p = {mat(3, 3, {0, 1, 0, 0, 1, 0, 0, 0, 1}), mat(3, 3, {0, 0, 1, 0, 1, 0, 0, 0, 1})};
  t.q = {mat(3, 2, {-1, 0, 0, 1, 1, 0}), mat(3, 2, {0, -1, 0, 1, 1, 0})};
  t.r = {vec({-fork, tail, -tail}), vec({fork, tail, -tail})};
  return t;
}

void check_gamma(double gamma) { require_range(gamma > 0.0 && gamma < 1.0, "0 < gamma < 1"); }

}  // namespace

ExampleInstance tightness_mdp(double gamma, double tau, double eps) {
  check_gamma(gamma);
  require_range(tau >= 0.0 && std::isfinite(tau), "tau >= 0");
  require_range(eps > 0.0 && eps < 1.0, "0 < eps < 1 (eps = 0 makes the greedy choice a tie)");
  TightnessParts t = tightness_parts(gamma, tau, eps);
  Mdp mdp(t.p, t.r, gamma);
  FactoredLinearModel model = make_model(mdp, t.q, {1, 2});

  const double g = (1.0 + gamma) / gamma;
  const double h = (1.0 - gamma) / gamma;
  ExampleInstance inst{"tightness", {{"gamma", gamma}, {"tau", tau}, {"eps", eps}}, mdp, model, {}, {}};
  inst.expected = {
      {"V_star", tau / 4.0 * vec({2.0 * (1.0 - eps), g, -g}), Relation::Equal, "closed form of V*"},
      {"U_star", tau / 4.0 * vec({2.0 * eps, h, -h}), Relation::Equal, "closed form of U*"},
      {"u_star", tau / 4.0 * vec({h, -h}), Relation::Equal, "u* = R U*"},
      {"pi_hat[0]", scalar(1), Relation::Equal, "nearsighted action a2 at x1"},
      {"sup_error", scalar((1.0 - eps) * tau), Relation::Equal, "policy error (1 - eps) tau"},
      {"model_error_bound", scalar(tau), Relation::Equal, "(2g/(1-g)) ||(P - QR)U*|| = tau"},
      // |tau/2 - tau eps| is the gap at x1 only; x2 and x3 each contribute tau/2.
      {"gap_vstar_ustar", scalar(tau / 2.0), Relation::Equal, "max(|tau/2 - tau eps|, tau/2)"},
      {"gap_vpihat_ustar", scalar(tau / 2.0), Relation::Equal, "tau / 2"},
      {"sup_bound", scalar(tau), Relation::Equal, "sup-norm bound attains tau"},
      {"modulus_sup", scalar(gamma), Relation::AtMost, "Lip(Pi^A Q) <= 1"},
      {"claimed_V_star_residual", scalar(1e-12), Relation::AtMost, "claimed V* is a Bellman fixed point"},
  };
  return inst;
}

ExampleInstance harsh_mdp(double gamma, double tau) {
  check_gamma(gamma);
  require_range(tau > 0.0 && std::isfinite(tau), "tau > 0");
  const double tau_half = tau / 2.0;
  TightnessParts t = tightness_parts(gamma, tau, 0.5);

  MatrixFamily p;
  MatrixFamily q;
  std::vector<Vector> r;
  for (std::size_t a = 0; a < 2; ++a) {
    Matrix pa = Matrix::Zero(4, 4);
    pa.topLeftCorner(3, 3) = t.p[a];
    pa(3, a == 0 ? 3 : 0) = 1.0;
    // Q^a row x4 is P^a row x4 on the anchor columns (x2, x3, x4).
    Matrix qa = Matrix::Zero(4, 3);
    qa.topLeftCorner(3, 2) = t.q[a];
    qa.row(3) = pa.row(3).tail(3);
    Vector ra(4);
    ra.head(3) = t.r[a];
    ra(3) = a == 0 ? 2.0 * (1.0 - gamma) * tau_half : 0.0;
    p.push_back(std::move(pa));
    q.push_back(std::move(qa));
    r.push_back(std::move(ra));
  }
  Mdp mdp(p, r, gamma);
  FactoredLinearModel model = make_model(mdp, q, {1, 2, 3});

  const double g = (1.0 + gamma) / gamma;
  ExampleInstance inst{"harsh", {{"gamma", gamma}, {"tau", tau}}, mdp, model, {}, {}};
  inst.measures = {{"delta_x4", vec({0, 0, 0, 1})}};
  inst.expected = {
      {"V_star", vec({tau / 4.0, tau / 4.0 * g, -tau / 4.0 * g, 2.0 * tau_half}), Relation::Equal,
       "V*_4 = 2 tau'"},
      {"pi_star[3]", scalar(0), Relation::Equal, "pi*(x4) = a1"},
      {"pi_hat[3]", scalar(0), Relation::Equal, "pi_hat(x4) = a1"},
      {"pi_hat[0]", scalar(1), Relation::Equal, "still nearsighted at x1"},
      {"sup_error", scalar(tau_half), Relation::Equal, "sup-norm error tau' = tau/2"},
      {"l1_error:delta_x4", scalar(0), Relation::Equal, "mu = delta_x4 is stationary"},
      {"l1_error:stationary_pi_star", scalar(0), Relation::Equal, "stationary measure of pi*"},
      {"l1_error:stationary_pi_hat", scalar(0), Relation::Equal, "stationary measure of pi_hat"},
      {"modulus_sup", scalar(gamma), Relation::AtMost, "Lip(Pi^A Q) <= 1"},
      {"claimed_V_star_residual", scalar(1e-12), Relation::AtMost, "claimed V* is a Bellman fixed point"},
  };
  return inst;
}

ExampleInstance error_gaps_mdp(double gamma, double tau1, double tau2) {
  check_gamma(gamma);
  require_range(tau1 >= 0.0 && std::isfinite(tau1), "tau1 >= 0");
  require_range(tau2 >= 0.0 && std::isfinite(tau2), "tau2 >= 0");
  const double tau_max = std::max(tau1, tau2);
  const double h = (1.0 - gamma) / gamma;
  const MatrixFamily p = {mat(3, 3, {0, 1, 0, 0, 1, 0, 0, 0, 1}), mat(3, 3, {0, 0, 1, 0, 1, 0, 0, 0, 1})};
  const std::vector<Vector> r = {vec({tau1, h * (tau1 + tau_max), -h * tau2}),
                                 vec({tau1 + tau_max, h * (tau1 + tau_max), -h * tau2})};
  const double denom = tau1 + tau_max + (tau_max == 0.0 ? 1.0 : 0.0);
  const Matrix qa = mat(3, 1, {0, 1, -tau2 / denom});
  Mdp mdp(p, r, gamma);
  FactoredLinearModel model = make_model(mdp, {qa, qa}, {1});

  ExampleInstance inst{"errorgaps", {{"gamma", gamma}, {"tau1", tau1}, {"tau2", tau2}}, mdp, model, {}, {}};
  inst.expected = {
      {"V_star", vec({2.0 * tau1 + tau_max, (tau1 + tau_max) / gamma, -tau2 / gamma}), Relation::Equal,
       "closed form of V*"},
      {"gap_vstar_ustar", scalar(tau1), Relation::Equal, "||V* - U*|| = tau1"},
      {"gap_vpihat_ustar", scalar(tau2), Relation::Equal, "||V^pi_hat - U*|| = tau2"},
      {"sup_error", scalar(tau1 + tau2), Relation::Equal, "||V* - V^pi_hat|| = tau1 + tau2"},
      {"modulus_sup", scalar(gamma), Relation::AtMost, "Lip(Pi^A Q) <= 1"},
      {"claimed_V_star_residual", scalar(1e-12), Relation::AtMost, "claimed V* is a Bellman fixed point"},
  };
  if (tau_max > 0.0) {
    inst.expected.push_back({"pi_hat[0]", scalar(1), Relation::Equal, "pi_hat(x1) = a2"});
  }
  return inst;
}

bool VerificationRecord::all_pass() const { return failures() == 0; }

std::size_t VerificationRecord::failures() const {
  return static_cast<std::size_t>(std::count_if(assertions.begin(), assertions.end(),
                                                [](const AssertionOutcome& a) { return !a.pass; }));
}

VerificationRecord verify_example(const ExampleInstance& instance, double tol) {
  const Mdp& mdp = instance.mdp;
  const FactoredLinearModel& model = instance.model;
  PlanOptions options;
  options.tol = 1e-13;
  const PlanResult pr = plan(mdp, model, NormSpec::sup(), options);
  const ExactReference ref = ExactReference::compute(mdp, pr.pi_hat);
  const NormSpec sup = NormSpec::sup();
  const double gamma = mdp.gamma();

  std::map<std::string, Vector> q;
  q["V_star"] = ref.v_star;
  q["U_star"] = pr.U_star;
  q["u_star"] = pr.u_star;
  q["V_pihat"] = ref.v_pihat;
  for (Index x = 0; x < mdp.states(); ++x) {
    q["pi_hat[" + std::to_string(x) + "]"] = scalar(static_cast<double>(pr.pi_hat[x]));
    q["pi_star[" + std::to_string(x) + "]"] = scalar(static_cast<double>(ref.pi_star[x]));
  }
  q["sup_error"] = scalar(vec_norm(ref.v_star - ref.v_pihat, sup));
  {
    Matrix res(mdp.states(), mdp.actions());
    const Vector ru = model.r().apply(pr.U_star);
    for (Index a = 0; a < mdp.actions(); ++a) {
      res.col(a) = mdp.transition(a) * pr.U_star - model.q(a) * ru;
    }
    q["model_error_bound"] =
        scalar(2.0 * gamma / (1.0 - gamma) * mixed_norm(ActionValue(std::move(res)), sup));
  }
  q["gap_vstar_ustar"] = scalar(vec_norm(ref.v_star - pr.U_star, sup));
  q["gap_vpihat_ustar"] = scalar(vec_norm(ref.v_pihat - pr.U_star, sup));
  q["modulus_sup"] = scalar(contraction_modulus(model, sup));
  try {
    q["sup_bound"] = scalar(bound_sup(mdp, model, pr, ref).total_bound);
  } catch (const AssumptionViolated&) {
  }

  auto l1_error = [&](const Vector& mu) {
    return vec_norm(ref.v_star - ref.v_pihat, NormSpec::lp(LpExponent::One, mu));
  };
  for (const auto& [name, mu] : instance.measures) q["l1_error:" + name] = scalar(l1_error(mu));
  q["l1_error:stationary_pi_star"] =
      scalar(l1_error(stationary_distribution(policy_transition(mdp, ref.pi_star))));
  q["l1_error:stationary_pi_hat"] =
      scalar(l1_error(stationary_distribution(policy_transition(mdp, pr.pi_hat))));

  VerificationRecord record;
  record.example = instance.name;
  for (const Expectation& e : instance.expected) {
    if (e.quantity == "V_star") {
      q["claimed_V_star_residual"] =
          scalar(vec_norm(e.value - max_select(bellman_return(mdp, e.value)), sup));
    }
  }
  for (const Expectation& e : instance.expected) {
    AssertionOutcome out;
    out.quantity = e.quantity;
    out.relation = e.relation;
    out.expected = e.value;
    out.note = e.note;
    auto it = q.find(e.quantity);
    if (it == q.end() || it->second.size() != e.value.size()) {
      out.deviation = std::numeric_limits<double>::infinity();
      out.pass = false;
      out.note += it == q.end() ? " [quantity unavailable]" : " [size mismatch]";
      record.assertions.push_back(std::move(out));
      continue;
    }
    out.actual = it->second;
    if (e.relation == Relation::Equal) {
      out.deviation = (out.actual - e.value).cwiseAbs().maxCoeff();
      out.pass = out.deviation <= tol;
    } else {
      out.deviation = std::max(0.0, (out.actual - e.value).maxCoeff());
      const Vector limit = e.value + (e.value.cwiseAbs() * kAssumptionSlack).array().max(1e-15).matrix();
      out.pass = ((out.actual - limit).array() <= 0.0).all();
    }
    record.assertions.push_back(std::move(out));
  }
  return record;
}

}  // namespace flm
