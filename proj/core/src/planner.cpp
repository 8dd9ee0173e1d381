#include "flm/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flm/errors.hpp"

namespace flm {

namespace {

constexpr double kDivergenceGuard = 1e12;

}  // namespace

CompressedIterationResult compressed_value_iteration(const FactoredLinearModel& model,
                                                     const NormSpec& w_spec,
                                                     const PlanOptions& options) {
  if (!(options.tol > 0.0)) throw ValidationError("tol must be positive");
  const Index n = model.compressed_dim();
  w_spec.check_dimension(n);

  CompressedIterationResult out;
  out.modulus = contraction_modulus(model, w_spec);
  const double kappa = out.modulus;
  const bool contracts = kappa < 1.0;
  if (!contracts && !options.force) throw NotContractiveError(kappa);

  // Forced runs have no contraction certificate; they stop on a small step.
  const double threshold =
      contracts ? options.tol * (1.0 - kappa) / std::max(kappa, 1e-3) : options.tol;
  auto residual_of = [&](double step) {
    return contracts ? (kappa < 1e-300 ? 0.0 : step * kappa / (1.0 - kappa)) : step;
  };

  Vector u = options.initial.value_or(Vector::Zero(n));
  if (u.size() != n) throw DimensionError("initial u must have length " + std::to_string(n));

  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    Vector next = max_select(t_piaq(model, u));
    const double step = vec_norm(next - u, w_spec);
    const double size = next.cwiseAbs().maxCoeff();
    u = std::move(next);
    if (options.record_history) out.steps.push_back(step);
    if (!std::isfinite(size) || size > kDivergenceGuard) throw DivergedError(it, size);
    // The second test catches iterates already at rounding level, where the
    // step can no longer shrink.
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, size);
    if (step <= threshold || step <= floor) {
      out.u_star = std::move(u);
      out.iterations = it;
      out.residual = residual_of(step);
      return out;
    }
    if (it == options.max_iter) throw MaxIterError(it, residual_of(step));
  }
  throw MaxIterError(options.max_iter, std::numeric_limits<double>::infinity());
}

Vector lift(const FactoredLinearModel& model, const Vector& u_star) {
  return max_select(t_q(model, u_star));
}

Policy extract_policy(const FactoredLinearModel& model, const Vector& u_star) {
  return greedy(t_q(model, u_star));
}

PlanResult plan(const Mdp& mdp, const FactoredLinearModel& model, const NormSpec& w_spec,
                const PlanOptions& options) {
  if (mdp.states() != model.states() || mdp.actions() != model.actions()) {
    throw DimensionError("model shape does not match the MDP");
  }
  if (mdp.gamma() != model.gamma()) {
    throw ValidationError("model and MDP discounts differ");
  }
  CompressedIterationResult cvi = compressed_value_iteration(model, w_spec, options);
  PlanResult out;
  out.U_star = lift(model, cvi.u_star);
  out.pi_hat = extract_policy(model, cvi.u_star);
  if (model.r().is_join_hom()) {
    out.identity_gap = vec_norm(cvi.u_star - model.r().apply(out.U_star), w_spec);
  }
  out.u_star = std::move(cvi.u_star);
  out.iterations = cvi.iterations;
  out.residual = cvi.residual;
  out.modulus = cvi.modulus;
  out.steps = std::move(cvi.steps);
  return out;
}

PowerLipschitz power_lipschitz(const FactoredLinearModel& model, int depth) {
  PowerLipschitz out;
  const NormSpec sup = NormSpec::sup();
  out.b_prime = stacked_op_norm(model.q(), sup, sup).value;
  out.lip_r = op_norm({model.r().dense(), sup, sup});
  double g = 1.0;
  for (int j = 1; j <= depth; ++j) {
    g *= model.gamma();
    out.estimates.push_back(out.b_prime * g * out.lip_r);
  }
  return out;
}

}  // namespace flm
