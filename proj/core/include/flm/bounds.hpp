#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flm/factored_model.hpp"
#include "flm/mdp.hpp"
#include "flm/norms.hpp"
#include "flm/planner.hpp"

namespace flm {

/// Slack on "bound >= actual" checks.
inline constexpr double kViolationTolerance = 1e-9;
/// Slack on assumption checks such as modulus <= gamma.
inline constexpr double kAssumptionSlack = 1e-12;

/// One theorem's evaluation. Bound terms may be +inf (vacuous).
struct TheoremRecord {
  std::string name;
  std::optional<double> eps1_vstar;
  std::optional<double> eps1_vpihat;
  std::optional<double> eps2;
  double total_bound = 0.0;
  /// The policy error in the norm the theorem bounds.
  double actual_error = 0.0;
  bool holds = false;
  std::string norm_pairing_note;
  /// Auxiliary named values (B, moduli, alternative forms).
  std::vector<std::pair<std::string, double>> extras;
};

/// V*, pi* and V^pi_hat by exact solves.
struct ExactReference {
  Vector v_star;
  Policy pi_star;
  Vector v_pihat;

  static ExactReference compute(const Mdp& mdp, const Policy& pi_hat, double tol = 1e-12);
};

/// (2 gamma / (1 - gamma)) ||(P - P~) V~||_inf over the mixed sup norm.
double baseline_bound(const Mdp& mdp, const MatrixFamily& p_tilde, const Vector& v_tilde);

/// Solves the MDP with kernels P~, takes pi~ = G T_{P~} V~ and compares its
/// exact error against baseline_bound.
TheoremRecord baseline_record(const Mdp& mdp, const MatrixFamily& p_tilde,
                              const ExactReference& ref);

/// Sup-norm bound. Needs a join-homomorphism R and modulus <= gamma in sup.
TheoremRecord bound_sup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                        const ExactReference& ref);
TheoremRecord bound_sup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan);

/// Weighted sup-norm bound with Lyapunov weights nu (states) and eta
/// (compressed coordinates).
TheoremRecord bound_wsup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                         const Vector& nu, const Vector& eta, const ExactReference& ref);
TheoremRecord bound_wsup(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                         const Vector& nu, const Vector& eta);

/// (1 - gamma) ||(I - gamma P^pi)^{-1}|| from L^p(xi) to L^p(mu); may be +inf.
double concentrability(const Mdp& mdp, const Policy& pi, const Vector& mu, const Vector& xi,
                       LpExponent p);

struct LpBoundInputs {
  Vector mu;
  LpExponent p = LpExponent::One;
  Vector eta;
  /// Defaults to mu.
  std::optional<Vector> xi;
};

/// L^p(mu) bound with the eta-weighted sup norm on the compressed space.
TheoremRecord bound_lp(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                       const LpBoundInputs& in, const ExactReference& ref);
TheoremRecord bound_lp(const Mdp& mdp, const FactoredLinearModel& model, const PlanResult& plan,
                       const LpBoundInputs& in);

/// L^p(mu) bound for a linear (not necessarily join-homomorphic) R and piA.
/// eps2 carries gamma / (1 - gamma); the 1 / (1 - gamma) form is reported
/// in the extras as "eps2_as_printed".
TheoremRecord bound_lp_linear_r(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const LpBoundInputs& in,
                                const ExactReference& ref);
TheoremRecord bound_lp_linear_r(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const LpBoundInputs& in);

/// ||nu||_{mu,p} times the weighted sup-norm bound.
TheoremRecord bound_lp_via_wsup(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const Vector& mu, LpExponent p,
                                const Vector& nu, const Vector& eta, const ExactReference& ref);
TheoremRecord bound_lp_via_wsup(const Mdp& mdp, const FactoredLinearModel& model,
                                const PlanResult& plan, const Vector& mu, LpExponent p,
                                const Vector& nu, const Vector& eta);

/// (2(1 + gamma) / (1 - gamma)) ||V~ - T_P V*||_inf, for pi~ = G V~.
double adp_general_bound(const Mdp& mdp, const ActionValue& v_tilde, const Vector& v_star);
/// (2 gamma / (1 - gamma)) ||V~ - V*||_inf, for pi~ = G T_P V~.
double adp_specific_bound(const Mdp& mdp, const Vector& v_tilde, const Vector& v_star);

struct AdpBounds {
  double general = 0.0;
  double specific = 0.0;
};

/// Both ADP bounds with V* solved internally.
AdpBounds adp_bounds(const Mdp& mdp, const ActionValue& v_tilde_action, const Vector& v_tilde);

struct AuditConfig {
  /// Norm on the compressed space used by the planner.
  NormSpec w_spec = NormSpec::sup();
  PlanOptions plan;
  double solve_tol = 1e-12;
  /// Weights and measures; defaults are ones for nu and eta, uniform for mu,
  /// and xi = mu.
  std::optional<Vector> nu;
  std::optional<Vector> eta;
  std::optional<Vector> mu;
  std::optional<Vector> xi;
  /// Compressed weight for the L^p theorems; defaults to eta.
  std::optional<Vector> lp_eta;
  LpExponent p = LpExponent::One;
  /// Kernels for an extra baseline evaluation. When absent the baseline is
  /// evaluated with P~ = QR if that product is stochastic.
  std::optional<MatrixFamily> baseline_kernels;
};

struct SkippedTheorem {
  std::string name;
  std::string reason;
};

struct BoundReport {
  PlanResult plan;
  ExactReference reference;
  double actual_sup = 0.0;
  /// (||V* - U*||, ||V^pi_hat - U*||, ||V* - V^pi_hat||), sup norms.
  std::array<double, 3> error_gaps{};
  std::optional<double> b_sup;
  std::optional<double> beta_nu_p;
  std::optional<double> beta_eta_piaq;
  std::optional<double> concentrability;
  std::vector<TheoremRecord> theorems;
  std::vector<SkippedTheorem> skipped;
  PowerLipschitz diagnostics;
  int violations = 0;

  const TheoremRecord* find(const std::string& name) const;
};

/// Plans, solves exactly, and evaluates every applicable bound. Theorems
/// whose assumptions fail are listed in `skipped`.
BoundReport audit(const Mdp& mdp, const FactoredLinearModel& model, const AuditConfig& config = {});

}  // namespace flm
