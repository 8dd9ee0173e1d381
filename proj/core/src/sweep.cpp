#include "flm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "flm/errors.hpp"
#include "flm/factored_model.hpp"
#include "flm/planner.hpp"

namespace flm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent stream for the per-trial choices that sit outside the instance.
constexpr std::uint64_t kAuxStream = 0x9e3779b97f4a7c15ULL;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quoted(std::string s) {
  std::replace(s.begin(), s.end(), '"', '\'');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

const char* exponent_name(LpExponent p) {
  switch (p) {
    case LpExponent::One:
      return "1";
    case LpExponent::Two:
      return "2";
    case LpExponent::Inf:
      return "inf";
  }
  return "?";
}

// 1 + delta U(0,1) with delta = min(1, (1 - gamma) / (2 gamma)). Against a
// row-stochastic (or sup-normalized) family this keeps the Lyapunov
// modulus at most gamma (1 + delta) < 1.
Vector perturbed_weight(Rng& rng, Index d, double gamma) {
  const double delta = std::min(1.0, (1.0 - gamma) / (2.0 * gamma));
  Vector w(d);
  for (Index i = 0; i < d; ++i) w(i) = 1.0 + delta * rng.uniform();
  return w;
}

// P~ = (1 - s) P + s P' with s ~ U(0, 1/2) and Dirichlet rows P'.
MatrixFamily perturbed_kernels(Rng& rng, const Mdp& mdp) {
  const double s = rng.uniform(0.0, 0.5);
  MatrixFamily out;
  out.reserve(static_cast<std::size_t>(mdp.actions()));
  for (Index a = 0; a < mdp.actions(); ++a) {
    Matrix pt = (1.0 - s) * mdp.transition(a);
    for (Index x = 0; x < mdp.states(); ++x) {
      pt.row(x) += s * rng.dirichlet(mdp.states()).transpose();
      pt.row(x) /= pt.row(x).sum();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

double residual_sup(const Mdp& mdp, const FactoredLinearModel& model, const Vector& u_big) {
  const Vector ru = model.r().apply(u_big);
  double out = 0.0;
  for (Index a = 0; a < mdp.actions(); ++a) {
    out = std::max(out, (mdp.transition(a) * u_big - model.q(a) * ru).cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto& r = ranges;
  if (trials < 1) throw ValidationError("trials must be at least 1");
  if (r.states_min < 1 || r.states_max < r.states_min) throw ValidationError("states range is empty");
  if (r.compressed_min < 1 || r.compressed_max < r.compressed_min) {
    throw ValidationError("compressed range is empty");
  }
  if (r.actions_min < 1 || r.actions_max < r.actions_min) throw ValidationError("actions range is empty");
  if (!(r.gamma_min > 0.0) || !(r.gamma_max < 1.0) || r.gamma_max < r.gamma_min) {
    throw ValidationError("gamma range must lie in (0, 1)");
  }
  if (!(r.perturbation >= 0.0) || !std::isfinite(r.perturbation)) {
    throw ValidationError("perturbation must be finite and non-negative");
  }
  if (!(soft_fraction >= 0.0 && soft_fraction <= 1.0)) {
    throw ValidationError("soft_fraction must lie in [0, 1]");
  }
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  for (double g : gamma_sweep) {
    if (!(g >= 0.0 && g < 1.0)) throw ValidationError("gamma_sweep entries must lie in [0, 1)");
  }
}

const std::vector<std::string>& sweep_theorems() {
  static const std::vector<std::string> names = {"baseline", "sup",         "wsup",
                                                 "lp",       "lp_linear_r", "lp_via_wsup",
                                                 "adp_general", "adp_specific"};
  return names;
}

TrialResult run_trial(const ExperimentConfig& config, std::size_t index) {
  TrialResult out;
  out.trial = index;
  out.seed = trial_seed(config.seed, index);
  out.theorems.resize(sweep_theorems().size());
  out.identity_gap = kNaN;
  out.lift_gap = kNaN;
  out.start_gap = kNaN;
  static constexpr LpExponent kCycle[] = {LpExponent::One, LpExponent::Two, LpExponent::Inf};
  out.p = config.p.value_or(kCycle[index % 3]);
  try {
    Rng aux(splitmix64(out.seed ^ kAuxStream));
    InstanceRanges ranges = config.ranges;
    ranges.soft = aux.uniform() < config.soft_fraction;
    const RandomInstance inst = random_instance(out.seed, ranges);
    const Mdp& mdp = inst.mdp;
    const FactoredLinearModel& model = inst.model;
    out.m = mdp.states();
    out.n = model.compressed_dim();
    out.k = mdp.actions();
    out.gamma = mdp.gamma();
    out.soft = ranges.soft;

    AuditConfig ac;
    ac.plan.tol = config.tol;
    ac.nu = perturbed_weight(aux, out.m, out.gamma);
    ac.eta = perturbed_weight(aux, out.n, out.gamma);
    ac.mu = aux.dirichlet(out.m);
    ac.p = out.p;
    // The L^p theorems need ||Pi^A Q|| <= 1 in sup_eta; fall back to unit weights.
    if (contraction_modulus(model, NormSpec::weighted_sup(*ac.eta)) >
        out.gamma * (1.0 + kAssumptionSlack)) {
      ac.lp_eta = Vector::Ones(out.n);
    }
    ac.baseline_kernels = perturbed_kernels(aux, mdp);

    const BoundReport report = audit(mdp, model, ac);
    const PlanResult& plan = report.plan;
    out.modulus = plan.modulus;
    out.iterations = plan.iterations;
    out.actual_sup = report.actual_sup;
    const Vector err = report.reference.v_star - report.reference.v_pihat;
    out.actual_wsup = vec_norm(err, NormSpec::weighted_sup(*ac.nu));
    out.actual_lp = vec_norm(err, NormSpec::lp(out.p, *ac.mu));
    out.concentrability = report.concentrability.value_or(kNaN);
    out.b = report.b_sup.value_or(kNaN);
    for (std::size_t t = 0; t < sweep_theorems().size(); ++t) {
      if (const TheoremRecord* rec = report.find(sweep_theorems()[t])) {
        out.theorems[t] = {true, rec->total_bound, rec->holds};
      }
    }
    out.violations = report.violations;

    if (model.r().is_join_hom()) {
      out.identity_gap = vec_norm(plan.u_star - model.r().apply(plan.U_star), NormSpec::sup());
      out.lift_gap = vec_norm(plan.U_star - max_select(t_qr(model, plan.U_star)), NormSpec::sup());
    }

    // Second run from a random start of the same order as the values.
    const double scale = 10.0 * (mdp.reward_table().matrix().cwiseAbs().maxCoeff() / (1.0 - out.gamma) + 1.0);
    Vector u0(out.n);
    for (Index i = 0; i < out.n; ++i) u0(i) = aux.uniform(-scale, scale);
    PlanOptions second = ac.plan;
    second.initial = u0;
    const PlanResult other = flm::plan(mdp, model, ac.w_spec, second);
    out.start_gap = vec_norm(plan.u_star - other.u_star, NormSpec::sup());

    if (!config.gamma_sweep.empty()) {
      const double residual = residual_sup(mdp, model, plan.U_star);
      for (double g : config.gamma_sweep) {
        out.eps2_frozen.emplace_back(g, g / (1.0 - g) * residual);
      }
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config, unsigned jobs) {
  config.validate();
  SweepResult result;
  result.trials.resize(config.trials);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(jobs == 0 ? 1u : jobs, static_cast<unsigned>(config.trials)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < config.trials; i = next++) {
      result.trials[i] = run_trial(config, i);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  for (const TrialResult& t : result.trials) {
    result.violations += t.violations;
    if (!t.error.empty()) ++result.errors;
  }
  return result;
}

void write_sweep_csv(const ExperimentConfig& config, const SweepResult& result, std::ostream& out) {
  if (!config.gamma_sweep.empty()) {
    out << kGammaSweepSchema << ",trial,seed,gamma,gamma_prime,eps2_frozen,error\n";
    for (const TrialResult& t : result.trials) {
      if (!t.error.empty()) {
        out << "v1," << t.trial << ',' << t.seed << ",NA,NA,NA,\"" << quoted(t.error) << "\"\n";
        continue;
      }
      for (const auto& [g, eps2] : t.eps2_frozen) {
        out << "v1," << t.trial << ',' << t.seed << ',' << fmt(t.gamma) << ',' << fmt(g) << ','
            << fmt(eps2) << ",\n";
      }
    }
    return;
  }

  out << kSweepSchema << ",trial,seed,m,n,k,gamma,soft,p,actual_sup,actual_wsup,actual_lp";
  for (const std::string& name : sweep_theorems()) out << ",total_" << name << ",holds_" << name;
  out << ",C,B,modulus,iterations,identity_gap,lift_gap,start_gap,violations,error\n";
  for (const TrialResult& t : result.trials) {
    out << "v1," << t.trial << ',' << t.seed << ',' << t.m << ',' << t.n << ',' << t.k << ','
        << fmt(t.gamma) << ',' << (t.soft ? 1 : 0) << ',' << exponent_name(t.p) << ','
        << fmt(t.actual_sup) << ',' << fmt(t.actual_wsup) << ',' << fmt(t.actual_lp);
    for (const TheoremCell& c : t.theorems) {
      if (c.applicable) {
        out << ',' << fmt(c.total) << ',' << (c.holds ? 1 : 0);
      } else {
        out << ",NA,NA";
      }
    }
    out << ',' << fmt(t.concentrability) << ',' << fmt(t.b) << ',' << fmt(t.modulus) << ','
        << t.iterations << ',' << fmt(t.identity_gap) << ',' << fmt(t.lift_gap) << ','
        << fmt(t.start_gap) << ',' << t.violations << ",\"" << quoted(t.error) << "\"\n";
  }
  out << "# trials=" << result.trials.size() << " violations=" << result.violations
      << " errors=" << result.errors << '\n';
}

}  // namespace flm
