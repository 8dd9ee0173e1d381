// flm: solve, plan and audit finite MDPs under factored linear models.
//
// Exit codes: 0 success, 2 invalid input, 3 not contractive, 4 bound
// violation or failed example verification, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "flm/bounds.hpp"
#include "flm/counterexamples.hpp"
#include "flm/errors.hpp"
#include "flm/io.hpp"
#include "flm/planner.hpp"
#include "flm/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNotContractive = 3;
constexpr int kExitViolation = 4;

struct NormFlags {
  std::string norm = "sup";
  std::string p = "1";
  std::string mu, nu, eta, xi;
  double tol = 1e-10;
  bool force = false;
  std::string out;
};

void add_norm_flags(CLI::App* cmd, NormFlags& f, bool measures) {
  cmd->add_option("--norm", f.norm, "Planning norm on the compressed space")
      ->check(CLI::IsMember({"sup", "wsup", "lp"}));
  cmd->add_option("--eta", f.eta, "Compressed weight vector (JSON array file)");
  cmd->add_option("--tol", f.tol, "Fixed-point tolerance");
  cmd->add_flag("--force", f.force, "Iterate even when the modulus is not below one");
  cmd->add_option("--out", f.out, "Output path (stdout when absent)");
  if (measures) {
    cmd->add_option("--p", f.p, "L^p exponent")->check(CLI::IsMember({"1", "2", "inf"}));
    cmd->add_option("--mu", f.mu, "State measure mu (JSON array file)");
    cmd->add_option("--nu", f.nu, "State weight nu (JSON array file)");
    cmd->add_option("--xi", f.xi, "Measure xi for the concentrability coefficient");
  }
}

flm::LpExponent exponent(const std::string& p) {
  if (p == "2") return flm::LpExponent::Two;
  if (p == "inf") return flm::LpExponent::Inf;
  return flm::LpExponent::One;
}

std::optional<flm::Vector> load_vector(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return flm::parse_vector(flm::read_text(path));
}

flm::NormSpec planning_norm(const NormFlags& f, const flm::FactoredLinearModel& model) {
  if (f.norm == "wsup") {
    auto eta = load_vector(f.eta);
    return flm::NormSpec::weighted_sup(eta ? *eta : flm::Vector::Ones(model.compressed_dim()));
  }
  if (f.norm == "lp") {
    throw flm::UnsupportedNormError("planning in an L^p norm on the compressed space is not supported");
  }
  return flm::NormSpec::sup();
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    flm::write_text(out, text + "\n");
  }
}

int cmd_solve(const std::string& mdp_path, const std::string& out) {
  const flm::Mdp mdp = flm::parse_mdp(flm::read_text(mdp_path));
  emit(out, flm::solution_to_json(flm::solve_optimal(mdp, 1e-12)));
  return kExitOk;
}

int cmd_plan(const std::string& mdp_path, const std::string& model_path, const NormFlags& f) {
  const flm::Mdp mdp = flm::parse_mdp(flm::read_text(mdp_path));
  const flm::FactoredLinearModel model = flm::parse_model(flm::read_text(model_path), mdp);
  flm::PlanOptions options;
  options.tol = f.tol;
  options.force = f.force;
  emit(f.out, flm::plan_to_json(flm::plan(mdp, model, planning_norm(f, model), options)));
  return kExitOk;
}

void print_summary(const flm::BoundReport& report) {
  std::fprintf(stderr, "pi_hat error (sup): %.12g\n", report.actual_sup);
  std::fprintf(stderr, "gaps ||V*-U*||, ||V^pi_hat-U*||, ||V*-V^pi_hat||: %.12g %.12g %.12g\n",
               report.error_gaps[0], report.error_gaps[1], report.error_gaps[2]);
  for (const flm::TheoremRecord& rec : report.theorems) {
    const double ratio = rec.total_bound > 0.0 ? rec.actual_error / rec.total_bound : 0.0;
    std::fprintf(stderr, "  %-13s bound %-22.12g actual %-22.12g ratio %-10.6g %s\n",
                 rec.name.c_str(), rec.total_bound, rec.actual_error, ratio,
                 rec.holds ? "holds" : "VIOLATED");
  }
  for (const flm::SkippedTheorem& s : report.skipped) {
    std::fprintf(stderr, "  %-13s skipped: %s\n", s.name.c_str(), s.reason.c_str());
  }
}

int cmd_audit(const std::string& mdp_path, const std::string& model_path, const NormFlags& f) {
  const flm::Mdp mdp = flm::parse_mdp(flm::read_text(mdp_path));
  const flm::FactoredLinearModel model = flm::parse_model(flm::read_text(model_path), mdp);
  flm::AuditConfig config;
  config.w_spec = planning_norm(f, model);
  config.plan.tol = f.tol;
  config.plan.force = f.force;
  config.p = exponent(f.p);
  config.mu = load_vector(f.mu);
  config.nu = load_vector(f.nu);
  config.eta = load_vector(f.eta);
  config.xi = load_vector(f.xi);
  const flm::BoundReport report = flm::audit(mdp, model, config);
  emit(f.out, flm::report_to_json(report));
  print_summary(report);
  return report.violations == 0 ? kExitOk : kExitViolation;
}

int cmd_example(const std::string& name, const std::map<std::string, double>& params,
                const std::string& out_dir) {
  auto param = [&](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  std::optional<flm::ExampleInstance> inst;
  if (name == "tightness") {
    inst = flm::tightness_mdp(param("gamma", 0.9), param("tau", 1.0), param("eps", 0.5));
  } else if (name == "harsh") {
    inst = flm::harsh_mdp(param("gamma", 0.9), param("tau", 1.0));
  } else if (name == "errorgaps") {
    inst = flm::error_gaps_mdp(param("gamma", 0.5), param("tau1", 1.0), param("tau2", 2.0));
  } else {
    throw flm::ValidationError("unknown example \"" + name + "\" (expected tightness, harsh or errorgaps)");
  }
  const flm::VerificationRecord record = flm::verify_example(*inst);
  const std::string verification = flm::verification_to_json(record);
  if (out_dir.empty()) {
    std::cout << verification << '\n';
  } else {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    flm::write_text(dir / "mdp.json", flm::mdp_to_json(inst->mdp) + "\n");
    flm::write_text(dir / "model.json", flm::model_to_json(inst->model) + "\n");
    flm::write_text(dir / "verification.json", verification + "\n");
  }
  std::fprintf(stderr, "%s: %zu assertions, %zu failed\n", name.c_str(), record.assertions.size(),
               record.failures());
  return record.all_pass() ? kExitOk : kExitViolation;
}

int cmd_sweep(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& p, unsigned jobs, const std::string& out) {
  flm::ExperimentConfig config = flm::parse_experiment_config(flm::read_text(config_path));
  if (seed) config.seed = *seed;
  if (!p.empty()) config.p = exponent(p);
  const std::string target = out.empty() ? config.output : out;
  const flm::SweepResult result = flm::run_sweep(config, jobs);
  std::ostringstream csv;
  flm::write_sweep_csv(config, result, csv);
  if (target.empty()) {
    std::cout << csv.str();
  } else {
    flm::write_text(target, csv.str());
  }
  std::fprintf(stderr, "sweep: %zu trials, %d violations, %zu errors\n", result.trials.size(),
               result.violations, result.errors);
  return result.violations == 0 ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning and policy-error audits with factored linear models"};
  app.require_subcommand(1);

  std::string mdp_path, model_path, out;
  auto* solve = app.add_subcommand("solve", "Exact optimal values and policy");
  solve->add_option("mdp", mdp_path, "MDP JSON file")->required();
  solve->add_option("--out", out, "Output path (stdout when absent)");

  NormFlags plan_flags;
  auto* plan = app.add_subcommand("plan", "Compressed value iteration and policy extraction");
  plan->add_option("mdp", mdp_path, "MDP JSON file")->required();
  plan->add_option("model", model_path, "Model JSON file")->required();
  add_norm_flags(plan, plan_flags, false);

  NormFlags audit_flags;
  auto* audit = app.add_subcommand("audit", "Plan, solve exactly and evaluate every bound");
  audit->add_option("mdp", mdp_path, "MDP JSON file")->required();
  audit->add_option("model", model_path, "Model JSON file")->required();
  add_norm_flags(audit, audit_flags, true);

  std::string example_name;
  std::map<std::string, double> example_params;
  auto* example = app.add_subcommand("example", "Generate and verify a counterexample MDP");
  example->add_option("name", example_name, "tightness, harsh or errorgaps")->required();
  for (const char* key : {"gamma", "tau", "eps", "tau1", "tau2"}) {
    example->add_option_function<double>(
        std::string("--") + key, [&example_params, key](double v) { example_params[key] = v; },
        std::string("Parameter ") + key);
  }
  example->add_option("--out", out, "Directory for mdp.json, model.json and verification.json");

  std::string config_path, sweep_p;
  std::optional<std::uint64_t> sweep_seed;
  unsigned jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Batch audit of random instances to CSV");
  sweep->add_option("config", config_path, "Experiment JSON file")->required();
  sweep->add_option("--seed", sweep_seed, "Master seed (overrides the config)");
  sweep->add_option("--p", sweep_p, "Fixed L^p exponent")->check(CLI::IsMember({"1", "2", "inf"}));
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  sweep->add_option("--out", out, "CSV path (config output or stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*solve) return cmd_solve(mdp_path, out);
    if (*plan) return cmd_plan(mdp_path, model_path, plan_flags);
    if (*audit) return cmd_audit(mdp_path, model_path, audit_flags);
    if (*example) return cmd_example(example_name, example_params, out);
    if (*sweep) return cmd_sweep(config_path, sweep_seed, sweep_p, jobs, out);
  } catch (const flm::NotContractiveError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNotContractive;
  } catch (const flm::DivergedError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  } catch (const flm::MaxIterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  } catch (const flm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
