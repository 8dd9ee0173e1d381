#include "flm/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "flm/errors.hpp"
#include "flm/sweep.hpp"

namespace flm {

using json = nlohmann::json;

namespace {

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ValidationError("JSON parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(column) + ": " + e.what());
  }
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw ValidationError(where + " must be a number");
}

Vector to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix to_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ValidationError(where + " must be a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError(row_where + " must have " + std::to_string(cols) + " entries");
    }
    m.row(static_cast<Index>(r)) = to_vector(j[r], row_where).transpose();
  }
  return m;
}

LpExponent parse_exponent(const json& jp, const std::string& where) {
  if (jp == 1) return LpExponent::One;
  if (jp == 2) return LpExponent::Two;
  if (jp == "inf") return LpExponent::Inf;
  throw UnsupportedNormError(where + " must be 1, 2 or \"inf\"");
}

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json from_vector(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

json from_matrix(const Matrix& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(from_vector(m.row(r).transpose()));
  return out;
}

json from_policy(const Policy& p) { return p.choices(); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

RightFactor parse_factor(const json& j, Index m, const std::string& where) {
  const std::string type = field(j, "type", where).get<std::string>();
  if (type == "general") return RightFactor::general(to_matrix(field(j, "matrix", where), where + ".matrix"));
  if (type == "joinhom") {
    const Vector a = to_vector(field(j, "a", where), where + ".a");
    const json& jj = field(j, "J", where);
    if (!jj.is_array()) throw ValidationError(where + ".J must be an array");
    std::vector<Index> idx;
    for (const json& e : jj) {
      if (!e.is_number_integer()) throw ValidationError(where + ".J entries must be integers");
      idx.push_back(e.get<Index>());
    }
    return RightFactor::join_hom(a, std::move(idx), m);
  }
  throw ValidationError(where + ".type must be \"general\" or \"joinhom\"");
}

json factor_json(const RightFactor& r) {
  if (const JoinHom* jh = r.as_join_hom()) {
    return {{"type", "joinhom"}, {"a", from_vector(jh->scale)}, {"J", jh->index}};
  }
  return {{"type", "general"}, {"matrix", from_matrix(r.dense())}};
}

json norm_json(const NormSpec& spec) {
  switch (spec.kind()) {
    case NormKind::Sup:
      return {{"kind", "sup"}};
    case NormKind::WeightedSup:
      return {{"kind", "wsup"}, {"w", from_vector(spec.weights())}};
    case NormKind::Lp: {
      json p = spec.exponent() == LpExponent::Inf ? json("inf")
                                                   : json(spec.exponent() == LpExponent::One ? 1 : 2);
      return {{"kind", "lp"}, {"p", p}, {"mu", from_vector(spec.measure())}};
    }
  }
  return {};
}

json opt_num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

json plan_json(const PlanResult& plan) {
  json j = {{"u_star", from_vector(plan.u_star)},
            {"U_star", from_vector(plan.U_star)},
            {"pi_hat", from_policy(plan.pi_hat)},
            {"iterations", plan.iterations},
            {"residual", num(plan.residual)},
            {"modulus", num(plan.modulus)},
            {"identity_gap", opt_num(plan.identity_gap)}};
  if (!plan.steps.empty()) j["steps"] = plan.steps;
  return j;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

Mdp parse_mdp(const std::string& text) try {
  const json j = parse_json(text);
  const double gamma = number(field(j, "gamma", "mdp"), "gamma");
  const json& jr = field(j, "rewards", "mdp");
  const json& jp = field(j, "transitions", "mdp");
  if (!jr.is_array() || !jp.is_array()) throw ValidationError("rewards and transitions must be arrays");
  MatrixFamily p;
  std::vector<Vector> r;
  for (std::size_t a = 0; a < jp.size(); ++a) {
    p.push_back(to_matrix(jp[a], "transitions[" + std::to_string(a) + "]"));
  }
  for (std::size_t a = 0; a < jr.size(); ++a) {
    r.push_back(to_vector(jr[a], "rewards[" + std::to_string(a) + "]"));
  }
  return Mdp(std::move(p), std::move(r), gamma);
} catch (const json::exception& e) {
  throw ValidationError(std::string("malformed input: ") + e.what());
}

std::string mdp_to_json(const Mdp& mdp) {
  json rewards = json::array();
  json transitions = json::array();
  for (Index a = 0; a < mdp.actions(); ++a) {
    rewards.push_back(from_vector(mdp.reward(a)));
    transitions.push_back(from_matrix(mdp.transition(a)));
  }
  return dump({{"gamma", mdp.gamma()}, {"rewards", rewards}, {"transitions", transitions}});
}

FactoredLinearModel parse_model(const std::string& text, const Mdp& mdp) try {
  const json j = parse_json(text);
  const Index n = field(j, "n", "model").get<Index>();
  const json& jq = field(j, "Q", "model");
  if (!jq.is_array()) throw ValidationError("model.Q must be an array");
  MatrixFamily q;
  for (std::size_t a = 0; a < jq.size(); ++a) q.push_back(to_matrix(jq[a], "Q[" + std::to_string(a) + "]"));
  RightFactor r = parse_factor(field(j, "R", "model"), mdp.states(), "R");
  if (r.rows() != n) throw DimensionError("R has " + std::to_string(r.rows()) + " rows but n = " + std::to_string(n));
  std::optional<std::vector<RightFactor>> pi_a;
  if (j.contains("piA") && !j.at("piA").is_null()) {
    pi_a.emplace();
    const json& jpa = j.at("piA");
    for (std::size_t a = 0; a < jpa.size(); ++a) {
      pi_a->push_back(parse_factor(jpa[a], mdp.states(), "piA[" + std::to_string(a) + "]"));
    }
  }
  return FactoredLinearModel(ModelShape::of(mdp), std::move(q), std::move(r), std::move(pi_a));
} catch (const json::exception& e) {
  throw ValidationError(std::string("malformed input: ") + e.what());
}

std::string model_to_json(const FactoredLinearModel& model) {
  json q = json::array();
  for (const Matrix& qa : model.q()) q.push_back(from_matrix(qa));
  json j = {{"n", model.compressed_dim()}, {"Q", q}, {"R", factor_json(model.r())}};
  if (!model.pi_a_is_r()) {
    json pa = json::array();
    for (const RightFactor& f : model.pi_a()) pa.push_back(factor_json(f));
    j["piA"] = pa;
  }
  return dump(j);
}

NormSpec parse_norm(const std::string& text) try {
  const json j = parse_json(text);
  const std::string kind = field(j, "kind", "norm").get<std::string>();
  if (kind == "sup") return NormSpec::sup();
  if (kind == "wsup") return NormSpec::weighted_sup(to_vector(field(j, "w", "norm"), "w"));
  if (kind == "lp") {
    const LpExponent p = parse_exponent(field(j, "p", "norm"), "norm.p");
    return NormSpec::lp(p, to_vector(field(j, "mu", "norm"), "mu"));
  }
  throw ValidationError("norm.kind must be sup, wsup or lp");
} catch (const json::exception& e) {
  throw ValidationError(std::string("malformed input: ") + e.what());
}

std::string norm_to_json(const NormSpec& spec) { return dump(norm_json(spec)); }

Vector parse_vector(const std::string& text) try {
  return to_vector(parse_json(text), "vector");
} catch (const json::exception& e) {
  throw ValidationError(std::string("malformed input: ") + e.what());
}

std::string solution_to_json(const OptimalSolution& solution) {
  return dump({{"V_star", from_vector(solution.values)}, {"pi_star", from_policy(solution.policy)}});
}

std::string plan_to_json(const PlanResult& plan) { return dump(plan_json(plan)); }

std::string report_to_json(const BoundReport& report) {
  json theorems = json::array();
  for (const TheoremRecord& t : report.theorems) {
    json extras = json::object();
    for (const auto& [k, v] : t.extras) extras[k] = num(v);
    theorems.push_back({{"name", t.name},
                        {"eps1_Vstar", opt_num(t.eps1_vstar)},
                        {"eps1_Vpihat", opt_num(t.eps1_vpihat)},
                        {"eps2", opt_num(t.eps2)},
                        {"total_bound", num(t.total_bound)},
                        {"actual_error", num(t.actual_error)},
                        {"holds", t.holds},
                        {"norm_pairing_note", t.norm_pairing_note},
                        {"extras", extras}});
  }
  json skipped = json::array();
  for (const SkippedTheorem& s : report.skipped) skipped.push_back({{"name", s.name}, {"reason", s.reason}});
  json diag = {{"B_prime", num(report.diagnostics.b_prime)},
               {"lip_R", num(report.diagnostics.lip_r)},
               {"power_lipschitz", report.diagnostics.estimates}};
  return dump({{"plan", plan_json(report.plan)},
               {"V_star", from_vector(report.reference.v_star)},
               {"pi_star", from_policy(report.reference.pi_star)},
               {"V_pihat", from_vector(report.reference.v_pihat)},
               {"actual_error_sup", num(report.actual_sup)},
               {"error_gaps",
                {num(report.error_gaps[0]), num(report.error_gaps[1]), num(report.error_gaps[2])}},
               {"B", opt_num(report.b_sup)},
               {"beta_nu_P", opt_num(report.beta_nu_p)},
               {"beta_eta_PiAQ", opt_num(report.beta_eta_piaq)},
               {"concentrability", opt_num(report.concentrability)},
               {"theorems", theorems},
               {"skipped", skipped},
               {"diagnostics", diag},
               {"violations", report.violations}});
}

std::string verification_to_json(const VerificationRecord& record) {
  json items = json::array();
  for (const AssertionOutcome& a : record.assertions) {
    items.push_back({{"quantity", a.quantity},
                     {"relation", a.relation == Relation::Equal ? "equal" : "at_most"},
                     {"expected", from_vector(a.expected)},
                     {"actual", from_vector(a.actual)},
                     {"deviation", num(a.deviation)},
                     {"pass", a.pass},
                     {"note", a.note}});
  }
  return dump({{"example", record.example},
               {"all_pass", record.all_pass()},
               {"failures", record.failures()},
               {"assertions", items}});
}

}  // namespace flm

namespace flm {

namespace {

Index int_in(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ValidationError(where + " must be an integer");
  }
  return j.get<Index>();
}

void index_range(const json& j, const char* key, Index& lo, Index& hi) {
  if (!j.contains(key)) return;
  const json& r = j.at(key);
  const std::string where = std::string("config.") + key;
  if (!r.is_array() || r.size() != 2) throw ValidationError(where + " must be [min, max]");
  lo = int_in(r[0], where + "[0]");
  hi = int_in(r[1], where + "[1]");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) try {
  const json j = parse_json(text);
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentConfig c;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      throw ValidationError("config.seed must be a non-negative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("trials")) {
    const Index t = int_in(j.at("trials"), "config.trials");
    if (t < 1) throw ValidationError("config.trials must be at least 1");
    c.trials = static_cast<std::size_t>(t);
  }
  index_range(j, "states", c.ranges.states_min, c.ranges.states_max);
  index_range(j, "compressed", c.ranges.compressed_min, c.ranges.compressed_max);
  index_range(j, "actions", c.ranges.actions_min, c.ranges.actions_max);
  if (j.contains("gamma")) {
    const json& g = j.at("gamma");
    if (!g.is_array() || g.size() != 2) throw ValidationError("config.gamma must be [min, max]");
    c.ranges.gamma_min = number(g[0], "config.gamma[0]");
    c.ranges.gamma_max = number(g[1], "config.gamma[1]");
  }
  if (j.contains("perturbation")) c.ranges.perturbation = number(j.at("perturbation"), "config.perturbation");
  if (j.contains("soft_fraction")) c.soft_fraction = number(j.at("soft_fraction"), "config.soft_fraction");
  if (j.contains("p")) {
    const json& p = j.at("p");
    if (p.is_string() && p.get<std::string>() == "cycle") {
      c.p.reset();
    } else {
      c.p = parse_exponent(p, "config.p");
    }
  }
  if (j.contains("tol")) c.tol = number(j.at("tol"), "config.tol");
  if (j.contains("gamma_sweep")) {
    const Vector g = to_vector(j.at("gamma_sweep"), "config.gamma_sweep");
    c.gamma_sweep.assign(g.data(), g.data() + g.size());
  }
  if (j.contains("output")) {
    if (!j.at("output").is_string()) throw ValidationError("config.output must be a string");
    c.output = j.at("output").get<std::string>();
  }
  c.validate();
  return c;
} catch (const json::exception& e) {
  throw ValidationError(std::string("malformed input: ") + e.what());
}

}  // namespace flm
