#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "flm/errors.hpp"
#include "flm/io.hpp"
#include "flm/random.hpp"
#include "flm/sweep.hpp"
#include "oracles.hpp"

using namespace flm;

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

std::string csv_of(const ExperimentConfig& config, unsigned jobs) {
  std::ostringstream out;
  write_sweep_csv(config, run_sweep(config, jobs), out);
  return out.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Io, MdpAndModelRoundTripExactly) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    InstanceRanges ranges;
    ranges.soft = seed % 2 == 1;
    const RandomInstance inst = random_instance(trial_seed(71, seed), ranges);
    const Mdp mdp = parse_mdp(mdp_to_json(inst.mdp));
    EXPECT_EQ(mdp.gamma(), inst.mdp.gamma());
    for (Index a = 0; a < mdp.actions(); ++a) {
      EXPECT_TRUE(bitwise_equal(mdp.transition(a), inst.mdp.transition(a)));
      EXPECT_TRUE(bitwise_equal(mdp.reward(a), inst.mdp.reward(a)));
    }
    const FactoredLinearModel model = parse_model(model_to_json(inst.model), mdp);
    EXPECT_EQ(model.r().is_join_hom(), inst.model.r().is_join_hom());
    EXPECT_TRUE(bitwise_equal(model.r().dense(), inst.model.r().dense()));
    for (Index a = 0; a < mdp.actions(); ++a) EXPECT_TRUE(bitwise_equal(model.q(a), inst.model.q(a)));
    EXPECT_EQ(model_to_json(model), model_to_json(inst.model));
  }
}

TEST(Io, ParseErrorsCarryPosition) {
  try {
    parse_mdp("{\"gamma\": 0.5,\n  \"rewards\": [[1.0]]\n  \"transitions\": []}");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
  try {
    parse_mdp("{\"gamma\": 0.5, \"rewards\": [[1.0]]}");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("transitions"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_mdp("{\"gamma\": \"x\", \"rewards\": [[1.0]], \"transitions\": [[[1.0]]]}"), ValidationError);
  EXPECT_THROW(parse_mdp("{\"gamma\": 0.5, \"rewards\": [[1.0]], \"transitions\": [[[0.5]]]}"), ValidationError);
}

TEST(Io, NormsAndVectors) {
  const NormSpec lp = parse_norm(R"({"kind": "lp", "p": "inf", "mu": [0.25, 0.75]})");
  EXPECT_EQ(lp.kind(), NormKind::Lp);
  EXPECT_EQ(lp.exponent(), LpExponent::Inf);
  EXPECT_EQ(parse_norm(norm_to_json(lp)).measure(), lp.measure());
  EXPECT_EQ(parse_norm(R"({"kind": "wsup", "w": [1, 2]})").weights()(1), 2.0);
  EXPECT_THROW(parse_norm(R"({"kind": "lp", "p": 3, "mu": [1]})"), UnsupportedNormError);
  EXPECT_THROW(parse_norm(R"({"kind": "l7"})"), ValidationError);
  const Vector v = parse_vector(R"([1, -2.5, "inf"])");
  EXPECT_EQ(v(1), -2.5);
  EXPECT_TRUE(std::isinf(v(2)));
}

TEST(Io, ReportJsonIsDeterministic) {
  const RandomInstance inst = random_instance(trial_seed(72, 0));
  const std::string a = report_to_json(audit(inst.mdp, inst.model));
  const std::string b = report_to_json(audit(inst.mdp, inst.model));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("\"theorems\""), std::string::npos);
}

TEST(Sweep, ConfigParsing) {
  const ExperimentConfig c = parse_experiment_config(
      R"({"seed": 3, "trials": 5, "states": [2, 8], "gamma": [0.2, 0.8], "p": 2, "gamma_sweep": [0.1, 0.5]})");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.trials, 5u);
  EXPECT_EQ(c.ranges.states_max, 8);
  EXPECT_EQ(c.p, LpExponent::Two);
  EXPECT_EQ(c.gamma_sweep.size(), 2u);
  EXPECT_THROW(parse_experiment_config(R"({"trials": 0})"), ValidationError);
  EXPECT_THROW(parse_experiment_config(R"({"gamma": [0.5, 1.0]})"), ValidationError);
  EXPECT_THROW(parse_experiment_config(R"({"states": [5, 2]})"), ValidationError);
  EXPECT_THROW(parse_experiment_config(R"({"seed": "x"})"), ValidationError);
  EXPECT_THROW(parse_experiment_config("[1, 2"), ValidationError);
}

TEST(Sweep, SingleTrialGivesOneRow) {
  ExperimentConfig c;
  c.seed = 1;
  c.trials = 1;
  const std::vector<std::string> out = lines(csv_of(c, 1));
  ASSERT_EQ(out.size(), 3u);  // header, row, summary
  EXPECT_EQ(out[0].rfind(kSweepSchema, 0), 0u);
  EXPECT_EQ(out[1].rfind("v1,0,", 0), 0u);
  EXPECT_EQ(out[2], "# trials=1 violations=0 errors=0");
}

TEST(Sweep, ZeroViolationsAndIdentitiesOnTwoHundredTrials) {
  ExperimentConfig c;
  c.seed = 2026;
  c.trials = 200;
  const SweepResult r = run_sweep(c, 2);
  EXPECT_EQ(r.violations, 0);
  EXPECT_EQ(r.errors, 0u);
  for (const TrialResult& t : r.trials) {
    EXPECT_LE(t.start_gap, 2 * c.tol);
    if (!std::isnan(t.identity_gap)) {
      EXPECT_LE(t.identity_gap, 2 * c.tol);
      EXPECT_LE(t.lift_gap, 2 * c.tol);
    }
  }
}

TEST(Sweep, OutputIsIndependentOfThreadCount) {
  ExperimentConfig c;
  c.seed = 99;
  c.trials = 40;
  const std::string one = csv_of(c, 1);
  EXPECT_EQ(one, csv_of(c, 1));
  EXPECT_EQ(one, csv_of(c, 8));
  c.seed = 100;
  EXPECT_NE(one, csv_of(c, 1));
}

TEST(Sweep, FrozenEps2IsMonotoneInGamma) {
  ExperimentConfig c;
  c.seed = 5;
  c.trials = 20;
  c.gamma_sweep = {0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99};
  const SweepResult r = run_sweep(c, 1);
  for (const TrialResult& t : r.trials) {
    ASSERT_EQ(t.eps2_frozen.size(), c.gamma_sweep.size());
    for (std::size_t i = 1; i < t.eps2_frozen.size(); ++i) {
      EXPECT_GE(t.eps2_frozen[i].second, t.eps2_frozen[i - 1].second);
    }
  }
  const std::vector<std::string> out = lines(csv_of(c, 1));
  EXPECT_EQ(out[0].rfind(kGammaSweepSchema, 0), 0u);
  EXPECT_EQ(out.size(), 1 + c.trials * c.gamma_sweep.size());
}
