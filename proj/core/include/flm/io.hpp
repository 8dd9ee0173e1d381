#pragma once

#include <filesystem>
#include <string>

#include "flm/bounds.hpp"
#include "flm/counterexamples.hpp"
#include "flm/factored_model.hpp"
#include "flm/mdp.hpp"
#include "flm/norms.hpp"
#include "flm/planner.hpp"

namespace flm {

/// Reading: malformed JSON raises ValidationError with "line L, column C";
/// schema problems name the offending field. Numbers are written in
/// shortest round-trip form, so a write/read cycle is exact.

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// {"gamma": g, "rewards": [[r^a(x)]], "transitions": [[[P^a(y|x)]]]}
Mdp parse_mdp(const std::string& text);
std::string mdp_to_json(const Mdp& mdp);

/// {"n": n, "Q": [[[Q^a(x,i)]]], "R": {...}, "piA"?: [{...}]}; the reward
/// and discount come from `mdp`.
FactoredLinearModel parse_model(const std::string& text, const Mdp& mdp);
std::string model_to_json(const FactoredLinearModel& model);

/// {"kind": "sup"|"wsup"|"lp", "w"?: [...], "p"?: 1|2|"inf", "mu"?: [...]}
NormSpec parse_norm(const std::string& text);
std::string norm_to_json(const NormSpec& spec);

/// A bare JSON array of numbers.
Vector parse_vector(const std::string& text);

std::string solution_to_json(const OptimalSolution& solution);
std::string plan_to_json(const PlanResult& plan);
std::string report_to_json(const BoundReport& report);
std::string verification_to_json(const VerificationRecord& record);

}  // namespace flm
