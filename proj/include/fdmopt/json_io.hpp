#pragma once

#include "fdmopt/config_space.hpp"
#include "fdmopt/evaluator.hpp"
#include "fdmopt/guidance.hpp"

#include <json.hpp>

namespace fdmopt {

using Json = nlohmann::ordered_json;

Json config_to_json(const PrintConfig& config);
/// Missing keys keep default_config() values; throws ValidationError otherwise.
PrintConfig config_from_json(const Json& doc);

/// Full evaluation report: config, objective terms, vetoes with evidence,
/// penalties, group scores and excesses.
Json report_to_json(const EvaluationReport& report);

Json guidance_to_json(const GuidanceResponse& response);

}  // namespace fdmopt
