#include "fdmopt/json_io.hpp"

namespace fdmopt {

Json report_to_json(const EvaluationReport& r) {
  Json j = Json::object();
  j["config"] = config_to_json(r.config);
  j["objective"] = r.objective;
  j["time_s"] = r.time_s;
  j["cost_g"] = r.cost_g;
  j["quality"] = r.quality;
  j["infeasible"] = r.infeasible;
  j["layers"] = r.layer_count;
  Json vetoes = Json::array();
  for (const VetoResult& v : r.vetoes) {
    vetoes.push_back({{"name", std::string(to_string(v.kind))},
                      {"risk", v.risk},
                      {"triggered", v.triggered},
                      {"evidence", v.evidence}});
  }
  j["vetoes"] = std::move(vetoes);
  Json penalties = Json::object();
  for (PenaltyKind k : kPenaltyKinds) penalties[std::string(to_string(k))] = r.penalties.get(k);
  j["penalties"] = std::move(penalties);
  j["group_scores"] = {{"surface", r.group_scores[0]}, {"functional", r.group_scores[1]},
                       {"post_processing", r.group_scores[2]}};
  j["excess"] = {{"surface", r.excess[0]}, {"functional", r.excess[1]}, {"post_processing", r.excess[2]}};
  return j;
}

Json guidance_to_json(const GuidanceResponse& g) {
  Json j = Json::object();
  j["sentinel"] = g.sentinel;
  if (!g.sentinel) {
    j["primary_issue"] = g.primary_issue;
    j["actions"] = Json::parse(guidance_to_json_text(g))["actions"];
  }
  j["attempts"] = g.attempts;
  if (!g.note.empty()) j["note"] = g.note;
  j["raw"] = g.raw;
  return j;
}

}  // namespace fdmopt
