#include "fdmopt/guidance.hpp"

#include "fdmopt/error.hpp"
#include "fdmopt/json_io.hpp"
#include "fdmopt/prompt_assets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace fdmopt {

std::string_view to_string(ActionMode mode) {
  switch (mode) {
    case ActionMode::increase: return "increase";
    case ActionMode::decrease: return "decrease";
    case ActionMode::switch_to: return "switch";
  }
  return "increase";
}

ActionCatalog::ActionCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> ids;
  for (const auto& e : entries_) {
    if (!ids.insert(e.id).second) throw ValidationError("duplicate catalog id '" + e.id + "'");
    if (e.parameters.empty()) throw ValidationError("catalog entry '" + e.id + "' names no parameter");
    for (const auto& p : e.parameters) {
      if (!is_parameter(p)) throw ValidationError("catalog entry '" + e.id + "' names unknown parameter " + p);
      const bool cat = parameter_spec(p).kind == ParamKind::categorical;
      if (cat != e.categorical) throw ValidationError("catalog entry '" + e.id + "' mixes action kinds");
    }
    if (e.categorical && e.parameters.size() != 1) {
      throw ValidationError("switch entry '" + e.id + "' must name exactly one parameter");
    }
  }
}

const ActionCatalog& ActionCatalog::standard() {
  static const ActionCatalog catalog = [] {
    std::vector<CatalogEntry> entries;
    for (const ParamSpec& s : parameter_specs()) {
      CatalogEntry e;
      e.id = std::string(s.name);
      e.parameters = {e.id};
      e.categorical = s.kind == ParamKind::categorical;
      e.description = e.categorical ? "switch " + e.id + " to another category"
                                    : "increase or decrease " + e.id;
      entries.push_back(std::move(e));
    }
    entries.push_back({"layer_coverage", {"perimeters", "infill_density"}, false, false,
                       "change perimeters and infill density together"});
    entries.push_back({"skin_thickness", {"top_solid_layers", "bottom_solid_layers"}, false, false,
                       "change top and bottom solid layers together"});
    entries.push_back({"adhesion_aid", {"brim_width", "first_layer_height"}, false, true,
                       "change brim width or first layer height (either suffices)"});
    return ActionCatalog(std::move(entries));
  }();
  return catalog;
}

const CatalogEntry* ActionCatalog::find(std::string_view id) const {
  for (const auto& e : entries_)
    if (e.id == id) return &e;
  return nullptr;
}

std::vector<std::string> diagnostic_names() {
  std::vector<std::string> out;
  for (VetoKind k : kVetoKinds) out.emplace_back(to_string(k));
  for (PenaltyKind k : kPenaltyKinds) out.emplace_back(to_string(k));
  return out;
}

GuidanceResponse GuidanceResponse::none(std::string note) {
  GuidanceResponse r;
  r.sentinel = true;
  r.note = std::move(note);
  return r;
}

namespace {

std::string_view importance_name(Importance i) {
  switch (i) {
    case Importance::low: return "low";
    case Importance::normal: return "normal";
    case Importance::high: return "high";
  }
  return "normal";
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

CorrectiveAction parse_action(const Json& a, const ActionCatalog& catalog, std::size_t index) {
  const std::string where = "actions[" + std::to_string(index) + "]";
  if (!a.is_object()) throw ValidationError(where + " is not an object");
  static const std::set<std::string> allowed = {"id",         "mode",       "magnitude", "target",
                                                "importance", "confidence", "rationale"};
  for (auto it = a.begin(); it != a.end(); ++it) {
    if (!allowed.count(it.key())) throw ValidationError(where + " has unknown field '" + it.key() + "'");
  }
  if (!a.contains("id") || !a["id"].is_string()) throw ValidationError(where + ".id must be a string");
  CorrectiveAction act;
  act.id = a["id"].get<std::string>();
  const CatalogEntry* entry = catalog.find(act.id);
  if (!entry) throw ValidationError(where + ".id '" + act.id + "' is not in the catalog");

  if (!a.contains("mode") || !a["mode"].is_string()) throw ValidationError(where + ".mode must be a string");
  const std::string mode = a["mode"].get<std::string>();
  if (mode == "increase") act.mode = ActionMode::increase;
  else if (mode == "decrease") act.mode = ActionMode::decrease;
  else if (mode == "switch") act.mode = ActionMode::switch_to;
  else throw ValidationError(where + ".mode '" + mode + "' is not increase, decrease or switch");
  if (entry->categorical != (act.mode == ActionMode::switch_to)) {
    throw ValidationError(where + ": action '" + act.id + "' requires mode " +
                          (entry->categorical ? "switch" : "increase or decrease"));
  }

  if (a.contains("magnitude") && !a["magnitude"].is_null()) {
    if (entry->categorical) throw ValidationError(where + ": switch actions take no magnitude");
    if (!a["magnitude"].is_number()) throw ValidationError(where + ".magnitude must be a number");
    const double m = a["magnitude"].get<double>();
    if (!(m > 0.0) || !std::isfinite(m)) throw ValidationError(where + ".magnitude must be positive");
    act.magnitude = m;
  }
  if (a.contains("target") && !a["target"].is_null()) {
    if (!entry->categorical) throw ValidationError(where + ": directional actions take no target");
    if (!a["target"].is_string()) throw ValidationError(where + ".target must be a string");
    act.target = a["target"].get<std::string>();
    if (category_of(entry->parameters.front(), *act.target) < 0) {
      throw ValidationError(where + ".target '" + *act.target + "' is not a category of " + entry->parameters.front());
    }
  } else if (entry->categorical) {
    throw ValidationError(where + ": switch actions need a target");
  }
  if (a.contains("importance") && !a["importance"].is_null()) {
    const std::string imp = a["importance"].is_string() ? a["importance"].get<std::string>() : "";
    if (imp == "low") act.importance = Importance::low;
    else if (imp == "normal") act.importance = Importance::normal;
    else if (imp == "high") act.importance = Importance::high;
    else throw ValidationError(where + ".importance must be low, normal or high");
  }
  if (a.contains("confidence") && !a["confidence"].is_null()) {
    if (!a["confidence"].is_number()) throw ValidationError(where + ".confidence must be a number");
    const double c = a["confidence"].get<double>();
    if (!(c > 0.0 && c <= 1.0)) throw ValidationError(where + ".confidence must lie in (0, 1]");
    act.confidence = c;
  }
  if (a.contains("rationale")) {
    if (!a["rationale"].is_string()) throw ValidationError(where + ".rationale must be a string");
    act.rationale = a["rationale"].get<std::string>();
  }
  return act;
}

}  // namespace

GuidanceResponse parse_guidance_reply(std::string_view text, const ActionCatalog& catalog, int budget) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw ValidationError("reply contains no JSON object");
  }
  Json doc;
  try {
    doc = Json::parse(text.substr(open, close - open + 1));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("reply is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("reply is not a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "primary_issue" && it.key() != "actions") {
      throw ValidationError("reply has unknown field '" + it.key() + "'");
    }
  }
  if (!doc.contains("primary_issue") || !doc["primary_issue"].is_string()) {
    throw ValidationError("primary_issue must be a single diagnostic name");
  }
  GuidanceResponse r;
  r.primary_issue = doc["primary_issue"].get<std::string>();
  const auto names = diagnostic_names();
  if (std::find(names.begin(), names.end(), r.primary_issue) == names.end()) {
    throw ValidationError("primary_issue '" + r.primary_issue + "' is not a known diagnostic");
  }
  if (!doc.contains("actions") || !doc["actions"].is_array()) throw ValidationError("actions must be an array");
  const Json& actions = doc["actions"];
  if (actions.empty()) throw ValidationError("actions must not be empty");
  if (static_cast<int>(actions.size()) > budget) {
    throw ValidationError("reply names " + std::to_string(actions.size()) + " actions but the budget is " +
                          std::to_string(budget));
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    CorrectiveAction act = parse_action(actions[i], catalog, i);
    if (!seen.insert(act.id).second) throw ValidationError("action '" + act.id + "' appears twice");
    r.actions.push_back(std::move(act));
  }
  r.raw = std::string(text);
  return r;
}

std::string guidance_to_json_text(const GuidanceResponse& r) {
  Json doc = Json::object();
  doc["primary_issue"] = r.primary_issue;
  Json actions = Json::array();
  for (const auto& a : r.actions) {
    Json j = Json::object();
    j["id"] = a.id;
    j["mode"] = std::string(to_string(a.mode));
    if (a.magnitude) j["magnitude"] = *a.magnitude;
    if (a.target) j["target"] = *a.target;
    j["importance"] = std::string(importance_name(a.importance));
    if (a.confidence) j["confidence"] = *a.confidence;
    j["rationale"] = a.rationale;
    actions.push_back(std::move(j));
  }
  doc["actions"] = std::move(actions);
  return doc.dump();
}

std::vector<RankedDiagnostic> rank_diagnostics(const EvaluationReport& report, const Calibration& cal) {
  struct Keyed {
    int cls;  // 0 triggered veto, 1 penalty, 2 clear veto
    int order;
    RankedDiagnostic d;
  };
  std::vector<Keyed> all;
  int order = 0;
  for (VetoKind k : kVetoKinds) {
    const VetoResult* v = report.veto(k);
    RankedDiagnostic d{std::string(to_string(k)), true, v ? v->risk : 0.0, v ? v->risk : 0.0};
    all.push_back({v && v->triggered ? 0 : 2, order++, d});
  }
  const std::array<double, 3> goals = {cal.goal_s, cal.goal_f, cal.goal_p};
  for (PenaltyKind k : kPenaltyKinds) {
    const double value = report.penalties.get(k);
    const double goal = goals[static_cast<int>(group_of(k))];
    all.push_back({1, order++, {std::string(to_string(k)), false, value, (value - goal) / (1.0 - goal)}});
  }
  std::stable_sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
    if (a.cls != b.cls) return a.cls < b.cls;
    if (a.d.severity != b.d.severity) return a.d.severity > b.d.severity;
    return a.order < b.order;
  });
  std::vector<RankedDiagnostic> out;
  for (auto& k : all) out.push_back(std::move(k.d));
  return out;
}

std::string system_prompt() { return std::string(assets::system_prompt()); }

std::string build_prompt(const EvaluationReport& report, const ActionCatalog& catalog, bool include_examples,
                         int budget) {
  std::ostringstream os;
  os << "Diagnostics for the current configuration, most severe first:\n";
  for (const RankedDiagnostic& d : rank_diagnostics(report)) {
    if (d.veto) {
      const VetoResult* v = report.veto(VetoKind::unsupported_island);
      for (VetoKind k : kVetoKinds)
        if (to_string(k) == d.name) v = report.veto(k);
      os << "  veto " << d.name << " = " << fixed(d.value) << (v && v->triggered ? " (triggered)" : " (clear)");
      if (v && !v->evidence.empty()) os << "; " << v->evidence;
      os << "\n";
    } else {
      os << "  penalty " << d.name << " = " << fixed(d.value) << "\n";
    }
  }
  os << "\nSummary: objective " << fixed(report.objective) << ", quality " << fixed(report.quality)
     << (report.infeasible ? " (infeasible)" : "") << ", print time " << fixed(report.time_s, 1)
     << " s, filament " << fixed(report.cost_g, 2) << " g, " << report.layer_count << " layers\n";
  os << "\nCurrent configuration:\n" << to_kv_text(report.config);
  os << "\nAction catalog:\n";
  for (const CatalogEntry& e : catalog.entries()) {
    os << "  - " << e.id << ": ";
    if (e.categorical) {
      os << "switch; targets";
      for (auto c : parameter_spec(e.parameters.front()).categories) os << " " << c;
    } else {
      os << "increase|decrease; parameters";
      for (const auto& p : e.parameters) {
        const ParamSpec& s = parameter_spec(p);
        os << " " << p << " [" << s.lower << ", " << s.upper << "]";
      }
      if (e.disjunctive) os << "; either parameter suffices";
    }
    os << "\n";
  }
  os << "\nAction budget: choose between 1 and " << budget << " action" << (budget == 1 ? "" : "s") << ".\n\n";
  std::string contract(assets::output_contract());
  const std::string token = "BUDGET";
  for (auto pos = contract.find(token); pos != std::string::npos; pos = contract.find(token, pos)) {
    contract.replace(pos, token.size(), std::to_string(budget));
  }
  os << contract;
  if (include_examples) os << "\nWorked examples:\n\n" << assets::worked_examples();
  return os.str();
}

namespace {

CorrectiveAction directional(std::string id, ActionMode mode, double magnitude, std::string why,
                             Importance imp = Importance::normal) {
  CorrectiveAction a;
  a.id = std::move(id);
  a.mode = mode;
  a.magnitude = magnitude;
  a.importance = imp;
  a.rationale = std::move(why);
  return a;
}

CorrectiveAction switch_action(std::string id, std::string target, std::string why, Importance imp = Importance::normal) {
  CorrectiveAction a;
  a.id = std::move(id);
  a.mode = ActionMode::switch_to;
  a.target = std::move(target);
  a.importance = imp;
  a.rationale = std::move(why);
  return a;
}

std::string turned(int degrees, int by) { return std::to_string((degrees + by) % 360); }

// An action the incumbent already satisfies constrains nothing; the rules skip it.
bool already_satisfied(const CorrectiveAction& a, const PrintConfig& c) {
  const CatalogEntry* entry = ActionCatalog::standard().find(a.id);
  if (!entry || entry->parameters.size() != 1) return false;
  const std::string& param = entry->parameters.front();
  const ParamSpec& spec = parameter_spec(param);
  if (a.mode == ActionMode::switch_to) return a.target && category_index(c, param) == category_of(param, *a.target);
  const double v = parameter_value(c, param);
  return a.mode == ActionMode::increase ? v >= spec.upper : v <= spec.lower;
}

std::vector<CorrectiveAction> canned_actions(const std::string& issue, const PrintConfig& c) {
  using enum ActionMode;
  const Orientation& o = c.orientation;
  if (issue == "unsupported_island") {
    return {switch_action("support_material", "on", "Floating regions need support underneath.", Importance::high),
            switch_action("orientation_x", turned(o.rx, 180), "Flipping the part may ground the floating region.",
                          Importance::low),
            switch_action("orientation_y", turned(o.ry, 90), "Another resting face may ground it.", Importance::low)};
  }
  if (issue == "collapsing_overhang") {
    return {switch_action("support_material", "on", "Steep downward faces need support.", Importance::high),
            switch_action("orientation_x", turned(o.rx, 180), "Flipping may turn overhangs into upward faces.",
                          Importance::low),
            switch_action("orientation_y", turned(o.ry, 90), "Another resting face may remove the overhang.",
                          Importance::low)};
  }
  if (issue == "long_bridge") {
    return {switch_action("support_material", "on", "Long unsupported spans sag without support.", Importance::high),
            switch_action("orientation_x", turned(o.rx, 90), "A different orientation can shorten the span.",
                          Importance::low),
            switch_action("orientation_y", turned(o.ry, 90), "A different orientation can shorten the span.",
                          Importance::low)};
  }
  if (issue == "slender_tower") {
    return {switch_action("orientation_x", turned(o.rx, 90), "Laying the column down removes the tall narrow stack.",
                          Importance::high),
            directional("brim_width", increase, 3.0, "A brim stabilises a narrow base."),
            switch_action("orientation_y", turned(o.ry, 90), "Laying the column down removes the tall narrow stack.")};
  }
  if (issue == "low_bed_adhesion") {
    return {directional("brim_width", increase, 3.0, "A brim enlarges the first-layer contact patch.",
                        Importance::high),
            switch_action("orientation_x", turned(o.rx, 90), "Another face may give more bed contact.", Importance::low),
            switch_action("orientation_y", turned(o.ry, 90), "Another face may give more bed contact.", Importance::low)};
  }
  if (issue == "staircasing") {
    return {directional("layer_height", decrease, 0.05, "Thinner layers shrink terraces on sloped faces."),
            directional("first_layer_height", decrease, 0.05, "Keep the first layer in proportion.", Importance::low),
            switch_action("orientation_x", turned(o.rx, 90), "Sloped faces may print steeper in another orientation.",
                          Importance::low)};
  }
  if (issue == "zbond") {
    return {directional("max_volumetric_speed", decrease, 2.0, "Slower extrusion gives layers time to fuse."),
            directional("layer_height", decrease, 0.05, "Thinner layers improve inter-layer contact.")};
  }
  if (issue == "strength") {
    return {directional("perimeters", increase, 1.0, "More walls carry more load."),
            directional("infill_density", increase, 0.1, "Denser infill stiffens the core."),
            directional("skin_thickness", increase, 1.0, "Thicker solid skins add stiffness.", Importance::low)};
  }
  if (issue == "perimeter_infill") {
    return {directional("infill_density", increase, 0.15, "Denser infill meets the walls more often."),
            switch_action("infill_pattern", "gyroid", "Gyroid touches the perimeters continuously."),
            switch_action("infill_pattern", "honeycomb", "Honeycomb also meets the walls often.", Importance::low)};
  }
  if (issue == "xy_distortion") {
    return {directional("elephant_foot_compensation", increase, 0.1, "Compensate the first-layer bulge."),
            directional("first_layer_height", increase, 0.05, "A thicker first layer is squished less.")};
  }
  if (issue == "stringing") {
    return {switch_action("orientation_x", turned(o.rx, 90), "Another orientation can merge separate islands."),
            switch_action("seam_placement", "nearest", "Nearest seams shorten travel moves."),
            switch_action("orientation_y", turned(o.ry, 90), "Another orientation can merge separate islands.",
                          Importance::low)};
  }
  // support_removal
  return {switch_action("orientation_x", turned(o.rx, 180), "Another orientation may need less support."),
          switch_action("orientation_y", turned(o.ry, 90), "Try a different resting face.", Importance::low),
          switch_action("support_material", "off", "Check whether the part stands without support.", Importance::low)};
}

// Used when every group is within its goal: the objective is then driven by
// print time and material, so the expert points at the most wasteful setting
// whose quality group still has room to give.
std::vector<CorrectiveAction> efficiency_actions(const EvaluationReport& report, const Calibration& cal) {
  using enum ActionMode;
  const PrintConfig& c = report.config;
  struct Scored {
    double score;
    CorrectiveAction action;
  };
  std::vector<Scored> options;
  auto add = [&](double score, CorrectiveAction a) {
    a.magnitude.reset();
    if (score > 0.02) options.push_back({score, std::move(a)});
  };
  auto position = [&](std::string_view name) {
    const ParamSpec& s = parameter_spec(name);
    return (parameter_value(c, name) - s.lower) / s.range();
  };
  auto headroom = [&](PenaltyGroup g) {
    const double goals[3] = {cal.goal_s, cal.goal_f, cal.goal_p};
    const auto k = static_cast<std::size_t>(g);
    return std::clamp((goals[k] - report.group_scores[k]) / goals[k], 0.0, 1.0);
  };
  const double room_s = headroom(PenaltyGroup::surface);
  const double room_f = headroom(PenaltyGroup::functional);
  const double adhesion = report.veto(VetoKind::low_bed_adhesion) ? report.veto(VetoKind::low_bed_adhesion)->risk : 0.0;
  if (c.support_material) {
    // Support that generates nothing costs nothing; only real support is worth removing.
    add(report.penalties.support > 0.0 ? 0.6 : 0.0,
        switch_action("support_material", "off", "Support adds material and time; try printing without it."));
  }
  add(position("infill_density") * room_f,
      directional("infill_density", decrease, 1.0, "Infill is the largest material cost inside the part."));
  add(0.8 * (1.0 - position("layer_height")) * std::min(room_s, room_f),
      directional("layer_height", increase, 1.0, "Thicker layers cut the layer count and print time."));
  if (c.max_volumetric_speed < cal.nominal_flow) {
    const double gap = (cal.nominal_flow - c.max_volumetric_speed) /
                       (cal.nominal_flow - parameter_spec("max_volumetric_speed").lower);
    add(0.9 * gap * room_f, directional("max_volumetric_speed", increase, 1.0, "The extrusion rate is throttling the print."));
  }
  add(0.6 * position("perimeters") * room_f, directional("perimeters", decrease, 1.0, "Extra walls add material."));
  add(0.25 * (position("top_solid_layers") + position("bottom_solid_layers")) * room_f,
      directional("skin_thickness", decrease, 1.0, "Thick solid skins add material."));
  if (adhesion < 0.25) {
    add(0.4 * position("brim_width"), directional("brim_width", decrease, 1.0, "The part holds the bed without a wide brim."));
  }
  std::stable_sort(options.begin(), options.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<CorrectiveAction> out;
  for (auto& o : options) {
    // Secondary savings are suggestions; the leading one carries the weight.
    if (!out.empty()) o.action.importance = Importance::low;
    out.push_back(std::move(o.action));
  }
  if (out.empty()) {
    out.push_back(directional("infill_density", decrease, 1.0, "Infill is the largest material cost inside the part."));
    out.back().magnitude.reset();
  }
  return out;
}

}  // namespace

GuidanceResponse scripted_guidance(const EvaluationReport& report, int budget, const Calibration& cal) {
  if (budget <= 0) return GuidanceResponse::none("action budget is zero");
  const auto ranked = rank_diagnostics(report, cal);
  GuidanceResponse r;
  r.primary_issue = ranked.front().name;
  const bool within_goals = !report.infeasible && report.excess[0] <= 0.0 && report.excess[1] <= 0.0 &&
                            report.excess[2] <= 0.0;
  if (within_goals) {
    r.actions = efficiency_actions(report, cal);
  } else {
    for (auto& a : canned_actions(r.primary_issue, report.config)) {
      const bool repeat = std::any_of(r.actions.begin(), r.actions.end(), [&](const auto& b) { return b.id == a.id; });
      if (!repeat && !already_satisfied(a, report.config)) r.actions.push_back(std::move(a));
    }
    // Every remedy is already in place; restate the first so the reply stays well formed.
    if (r.actions.empty()) r.actions.push_back(canned_actions(r.primary_issue, report.config).front());
  }
  if (static_cast<int>(r.actions.size()) > budget) r.actions.resize(static_cast<std::size_t>(budget));
  r.raw = guidance_to_json_text(r);
  r.attempts = 1;
  return r;
}

std::string ScriptedProvider::reply(const GuidanceRequest& request) {
  if (!request.report) throw ValidationError("scripted provider needs the evaluation report");
  return guidance_to_json_text(scripted_guidance(*request.report, request.budget, cal_));
}

std::unique_ptr<GuidanceProvider> make_provider(std::string_view kind, const RemoteProviderOptions& remote) {
  if (kind == "none") return nullptr;
  if (kind == "scripted") return std::make_unique<ScriptedProvider>();
  if (kind == "remote") return std::make_unique<RemoteProvider>(remote);
  throw ValidationError("unknown provider '" + std::string(kind) + "' (expected remote, scripted or none)");
}

GuidanceResponse request_guidance(GuidanceProvider* provider, const EvaluationReport& report,
                                  const GuidanceSettings& settings, const ActionCatalog& catalog) {
  if (!provider) return GuidanceResponse::none("no provider");
  if (settings.budget <= 0) return GuidanceResponse::none("action budget is zero");
  GuidanceRequest req;
  req.report = &report;
  req.system = system_prompt();
  req.budget = settings.budget;
  const std::string base = build_prompt(report, catalog, settings.include_examples, settings.budget);
  req.user = base;
  std::string last_error;
  std::string last_raw;
  for (int attempt = 1; attempt <= settings.max_retries + 1; ++attempt) {
    last_raw = provider->reply(req);
    try {
      GuidanceResponse r = parse_guidance_reply(last_raw, catalog, settings.budget);
      r.attempts = attempt;
      return r;
    } catch (const ValidationError& e) {
      last_error = e.what();
      req.user = base + "\n\nYour previous reply was rejected: " + last_error +
                 "\nReply again with only a corrected JSON object that follows the rules.";
    }
  }
  GuidanceResponse none = GuidanceResponse::none("no valid reply after " + std::to_string(settings.max_retries + 1) +
                                                 " attempts: " + last_error);
  none.raw = last_raw;
  none.attempts = settings.max_retries + 1;
  return none;
}

}  // namespace fdmopt
