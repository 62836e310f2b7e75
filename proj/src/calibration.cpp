#include "fdmopt/calibration.hpp"

#include "fdmopt/error.hpp"
#include "fdmopt/json_io.hpp"

#include <fstream>
#include <sstream>

namespace fdmopt {

double PatternTable::operator[](InfillPattern p) const {
  switch (p) {
    case InfillPattern::rectilinear: return rectilinear;
    case InfillPattern::grid: return grid;
    case InfillPattern::gyroid: return gyroid;
    case InfillPattern::honeycomb: return honeycomb;
  }
  return grid;
}

double SeamTable::operator[](SeamPlacement s) const {
  switch (s) {
    case SeamPlacement::aligned: return aligned;
    case SeamPlacement::nearest: return nearest;
    case SeamPlacement::random: return random;
  }
  return aligned;
}

void to_json(Json& j, const PatternTable& t) {
  j = Json{{"rectilinear", t.rectilinear}, {"grid", t.grid}, {"gyroid", t.gyroid}, {"honeycomb", t.honeycomb}};
}
void from_json(const Json& j, PatternTable& t) {
  t.rectilinear = j.value("rectilinear", t.rectilinear);
  t.grid = j.value("grid", t.grid);
  t.gyroid = j.value("gyroid", t.gyroid);
  t.honeycomb = j.value("honeycomb", t.honeycomb);
}
void to_json(Json& j, const SeamTable& t) {
  j = Json{{"aligned", t.aligned}, {"nearest", t.nearest}, {"random", t.random}};
}
void from_json(const Json& j, SeamTable& t) {
  t.aligned = j.value("aligned", t.aligned);
  t.nearest = j.value("nearest", t.nearest);
  t.random = j.value("random", t.random);
}

namespace {

#define FDMOPT_CALIBRATION_FIELDS(X)                                                                          \
  X(version) X(voxel_pitch) X(cell_cap) X(lambda) X(sharpness) X(goal_s) X(goal_f) X(goal_p) X(q_cap)          \
  X(density_g_cm3) X(nominal_flow) X(layer_overhead_s) X(line_width) X(support_density) X(plate_band_mm)     \
  X(stair_percentile) X(a_ref) X(strength_perimeter) X(strength_skin) X(strength_infill) X(strength_target)  \
  X(pattern_strength) X(contact_onset) X(contact_span) X(thermal_layer_s) X(hotend_capacity) X(flow_onset)   \
  X(flow_span) X(zbond_gain) X(load_amplification) X(pattern_contact) X(xy_bulge) X(efc_cap)                \
  X(growth_height_mm) X(growth_relief) X(xy_isoperimetric_scale) X(stringing_midpoint) X(stringing_scale)   \
  X(seam_stringing) X(support_rate) X(support_stack_ref_mm) X(support_fragment_step) X(veto_threshold)      \
  X(island_scale) X(slender_midpoint) X(slender_scale) X(adhesion_ratio) X(adhesion_ratio_scale)            \
  X(adhesion_aspect_midpoint) X(adhesion_aspect_scale) X(overhang_angle_deg) X(overhang_fraction_scale)     \
  X(bridge_mm) X(bridge_scale)

Json to_doc(const Calibration& c) {
  Json doc = Json::object();
#define FDMOPT_WRITE(f) doc[#f] = c.f;
  FDMOPT_CALIBRATION_FIELDS(FDMOPT_WRITE)
#undef FDMOPT_WRITE
  return doc;
}

Calibration from_doc(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("calibration document must be a JSON object");
  const Json known = to_doc(Calibration{});
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.contains(it.key())) throw ValidationError("unknown calibration key '" + it.key() + "'");
  }
  Calibration c;
  try {
#define FDMOPT_READ(f) \
  if (doc.contains(#f)) doc.at(#f).get_to(c.f);
    FDMOPT_CALIBRATION_FIELDS(FDMOPT_READ)
#undef FDMOPT_READ
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("calibration document has a bad value: ") + e.what());
  }
  if (c.version != 1) throw ValidationError("unsupported calibration version " + std::to_string(c.version));
  return c;
}

}  // namespace

const Calibration& default_calibration() {
  static const Calibration c{};
  return c;
}

std::string calibration_to_json_text(const Calibration& c) { return to_doc(c).dump(2) + "\n"; }

Calibration parse_calibration(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("calibration JSON does not parse: ") + e.what());
  }
  return from_doc(doc);
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open calibration file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_calibration(ss.str());
}

}  // namespace fdmopt
