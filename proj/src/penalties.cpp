#include "evaluator_internal.hpp"
#include "fdmopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fdmopt {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

namespace detail {

TimeCost time_cost(const StackAnalysis& a, const std::vector<LayerFill>& fill, const PrintConfig& config,
                   const Calibration& cal) {
  TimeCost tc;
  for (const LayerFill& f : fill) tc.part_volume_mm3 += f.volume_mm3;
  if (config.support_material) tc.support_volume_mm3 = a.support_volume_raw * cal.support_density;
  const double perimeter0 = fill.empty() ? 0.0 : fill.front().boundary_mm;
  const double b = config.brim_width;
  tc.brim_volume_mm3 = (b * perimeter0 + std::numbers::pi * b * b) * config.first_layer_height;
  const double volume = tc.part_volume_mm3 + tc.support_volume_mm3 + tc.brim_volume_mm3;
  tc.cost_g = volume / 1000.0 * cal.density_g_cm3;
  tc.time_s = volume / effective_flow(config, cal) + static_cast<double>(fill.size()) * cal.layer_overhead_s;
  return tc;
}

ZBondCues zbond_cues(const PrintConfig& config, const std::vector<LayerFill>& fill, const Calibration& cal) {
  ZBondCues cues;
  cues.contact = clamp01((config.layer_height / cal.line_width - cal.contact_onset) / cal.contact_span);
  const double flow = effective_flow(config, cal);
  double thermal = 0.0;
  for (const LayerFill& f : fill) thermal += clamp01(1.0 - f.volume_mm3 / flow / cal.thermal_layer_s);
  cues.thermal = fill.empty() ? 0.0 : thermal / static_cast<double>(fill.size());
  cues.flow = clamp01((flow / cal.hotend_capacity - cal.flow_onset) / cal.flow_span);
  return cues;
}

double perimeter_infill(const std::vector<LayerFill>& fill) {
  double edges = 0.0;
  double contact = 0.0;
  for (const LayerFill& f : fill) {
    edges += f.pi_edges;
    contact += f.pi_contact;
  }
  return edges > 0.0 ? clamp01(1.0 - contact / edges) : 0.0;
}

FootprintStats footprint(const StackAnalysis& a, const Calibration& cal) {
  FootprintStats fs;
  if (a.masks.empty()) return fs;
  const LayerStack& stack = *a.stack;
  const double p = stack.pitch;
  const MaskInfo& first = a.mask_of(0);
  fs.perimeter_mm = first.boundary_edges * p;
  fs.area_mm2 = first.cells * p * p;
  const auto at = std::min(stack.size() - 1, static_cast<std::size_t>(cal.growth_height_mm / stack.layer_height));
  fs.area_growth_mm2 = a.mask_of(at).cells * p * p;
  return fs;
}

double stringing_fraction(const StackAnalysis& a, const std::vector<LayerFill>& fill, const PrintConfig& config,
                          const Calibration& cal) {
  double travel = 0.0;
  double free = 0.0;
  double extrusion = 0.0;
  for (std::size_t l = 0; l < fill.size(); ++l) {
    const MaskInfo& m = a.mask_of(l);
    travel += m.travel_mm;
    free += m.free_travel_mm;
    extrusion += fill[l].volume_mm3 / (cal.line_width * a.stack->layer_height);
  }
  const double denom = travel + extrusion;
  return denom > 0.0 ? free * cal.seam_stringing[config.seam_placement] / denom : 0.0;
}

double support_removal(const StackAnalysis& a, const PrintConfig& config, const Calibration& cal) {
  if (!config.support_material || a.interface_area <= 0.0 || a.footprint_area <= 0.0) return 0.0;
  const double density = a.interface_area / a.footprint_area;
  const double stacking = 1.0 + a.support_mean_height / cal.support_stack_ref_mm;
  const double fragmentation = 1.0 + cal.support_fragment_step * std::max(0, a.support_components - 1);
  return clamp01(1.0 - std::exp(-cal.support_rate * density * stacking * fragmentation));
}

}  // namespace detail

TimeCost estimate_time_cost(const LayerStack& stack, const PrintConfig& config, const Calibration& cal) {
  if (stack.empty()) throw GeometryError("cannot estimate time and cost of an empty layer stack");
  const auto a = detail::analyse_stack(stack);
  return detail::time_cost(a, detail::layer_fill(a, config, cal), config, cal);
}

double penalty_staircase(std::span<const FaceSlope> faces, double layer_height, const Calibration& cal) {
  std::vector<std::pair<double, double>> amp;  // (amplitude, area)
  double total = 0.0;
  for (const FaceSlope& f : faces) {
    if (f.centroid_z < cal.plate_band_mm || f.area <= 0.0) continue;
    const double c = std::abs(std::cos(f.theta_deg * std::numbers::pi / 180.0));
    amp.emplace_back(layer_height * c * (1.0 - c), f.area);
    total += f.area;
  }
  if (amp.empty()) return 0.0;
  std::sort(amp.begin(), amp.end());
  // Nearest-rank weighted percentile: first amplitude whose cumulative area
  // reaches the requested share.
  const double target = cal.stair_percentile * total;
  double cumulative = 0.0;
  double value = amp.back().first;
  for (const auto& [a, w] : amp) {
    cumulative += w;
    if (cumulative >= target - 1e-12 * total) {
      value = a;
      break;
    }
  }
  return clamp01(value / cal.a_ref);
}

double strength_index(const PrintConfig& c, const Calibration& cal) {
  return cal.strength_perimeter * (c.perimeters - 1) +
         cal.strength_skin * (c.top_solid_layers + c.bottom_solid_layers) +
         cal.strength_infill * c.infill_density * cal.pattern_strength[c.infill_pattern];
}

double penalty_strength(const PrintConfig& c, const Calibration& cal) {
  const double shortfall = std::max(0.0, cal.strength_target - strength_index(c, cal)) / cal.strength_target;
  return clamp01(shortfall);
}

ZBondCues zbond_cues(const PrintConfig& config, const LayerStack& stack, const Calibration& cal) {
  if (stack.empty()) return detail::zbond_cues(config, {}, cal);
  const auto a = detail::analyse_stack(stack);
  return detail::zbond_cues(config, detail::layer_fill(a, config, cal), cal);
}

double zbond_from_cues(const ZBondCues& cues, bool load_along_z, const Calibration& cal) {
  const double v[3] = {cues.contact, cues.thermal, cues.flow};
  const double agg = log_mean_exp(v, cal.sharpness);
  double p = std::tanh(cal.zbond_gain * std::max(0.0, agg)) / std::tanh(cal.zbond_gain);
  if (load_along_z) p *= cal.load_amplification;
  return clamp01(p);
}

double penalty_zbond(const PrintConfig& config, const LayerStack& stack, bool load_along_z, const Calibration& cal) {
  return zbond_from_cues(zbond_cues(config, stack, cal), load_along_z, cal);
}

double penalty_perimeter_infill(const LayerStack& stack, const PrintConfig& config, const Calibration& cal) {
  if (stack.empty()) return 0.0;
  const auto a = detail::analyse_stack(stack);
  return detail::perimeter_infill(detail::layer_fill(a, config, cal));
}

FootprintStats footprint_stats(const LayerStack& stack, const Calibration& cal) {
  if (stack.empty()) return {};
  return detail::footprint(detail::analyse_stack(stack), cal);
}

double penalty_xy(const PrintConfig& c, const FootprintStats& fp, const Calibration& cal) {
  if (fp.area_mm2 <= 0.0) return 0.0;
  const double squish = clamp01((c.layer_height - c.first_layer_height) / c.layer_height);
  const double distortion = squish + cal.xy_bulge;
  const double compensation = std::min(c.elephant_foot_compensation, cal.efc_cap) / cal.efc_cap;
  const double growth = clamp01((fp.area_growth_mm2 - fp.area_mm2) / fp.area_mm2);
  const double residual = std::max(0.0, distortion - compensation) * (1.0 - cal.growth_relief * growth);
  const double iso = fp.perimeter_mm * fp.perimeter_mm / (4.0 * std::numbers::pi * fp.area_mm2);
  const double sensitivity = 1.0 - std::exp(-iso / cal.xy_isoperimetric_scale);
  return clamp01(residual * sensitivity);
}

double stringing_fraction(const LayerStack& stack, const PrintConfig& config, const Calibration& cal) {
  if (stack.empty()) return 0.0;
  const auto a = detail::analyse_stack(stack);
  return detail::stringing_fraction(a, detail::layer_fill(a, config, cal), config, cal);
}

double stringing_from_fraction(double fraction, const Calibration& cal) {
  return clamp01(logistic((fraction - cal.stringing_midpoint) / cal.stringing_scale));
}

double penalty_stringing(const LayerStack& stack, const PrintConfig& config, const Calibration& cal) {
  return stringing_from_fraction(stringing_fraction(stack, config, cal), cal);
}

double penalty_support_removal(const LayerStack& stack, const PrintConfig& config, const Calibration& cal) {
  if (stack.empty() || !config.support_material) return 0.0;
  return detail::support_removal(detail::analyse_stack(stack), config, cal);
}

}  // namespace fdmopt
