#pragma once

#include "fdmopt/config_space.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace fdmopt {

/// One value per InfillPattern, in enumeration order.
struct PatternTable {
  double rectilinear = 1.0;
  double grid = 1.0;
  double gyroid = 1.0;
  double honeycomb = 1.0;

  double operator[](InfillPattern p) const;
};

struct SeamTable {
  double aligned = 1.0;
  double nearest = 1.0;
  double random = 1.0;

  double operator[](SeamPlacement s) const;
};

/// Every fixed constant the evaluator uses. Immutable after load and written
/// into each run summary so results can be audited.
struct Calibration {
  int version = 1;

  // Geometry
  double voxel_pitch = 0.8;
  std::size_t cell_cap = 4'000'000;

  // Quality aggregation
  double lambda = 0.5;
  double sharpness = 8.0;
  double goal_s = 0.30;
  double goal_f = 0.25;
  double goal_p = 0.40;
  double q_cap = 2.0;

  // Material and machine
  double density_g_cm3 = 1.24;
  double nominal_flow = 8.0;      // mm^3/s
  double layer_overhead_s = 4.0;
  double line_width = 0.45;       // mm
  double support_density = 0.2;

  // Staircasing
  double plate_band_mm = 1.0;
  double stair_percentile = 0.95;
  double a_ref = 0.05;

  // Strength index
  double strength_perimeter = 0.12;
  double strength_skin = 0.03;
  double strength_infill = 0.8;
  double strength_target = 0.9;
  PatternTable pattern_strength{0.9, 1.0, 1.1, 1.15};

  // Inter-layer bonding
  double contact_onset = 0.6;
  double contact_span = 0.15;
  double thermal_layer_s = 5.0;
  double hotend_capacity = 12.0;  // mm^3/s
  double flow_onset = 0.5;
  double flow_span = 0.5;
  double zbond_gain = 1.5;
  double load_amplification = 1.25;

  // Perimeter/infill contact: contact = 1 - (1 - density)^exponent
  PatternTable pattern_contact{5.0, 6.0, 8.0, 7.0};

  // First-layer XY distortion
  double xy_bulge = 0.6;
  double efc_cap = 0.4;
  double growth_height_mm = 1.0;
  double growth_relief = 0.5;
  double xy_isoperimetric_scale = 2.0;

  // Stringing
  double stringing_midpoint = 0.08;
  double stringing_scale = 0.03;
  SeamTable seam_stringing{1.0, 0.9, 1.2};

  // Support removal
  double support_rate = 1.0;
  double support_stack_ref_mm = 10.0;
  double support_fragment_step = 0.25;

  // Vetoes
  double veto_threshold = 0.5;
  double island_scale = 2.0;
  double slender_midpoint = 10.0;
  double slender_scale = 2.0;
  double adhesion_ratio = 0.3;
  double adhesion_ratio_scale = 0.05;
  double adhesion_aspect_midpoint = 8.0;
  double adhesion_aspect_scale = 1.5;
  double overhang_angle_deg = 55.0;
  double overhang_fraction_scale = 0.04;
  double bridge_mm = 20.0;
  double bridge_scale = 2.0;
};

const Calibration& default_calibration();

std::string calibration_to_json_text(const Calibration& calibration);
/// Keys absent from the document keep their default values. Throws
/// ValidationError on malformed JSON or an unsupported version.
Calibration parse_calibration(std::string_view json_text);
Calibration load_calibration(const std::filesystem::path& path);

}  // namespace fdmopt
