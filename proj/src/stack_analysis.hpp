#pragma once

// Geometry-only statistics of a layer stack, shared by the time/cost model,
// the penalties and the vetoes. Nothing here depends on the print config
// beyond the layer height baked into the stack.

#include "fdmopt/calibration.hpp"
#include "fdmopt/mesh.hpp"

#include <cstdint>
#include <vector>

namespace fdmopt::detail {

struct MaskInfo {
  const LayerMask* mask = nullptr;
  int cells = 0;
  int boundary_edges = 0;
  std::vector<int> occupied;            // flat cell indices
  std::vector<int> comp_cells;          // indexed by label - 1
  std::vector<Vec2> comp_centroid;      // mm, grid XY frame
  std::vector<double> comp_inscribed;   // largest distance to an empty cell centre, in cells
  std::vector<std::uint8_t> dilated;    // 4-neighbour dilation
  // Travel between component centroids chained in label order.
  double travel_mm = 0.0;
  double free_travel_mm = 0.0;
};

struct Island {
  int layer = 0;
  int cells = 0;
  double gap_mm = 0.0;
};

struct StackAnalysis {
  const LayerStack* stack = nullptr;
  std::vector<MaskInfo> masks;
  std::vector<int> layer_mask;  // per layer, index into masks

  std::vector<int> unsupported_cells;  // per layer
  double interface_area = 0.0;         // mm^2 of part underside needing support
  double support_volume_raw = 0.0;     // mm^3 of solid columns below it
  double support_mean_height = 0.0;    // mm, area weighted
  double support_footprint_area = 0.0; // mm^2, dilated projection onto the bed
  int support_components = 0;

  std::vector<Island> islands;
  double max_bridge_mm = 0.0;
  int bridge_layer = -1;

  double footprint_area = 0.0;  // mm^2, XY union of all layers

  const MaskInfo& mask_of(std::size_t layer) const { return masks[static_cast<std::size_t>(layer_mask[layer])]; }
};

StackAnalysis analyse_stack(const LayerStack& stack);

/// Per-layer deposition statistics for a given config.
struct LayerFill {
  int cells = 0;
  int skin_cells = 0;
  double boundary_mm = 0.0;
  double volume_mm3 = 0.0;
  int pi_edges = 0;            // band/interior cell edges
  double pi_contact = 0.0;     // contact-weighted edge count
};

std::vector<LayerFill> layer_fill(const StackAnalysis& analysis, const PrintConfig& config, const Calibration& cal);

/// Effective extrusion flow in mm^3/s.
double effective_flow(const PrintConfig& config, const Calibration& cal);

}  // namespace fdmopt::detail
