#include "evaluator_internal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fdmopt {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

VetoResult make(VetoKind kind, double risk, std::string evidence, const Calibration& cal) {
  VetoResult r;
  r.kind = kind;
  r.risk = std::clamp(risk, 0.0, 1.0);
  r.triggered = r.risk >= cal.veto_threshold;
  r.evidence = std::move(evidence);
  return r;
}

// Risk of a tall narrow column. Nodes are (run of identical masks, component);
// each node is scored by the height of connected material standing on it
// divided by its own width.
VetoResult slender_tower(const detail::StackAnalysis& a, const Calibration& cal) {
  const LayerStack& stack = *a.stack;
  const double lh = stack.layer_height;
  const double p = stack.pitch;

  struct Run {
    int mask;
    std::size_t first;
    std::size_t last;
  };
  std::vector<Run> runs;
  for (std::size_t l = 0; l < stack.size(); ++l) {
    if (!runs.empty() && runs.back().mask == a.layer_mask[l]) {
      runs.back().last = l;
    } else {
      runs.push_back({a.layer_mask[l], l, l});
    }
  }

  double worst_ratio = 0.0;
  double worst_width = 0.0;
  double worst_height = 0.0;
  std::vector<double> top_above;  // per component of the run above
  for (std::size_t r = runs.size(); r-- > 0;) {
    const detail::MaskInfo& m = a.masks[static_cast<std::size_t>(runs[r].mask)];
    const double run_top = (runs[r].last + 1) * lh;
    std::vector<double> top(m.comp_cells.size(), run_top);
    if (r + 1 < runs.size()) {
      const detail::MaskInfo& up = a.masks[static_cast<std::size_t>(runs[r + 1].mask)];
      for (int c : m.occupied) {
        const auto cu = static_cast<std::size_t>(c);
        const int above = up.mask->labels[cu];
        if (above == 0) continue;
        auto& t = top[static_cast<std::size_t>(m.mask->labels[cu] - 1)];
        t = std::max(t, top_above[static_cast<std::size_t>(above - 1)]);
      }
    }
    const double bottom = runs[r].first * lh;
    for (std::size_t k = 0; k < top.size(); ++k) {
      const double width = 2.0 * (m.comp_inscribed[k] - 0.5) * p;
      const double height = top[k] - bottom;
      const double ratio = height / std::max(width, 1e-9);
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst_width = width;
        worst_height = height;
      }
    }
    top_above = std::move(top);
  }
  const double risk = worst_ratio > 0.0 ? logistic((worst_ratio - cal.slender_midpoint) / cal.slender_scale) : 0.0;
  return make(VetoKind::slender_tower, risk,
              "height " + fmt(worst_height) + " mm over width " + fmt(worst_width) + " mm (ratio " +
                  fmt(worst_ratio) + ")",
              cal);
}

}  // namespace

namespace detail {

std::vector<VetoResult> vetoes(const StackAnalysis& a, std::span<const FaceSlope> faces, const PrintConfig& config,
                               const Calibration& cal) {
  std::vector<VetoResult> out;
  const LayerStack& stack = *a.stack;
  const double p = stack.pitch;
  const bool support = config.support_material;

  {
    double keep = 1.0;
    double area = 0.0;
    for (const Island& is : a.islands) {
      const double isl_area = is.cells * p * p;
      area += isl_area;
      keep *= std::exp(-isl_area * is.gap_mm / cal.island_scale);
    }
    std::string ev = std::to_string(a.islands.size()) + " unanchored region(s), " + fmt(area) + " mm^2";
    if (support && !a.islands.empty()) ev += ", held by support";
    out.push_back(make(VetoKind::unsupported_island, support ? 0.0 : 1.0 - keep, ev, cal));
  }

  out.push_back(slender_tower(a, cal));

  {
    const MaskInfo& first = a.mask_of(0);
    const double bed = first.cells * p * p;
    const double perimeter = first.boundary_edges * p;
    const double b = config.brim_width;
    const double contact = bed + b * perimeter + std::numbers::pi * b * b;
    const double ratio = a.footprint_area > 0.0 ? contact / a.footprint_area : 1.0;
    const double height = static_cast<double>(stack.size()) * stack.layer_height;
    const double aspect = contact > 0.0 ? height / std::sqrt(contact) : 0.0;
    const double risk = std::max(logistic((cal.adhesion_ratio - ratio) / cal.adhesion_ratio_scale),
                                 logistic((aspect - cal.adhesion_aspect_midpoint) / cal.adhesion_aspect_scale));
    out.push_back(make(VetoKind::low_bed_adhesion, risk,
                       "contact " + fmt(contact) + " mm^2 of footprint " + fmt(a.footprint_area) +
                           " mm^2, height/sqrt(contact) " + fmt(aspect),
                       cal));
  }

  {
    const double limit = 90.0 + cal.overhang_angle_deg;
    double total = 0.0;
    double steep = 0.0;
    for (const FaceSlope& f : faces) {
      total += f.area;
      if (f.theta_deg > limit && f.centroid_z > 1e-6) steep += f.area;
    }
    const double frac = total > 0.0 ? steep / total : 0.0;
    const double risk = support ? 0.0 : 1.0 - std::exp(-frac / cal.overhang_fraction_scale);
    out.push_back(make(VetoKind::collapsing_overhang, risk,
                       fmt(steep) + " mm^2 of downward faces (" + fmt(100.0 * frac) + "% of surface)" +
                           (support && steep > 0.0 ? ", supported" : ""),
                       cal));
  }

  {
    const double risk = support || a.max_bridge_mm <= 0.0 ? 0.0 : logistic((a.max_bridge_mm - cal.bridge_mm) / cal.bridge_scale);
    out.push_back(make(VetoKind::long_bridge, risk,
                       "longest unsupported span " + fmt(a.max_bridge_mm) + " mm" +
                           (support && a.max_bridge_mm > 0.0 ? ", supported" : ""),
                       cal));
  }
  return out;
}

}  // namespace detail

std::vector<VetoResult> run_vetoes(const LayerStack& stack, std::span<const FaceSlope> faces,
                                   const PrintConfig& config, const Calibration& cal) {
  if (stack.empty()) return {};
  return detail::vetoes(detail::analyse_stack(stack), faces, config, cal);
}

}  // namespace fdmopt
