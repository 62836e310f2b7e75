#pragma once

#include "fdmopt/evaluator.hpp"
#include "stack_analysis.hpp"

namespace fdmopt::detail {

TimeCost time_cost(const StackAnalysis& a, const std::vector<LayerFill>& fill, const PrintConfig& config,
                   const Calibration& cal);
ZBondCues zbond_cues(const PrintConfig& config, const std::vector<LayerFill>& fill, const Calibration& cal);
double perimeter_infill(const std::vector<LayerFill>& fill);
FootprintStats footprint(const StackAnalysis& a, const Calibration& cal);
double stringing_fraction(const StackAnalysis& a, const std::vector<LayerFill>& fill, const PrintConfig& config,
                          const Calibration& cal);
double support_removal(const StackAnalysis& a, const PrintConfig& config, const Calibration& cal);
std::vector<VetoResult> vetoes(const StackAnalysis& a, std::span<const FaceSlope> faces, const PrintConfig& config,
                               const Calibration& cal);

}  // namespace fdmopt::detail
