#pragma once

#include "fdmopt/calibration.hpp"
#include "fdmopt/config_space.hpp"
#include "fdmopt/mesh.hpp"

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace fdmopt {

/// Objective weights plus the bounded-normalisation references.
struct ObjectiveWeights {
  double w_t = 0.1;
  double w_c = 0.1;
  double w_q = 0.8;
  double t_ref = 1.0;  // seconds
  double c_ref = 1.0;  // grams

  /// Throws ValidationError on negative weights, zero total or non-positive references.
  void validate() const;
};

enum class VetoKind { unsupported_island, slender_tower, low_bed_adhesion, collapsing_overhang, long_bridge };
inline constexpr std::array<VetoKind, 5> kVetoKinds = {VetoKind::unsupported_island, VetoKind::slender_tower,
                                                       VetoKind::low_bed_adhesion, VetoKind::collapsing_overhang,
                                                       VetoKind::long_bridge};
std::string_view to_string(VetoKind kind);

struct VetoResult {
  VetoKind kind = VetoKind::unsupported_island;
  bool triggered = false;
  double risk = 0.0;
  std::string evidence;
};

enum class PenaltyKind { staircasing, strength, zbond, perimeter_infill, xy_distortion, stringing, support_removal };
inline constexpr std::array<PenaltyKind, 7> kPenaltyKinds = {
    PenaltyKind::staircasing,   PenaltyKind::strength,  PenaltyKind::zbond,          PenaltyKind::perimeter_infill,
    PenaltyKind::xy_distortion, PenaltyKind::stringing, PenaltyKind::support_removal};
std::string_view to_string(PenaltyKind kind);

/// Penalty groups: surface (S), functional (F), post-processing (P).
enum class PenaltyGroup { surface = 0, functional = 1, post_processing = 2 };
PenaltyGroup group_of(PenaltyKind kind);

struct PenaltyReport {
  double stair = 0.0;
  double strength = 0.0;
  double zbond = 0.0;
  double pi = 0.0;
  double xy = 0.0;
  double stringing = 0.0;
  double support = 0.0;

  double get(PenaltyKind kind) const;
  void set(PenaltyKind kind, double value);
};

struct QualityBreakdown {
  double quality = 0.0;
  bool infeasible = false;
  std::array<double, 3> group_scores{};
  std::array<double, 3> excess{};
};

struct EvaluationReport {
  PrintConfig config;
  double objective = 0.0;
  double time_s = 0.0;
  double cost_g = 0.0;
  double quality = 0.0;
  bool infeasible = false;
  std::vector<VetoResult> vetoes;
  PenaltyReport penalties;
  std::array<double, 3> group_scores{};
  std::array<double, 3> excess{};
  int layer_count = 0;

  const VetoResult* veto(VetoKind kind) const;
  bool triggered(VetoKind kind) const;
};

// Algebra -------------------------------------------------------------------

double logistic(double x);
/// (1/s) log(mean exp(s v)), computed stably.
double log_mean_exp(std::span<const double> values, double sharpness);
double quality_from_excess(const std::array<double, 3>& excess, double lambda);
QualityBreakdown quality_scalar(const PenaltyReport& penalties, const std::vector<VetoResult>& vetoes,
                                const Calibration& cal = default_calibration());
double objective(double time_s, double cost_g, double quality, const ObjectiveWeights& weights);

// Time and cost ---------------------------------------------------------------

struct TimeCost {
  double time_s = 0.0;
  double cost_g = 0.0;
  double part_volume_mm3 = 0.0;
  double support_volume_mm3 = 0.0;
  double brim_volume_mm3 = 0.0;
};

/// Throws GeometryError on an empty stack.
TimeCost estimate_time_cost(const LayerStack& stack, const PrintConfig& config,
                            const Calibration& cal = default_calibration());

// Penalties -------------------------------------------------------------------

double penalty_staircase(std::span<const FaceSlope> faces, double layer_height,
                         const Calibration& cal = default_calibration());
double strength_index(const PrintConfig& config, const Calibration& cal = default_calibration());
double penalty_strength(const PrintConfig& config, const Calibration& cal = default_calibration());

struct ZBondCues {
  double contact = 0.0;
  double thermal = 0.0;
  double flow = 0.0;
};
ZBondCues zbond_cues(const PrintConfig& config, const LayerStack& stack, const Calibration& cal = default_calibration());
double zbond_from_cues(const ZBondCues& cues, bool load_along_z, const Calibration& cal = default_calibration());
double penalty_zbond(const PrintConfig& config, const LayerStack& stack, bool load_along_z = false,
                     const Calibration& cal = default_calibration());

double penalty_perimeter_infill(const LayerStack& stack, const PrintConfig& config,
                                const Calibration& cal = default_calibration());

struct FootprintStats {
  double perimeter_mm = 0.0;     // first-layer outline length
  double area_mm2 = 0.0;         // first-layer area
  double area_growth_mm2 = 0.0;  // area of the layer at growth_height_mm
};
FootprintStats footprint_stats(const LayerStack& stack, const Calibration& cal = default_calibration());
double penalty_xy(const PrintConfig& config, const FootprintStats& footprint,
                  const Calibration& cal = default_calibration());

/// Free-space travel fraction before the logistic map.
double stringing_fraction(const LayerStack& stack, const PrintConfig& config,
                          const Calibration& cal = default_calibration());
double stringing_from_fraction(double fraction, const Calibration& cal = default_calibration());
double penalty_stringing(const LayerStack& stack, const PrintConfig& config,
                         const Calibration& cal = default_calibration());
double penalty_support_removal(const LayerStack& stack, const PrintConfig& config,
                               const Calibration& cal = default_calibration());

std::vector<VetoResult> run_vetoes(const LayerStack& stack, std::span<const FaceSlope> faces,
                                   const PrintConfig& config, const Calibration& cal = default_calibration());

// Whole-part evaluation ---------------------------------------------------------

/// Geometry that depends only on the build orientation.
struct OrientedPart {
  TriangleMesh mesh;
  VoxelGrid grid;
  std::vector<FaceSlope> slopes;
};

/// Scores configurations for one mesh. Oriented geometry is cached, so reuse
/// one instance across many configurations. Thread-safe.
class Evaluator {
 public:
  /// `load_axis` is an optional load direction in the mesh frame.
  explicit Evaluator(TriangleMesh mesh, Calibration cal = default_calibration(),
                     std::optional<Vec3> load_axis = std::nullopt);

  EvaluationReport evaluate(const PrintConfig& config, const ObjectiveWeights& weights) const;
  TimeCost time_cost(const PrintConfig& config) const;
  std::shared_ptr<const OrientedPart> oriented(const Orientation& orientation) const;

  const TriangleMesh& mesh() const { return mesh_; }
  const Calibration& calibration() const { return cal_; }
  const std::optional<Vec3>& load_axis() const { return load_axis_; }

 private:
  TriangleMesh mesh_;
  Calibration cal_;
  std::optional<Vec3> load_axis_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<int, int, int>, std::shared_ptr<const OrientedPart>> cache_;
};

EvaluationReport evaluate(const TriangleMesh& mesh, const PrintConfig& config, const ObjectiveWeights& weights,
                          const Calibration& cal = default_calibration());

struct References {
  double t_ref = 0.0;
  double c_ref = 0.0;
};

/// Medians of time and cost over sobol_sample(32, 0).
References compute_references(const Evaluator& evaluator);
References compute_references(const TriangleMesh& mesh, const Calibration& cal = default_calibration());

}  // namespace fdmopt
