#pragma once

#include "fdmopt/evaluator.hpp"
#include "fdmopt/json_io.hpp"
#include "fdmopt/optimizer.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fdmopt {

inline constexpr double kTieTolerance = 1e-3;
inline constexpr double kReorientNearTie = 0.02;

/// One scored configuration for one object (and seed, for optimisation runs).
struct MethodEntry {
  std::string object;
  int seed = 0;
  double objective = 0.0;
  bool infeasible = false;
  PrintConfig config;
  bool brim_adjusted = false;
};

struct MethodResult {
  std::string method;
  std::vector<MethodEntry> entries;

  std::vector<std::string> objects() const;  // first-appearance order
  /// Median over seeds for optimisation methods; the single entry otherwise.
  double object_objective(const std::string& object) const;
  /// Likely to fail: more than half of the object's entries are infeasible.
  bool object_infeasible(const std::string& object) const;
};

Json method_result_to_json(const MethodResult& result);
MethodResult method_result_from_json(const Json& doc);

/// Evaluates `config`; when the low_bed_adhesion veto triggers, re-evaluates
/// once with a 5 mm brim and reports that result.
MethodEntry score_with_brim_rule(const Evaluator& evaluator, PrintConfig config, const ObjectiveWeights& weights,
                                 const std::string& object = "part");

/// Weights with the evaluator's time and cost references filled in.
ObjectiveWeights referenced_weights(const Evaluator& evaluator, ObjectiveWeights weights = {});

MethodEntry baseline_default(const Evaluator& evaluator, const ObjectiveWeights& weights,
                             const std::string& object = "part");

/// The six rotations mapping +X, -X, +Y, -Y, +Z, -Z of the part onto +Z.
const std::array<Orientation, 6>& axis_rotations();

struct RotationScore {
  Orientation orientation;
  SupportMetrics metrics;
};

struct ReorientChoice {
  Orientation orientation;
  std::vector<RotationScore> candidates;
};

/// Minimum unsupported downward area; candidates within 2% (relative) of it
/// are near-ties, broken by the largest bed contact, then enumeration order.
ReorientChoice choose_orientation(const Evaluator& evaluator);

MethodEntry baseline_reorient(const Evaluator& evaluator, const ObjectiveWeights& weights,
                              const std::string& object = "part");

/// Scores a supplied configuration document (key-value or JSON). Throws
/// ValidationError listing every violation when the document is invalid.
MethodEntry baseline_external(const Evaluator& evaluator, std::string_view document,
                              const ObjectiveWeights& weights, const std::string& object = "part");

struct WinRateMatrix {
  std::vector<std::string> variants;
  std::vector<std::vector<double>> p;  // p[i][j]; diagonal is NaN
  double tie_tolerance = kTieTolerance;

  /// Mean of row i over the other variants.
  double mean_win_rate(std::size_t i) const;
  std::string to_csv() const;
  std::string to_text() const;
};

/// Pairwise object-level win rates. Throws AlignmentError when variants do not
/// share the same objects and seeds.
WinRateMatrix win_rate_matrix(const std::vector<MethodResult>& variants, double tie_tolerance = kTieTolerance);

struct SummaryRow {
  std::string method;
  double median_objective = 0.0;
  double pct_best = 0.0;
  double pct_within_1 = 0.0;
  double pct_within_5 = 0.0;
  double pct_likely_fail = 0.0;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::vector<std::string> objects;
  std::string note;

  std::string to_csv() const;
  std::string to_text() const;
};

/// Per-method medians and the share of objects on which the method is best,
/// within 1% or 5% of the best listed method, or likely to fail.
SummaryTable summarize(const std::vector<MethodResult>& results);

struct CurveInput {
  std::string object;
  std::vector<double> best_so_far;
};

struct CurvePoint {
  int iteration = 0;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Mean best-so-far per iteration with a 95% bootstrap band over objects
/// (1000 resamples, fixed seed). Throws AlignmentError on unequal lengths.
std::vector<CurvePoint> best_so_far_curves(const std::vector<CurveInput>& traces, int resamples = 1000,
                                           std::uint64_t seed = 0);
std::string curves_to_csv(const std::vector<CurvePoint>& curve);

// Results directory --------------------------------------------------------------

/// <dir>/<method>/<object>.seed<k>.jsonl and .json per run, summary.json per method.
std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& method,
                                 const std::string& object, int seed, const char* extension);
void write_method_result(const std::filesystem::path& dir, const MethodResult& result);
/// Reads every <dir>/<method>/summary.json, sorted by method name.
std::vector<MethodResult> load_results(const std::filesystem::path& dir);
/// Best-so-far curves stored in the per-run summaries of one method.
std::vector<CurveInput> load_curves(const std::filesystem::path& dir, const std::string& method);

MethodEntry entry_from_trace(const RunTrace& trace);

}  // namespace fdmopt
