#pragma once

#include "fdmopt/config_space.hpp"
#include "fdmopt/evaluator.hpp"
#include "fdmopt/gp.hpp"
#include "fdmopt/guidance.hpp"
#include "fdmopt/guidance_compiler.hpp"
#include "fdmopt/json_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fdmopt {

inline constexpr double kDefaultEta = 4.0;

struct ProposalOptions {
  int sobol_candidates = 2048;
  int local_candidates = 256;
  double local_numeric_probability = 0.3;
  double local_numeric_sd = 0.15;
  double local_switch_probability = 0.1;
  /// Guidance is set aside for an iteration when the best guided acquisition
  /// falls below this fraction of the best unguided one. 0 disables the check.
  double exhausted_ratio = 1e-4;
};

struct Proposal {
  PrintConfig config;
  double acquisition = 0.0;  // guided when guidance was applied
  double expected_improvement = 0.0;
  double violation = 0.0;
  int candidate_index = -1;
  int pool_size = 0;         // candidates that survived freezing and de-duplication
  bool guided = false;
  std::string note;
};

/// Candidate pool of encoded configurations: Sobol points followed by local
/// perturbations of the incumbent, all decoded so they are realisable.
std::vector<ConfigVector> candidate_pool(const PrintConfig& incumbent, std::uint64_t seed,
                                         const ProposalOptions& options = {});

/// Ranks the pool by EI (or guided EI when `compiled` is given, after freezing
/// every coordinate outside the implicated set to the incumbent) and returns
/// the best decoded candidate. Candidates in `observed` are skipped; ties go to
/// the lowest index. When guidance leaves no admissible candidate the
/// unguided ranking is used and noted.
Proposal propose_next(const SurrogateState& state, const CompiledGuidance* compiled, const PrintConfig& incumbent,
                      double best, double eta, std::uint64_t seed, const std::vector<ConfigVector>& observed = {},
                      const ProposalOptions& options = {});

struct LoopOptions {
  int warm_start = 16;
  int iterations = 40;
  double eta = kDefaultEta;
  int budget_actions = 2;
  bool include_examples = true;
  int max_retries = 2;
  std::uint64_t seed = 0;
  ObjectiveWeights weights;  // references are replaced by compute_references
  ProposalOptions proposal;
  SurrogateOptions surrogate;
};

struct IterationRecord {
  int iteration = 0;         // 0 for warm start, 1..N for guided/unguided steps
  std::string phase;         // "warm_start" or "search"
  EvaluationReport report;
  std::optional<GuidanceResponse> guidance;
  std::optional<Json> audit;
  std::optional<Proposal> proposal;
  double best_so_far = 0.0;
  std::string note;
};

struct RunTrace {
  std::string object;
  std::string provider;
  std::uint64_t seed = 0;
  int budget_actions = 0;
  double eta = kDefaultEta;
  References references;
  Calibration calibration;  // constants the evaluator ran with
  std::vector<IterationRecord> records;
  std::optional<std::size_t> final_index;  // best feasible record
  std::string aborted;                     // non-empty when a geometry error stopped the run
  std::string started_at;
  std::string finished_at;
  double wall_seconds = 0.0;

  /// Best objective over warm start plus the first `iteration` search steps.
  double best_so_far_at(int iteration) const;
  std::vector<double> best_so_far_curve() const;  // index 0 = after warm start
  const EvaluationReport* final_report() const;

  /// One JSON record per line; no wall-clock fields, so equal runs are byte-identical.
  std::string to_jsonl() const;
  Json summary() const;
};

RunTrace run_loop(const Evaluator& evaluator, GuidanceProvider* provider, const LoopOptions& options,
                  const std::string& object = "part");

void write_trace(const RunTrace& trace, const std::filesystem::path& jsonl, const std::filesystem::path& summary);

}  // namespace fdmopt
