#pragma once

#include "fdmopt/config_space.hpp"
#include "fdmopt/guidance.hpp"
#include "fdmopt/json_io.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fdmopt {

enum class TemplateKind { directional, equality, range, margin, ratio, sum_cap, monotone };
enum class Aggregator { soft_and, soft_or };

std::string_view to_string(TemplateKind kind);
std::string_view to_string(Aggregator kind);

inline constexpr double kRatioEpsilon = 1e-6;

/// One atomic constraint. Template parameters are in raw parameter units;
/// `scale` converts the raw residual into units of the parameter range before
/// normalisation so that clauses on different parameters are comparable.
struct Clause {
  TemplateKind kind = TemplateKind::directional;
  std::vector<std::string> parameters;
  std::optional<std::string> category;  // equality on a one-hot coordinate
  double k = 0.0;       // directional step or sum cap
  double alpha = 0.0;   // equality target
  double lower = 0.0;   // range
  double upper = 0.0;
  double delta = 0.0;   // margin
  double beta = 0.0;    // ratio
  double anchor = 0.0;  // directional: incumbent value
  double sign = 1.0;    // directional: +1 increase, -1 decrease
  double weight = 1.0;
  double scale = 1.0;
};

/// Raw template value for the clause's referenced values (in parameter order;
/// one-hot coordinate for categorical equality). When `grad` is non-empty it
/// receives the subgradient with respect to each value.
double template_residual(const Clause& clause, std::span<const double> values, std::span<double> grad = {});

/// Raw template value evaluated on a configuration.
double clause_residual(const Clause& clause, const PrintConfig& candidate);

double normalize_residual(double rho);

/// Table-style aggregators: soft-AND 1 - prod (1 - r_i)^w_i, soft-OR prod r_i^w_i.
double aggregate_clauses(std::span<const double> normalized, std::span<const double> weights, Aggregator kind);

/// 1 - prod (1 - V_a).
double combine_actions(std::span<const double> action_violations);

/// Importance x confidence, floored at 0.25.
double action_weight(const CorrectiveAction& action);

/// Default directional step: 10% of the parameter range.
double default_step(std::string_view parameter);

struct Decomposition {
  std::vector<Clause> clauses;
  Aggregator aggregator = Aggregator::soft_and;
};

/// Rewrites one action into atomic clauses anchored at the incumbent. Throws
/// CompileError naming the action on unknown ids or malformed actions.
Decomposition decompose(const CorrectiveAction& action, const PrintConfig& incumbent,
                        const ActionCatalog& catalog = ActionCatalog::standard());

struct CompiledAction {
  CorrectiveAction action;
  Decomposition decomposition;
  std::vector<double> incumbent_residuals;  // raw template values
  double incumbent_violation = 0.0;
};

/// Immutable soft-violation functional over encoded configurations plus the
/// implicated parameter set.
class CompiledGuidance {
 public:
  static CompiledGuidance compile(const std::vector<CorrectiveAction>& actions, const PrintConfig& incumbent,
                                  const ActionCatalog& catalog = ActionCatalog::standard());

  /// V(x) in [0, 1] on an encoded vector. Numeric coordinates are read through
  /// clamp(x, 0, 1), so V is defined on the whole space. When `grad` is given
  /// it receives dV/dx (zero outside the clamp range).
  double violation(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* grad = nullptr) const;
  double violation(const PrintConfig& config) const;

  /// Parameter names in encoding order.
  const std::vector<std::string>& implicated() const { return implicated_; }
  /// Per encoded coordinate: true when it belongs to an implicated parameter.
  const std::vector<bool>& implicated_mask() const { return mask_; }
  const std::vector<CompiledAction>& actions() const { return actions_; }
  const PrintConfig& incumbent() const { return incumbent_; }

  Json audit() const;

 private:
  std::vector<CompiledAction> actions_;
  std::vector<std::string> implicated_;
  std::vector<bool> mask_;
  PrintConfig incumbent_;
};

}  // namespace fdmopt
