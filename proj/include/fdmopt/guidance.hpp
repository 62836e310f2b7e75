#pragma once

#include "fdmopt/config_space.hpp"
#include "fdmopt/evaluator.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fdmopt {

enum class ActionMode { increase, decrease, switch_to };
std::string_view to_string(ActionMode mode);

struct CatalogEntry {
  std::string id;
  std::vector<std::string> parameters;
  bool categorical = false;   // switch actions; otherwise directional
  bool disjunctive = false;   // multi-parameter entries satisfied by any one clause
  std::string description;
};

/// Closed list of corrective actions a provider may choose from.
class ActionCatalog {
 public:
  explicit ActionCatalog(std::vector<CatalogEntry> entries);
  /// One entry per tunable parameter plus three composite actions.
  static const ActionCatalog& standard();

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const CatalogEntry* find(std::string_view id) const;

 private:
  std::vector<CatalogEntry> entries_;
};

enum class Importance { low, normal, high };

struct CorrectiveAction {
  std::string id;
  ActionMode mode = ActionMode::increase;
  std::optional<double> magnitude;
  std::optional<std::string> target;  // category name for switch actions
  Importance importance = Importance::normal;
  std::optional<double> confidence;   // (0, 1]
  std::string rationale;

  bool operator==(const CorrectiveAction&) const = default;
};

/// Names a provider may give as the primary issue: every veto and penalty.
std::vector<std::string> diagnostic_names();

struct GuidanceResponse {
  std::string primary_issue;
  std::vector<CorrectiveAction> actions;
  std::string raw;
  /// Set when no usable guidance was obtained; the loop then runs unguided.
  bool sentinel = false;
  int attempts = 0;
  std::string note;

  static GuidanceResponse none(std::string note);
};

/// Parses and validates a provider reply. Accepts surrounding prose: the JSON
/// object spans the first '{' to the last '}'. Throws ValidationError naming
/// the first schema violation.
GuidanceResponse parse_guidance_reply(std::string_view text, const ActionCatalog& catalog, int budget);
std::string guidance_to_json_text(const GuidanceResponse& response);

std::string system_prompt();
std::string build_prompt(const EvaluationReport& report, const ActionCatalog& catalog, bool include_examples,
                         int budget);

/// A diagnostic with its severity; vetoes sort ahead of penalties.
struct RankedDiagnostic {
  std::string name;
  bool veto = false;
  double value = 0.0;      // risk or penalty
  double severity = 0.0;   // ordering key within its class
};
std::vector<RankedDiagnostic> rank_diagnostics(const EvaluationReport& report,
                                               const Calibration& cal = default_calibration());

struct GuidanceRequest {
  const EvaluationReport* report = nullptr;
  std::string system;
  std::string user;
  int budget = 2;
};

class GuidanceProvider {
 public:
  virtual ~GuidanceProvider() = default;
  virtual std::string name() const = 0;
  /// Returns raw reply text. May throw TransportError.
  virtual std::string reply(const GuidanceRequest& request) = 0;
};

/// Deterministic rule table standing in for a human expert.
GuidanceResponse scripted_guidance(const EvaluationReport& report, int budget,
                                   const Calibration& cal = default_calibration());

class ScriptedProvider final : public GuidanceProvider {
 public:
  explicit ScriptedProvider(Calibration cal = default_calibration()) : cal_(std::move(cal)) {}
  std::string name() const override { return "scripted"; }
  std::string reply(const GuidanceRequest& request) override;

 private:
  Calibration cal_;
};

struct RemoteProviderOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  std::string api_key_env = "FDMOPT_API_KEY";
  int timeout_s = 120;
};

/// Chat-completion style HTTP provider: POST {base_url}/chat/completions.
class RemoteProvider final : public GuidanceProvider {
 public:
  explicit RemoteProvider(RemoteProviderOptions options);
  std::string name() const override { return "remote"; }
  std::string reply(const GuidanceRequest& request) override;

 private:
  RemoteProviderOptions options_;
};

/// "none", "scripted" or "remote". Returns nullptr for "none".
std::unique_ptr<GuidanceProvider> make_provider(std::string_view kind, const RemoteProviderOptions& remote = {});

struct GuidanceSettings {
  int budget = 2;
  bool include_examples = true;
  int max_retries = 2;
};

/// Builds the prompt, queries the provider and validates the reply, retrying
/// with an error-correction suffix. Returns the sentinel when `provider` is
/// null, the budget is 0, or every attempt fails validation. TransportError
/// propagates to the caller.
GuidanceResponse request_guidance(GuidanceProvider* provider, const EvaluationReport& report,
                                  const GuidanceSettings& settings,
                                  const ActionCatalog& catalog = ActionCatalog::standard());

}  // namespace fdmopt
