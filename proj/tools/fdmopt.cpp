// Command-line front end: evaluate, optimise, run baselines and build reports.
#include "fdmopt/calibration.hpp"
#include "fdmopt/error.hpp"
#include "fdmopt/fixtures.hpp"
#include "fdmopt/harness.hpp"
#include "fdmopt/optimizer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace fdmopt;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct Part {
  std::string name;
  TriangleMesh mesh;
};

// A mesh argument is an STL path or "fixture:<name>" for a built-in part.
Part load_part(const std::string& spec) {
  const std::string prefix = "fixture:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string name = spec.substr(prefix.size());
    for (auto& nm : fixtures::optimization_suite())
      if (nm.name == name) return {nm.name, std::move(nm.mesh)};
    if (name == "stacked_cubes") return {name, fixtures::stacked_cubes()};
    if (name == "floating_pair") return {name, fixtures::floating_pair()};
    throw ValidationError("unknown fixture '" + name + "'");
  }
  return {std::filesystem::path(spec).stem().string(), load_mesh(spec)};
}

Calibration load_cal(const std::string& path) { return path.empty() ? default_calibration() : load_calibration(path); }

struct OptimizeArgs {
  std::string provider = "scripted";
  std::uint64_t seed = 0;
  double eta = kDefaultEta;
  int iters = 40;
  int warm_start = 16;
  int budget = 2;
  bool no_examples = false;
  std::string run_config;
  RemoteProviderOptions remote;
};

// Values from a run-config JSON, overridden by flags given on the command line.
void apply_run_config(OptimizeArgs& a, const CLI::App& cmd) {
  if (a.run_config.empty()) return;
  const Json doc = Json::parse(read_text(a.run_config));
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (doc.contains(key) && cmd.count(flag) == 0) field = doc[key].get<std::decay_t<decltype(field)>>();
  };
  take("provider", "--provider", a.provider);
  take("seed", "--seed", a.seed);
  take("eta", "--eta", a.eta);
  take("iterations", "--iters", a.iters);
  take("warm_start", "--warm-start", a.warm_start);
  take("budget_actions", "--budget-actions", a.budget);
  take("model", "--model", a.remote.model);
  take("base_url", "--base-url", a.remote.base_url);
  take("temperature", "--temperature", a.remote.temperature);
  take("api_key_env", "--api-key-env", a.remote.api_key_env);
  if (doc.contains("include_examples") && cmd.count("--no-examples") == 0) a.no_examples = !doc["include_examples"].get<bool>();
}

LoopOptions loop_options(const OptimizeArgs& a) {
  LoopOptions o;
  o.seed = a.seed;
  o.eta = a.eta;
  o.iterations = a.iters;
  o.warm_start = a.warm_start;
  o.budget_actions = a.budget;
  o.include_examples = !a.no_examples;
  return o;
}

void add_optimize_flags(CLI::App* cmd, OptimizeArgs& a) {
  cmd->add_option("--provider", a.provider, "Guidance provider")->check(CLI::IsMember({"remote", "scripted", "none"}));
  cmd->add_option("--seed", a.seed, "Random seed");
  cmd->add_option("--eta", a.eta, "Guidance strength")->check(CLI::PositiveNumber);
  cmd->add_option("--iters", a.iters, "Search iterations after the warm start")->check(CLI::NonNegativeNumber);
  cmd->add_option("--warm-start", a.warm_start, "Quasi-random initial evaluations")->check(CLI::Range(2, 10000));
  cmd->add_option("--budget-actions", a.budget, "Corrective actions per iteration")->check(CLI::Range(0, 2));
  cmd->add_flag("--no-examples", a.no_examples, "Omit worked examples from the prompt");
  cmd->add_option("--model", a.remote.model, "Remote model name");
  cmd->add_option("--base-url", a.remote.base_url, "Remote chat-completion endpoint base URL");
  cmd->add_option("--temperature", a.remote.temperature, "Remote sampling temperature");
  cmd->add_option("--api-key-env", a.remote.api_key_env, "Environment variable holding the API key");
  cmd->add_option("--run-config", a.run_config, "JSON file with default values for these flags")->check(CLI::ExistingFile);
}

std::string method_name(const OptimizeArgs& a) {
  if (a.provider == "none" || a.budget == 0) return "bo";
  return a.provider + "-b" + std::to_string(a.budget);
}

RunTrace optimize_one(const Part& part, const Calibration& cal, const OptimizeArgs& a) {
  Evaluator evaluator(part.mesh, cal);
  auto provider = make_provider(a.provider, a.remote);
  return run_loop(evaluator, provider.get(), loop_options(a), part.name);
}

void print_trace_summary(const RunTrace& t) {
  std::cout << t.object << " seed " << t.seed << " (" << t.provider << ", budget " << t.budget_actions << "): ";
  if (const EvaluationReport* f = t.final_report()) {
    std::cout << "final objective " << f->objective << "\n" << to_kv_text(f->config);
  } else {
    std::cout << "no feasible configuration found\n";
  }
  if (!t.aborted.empty()) std::cout << "aborted: " << t.aborted << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided Bayesian optimisation of FDM print settings"};
  app.require_subcommand(1);
  std::string calibration_path;
  app.add_option("--calibration", calibration_path, "Calibration JSON (defaults built in)")->check(CLI::ExistingFile);

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score one configuration on a mesh");
  std::string eval_mesh, eval_config;
  bool eval_text = false;
  evaluate_cmd->add_option("mesh", eval_mesh, "STL file or fixture:<name>")->required();
  evaluate_cmd->add_option("--config", eval_config, "Configuration document (key = value or JSON)")->check(CLI::ExistingFile);
  evaluate_cmd->add_flag("--text", eval_text, "Print a short text summary instead of JSON");

  // optimize
  auto* optimize_cmd = app.add_subcommand("optimize", "Run the guided optimisation loop");
  std::string opt_mesh, opt_out;
  OptimizeArgs opt_args;
  optimize_cmd->add_option("mesh", opt_mesh, "STL file or fixture:<name>")->required();
  optimize_cmd->add_option("--out", opt_out, "Results directory for the trace and summary");
  add_optimize_flags(optimize_cmd, opt_args);

  // baseline
  auto* baseline_cmd = app.add_subcommand("baseline", "Score a single-shot baseline");
  std::string base_mesh, base_method, base_config, base_out, base_name;
  baseline_cmd->add_option("mesh", base_mesh, "STL file or fixture:<name>")->required();
  baseline_cmd->add_option("--method", base_method, "Baseline")
      ->required()
      ->check(CLI::IsMember({"default", "reorient", "external"}));
  baseline_cmd->add_option("--config", base_config, "Configuration document for --method external")->check(CLI::ExistingFile);
  baseline_cmd->add_option("--out", base_out, "Results directory to add the entry to");
  baseline_cmd->add_option("--name", base_name, "Method name in the results directory (external only)");

  // suite
  auto* suite_cmd = app.add_subcommand("suite", "Run baselines and optimisation variants over many meshes");
  std::vector<std::string> suite_meshes;
  std::string suite_out;
  int suite_seeds = 10;
  std::vector<int> suite_budgets{0, 1, 2};
  OptimizeArgs suite_args;
  suite_cmd->add_option("meshes", suite_meshes, "STL files or fixture:<name>; default is the built-in suite");
  suite_cmd->add_option("--out", suite_out, "Results directory")->required();
  suite_cmd->add_option("--seeds", suite_seeds, "Seeds per mesh")->check(CLI::Range(1, 1000));
  suite_cmd->add_option("--budgets", suite_budgets, "Action budgets to run")->check(CLI::Range(0, 2));
  add_optimize_flags(suite_cmd, suite_args);

  // compare / report
  auto* compare_cmd = app.add_subcommand("compare", "Win-rate matrix over the methods in a results directory");
  std::string compare_dir;
  double tie_tol = kTieTolerance;
  std::vector<std::string> compare_methods;
  compare_cmd->add_option("results", compare_dir, "Results directory")->required()->check(CLI::ExistingDirectory);
  compare_cmd->add_option("--tol", tie_tol, "Tie tolerance on the objective")->check(CLI::NonNegativeNumber);
  compare_cmd->add_option("--methods", compare_methods, "Restrict to these methods");

  auto* report_cmd = app.add_subcommand("report", "Summary table and best-so-far curves");
  std::string report_dir;
  report_cmd->add_option("results", report_dir, "Results directory")->required()->check(CLI::ExistingDirectory);

  auto* fixtures_cmd = app.add_subcommand("fixtures", "Write the built-in test meshes as STL files");
  std::string fixtures_dir;
  fixtures_cmd->add_option("dir", fixtures_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const Calibration cal = load_cal(calibration_path);

    if (*evaluate_cmd) {
      const Part part = load_part(eval_mesh);
      const PrintConfig config = eval_config.empty() ? default_config() : load_config_document(read_text(eval_config));
      Evaluator evaluator(part.mesh, cal);
      const EvaluationReport r = evaluator.evaluate(config, referenced_weights(evaluator));
      if (eval_text) {
        std::cout << part.name << ": objective " << r.objective << ", quality " << r.quality
                  << (r.infeasible ? " (likely to fail)" : "") << ", time " << r.time_s << " s, filament " << r.cost_g
                  << " g\n";
        for (const VetoResult& v : r.vetoes)
          if (v.triggered) std::cout << "  veto " << to_string(v.kind) << ": " << v.evidence << "\n";
      } else {
        std::cout << report_to_json(r).dump(2) << "\n";
      }
      return 0;
    }

    if (*optimize_cmd) {
      apply_run_config(opt_args, *optimize_cmd);
      const Part part = load_part(opt_mesh);
      const RunTrace t = optimize_one(part, cal, opt_args);
      if (!opt_out.empty()) {
        const std::string method = method_name(opt_args);
        write_trace(t, trace_path(opt_out, method, part.name, static_cast<int>(t.seed), ".jsonl"),
                    trace_path(opt_out, method, part.name, static_cast<int>(t.seed), ".json"));
      }
      print_trace_summary(t);
      return t.aborted.empty() ? 0 : 3;
    }

    if (*baseline_cmd) {
      const Part part = load_part(base_mesh);
      Evaluator evaluator(part.mesh, cal);
      const ObjectiveWeights w = referenced_weights(evaluator);
      MethodEntry e;
      std::string method = base_method;
      if (base_method == "default") {
        e = baseline_default(evaluator, w, part.name);
      } else if (base_method == "reorient") {
        const ReorientChoice choice = choose_orientation(evaluator);
        for (const auto& c : choice.candidates) {
          std::cout << "rotation (" << c.orientation.rx << ", " << c.orientation.ry << ", " << c.orientation.rz
                    << "): unsupported " << c.metrics.unsupported_down_area << " mm^2, bed contact "
                    << c.metrics.bed_contact_area << " mm^2\n";
        }
        e = baseline_reorient(evaluator, w, part.name);
      } else {
        if (base_config.empty()) throw ValidationError("--method external needs --config");
        e = baseline_external(evaluator, read_text(base_config), w, part.name);
        method = base_name.empty() ? "external" : base_name;
      }
      std::cout << part.name << " [" << method << "]: objective " << e.objective
                << (e.infeasible ? " (likely to fail)" : "") << (e.brim_adjusted ? ", brim added" : "") << "\n"
                << to_kv_text(e.config);
      if (!base_out.empty()) {
        std::vector<MethodResult> existing;
        MethodResult result{method, {}};
        const auto summary = std::filesystem::path(base_out) / method / "summary.json";
        if (std::filesystem::exists(summary)) result = method_result_from_json(Json::parse(read_text(summary)));
        std::erase_if(result.entries, [&](const MethodEntry& x) { return x.object == e.object; });
        result.entries.push_back(e);
        write_method_result(base_out, result);
      }
      return 0;
    }

    if (*suite_cmd) {
      apply_run_config(suite_args, *suite_cmd);
      std::vector<Part> parts;
      if (suite_meshes.empty()) {
        for (auto& nm : fixtures::optimization_suite()) parts.push_back({nm.name, std::move(nm.mesh)});
      } else {
        for (const auto& m : suite_meshes) parts.push_back(load_part(m));
      }
      MethodResult def{"default", {}}, reo{"reorient", {}};
      std::map<std::string, MethodResult> optimised;
      for (const Part& part : parts) {
        Evaluator evaluator(part.mesh, cal);
        const ObjectiveWeights w = referenced_weights(evaluator);
        def.entries.push_back(baseline_default(evaluator, w, part.name));
        reo.entries.push_back(baseline_reorient(evaluator, w, part.name));
        for (int budget : suite_budgets) {
          OptimizeArgs a = suite_args;
          a.budget = budget;
          if (budget == 0) a.provider = "none";
          auto provider = make_provider(a.provider, a.remote);
          const std::string method = method_name(a);
          optimised[method].method = method;
          for (int s = 0; s < suite_seeds; ++s) {
            a.seed = static_cast<std::uint64_t>(s);
            const RunTrace t = run_loop(evaluator, provider.get(), loop_options(a), part.name);
            write_trace(t, trace_path(suite_out, method, part.name, s, ".jsonl"),
                        trace_path(suite_out, method, part.name, s, ".json"));
            optimised[method].entries.push_back(entry_from_trace(t));
            std::cerr << part.name << " " << method << " seed " << s << ": "
                      << optimised[method].entries.back().objective << "\n";
          }
        }
      }
      write_method_result(suite_out, def);
      write_method_result(suite_out, reo);
      for (const auto& [name, r] : optimised) write_method_result(suite_out, r);
      std::cout << "wrote results for " << parts.size() << " meshes to " << suite_out << "\n";
      return 0;
    }

    if (*compare_cmd) {
      std::vector<MethodResult> results = load_results(compare_dir);
      if (!compare_methods.empty()) {
        std::erase_if(results, [&](const MethodResult& r) {
          return std::find(compare_methods.begin(), compare_methods.end(), r.method) == compare_methods.end();
        });
      }
      // Single-shot baselines have one entry per object; compare like with like.
      std::map<std::size_t, std::vector<MethodResult>> by_shape;
      for (auto& r : results) by_shape[r.entries.size()].push_back(std::move(r));
      for (const auto& [size, group] : by_shape) {
        if (group.size() < 2) continue;
        const WinRateMatrix m = win_rate_matrix(group, tie_tol);
        std::cout << m.to_text() << "\n";
        std::string stem = "win_rate";
        for (const auto& r : group) stem += "_" + r.method;
        write_text(std::filesystem::path(compare_dir) / (stem + ".csv"), m.to_csv());
      }
      return 0;
    }

    if (*report_cmd) {
      const std::vector<MethodResult> results = load_results(report_dir);
      const SummaryTable table = summarize(results);
      std::cout << table.to_text();
      write_text(std::filesystem::path(report_dir) / "summary.csv", table.to_csv());
      write_text(std::filesystem::path(report_dir) / "summary.txt", table.to_text());
      for (const auto& r : results) {
        const auto curves = load_curves(report_dir, r.method);
        if (curves.empty()) continue;
        write_text(std::filesystem::path(report_dir) / ("curve_" + r.method + ".csv"),
                   curves_to_csv(best_so_far_curves(curves)));
      }
      return 0;
    }

    if (*fixtures_cmd) {
      std::vector<fixtures::NamedMesh> meshes = fixtures::optimization_suite();
      meshes.push_back({"stacked_cubes", fixtures::stacked_cubes()});
      meshes.push_back({"floating_pair", fixtures::floating_pair()});
      for (const auto& nm : meshes) {
        write_text(std::filesystem::path(fixtures_dir) / (nm.name + ".stl"), to_binary_stl(nm.mesh));
      }
      std::cout << "wrote " << meshes.size() << " meshes to " << fixtures_dir << "\n";
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const EmptyMeshError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
