#include "fdmopt/optimizer.hpp"

#include "fdmopt/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace fdmopt {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller on the raw engine output keeps draws identical across standard libraries.
double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

bool same(const ConfigVector& a, const ConfigVector& b) { return a.size() == b.size() && (a.array() == b.array()).all(); }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<ConfigVector> candidate_pool(const PrintConfig& incumbent, std::uint64_t seed, const ProposalOptions& o) {
  std::vector<ConfigVector> pool;
  pool.reserve(static_cast<std::size_t>(o.sobol_candidates + o.local_candidates));
  for (const PrintConfig& c : sobol_sample(o.sobol_candidates, seed)) pool.push_back(encode(c));

  std::mt19937_64 rng(mix(seed, 17));
  const ConfigVector base = encode(incumbent);
  for (int n = 0; n < o.local_candidates; ++n) {
    ConfigVector x = base;
    for (const ParamSpec& s : parameter_specs()) {
      const EncodedBlock b = encoded_block(s.name);
      if (s.kind == ParamKind::categorical) {
        if (unit(rng) >= o.local_switch_probability) continue;
        int current = 0;
        for (int j = 0; j < b.width; ++j)
          if (x[b.offset + j] > x[b.offset + current]) current = j;
        int pick = static_cast<int>(unit(rng) * (b.width - 1));
        if (pick >= current) ++pick;
        x.segment(b.offset, b.width).setZero();
        x[b.offset + pick] = 1.0;
      } else if (unit(rng) < o.local_numeric_probability) {
        x[b.offset] += o.local_numeric_sd * normal(rng);
      }
    }
    pool.push_back(encode(decode(x)));
  }
  return pool;
}

Proposal propose_next(const SurrogateState& state, const CompiledGuidance* compiled, const PrintConfig& incumbent,
                      double best, double eta, std::uint64_t seed, const std::vector<ConfigVector>& observed,
                      const ProposalOptions& options) {
  const std::vector<ConfigVector> pool = candidate_pool(incumbent, seed, options);
  const ConfigVector inc = encode(incumbent);
  const auto seen = [&](const ConfigVector& x) {
    return std::any_of(observed.begin(), observed.end(), [&](const ConfigVector& o) { return same(o, x); });
  };

  auto rank = [&](bool guided) -> std::optional<Proposal> {
    std::vector<int> index;
    std::vector<ConfigVector> xs;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      ConfigVector x = pool[i];
      if (guided) {
        const auto& mask = compiled->implicated_mask();
        for (Eigen::Index k = 0; k < x.size(); ++k)
          if (!mask[static_cast<std::size_t>(k)]) x[k] = inc[k];
        x = encode(decode(x));
        bool frozen = true;
        for (Eigen::Index k = 0; k < x.size() && frozen; ++k)
          if (!mask[static_cast<std::size_t>(k)] && x[k] != inc[k]) frozen = false;
        if (!frozen) continue;  // repair moved a frozen coordinate
      }
      if (seen(x)) continue;
      index.push_back(static_cast<int>(i));
      xs.push_back(std::move(x));
    }
    if (xs.empty()) return std::nullopt;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), inc.size());
    for (std::size_t r = 0; r < xs.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = xs[r].transpose();
    Eigen::VectorXd mu, sd;
    state.predict(m, mu, sd);
    Proposal p;
    p.guided = guided;
    p.pool_size = static_cast<int>(xs.size());
    double top = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t r = 0; r < xs.size(); ++r) {
      const double ei = expected_improvement(mu[static_cast<Eigen::Index>(r)], sd[static_cast<Eigen::Index>(r)], best);
      const double v = guided ? compiled->violation(xs[r]) : 0.0;
      const double a = guided ? guided_acquisition(ei, v, eta) : ei;
      if (a > top) {
        top = a;
        arg = r;
        p.acquisition = a;
        p.expected_improvement = ei;
        p.violation = v;
      }
    }
    p.candidate_index = index[arg];
    p.config = decode(xs[arg]);
    return p;
  };

  std::optional<Proposal> guided;
  if (compiled) guided = rank(true);
  if (guided && options.exhausted_ratio <= 0.0) return *guided;
  if (auto p = rank(false)) {
    if (!compiled) return *p;
    if (!guided) {
      p->note = "guidance left no admissible unobserved candidate; ranked unguided";
      return *p;
    }
    // A subspace the surrogate already considers exhausted would waste the evaluation.
    if (guided->acquisition < options.exhausted_ratio * p->acquisition) {
      p->note = "guided subspace exhausted (acquisition " + std::to_string(guided->acquisition) +
                " vs " + std::to_string(p->acquisition) + " unguided); ranked unguided";
      return *p;
    }
    return *guided;
  }
  if (guided) return *guided;
  Proposal p;
  p.config = decode(pool.front());
  p.candidate_index = 0;
  p.note = "every candidate was already observed";
  return p;
}

double RunTrace::best_so_far_at(int iteration) const {
  double best = std::numeric_limits<double>::infinity();
  for (const IterationRecord& r : records) {
    if (r.iteration > iteration) break;
    best = std::min(best, r.report.objective);
  }
  return best;
}

std::vector<double> RunTrace::best_so_far_curve() const {
  int last = 0;
  for (const IterationRecord& r : records) last = std::max(last, r.iteration);
  std::vector<double> curve;
  for (int i = 0; i <= last; ++i) curve.push_back(best_so_far_at(i));
  return curve;
}

const EvaluationReport* RunTrace::final_report() const {
  return final_index ? &records[*final_index].report : nullptr;
}

std::string RunTrace::to_jsonl() const {
  std::string out;
  for (const IterationRecord& r : records) {
    Json j = Json::object();
    j["iteration"] = r.iteration;
    j["phase"] = r.phase;
    j["report"] = report_to_json(r.report);
    j["best_so_far"] = r.best_so_far;
    if (r.guidance) j["guidance"] = guidance_to_json(*r.guidance);
    if (r.audit) j["compiled"] = *r.audit;
    if (r.proposal) {
      j["proposal"] = {{"acquisition", r.proposal->acquisition},
                       {"expected_improvement", r.proposal->expected_improvement},
                       {"violation", r.proposal->violation},
                       {"candidate_index", r.proposal->candidate_index},
                       {"pool_size", r.proposal->pool_size},
                       {"guided", r.proposal->guided}};
      if (!r.proposal->note.empty()) j["proposal"]["note"] = r.proposal->note;
    }
    if (!r.note.empty()) j["note"] = r.note;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Json RunTrace::summary() const {
  Json j = Json::object();
  j["object"] = object;
  j["provider"] = provider;
  j["seed"] = seed;
  j["budget_actions"] = budget_actions;
  j["eta"] = eta;
  j["references"] = {{"t_ref", references.t_ref}, {"c_ref", references.c_ref}};
  j["calibration"] = Json::parse(calibration_to_json_text(calibration));
  j["evaluations"] = records.size();
  if (const EvaluationReport* f = final_report()) {
    j["final"] = report_to_json(*f);
    j["final_objective"] = f->objective;
    j["infeasible"] = false;
  } else {
    j["final"] = nullptr;
    j["final_objective"] = nullptr;
    j["infeasible"] = true;
  }
  j["best_so_far"] = best_so_far_curve();
  if (!aborted.empty()) j["aborted"] = aborted;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["wall_seconds"] = wall_seconds;
  return j;
}

RunTrace run_loop(const Evaluator& evaluator, GuidanceProvider* provider, const LoopOptions& options,
                  const std::string& object) {
  const auto t0 = std::chrono::steady_clock::now();
  RunTrace trace;
  trace.object = object;
  trace.provider = provider ? provider->name() : "none";
  trace.seed = options.seed;
  trace.budget_actions = options.budget_actions;
  trace.eta = options.eta;
  trace.calibration = evaluator.calibration();
  trace.started_at = utc_now();

  std::vector<ConfigVector> xs;
  std::vector<double> ys;
  std::optional<Hyperparameters> last_fit;
  double best = std::numeric_limits<double>::infinity();

  auto record = [&](IterationRecord r) {
    xs.push_back(encode(r.report.config));
    ys.push_back(r.report.objective);
    best = std::min(best, r.report.objective);
    r.best_so_far = best;
    trace.records.push_back(std::move(r));
  };

  auto incumbent_index = [&]() {
    std::optional<std::size_t> feasible, any;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
      const EvaluationReport& r = trace.records[i].report;
      if (!r.infeasible && (!feasible || r.objective < trace.records[*feasible].report.objective)) feasible = i;
      if (!any || r.objective < trace.records[*any].report.objective) any = i;
    }
    return feasible ? feasible : any;
  };

  try {
    trace.references = compute_references(evaluator);
    ObjectiveWeights weights = options.weights;
    weights.t_ref = trace.references.t_ref;
    weights.c_ref = trace.references.c_ref;

    for (const PrintConfig& c : sobol_sample(options.warm_start, options.seed)) {
      IterationRecord r;
      r.phase = "warm_start";
      r.report = evaluator.evaluate(c, weights);
      record(std::move(r));
    }

    GuidanceSettings settings;
    settings.budget = options.budget_actions;
    settings.include_examples = options.include_examples;
    settings.max_retries = options.max_retries;
    const bool guided_run = provider && options.budget_actions > 0;

    for (int it = 1; it <= options.iterations; ++it) {
      IterationRecord r;
      r.iteration = it;
      r.phase = "search";
      const std::size_t inc = *incumbent_index();
      const EvaluationReport incumbent = trace.records[inc].report;

      std::optional<SurrogateState> state;
      try {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), encoded_dimension());
        for (std::size_t i = 0; i < xs.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
        const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
        SurrogateOptions so = options.surrogate;
        so.seed = mix(options.seed, 1000 + static_cast<std::uint64_t>(it));
        state = fit_surrogate(x, y, so, last_fit ? &*last_fit : nullptr);
        last_fit = state->hyperparameters();
      } catch (const FitError& e) {
        r.note = std::string("surrogate fit failed: ") + e.what();
      }

      std::optional<CompiledGuidance> compiled;
      if (guided_run) {
        try {
          r.guidance = request_guidance(provider, incumbent, settings);
        } catch (const TransportError& e) {
          r.guidance = GuidanceResponse::none(std::string("transport error: ") + e.what());
        }
        if (!r.guidance->sentinel) {
          try {
            compiled = CompiledGuidance::compile(r.guidance->actions, incumbent.config);
            r.audit = compiled->audit();
          } catch (const CompileError& e) {
            r.note = std::string("guidance could not be compiled: ") + e.what();
          }
        }
      }

      PrintConfig next;
      if (state) {
        r.proposal = propose_next(*state, compiled ? &*compiled : nullptr, incumbent.config, best, options.eta,
                                  mix(options.seed, static_cast<std::uint64_t>(it)), xs, options.proposal);
        next = r.proposal->config;
      } else {
        next = sobol_sample(options.warm_start + it, options.seed).back();
      }
      r.report = evaluator.evaluate(next, weights);
      record(std::move(r));
    }
  } catch (const GeometryError& e) {
    trace.aborted = e.what();
  }

  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const EvaluationReport& r = trace.records[i].report;
    if (!r.infeasible && (!trace.final_index || r.objective < trace.records[*trace.final_index].report.objective)) {
      trace.final_index = i;
    }
  }
  trace.finished_at = utc_now();
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

void write_trace(const RunTrace& trace, const std::filesystem::path& jsonl, const std::filesystem::path& summary) {
  if (jsonl.has_parent_path()) std::filesystem::create_directories(jsonl.parent_path());
  if (summary.has_parent_path()) std::filesystem::create_directories(summary.parent_path());
  {
    std::ofstream out(jsonl, std::ios::binary);
    if (!out) throw Error("cannot write " + jsonl.string());
    out << trace.to_jsonl();
  }
  std::ofstream out(summary, std::ios::binary);
  if (!out) throw Error("cannot write " + summary.string());
  out << trace.summary().dump(2) << '\n';
}

}  // namespace fdmopt
