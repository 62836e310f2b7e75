// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 1 2 3`.

#include "fdmopt/error.hpp"
#include "fdmopt/fixtures.hpp"
#include "fdmopt/guidance_compiler.hpp"
#include "fdmopt/harness.hpp"
#include "fdmopt/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace fdmopt;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks with context; the first few go into the summary line.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) {
      ++failed_;
      if (failed_ <= 3) failures_ << (failed_ > 1 ? "; " : "") << what;
    }
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os.precision(15);
    os << what << " got " << got << " want " << want;
    expect(std::abs(got - want) <= tol, os.str());
  }
  Outcome outcome(const std::string& ok_detail) const {
    if (failed_ == 0) return {true, ok_detail + " (" + std::to_string(checks_) + " checks)"};
    return {false, std::to_string(failed_) + "/" + std::to_string(checks_) + " checks failed: " + failures_.str()};
  }

 private:
  int checks_ = 0;
  int failed_ = 0;
  std::ostringstream failures_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// 1. Residual templates, aggregators, combination and V range ------------------

double tr(TemplateKind kind, std::initializer_list<double> values, const std::function<void(Clause&)>& set) {
  Clause c;
  c.kind = kind;
  set(c);
  const std::vector<double> v(values);
  return template_residual(c, v);
}

Outcome criterion_compiler() {
  Checker ck;
  const double tol = 1e-12;
  using K = TemplateKind;
  // Directional: ReLU(k - sign * (u - anchor)).
  ck.near(tr(K::directional, {0.25}, [](Clause& c) { c.k = 0.1; c.anchor = 0.2; }), 0.05, tol, "directional 1");
  ck.near(tr(K::directional, {0.40}, [](Clause& c) { c.k = 0.1; c.anchor = 0.2; }), 0.0, tol, "directional 2");
  ck.near(tr(K::directional, {3.0}, [](Clause& c) { c.k = 2.0; c.anchor = 4.0; c.sign = -1.0; }), 1.0, tol,
          "directional 3");
  // Equality: (u - alpha)^2.
  ck.near(tr(K::equality, {0.0}, [](Clause& c) { c.alpha = 1.0; }), 1.0, tol, "equality 1");
  ck.near(tr(K::equality, {1.0}, [](Clause& c) { c.alpha = 1.0; }), 0.0, tol, "equality 2");
  ck.near(tr(K::equality, {2.5}, [](Clause& c) { c.alpha = 1.0; }), 2.25, tol, "equality 3");
  // Range: ReLU(L - u) + ReLU(u - U).
  ck.near(tr(K::range, {5.0}, [](Clause& c) { c.lower = 2; c.upper = 4; }), 1.0, tol, "range 1");
  ck.near(tr(K::range, {3.0}, [](Clause& c) { c.lower = 2; c.upper = 4; }), 0.0, tol, "range 2");
  ck.near(tr(K::range, {0.5}, [](Clause& c) { c.lower = 2; c.upper = 4; }), 1.5, tol, "range 3");
  // Margin: ReLU((v + delta) - u).
  ck.near(tr(K::margin, {1.0, 1.0}, [](Clause& c) { c.delta = 0.5; }), 0.5, tol, "margin 1");
  ck.near(tr(K::margin, {2.0, 1.0}, [](Clause& c) { c.delta = 0.5; }), 0.0, tol, "margin 2");
  ck.near(tr(K::margin, {0.0, 3.0}, [](Clause& c) { c.delta = 0.25; }), 3.25, tol, "margin 3");
  // Ratio: (u / (v + 1e-6) - beta)^2.
  const auto ratio = [](double u, double v, double b) { return (u / (v + 1e-6) - b) * (u / (v + 1e-6) - b); };
  ck.near(tr(K::ratio, {2.0, 1.0}, [](Clause& c) { c.beta = 1.5; }), ratio(2, 1, 1.5), tol, "ratio 1");
  ck.near(tr(K::ratio, {2.0, 1.0}, [](Clause& c) { c.beta = 1.5; }), 0.25, 1e-5, "ratio 1 approx");
  ck.near(tr(K::ratio, {3.0, 2.0}, [](Clause& c) { c.beta = 1.5; }), ratio(3, 2, 1.5), tol, "ratio 2");
  ck.near(tr(K::ratio, {1.0, 0.0}, [](Clause& c) { c.beta = 0.0; }), 1e12, 1e-3, "ratio 3");
  // Sum cap: ReLU(sum u - k).
  ck.near(tr(K::sum_cap, {1.0, 2.0, 1.5}, [](Clause& c) { c.k = 3.0; }), 1.5, tol, "sum cap 1");
  ck.near(tr(K::sum_cap, {1.0, 1.0}, [](Clause& c) { c.k = 3.0; }), 0.0, tol, "sum cap 2");
  ck.near(tr(K::sum_cap, {4.0}, [](Clause& c) { c.k = 1.0; }), 3.0, tol, "sum cap 3");
  // Monotone: sum ReLU(u_i - u_{i+1}).
  ck.near(tr(K::monotone, {3, 2, 5}, [](Clause&) {}), 1.0, tol, "monotone 1");
  ck.near(tr(K::monotone, {1, 2, 3}, [](Clause&) {}), 0.0, tol, "monotone 2");
  ck.near(tr(K::monotone, {5, 3, 4, 1}, [](Clause&) {}), 5.0, tol, "monotone 3");

  // Normalisation and aggregators.
  ck.near(normalize_residual(0.0), 0.0, tol, "normalize 0");
  ck.near(normalize_residual(1.0), 0.5, tol, "normalize 1");
  ck.near(normalize_residual(3.0), 0.75, tol, "normalize 3");
  const auto agg = [](std::vector<double> r, std::vector<double> w, Aggregator k) { return aggregate_clauses(r, w, k); };
  ck.near(agg({0.3}, {1}, Aggregator::soft_and), 0.3, tol, "soft-and single");
  ck.near(agg({0.5, 0.5}, {1, 1}, Aggregator::soft_and), 0.75, tol, "soft-and pair");
  ck.near(agg({0.5, 0.2}, {2, 1}, Aggregator::soft_and), 1.0 - 0.25 * 0.8, tol, "soft-and weighted");
  ck.near(agg({0.5, 0.0}, {1, 1}, Aggregator::soft_or), 0.0, tol, "soft-or satisfied");
  ck.near(agg({0.5, 0.4}, {1, 1}, Aggregator::soft_or), 0.2, tol, "soft-or pair");
  ck.near(agg({0.5, 0.4}, {2, 1}, Aggregator::soft_or), 0.1, tol, "soft-or weighted");
  ck.near(combine_actions(std::vector<double>{0.2, 0.5}), 0.6, tol, "combine pair");
  ck.near(combine_actions(std::vector<double>{0.37}), 0.37, tol, "combine single");
  ck.near(combine_actions(std::vector<double>{0.0, 0.0, 0.1}), 0.1, tol, "combine zeros");

  // V in [0, 1] under random action sets and random candidates.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  const auto& entries = ActionCatalog::standard().entries();
  const auto incumbents = sobol_sample(50, 99);
  int in_range = 0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    std::vector<CorrectiveAction> acts;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int a = 0; a < n; ++a) {
      const CatalogEntry& e = entries[rng() % entries.size()];
      CorrectiveAction act;
      act.id = e.id;
      act.importance = static_cast<Importance>(rng() % 3);
      if (rng() % 2) act.confidence = 0.05 + 0.95 * (static_cast<double>(rng() % 1000) / 1000.0);
      if (e.categorical) {
        const auto& cats = parameter_spec(e.parameters.front()).categories;
        act.mode = ActionMode::switch_to;
        act.target = std::string(cats[rng() % cats.size()]);
      } else {
        act.mode = rng() % 2 ? ActionMode::increase : ActionMode::decrease;
        if (rng() % 2) act.magnitude = 0.01 + static_cast<double>(rng() % 500) / 100.0;
      }
      acts.push_back(std::move(act));
    }
    const auto g = CompiledGuidance::compile(acts, incumbents[static_cast<std::size_t>(t) % incumbents.size()]);
    Eigen::VectorXd x(encoded_dimension());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    const double v = g.violation(x);
    in_range += v >= 0.0 && v <= 1.0 && std::isfinite(v);
  }
  ck.expect(in_range == draws, "V outside [0, 1] on " + std::to_string(draws - in_range) + " draws");
  return ck.outcome("7 templates x 3 cases, 2 aggregators x 3 cases, V in [0,1] on 10^4 draws");
}

// 2. Quality scalar and objective --------------------------------------------------

Outcome criterion_evaluator_algebra() {
  Checker ck;
  const double tol = 1e-12;
  ObjectiveWeights w;
  w.t_ref = 600.0;
  w.c_ref = 12.0;
  ck.near(objective(600.0, 12.0, 0.0, w), 0.10, tol, "Obj at references");
  ck.near(objective(0.0, 0.0, 1.0, w), 0.8, tol, "Obj zero time and cost");
  ck.near(objective(1200.0, 12.0, 0.25, w), 0.1 * 2.0 / 3.0 + 0.05 + 0.2, tol, "Obj 2 t_ref");
  ck.near(quality_scalar(PenaltyReport{}, {}).quality, 0.0, tol, "Q all zero");
  ck.near(quality_from_excess({1.0, 0.0, 0.0}, 0.5), 1.0, tol, "Q e=(1,0,0)");
  ck.near(quality_from_excess({0.4, 0.2, 0.0}, 0.5), 0.46, tol, "Q e=(0.4,0.2,0)");

  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad_range = 0;
  int bad_max = 0;
  for (int t = 0; t < 10000; ++t) {
    PenaltyReport p;
    for (PenaltyKind k : kPenaltyKinds) p.set(k, u(rng));
    const QualityBreakdown q = quality_scalar(p, {});
    if (!(q.quality >= 0.0 && q.quality <= 1.0) || q.infeasible) ++bad_range;
    Calibration zero = default_calibration();
    zero.lambda = 0.0;
    const QualityBreakdown qz = quality_scalar(p, {}, zero);
    const double mx = *std::max_element(qz.excess.begin(), qz.excess.end());
    if (std::abs(qz.quality - mx) > tol) ++bad_max;
  }
  ck.expect(bad_range == 0, "Q outside [0,1] on " + std::to_string(bad_range) + " draws");
  ck.expect(bad_max == 0, "Q != max excess at lambda 0 on " + std::to_string(bad_max) + " draws");
  return ck.outcome("substitution examples exact, 10^4 random penalty draws");
}

// 3. Guided acquisition identities and hard freezing ---------------------------------

SurrogateState toy_surrogate(double scale) {
  const auto configs = sobol_sample(12, 4);
  Eigen::MatrixXd x(12, encoded_dimension());
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    const PrintConfig& c = configs[static_cast<std::size_t>(i)];
    x.row(i) = encode(c).transpose();
    y[i] = scale * (c.layer_height + 0.1 * c.perimeters + 0.2 * c.infill_density);
  }
  Hyperparameters h;
  h.lengthscales = Eigen::VectorXd::Constant(encoded_dimension(), 0.8);
  return condition_surrogate(x, y, h);
}

std::size_t incumbent_before(const RunTrace& t, std::size_t end) {
  std::optional<std::size_t> feasible, any;
  for (std::size_t i = 0; i < end; ++i) {
    const EvaluationReport& r = t.records[i].report;
    if (!r.infeasible && (!feasible || r.objective < t.records[*feasible].report.objective)) feasible = i;
    if (!any || r.objective < t.records[*any].report.objective) any = i;
  }
  return feasible ? *feasible : *any;
}

Outcome criterion_acquisition() {
  Checker ck;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10000; ++t) {
    const double a = 2.0 * u(rng), v = u(rng), eta = 10.0 * u(rng) + 1e-3;
    ck.expect(guided_acquisition(a, 0.0, eta) == a, "V = 0 changes alpha");
    ck.expect(guided_acquisition(a, v, eta) <= a, "guided above unguided");
  }

  // Fixed 10-candidate pools: scaling alpha by 10^3 leaves the argmax alone.
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> a(10), v(10);
    for (int i = 0; i < 10; ++i) {
      a[static_cast<std::size_t>(i)] = u(rng);
      v[static_cast<std::size_t>(i)] = u(rng);
    }
    auto arg = [&](double s) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < 10; ++i)
        if (guided_acquisition(s * a[i], v[i], kDefaultEta) > guided_acquisition(s * a[best], v[best], kDefaultEta))
          best = i;
      return best;
    };
    ck.expect(arg(1.0) == arg(1e3), "argmax moved under alpha scaling");
  }
  const PrintConfig inc = default_config();
  CorrectiveAction lower;
  lower.id = "layer_height";
  lower.mode = ActionMode::decrease;
  CorrectiveAction gyroid;
  gyroid.id = "infill_pattern";
  gyroid.mode = ActionMode::switch_to;
  gyroid.target = "gyroid";
  const auto g = CompiledGuidance::compile({lower, gyroid}, inc);
  ProposalOptions ten;
  ten.sobol_candidates = 8;
  ten.local_candidates = 2;
  ten.exhausted_ratio = 0.0;
  const SurrogateState s1 = toy_surrogate(1.0), s2 = toy_surrogate(1e3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Proposal a = propose_next(s1, &g, inc, 0.3, kDefaultEta, seed, {}, ten);
    const Proposal b = propose_next(s2, &g, inc, 300.0, kDefaultEta, seed, {}, ten);
    ck.expect(a.candidate_index == b.candidate_index, "pool argmax moved under objective scaling");
  }

  // Freezing on every guided iteration of a fixture run.
  const Evaluator ev(fixtures::l_bracket());
  ScriptedProvider provider;
  LoopOptions o;
  o.seed = 2;
  const RunTrace t = run_loop(ev, &provider, o, "l_bracket");
  int guided = 0;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const IterationRecord& r = t.records[i];
    if (!r.proposal || !r.proposal->guided) continue;
    ++guided;
    const std::set<std::string> implicated((*r.audit)["implicated"].begin(), (*r.audit)["implicated"].end());
    const ConfigVector before = encode(t.records[incumbent_before(t, i)].report.config);
    const ConfigVector after = encode(r.report.config);
    for (const ParamSpec& spec : parameter_specs()) {
      if (implicated.count(std::string(spec.name))) continue;
      const EncodedBlock b = encoded_block(spec.name);
      ck.expect(before.segment(b.offset, b.width) == after.segment(b.offset, b.width),
                "iteration " + std::to_string(r.iteration) + " moved frozen " + std::string(spec.name));
    }
  }
  ck.expect(guided > 0, "fixture run had no guided iterations");
  return ck.outcome("identities on 10^4 draws, pool argmax scale-invariant, " + std::to_string(guided) +
                    " guided iterations frozen outside the implicated set");
}

// 4-6. Optimisation grid ------------------------------------------------------------

struct GridRun {
  std::string object;
  int seed = 0;
  double final_objective = 0.0;
  bool final_feasible = false;
  int triggered_vetoes = 0;
  double best_at_20 = 0.0;
  double best_at_40 = 0.0;
};

struct Grid {
  std::map<int, std::vector<GridRun>> runs;  // by action budget; 0 = unguided
  std::map<int, double> seconds;
  std::vector<std::string> meshes;
};

const Grid& optimisation_grid() {
  static const Grid grid = [] {
    Grid g;
    const auto suite = fixtures::optimization_suite();
    for (const auto& m : suite) g.meshes.push_back(m.name);
    for (int budget : {0, 1, 2}) {
      const auto t0 = std::chrono::steady_clock::now();
      ScriptedProvider provider;
      for (const auto& m : suite) {
        const Evaluator ev(m.mesh);
        for (int seed = 0; seed < 10; ++seed) {
          LoopOptions o;
          o.seed = static_cast<std::uint64_t>(seed);
          o.budget_actions = budget;
          const RunTrace t = run_loop(ev, budget > 0 ? &provider : nullptr, o, m.name);
          GridRun r;
          r.object = m.name;
          r.seed = seed;
          const EvaluationReport* f = t.final_report();
          r.final_feasible = f != nullptr;
          r.final_objective = f ? f->objective : std::numeric_limits<double>::infinity();
          if (f)
            for (const VetoResult& v : f->vetoes) r.triggered_vetoes += v.triggered;
          r.best_at_20 = t.best_so_far_at(20);
          r.best_at_40 = t.best_so_far_at(40);
          g.runs[budget].push_back(r);
        }
      }
      g.seconds[budget] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << "  grid: budget " << budget << " finished in " << fmt(g.seconds[budget], 1) << " s\n";
    }
    return g;
  }();
  return grid;
}

double per_mesh_median(const std::vector<GridRun>& runs, const std::string& mesh) {
  std::vector<double> v;
  for (const auto& r : runs)
    if (r.object == mesh) v.push_back(r.final_objective);
  return median(v);
}

Outcome criterion_guided_beats_unguided() {
  const Grid& g = optimisation_grid();
  const auto& guided = g.runs.at(2);
  const auto& plain = g.runs.at(0);
  std::vector<double> g20, u40;
  for (const auto& r : guided) g20.push_back(r.best_at_20);
  for (const auto& r : plain) u40.push_back(r.best_at_40);
  const double mg = median(g20), mu = median(u40);
  int wins = 0;
  for (const auto& m : g.meshes) wins += per_mesh_median(guided, m) < per_mesh_median(plain, m);
  const double share = static_cast<double>(wins) / static_cast<double>(g.meshes.size());
  const bool pass = mg <= mu && share >= 0.7;
  std::ostringstream os;
  os << "guided median best@20 " << fmt(mg) << " vs unguided best@40 " << fmt(mu) << ", guided final median lower on "
     << wins << "/" << g.meshes.size() << " meshes (grid " << fmt(g.seconds.at(0) + g.seconds.at(2), 0) << " s)";
  return {pass, os.str()};
}

Outcome criterion_no_likely_fails() {
  const Grid& g = optimisation_grid();
  int total = 0, bad = 0;
  std::ostringstream where;
  for (const auto& [budget, runs] : g.runs) {
    for (const auto& r : runs) {
      ++total;
      if (!r.final_feasible || r.triggered_vetoes > 0) {
        if (bad++ < 3) where << " b" << budget << ":" << r.object << "/" << r.seed;
      }
    }
  }
  std::ostringstream os;
  os << bad << " of " << total << " final recommendations with a triggered veto (budgets 0, 1, 2)" << where.str();
  return {bad == 0, os.str()};
}

Outcome criterion_budget_ordering() {
  const Grid& g = optimisation_grid();
  std::vector<MethodResult> variants;
  for (int budget : {0, 1, 2}) {
    MethodResult m{"b" + std::to_string(budget), {}};
    for (const auto& r : g.runs.at(budget)) {
      MethodEntry e;
      e.object = r.object;
      e.seed = r.seed;
      e.objective = r.final_objective;
      e.infeasible = !r.final_feasible;
      m.entries.push_back(e);
    }
    variants.push_back(std::move(m));
  }
  const WinRateMatrix w = win_rate_matrix(variants);
  const double r0 = w.mean_win_rate(0), r1 = w.mean_win_rate(1), r2 = w.mean_win_rate(2);
  std::ostringstream os;
  os << "mean win rates b2 " << fmt(r2, 3) << " >= b1 " << fmt(r1, 3) << " >= b0 " << fmt(r0, 3) << " (P[b2][b1] "
     << fmt(w.p[2][1], 2) << ", P[b1][b0] " << fmt(w.p[1][0], 2) << ", P[b2][b0] " << fmt(w.p[2][0], 2) << ")";
  return {r2 >= r1 && r1 >= r0, os.str()};
}

// 7. GP sanity ------------------------------------------------------------------------

Outcome criterion_gp() {
  Checker ck;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double mu = 2.0 * u(rng) - 1.0;
    const double sigma = 0.05 + 0.75 * u(rng);
    const double best = mu + (u(rng) - 0.5) * 2.0 * sigma;
    std::normal_distribution<double> n(mu, sigma);
    double sum = 0.0;
    const int draws = 4'000'000;
    for (int i = 0; i < draws; ++i) sum += std::max(best - n(rng), 0.0);
    const double err = std::abs(expected_improvement(mu, sigma, best) - sum / draws);
    worst = std::max(worst, err);
    ck.expect(err <= 1e-3, "EI vs Monte Carlo off by " + fmt(err, 6));
  }

  // Noiseless 1-D function.
  const int n = 12;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i) / (n - 1);
    y[i] = std::sin(6.0 * x(i, 0)) + 0.5 * x(i, 0);
  }
  const SurrogateState s = fit_surrogate(x, y);
  Eigen::VectorXd mean, sd;
  s.predict(x, mean, sd);
  const double interp = (mean - y).cwiseAbs().maxCoeff();
  ck.expect(interp <= 1e-4, "posterior mean misses training data by " + fmt(interp, 6));
  return ck.outcome("worst EI error " + fmt(worst, 6) + " over 20 triples, interpolation error " + fmt(interp, 8));
}

// 8. Determinism --------------------------------------------------------------------

Outcome criterion_determinism() {
  const Evaluator ev(fixtures::mushroom());
  LoopOptions o;
  o.seed = 7;
  ScriptedProvider p1, p2;
  const std::string a = run_loop(ev, &p1, o, "mushroom").to_jsonl();
  const std::string b = run_loop(ev, &p2, o, "mushroom").to_jsonl();
  return {a == b && !a.empty(), "two scripted runs on the mushroom, seed 7: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

// 9. Reorientation baseline against a brute-force oracle -------------------------------

std::size_t oracle_orientation(const TriangleMesh& mesh) {
  // Explicit "axis up" rotations in the enumeration order +X, -X, +Y, -Y, +Z, -Z.
  std::vector<SupportMetrics> m;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {1, -1}) {
      const Eigen::Matrix3d r =
          Eigen::Quaterniond::FromTwoVectors(Vec3::Unit(axis) * sign, Vec3::UnitZ()).toRotationMatrix();
      TriangleMesh t = mesh;
      for (Vec3& v : t.vertices) v = r * v;
      m.push_back(support_metrics(voxelize(t, default_calibration().voxel_pitch)));
    }
  }
  double least = std::numeric_limits<double>::infinity();
  for (const auto& s : m) least = std::min(least, s.unsupported_down_area);
  std::size_t pick = m.size();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].unsupported_down_area > least * 1.02 + 1e-9) continue;
    if (pick == m.size() || m[i].bed_contact_area > m[pick].bed_contact_area) pick = i;
  }
  return pick;
}

Outcome criterion_reorient() {
  Checker ck;
  std::ostringstream os;
  const char* axis_names[6] = {"+X", "-X", "+Y", "-Y", "+Z", "-Z"};
  for (const auto& [name, mesh] : {std::pair{"l_bracket", fixtures::l_bracket()}, std::pair{"mushroom", fixtures::mushroom()}}) {
    const Evaluator ev(mesh);
    const Orientation chosen = choose_orientation(ev).orientation;
    const std::size_t want = oracle_orientation(mesh);
    std::size_t got = 6;
    for (std::size_t i = 0; i < 6; ++i)
      if (axis_rotations()[i] == chosen) got = i;
    ck.expect(got == want, std::string(name) + " chose " + (got < 6 ? axis_names[got] : "?") + " but oracle says " +
                               axis_names[want]);
    os << name << " " << (got < 6 ? axis_names[got] : "?") << " up; ";
  }
  return ck.outcome(os.str() + "matches oracle");
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "compiler formulas", criterion_compiler},
      {2, "evaluator algebra", criterion_evaluator_algebra},
      {3, "guided acquisition identities", criterion_acquisition},
      {4, "guided beats unguided", criterion_guided_beats_unguided},
      {5, "zero likely-fails after optimisation", criterion_no_likely_fails},
      {6, "action-budget ordering", criterion_budget_ordering},
      {7, "GP sanity", criterion_gp},
      {8, "determinism", criterion_determinism},
      {9, "reorientation baseline", criterion_reorient},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %d %s: %s [%.1f s] %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
