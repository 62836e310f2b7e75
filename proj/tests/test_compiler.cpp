#include "fdmopt/error.hpp"
#include "fdmopt/guidance_compiler.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace fdmopt;

namespace {

CorrectiveAction dir(std::string id, ActionMode mode, std::optional<double> k = std::nullopt) {
  CorrectiveAction a;
  a.id = std::move(id);
  a.mode = mode;
  a.magnitude = k;
  return a;
}

CorrectiveAction sw(std::string id, std::string target) {
  CorrectiveAction a;
  a.id = std::move(id);
  a.mode = ActionMode::switch_to;
  a.target = std::move(target);
  return a;
}

Clause clause(TemplateKind kind) {
  Clause c;
  c.kind = kind;
  return c;
}

}  // namespace

TEST_SUITE("guidance_compiler") {

TEST_CASE("residual templates by substitution") {
  Clause d = clause(TemplateKind::directional);
  d.k = 0.1;
  d.anchor = 0.20;
  const double u1[] = {0.25};
  CHECK(template_residual(d, u1) == doctest::Approx(0.05));
  d.sign = -1.0;
  d.k = 0.05;
  const double u2[] = {0.15};
  CHECK(template_residual(d, u2) == doctest::Approx(0.0));

  Clause r = clause(TemplateKind::range);
  r.lower = 2;
  r.upper = 4;
  const double five[] = {5.0}, three[] = {3.0}, one[] = {1.0};
  CHECK(template_residual(r, five) == 1.0);
  CHECK(template_residual(r, three) == 0.0);
  CHECK(template_residual(r, one) == 1.0);

  Clause q = clause(TemplateKind::ratio);
  q.beta = 1.5;
  const double uv[] = {2.0, 1.0};
  const double expect = (2.0 / (1.0 + 1e-6) - 1.5) * (2.0 / (1.0 + 1e-6) - 1.5);
  CHECK(template_residual(q, uv) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(template_residual(q, uv) == doctest::Approx(0.25).epsilon(1e-5));

  Clause m = clause(TemplateKind::monotone);
  const double seq[] = {3.0, 2.0, 5.0};
  CHECK(template_residual(m, seq) == 1.0);

  Clause e = clause(TemplateKind::equality);
  e.alpha = 1.0;
  const double zero[] = {0.0};
  CHECK(template_residual(e, zero) == 1.0);

  Clause mg = clause(TemplateKind::margin);
  mg.delta = 0.5;
  const double mv[] = {1.0, 1.0};
  CHECK(template_residual(mg, mv) == 0.5);

  Clause s = clause(TemplateKind::sum_cap);
  s.k = 3.0;
  const double sv[] = {1.0, 2.0, 1.5};
  CHECK(template_residual(s, sv) == 1.5);
  CHECK_THROWS_AS(template_residual(e, uv), CompileError);
}

TEST_CASE("normalisation") {
  CHECK(normalize_residual(0.0) == 0.0);
  CHECK(normalize_residual(1.0) == 0.5);
  CHECK(normalize_residual(3.0) == 0.75);
  CHECK(normalize_residual(1e9) < 1.0);
}

TEST_CASE("aggregators") {
  const double one[] = {0.3}, w1[] = {1.0};
  CHECK(aggregate_clauses(one, w1, Aggregator::soft_and) == doctest::Approx(0.3));
  const double half[] = {0.5, 0.5}, w2[] = {1.0, 1.0};
  CHECK(aggregate_clauses(half, w2, Aggregator::soft_and) == doctest::Approx(0.75));
  const double sat[] = {0.5, 0.0};
  CHECK(aggregate_clauses(sat, w2, Aggregator::soft_or) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.999), wu(1.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    const double r[] = {u(rng), u(rng), u(rng)};
    const double w[] = {wu(rng), wu(rng), wu(rng)};
    const double mx = std::max({r[0], r[1], r[2]}), mn = std::min({r[0], r[1], r[2]});
    CHECK(aggregate_clauses(r, w, Aggregator::soft_and) >= mx - 1e-12);
    CHECK(aggregate_clauses(r, w, Aggregator::soft_or) <= mn + 1e-12);
  }
}

TEST_CASE("action combination and weights") {
  const double v[] = {0.2, 0.5};
  CHECK(combine_actions(v) == doctest::Approx(0.6));
  const double single[] = {0.37};
  CHECK(combine_actions(single) == doctest::Approx(0.37));

  CorrectiveAction a = dir("layer_height", ActionMode::decrease);
  CHECK(action_weight(a) == 1.0);
  a.importance = Importance::high;
  CHECK(action_weight(a) == 2.0);
  a.importance = Importance::low;
  a.confidence = 0.1;
  CHECK(action_weight(a) == 0.25);
  CHECK(default_step("layer_height") == doctest::Approx(0.025));
}

TEST_CASE("decomposition") {
  const PrintConfig inc = default_config();
  const Decomposition cov = decompose(dir("layer_coverage", ActionMode::increase), inc);
  CHECK(cov.clauses.size() == 2);
  CHECK(cov.aggregator == Aggregator::soft_and);
  CHECK(cov.clauses[0].parameters == std::vector<std::string>{"perimeters"});
  CHECK(cov.clauses[1].parameters == std::vector<std::string>{"infill_density"});
  CHECK(cov.clauses[1].anchor == doctest::Approx(0.15));

  const Decomposition gy = decompose(sw("infill_pattern", "gyroid"), inc);
  REQUIRE(gy.clauses.size() == 1);
  CHECK(gy.clauses[0].kind == TemplateKind::equality);
  CHECK(*gy.clauses[0].category == "gyroid");
  CHECK(gy.clauses[0].alpha == 1.0);

  const Decomposition lh = decompose(dir("layer_height", ActionMode::decrease, 0.05), inc);
  REQUIRE(lh.clauses.size() == 1);
  CHECK(lh.clauses[0].kind == TemplateKind::directional);
  CHECK(lh.clauses[0].k == doctest::Approx(0.05));
  CHECK(lh.clauses[0].sign == -1.0);
  CHECK(lh.clauses[0].anchor == doctest::Approx(0.20));

  CHECK(decompose(dir("adhesion_aid", ActionMode::increase), inc).aggregator == Aggregator::soft_or);

  try {
    decompose(dir("nozzle_diameter", ActionMode::increase), inc);
    FAIL("expected a compile error");
  } catch (const CompileError& e) {
    CHECK(std::string(e.what()).find("nozzle_diameter") != std::string::npos);
  }
  CHECK_THROWS_AS(decompose(sw("infill_pattern", "lattice"), inc), CompileError);
  CHECK_THROWS_AS(decompose(dir("infill_pattern", ActionMode::increase), inc), CompileError);
}

TEST_CASE("implicated set is the union of referenced parameters") {
  const PrintConfig inc = default_config();
  const auto g = CompiledGuidance::compile(
      {dir("layer_height", ActionMode::decrease), dir("adhesion_aid", ActionMode::increase),
       dir("brim_width", ActionMode::increase)},
      inc);
  CHECK(g.implicated() == std::vector<std::string>{"layer_height", "first_layer_height", "brim_width"});
  int masked = 0;
  for (bool b : g.implicated_mask()) masked += b;
  CHECK(masked == 3);
  CHECK_THROWS_AS(CompiledGuidance::compile({}, inc), CompileError);

  // Brute force against the clause lists.
  std::mt19937_64 rng(9);
  const auto& entries = ActionCatalog::standard().entries();
  for (int t = 0; t < 50; ++t) {
    std::vector<CorrectiveAction> acts;
    std::set<std::string> expected;
    for (int n = 0; n < 3; ++n) {
      const CatalogEntry& e = entries[rng() % entries.size()];
      acts.push_back(e.categorical ? sw(e.id, std::string(parameter_spec(e.parameters[0]).categories[0]))
                                   : dir(e.id, ActionMode::increase));
    }
    const auto cg = CompiledGuidance::compile(acts, inc);
    for (const auto& ca : cg.actions())
      for (const auto& c : ca.decomposition.clauses) expected.insert(c.parameters.begin(), c.parameters.end());
    CHECK(std::set<std::string>(cg.implicated().begin(), cg.implicated().end()) == expected);
    CHECK_FALSE(cg.implicated().empty());
  }
}

TEST_CASE("violation of a single action equals its normalised scaled residual") {
  const PrintConfig inc = default_config();
  const auto g = CompiledGuidance::compile({dir("layer_height", ActionMode::decrease, 0.05)}, inc);
  // At the incumbent the full step is missing: rho = 0.05 / range 0.25.
  CHECK(g.violation(inc) == doctest::Approx(normalize_residual(0.05 / 0.25)));
  CHECK(g.actions()[0].incumbent_residuals[0] == doctest::Approx(0.05));
  PrintConfig done = inc;
  done.layer_height = 0.15;
  CHECK(g.violation(done) == doctest::Approx(0.0).epsilon(1e-12));
  PrintConfig half = inc;
  half.layer_height = 0.175;
  CHECK(g.violation(half) < g.violation(inc));
  CHECK(g.violation(half) > g.violation(done));
}

TEST_CASE("two actions combine by the product rule") {
  const PrintConfig inc = default_config();
  const CorrectiveAction a = dir("layer_height", ActionMode::decrease, 0.05);
  const CorrectiveAction b = sw("infill_pattern", "gyroid");
  const auto both = CompiledGuidance::compile({a, b}, inc);
  const double va = CompiledGuidance::compile({a}, inc).violation(inc);
  const double vb = CompiledGuidance::compile({b}, inc).violation(inc);
  CHECK(vb == doctest::Approx(0.5));  // one-hot distance 1 normalises to 0.5
  CHECK(both.violation(inc) == doctest::Approx(1.0 - (1.0 - va) * (1.0 - vb)));
  PrintConfig all = inc;
  all.layer_height = 0.15;
  all.infill_pattern = InfillPattern::gyroid;
  CHECK(both.violation(all) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("violation stays in [0, 1] and is monotone along a satisfying path") {
  const PrintConfig inc = default_config();
  const auto g = CompiledGuidance::compile(
      {dir("layer_coverage", ActionMode::increase), sw("support_material", "on"),
       dir("max_volumetric_speed", ActionMode::decrease, 2.0)},
      inc);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd x(encoded_dimension());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    const double v = g.violation(x);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  double prev = 2.0;
  for (int s = 0; s <= 10; ++s) {
    PrintConfig c = inc;
    c.perimeters = 2 + s / 5;
    c.infill_density = 0.15 + 0.01 * s;
    const double v = g.violation(c);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("analytic gradient matches central differences away from kinks") {
  PrintConfig inc = default_config();
  inc.infill_density = 0.4;
  inc.max_volumetric_speed = 10.0;
  CorrectiveAction low = dir("adhesion_aid", ActionMode::increase, 2.0);
  low.importance = Importance::low;
  const auto g = CompiledGuidance::compile(
      {dir("layer_height", ActionMode::decrease, 0.05), dir("layer_coverage", ActionMode::increase, 1.5), low,
       dir("max_volumetric_speed", ActionMode::decrease), sw("infill_pattern", "gyroid")},
      inc);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    Eigen::VectorXd x(encoded_dimension());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    Eigen::VectorXd grad;
    g.violation(x, &grad);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-6;
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (g.violation(xp) - g.violation(xm)) / (2 * h);
      if (std::abs(fd) < 1e-9 && std::abs(grad[i]) < 1e-9) continue;
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("audit trail lists clauses and incumbent residuals") {
  const auto g = CompiledGuidance::compile({dir("layer_coverage", ActionMode::increase)}, default_config());
  const Json a = g.audit();
  CHECK(a.dump().find("layer_coverage") != std::string::npos);
  CHECK(a.dump().find("infill_density") != std::string::npos);
}

}  // TEST_SUITE
