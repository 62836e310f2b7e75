#include "fdmopt/guidance_compiler.hpp"

#include "fdmopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fdmopt {

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::directional: return "directional";
    case TemplateKind::equality: return "equality";
    case TemplateKind::range: return "range";
    case TemplateKind::margin: return "margin";
    case TemplateKind::ratio: return "ratio";
    case TemplateKind::sum_cap: return "sum_cap";
    case TemplateKind::monotone: return "monotone";
  }
  return "directional";
}

std::string_view to_string(Aggregator kind) { return kind == Aggregator::soft_and ? "soft_and" : "soft_or"; }

namespace {

double relu(double v) { return v > 0.0 ? v : 0.0; }

void require_arity(const Clause& c, std::size_t got, std::size_t want) {
  if (got != want) {
    throw CompileError(std::string(to_string(c.kind)) + " clause expects " + std::to_string(want) + " value(s), got " +
                       std::to_string(got));
  }
}

}  // namespace

double template_residual(const Clause& c, std::span<const double> u, std::span<double> g) {
  const bool want_grad = !g.empty();
  if (want_grad) std::fill(g.begin(), g.end(), 0.0);
  switch (c.kind) {
    case TemplateKind::directional: {
      require_arity(c, u.size(), 1);
      const double slack = c.k - c.sign * (u[0] - c.anchor);
      if (want_grad && slack > 0.0) g[0] = -c.sign;
      return relu(slack);
    }
    case TemplateKind::equality: {
      require_arity(c, u.size(), 1);
      const double d = u[0] - c.alpha;
      if (want_grad) g[0] = 2.0 * d;
      return d * d;
    }
    case TemplateKind::range: {
      require_arity(c, u.size(), 1);
      if (want_grad) g[0] = u[0] < c.lower ? -1.0 : (u[0] > c.upper ? 1.0 : 0.0);
      return relu(c.lower - u[0]) + relu(u[0] - c.upper);
    }
    case TemplateKind::margin: {
      require_arity(c, u.size(), 2);
      const double slack = u[1] + c.delta - u[0];
      if (want_grad && slack > 0.0) {
        g[0] = -1.0;
        g[1] = 1.0;
      }
      return relu(slack);
    }
    case TemplateKind::ratio: {
      require_arity(c, u.size(), 2);
      const double den = u[1] + kRatioEpsilon;
      const double d = u[0] / den - c.beta;
      if (want_grad) {
        g[0] = 2.0 * d / den;
        g[1] = -2.0 * d * u[0] / (den * den);
      }
      return d * d;
    }
    case TemplateKind::sum_cap: {
      if (u.empty()) throw CompileError("sum_cap clause needs at least one value");
      const double slack = std::accumulate(u.begin(), u.end(), 0.0) - c.k;
      if (want_grad && slack > 0.0) std::fill(g.begin(), g.end(), 1.0);
      return relu(slack);
    }
    case TemplateKind::monotone: {
      double r = 0.0;
      for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        const double d = u[i] - u[i + 1];
        if (d > 0.0) {
          r += d;
          if (want_grad) {
            g[i] += 1.0;
            g[i + 1] -= 1.0;
          }
        }
      }
      return r;
    }
  }
  return 0.0;
}

double clause_residual(const Clause& clause, const PrintConfig& candidate) {
  std::vector<double> values;
  for (const auto& p : clause.parameters) {
    if (clause.category) {
      values.push_back(category_index(candidate, p) == category_of(p, *clause.category) ? 1.0 : 0.0);
    } else {
      values.push_back(parameter_value(candidate, p));
    }
  }
  return template_residual(clause, values);
}

double normalize_residual(double rho) { return rho / (1.0 + rho); }

double aggregate_clauses(std::span<const double> r, std::span<const double> w, Aggregator kind) {
  if (r.size() != w.size()) throw CompileError("aggregator needs one weight per clause");
  double prod = 1.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    prod *= kind == Aggregator::soft_and ? std::pow(1.0 - r[i], w[i]) : std::pow(r[i], w[i]);
  }
  return kind == Aggregator::soft_and ? 1.0 - prod : prod;
}

double combine_actions(std::span<const double> v) {
  double keep = 1.0;
  for (double a : v) keep *= 1.0 - a;
  return 1.0 - keep;
}

double action_weight(const CorrectiveAction& a) {
  double w = a.importance == Importance::low ? 0.5 : (a.importance == Importance::high ? 2.0 : 1.0);
  if (a.confidence) w *= *a.confidence;
  return std::max(w, 0.25);
}

double default_step(std::string_view parameter) { return 0.1 * parameter_spec(parameter).range(); }

Decomposition decompose(const CorrectiveAction& action, const PrintConfig& incumbent, const ActionCatalog& catalog) {
  const CatalogEntry* entry = catalog.find(action.id);
  if (!entry) throw CompileError("action '" + action.id + "' is not in the catalog");
  for (const auto& p : entry->parameters) {
    if (!is_parameter(p)) throw CompileError("action '" + action.id + "' references unknown parameter " + p);
  }
  const double weight = action_weight(action);
  Decomposition d;
  d.aggregator = entry->disjunctive ? Aggregator::soft_or : Aggregator::soft_and;

  if (entry->categorical) {
    if (action.mode != ActionMode::switch_to || !action.target) {
      throw CompileError("action '" + action.id + "' must be a switch with a target");
    }
    const std::string& p = entry->parameters.front();
    if (category_of(p, *action.target) < 0) {
      throw CompileError("action '" + action.id + "' targets unknown category " + *action.target);
    }
    Clause c;
    c.kind = TemplateKind::equality;
    c.parameters = {p};
    c.category = *action.target;
    c.alpha = 1.0;
    c.weight = weight;
    c.scale = 1.0;
    d.clauses.push_back(std::move(c));
    return d;
  }

  if (action.mode == ActionMode::switch_to) throw CompileError("action '" + action.id + "' is directional");
  if (action.magnitude && !(*action.magnitude > 0.0)) {
    throw CompileError("action '" + action.id + "' has a non-positive magnitude");
  }
  const bool single = entry->parameters.size() == 1;
  for (const auto& p : entry->parameters) {
    Clause c;
    c.kind = TemplateKind::directional;
    c.parameters = {p};
    // Single-parameter magnitudes are raw units; on composite actions the
    // magnitude scales each parameter's default step.
    c.k = action.magnitude ? (single ? *action.magnitude : *action.magnitude * default_step(p)) : default_step(p);
    c.anchor = parameter_value(incumbent, p);
    c.sign = action.mode == ActionMode::increase ? 1.0 : -1.0;
    c.weight = weight;
    c.scale = parameter_spec(p).range();
    d.clauses.push_back(std::move(c));
  }
  return d;
}

namespace {

// Reads a clause's values from an encoded vector with d(value)/d(x) and the
// coordinate each value comes from.
struct Reading {
  std::vector<double> values;
  std::vector<double> slope;
  std::vector<int> coord;
};

Reading read_values(const Clause& c, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Reading r;
  for (const auto& p : c.parameters) {
    const EncodedBlock b = encoded_block(p);
    if (c.category) {
      const int i = b.offset + category_of(p, *c.category);
      r.values.push_back(x[i]);
      r.slope.push_back(1.0);
      r.coord.push_back(i);
    } else {
      const ParamSpec& s = parameter_spec(p);
      const double xi = x[b.offset];
      r.values.push_back(s.lower + std::clamp(xi, 0.0, 1.0) * s.range());
      r.slope.push_back(xi >= 0.0 && xi <= 1.0 ? s.range() : 0.0);
      r.coord.push_back(b.offset);
    }
  }
  return r;
}

double clause_scale(const Clause& c) {
  if (c.category || c.kind == TemplateKind::ratio) return 1.0;
  double range = 0.0;
  for (const auto& p : c.parameters) range = std::max(range, parameter_spec(p).range());
  return c.kind == TemplateKind::equality ? range * range : range;
}

}  // namespace

CompiledGuidance CompiledGuidance::compile(const std::vector<CorrectiveAction>& actions, const PrintConfig& incumbent,
                                           const ActionCatalog& catalog) {
  if (actions.empty()) throw CompileError("no actions to compile");
  CompiledGuidance g;
  g.incumbent_ = incumbent;
  std::vector<bool> touched(parameter_specs().size(), false);
  for (const CorrectiveAction& a : actions) {
    CompiledAction ca;
    ca.action = a;
    ca.decomposition = decompose(a, incumbent, catalog);
    for (Clause& c : ca.decomposition.clauses) {
      c.scale = clause_scale(c);
      ca.incumbent_residuals.push_back(clause_residual(c, incumbent));
      for (const auto& p : c.parameters) {
        const auto& specs = parameter_specs();
        for (std::size_t i = 0; i < specs.size(); ++i)
          if (specs[i].name == p) touched[i] = true;
      }
    }
    g.actions_.push_back(std::move(ca));
  }
  g.mask_.assign(static_cast<std::size_t>(encoded_dimension()), false);
  const auto& specs = parameter_specs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!touched[i]) continue;
    g.implicated_.emplace_back(specs[i].name);
    const EncodedBlock b = encoded_block(specs[i].name);
    for (int j = 0; j < b.width; ++j) g.mask_[static_cast<std::size_t>(b.offset + j)] = true;
  }
  const ConfigVector x = encode(incumbent);
  for (CompiledAction& ca : g.actions_) {
    CompiledGuidance single;
    single.actions_ = {ca};
    ca.incumbent_violation = single.violation(x);
  }
  return g;
}

double CompiledGuidance::violation(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd* grad) const {
  if (x.size() != encoded_dimension()) throw DimensionError("violation expects an encoded configuration vector");
  const std::size_t na = actions_.size();
  std::vector<double> va(na);
  std::vector<Eigen::VectorXd> ga;
  if (grad) ga.assign(na, Eigen::VectorXd::Zero(x.size()));

  for (std::size_t a = 0; a < na; ++a) {
    const Decomposition& d = actions_[a].decomposition;
    const std::size_t nc = d.clauses.size();
    std::vector<double> rt(nc), w(nc), drt(nc);
    std::vector<Reading> reads(nc);
    std::vector<std::vector<double>> tg(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      const Clause& c = d.clauses[i];
      reads[i] = read_values(c, x);
      tg[i].assign(reads[i].values.size(), 0.0);
      const double rho = template_residual(c, reads[i].values, grad ? std::span<double>(tg[i]) : std::span<double>{}) /
                         c.scale;
      rt[i] = normalize_residual(rho);
      drt[i] = 1.0 / ((1.0 + rho) * (1.0 + rho) * c.scale);
      w[i] = c.weight;
    }
    va[a] = aggregate_clauses(rt, w, d.aggregator);
    if (!grad) continue;
    for (std::size_t j = 0; j < nc; ++j) {
      // dV_a / d rt_j via the product over the other clauses.
      double others = 1.0;
      for (std::size_t i = 0; i < nc; ++i) {
        if (i == j) continue;
        others *= d.aggregator == Aggregator::soft_and ? std::pow(1.0 - rt[i], w[i]) : std::pow(rt[i], w[i]);
      }
      double dv;
      if (d.aggregator == Aggregator::soft_and) {
        dv = w[j] * std::pow(1.0 - rt[j], w[j] - 1.0) * others;
      } else {
        dv = rt[j] > 0.0 ? w[j] * std::pow(rt[j], w[j] - 1.0) * others : 0.0;
      }
      for (std::size_t k = 0; k < tg[j].size(); ++k) {
        ga[a][reads[j].coord[k]] += dv * drt[j] * tg[j][k] * reads[j].slope[k];
      }
    }
  }
  const double v = combine_actions(va);
  if (grad) {
    grad->setZero(x.size());
    for (std::size_t a = 0; a < na; ++a) {
      double others = 1.0;
      for (std::size_t b = 0; b < na; ++b)
        if (b != a) others *= 1.0 - va[b];
      *grad += others * ga[a];
    }
  }
  return std::clamp(v, 0.0, 1.0);
}

double CompiledGuidance::violation(const PrintConfig& config) const { return violation(encode(config)); }

Json CompiledGuidance::audit() const {
  Json out = Json::object();
  Json acts = Json::array();
  for (const CompiledAction& ca : actions_) {
    Json a = Json::object();
    a["id"] = ca.action.id;
    a["mode"] = std::string(to_string(ca.action.mode));
    if (ca.action.magnitude) a["magnitude"] = *ca.action.magnitude;
    if (ca.action.target) a["target"] = *ca.action.target;
    a["aggregator"] = std::string(to_string(ca.decomposition.aggregator));
    Json clauses = Json::array();
    for (std::size_t i = 0; i < ca.decomposition.clauses.size(); ++i) {
      const Clause& c = ca.decomposition.clauses[i];
      Json j = Json::object();
      j["template"] = std::string(to_string(c.kind));
      j["parameters"] = c.parameters;
      if (c.category) j["category"] = *c.category;
      if (c.kind == TemplateKind::directional) {
        j["k"] = c.k;
        j["anchor"] = c.anchor;
        j["sign"] = c.sign;
      }
      j["weight"] = c.weight;
      j["scale"] = c.scale;
      j["residual_at_incumbent"] = ca.incumbent_residuals[i];
      clauses.push_back(std::move(j));
    }
    a["clauses"] = std::move(clauses);
    a["violation_at_incumbent"] = ca.incumbent_violation;
    acts.push_back(std::move(a));
  }
  out["actions"] = std::move(acts);
  out["implicated"] = implicated_;
  return out;
}

}  // namespace fdmopt
