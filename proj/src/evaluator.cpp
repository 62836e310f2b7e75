#include "evaluator_internal.hpp"
#include "fdmopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdmopt {

void ObjectiveWeights::validate() const {
  if (w_t < 0.0 || w_c < 0.0 || w_q < 0.0) throw ValidationError("objective weights must be non-negative");
  if (!(w_t + w_c + w_q > 0.0)) throw ValidationError("objective weights must not all be zero");
  if (!(t_ref > 0.0) || !(c_ref > 0.0)) throw ValidationError("time and cost references must be positive");
}

std::string_view to_string(VetoKind kind) {
  switch (kind) {
    case VetoKind::unsupported_island: return "unsupported_island";
    case VetoKind::slender_tower: return "slender_tower";
    case VetoKind::low_bed_adhesion: return "low_bed_adhesion";
    case VetoKind::collapsing_overhang: return "collapsing_overhang";
    case VetoKind::long_bridge: return "long_bridge";
  }
  return "unknown";
}

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::staircasing: return "staircasing";
    case PenaltyKind::strength: return "strength";
    case PenaltyKind::zbond: return "zbond";
    case PenaltyKind::perimeter_infill: return "perimeter_infill";
    case PenaltyKind::xy_distortion: return "xy_distortion";
    case PenaltyKind::stringing: return "stringing";
    case PenaltyKind::support_removal: return "support_removal";
  }
  return "unknown";
}

PenaltyGroup group_of(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::staircasing: return PenaltyGroup::surface;
    case PenaltyKind::stringing:
    case PenaltyKind::support_removal: return PenaltyGroup::post_processing;
    default: return PenaltyGroup::functional;
  }
}

double PenaltyReport::get(PenaltyKind kind) const {
  switch (kind) {
    case PenaltyKind::staircasing: return stair;
    case PenaltyKind::strength: return strength;
    case PenaltyKind::zbond: return zbond;
    case PenaltyKind::perimeter_infill: return pi;
    case PenaltyKind::xy_distortion: return xy;
    case PenaltyKind::stringing: return stringing;
    case PenaltyKind::support_removal: return support;
  }
  return 0.0;
}

void PenaltyReport::set(PenaltyKind kind, double value) {
  switch (kind) {
    case PenaltyKind::staircasing: stair = value; break;
    case PenaltyKind::strength: strength = value; break;
    case PenaltyKind::zbond: zbond = value; break;
    case PenaltyKind::perimeter_infill: pi = value; break;
    case PenaltyKind::xy_distortion: xy = value; break;
    case PenaltyKind::stringing: stringing = value; break;
    case PenaltyKind::support_removal: support = value; break;
  }
}

const VetoResult* EvaluationReport::veto(VetoKind kind) const {
  for (const auto& v : vetoes)
    if (v.kind == kind) return &v;
  return nullptr;
}

bool EvaluationReport::triggered(VetoKind kind) const {
  const VetoResult* v = veto(kind);
  return v && v->triggered;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_mean_exp(std::span<const double> values, double sharpness) {
  if (values.empty()) return 0.0;
  const double m = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(sharpness * (v - m));
  return m + std::log(sum / static_cast<double>(values.size())) / sharpness;
}

double quality_from_excess(const std::array<double, 3>& e, double lambda) {
  const double top = std::max({e[0], e[1], e[2]});
  return top + (lambda / 3.0) * (1.0 - top) * (e[0] + e[1] + e[2]);
}

QualityBreakdown quality_scalar(const PenaltyReport& p, const std::vector<VetoResult>& vetoes, const Calibration& cal) {
  QualityBreakdown q;
  const double s[] = {p.stair};
  const double f[] = {p.strength, p.zbond, p.pi, p.xy};
  const double pp[] = {p.stringing, p.support};
  q.group_scores = {log_mean_exp(s, cal.sharpness), log_mean_exp(f, cal.sharpness), log_mean_exp(pp, cal.sharpness)};
  const std::array<double, 3> goals = {cal.goal_s, cal.goal_f, cal.goal_p};
  for (int k = 0; k < 3; ++k) q.excess[k] = std::clamp((q.group_scores[k] - goals[k]) / (1.0 - goals[k]), 0.0, 1.0);
  q.infeasible = std::any_of(vetoes.begin(), vetoes.end(), [](const VetoResult& v) { return v.triggered; });
  q.quality = q.infeasible ? cal.q_cap : quality_from_excess(q.excess, cal.lambda);
  return q;
}

double objective(double t, double c, double q, const ObjectiveWeights& w) {
  const double tn = t / w.t_ref;
  const double cn = c / w.c_ref;
  return w.w_t * tn / (1.0 + tn) + w.w_c * cn / (1.0 + cn) + w.w_q * q;
}

Evaluator::Evaluator(TriangleMesh mesh, Calibration cal, std::optional<Vec3> load_axis)
    : mesh_(std::move(mesh)), cal_(std::move(cal)), load_axis_(std::move(load_axis)) {
  if (mesh_.triangles.empty()) throw EmptyMeshError("mesh has no faces");
  if (load_axis_ && !(load_axis_->norm() > 0.0)) throw ValidationError("load axis must be non-zero");
}

std::shared_ptr<const OrientedPart> Evaluator::oriented(const Orientation& o) const {
  if (!o.valid()) throw ValidationError("orientation angles must be multiples of 90 in [0, 270]");
  const auto key = std::make_tuple(o.rx, o.ry, o.rz);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto part = std::make_shared<OrientedPart>();
  part->mesh = orient(mesh_, o);
  part->grid = voxelize(part->mesh, cal_.voxel_pitch, cal_.cell_cap);
  part->slopes = face_slopes(part->mesh);
  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(part)).first->second;
}

namespace {

void require_valid(const PrintConfig& config) {
  const auto violations = validate(config);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& v : violations) msg += " " + v.parameter + " (" + v.message + ");";
  throw ValidationError(msg);
}

LayerStack stack_for(const OrientedPart& part, const PrintConfig& config) {
  LayerStack stack = slice(part.grid, config.layer_height);
  if (stack.empty()) throw GeometryError("part produced no layers");
  return stack;
}

}  // namespace

TimeCost Evaluator::time_cost(const PrintConfig& config) const {
  require_valid(config);
  const auto part = oriented(config.orientation);
  const LayerStack stack = stack_for(*part, config);
  const auto a = detail::analyse_stack(stack);
  return detail::time_cost(a, detail::layer_fill(a, config, cal_), config, cal_);
}

EvaluationReport Evaluator::evaluate(const PrintConfig& config, const ObjectiveWeights& weights) const {
  require_valid(config);
  weights.validate();
  const auto part = oriented(config.orientation);
  const LayerStack stack = stack_for(*part, config);
  const auto a = detail::analyse_stack(stack);
  const auto fill = detail::layer_fill(a, config, cal_);

  EvaluationReport r;
  r.config = config;
  r.layer_count = static_cast<int>(stack.size());
  const TimeCost tc = detail::time_cost(a, fill, config, cal_);
  r.time_s = tc.time_s;
  r.cost_g = tc.cost_g;

  bool load_along_z = false;
  if (load_axis_) {
    const Vec3 axis = config.orientation.rotation() * load_axis_->normalized();
    load_along_z = std::abs(axis.z()) > 0.999;
  }
  PenaltyReport& p = r.penalties;
  p.stair = penalty_staircase(part->slopes, config.layer_height, cal_);
  p.strength = penalty_strength(config, cal_);
  p.zbond = zbond_from_cues(detail::zbond_cues(config, fill, cal_), load_along_z, cal_);
  p.pi = detail::perimeter_infill(fill);
  p.xy = penalty_xy(config, detail::footprint(a, cal_), cal_);
  p.stringing = stringing_from_fraction(detail::stringing_fraction(a, fill, config, cal_), cal_);
  p.support = detail::support_removal(a, config, cal_);

  r.vetoes = detail::vetoes(a, part->slopes, config, cal_);
  const QualityBreakdown q = quality_scalar(p, r.vetoes, cal_);
  r.quality = q.quality;
  r.infeasible = q.infeasible;
  r.group_scores = q.group_scores;
  r.excess = q.excess;
  r.objective = objective(r.time_s, r.cost_g, r.quality, weights);
  return r;
}

EvaluationReport evaluate(const TriangleMesh& mesh, const PrintConfig& config, const ObjectiveWeights& weights,
                          const Calibration& cal) {
  return Evaluator(mesh, cal).evaluate(config, weights);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

References compute_references(const Evaluator& evaluator) {
  std::vector<double> t, c;
  for (const PrintConfig& config : sobol_sample(32, 0)) {
    const TimeCost tc = evaluator.time_cost(config);
    t.push_back(tc.time_s);
    c.push_back(tc.cost_g);
  }
  return {median(std::move(t)), median(std::move(c))};
}

References compute_references(const TriangleMesh& mesh, const Calibration& cal) {
  return compute_references(Evaluator(mesh, cal));
}

}  // namespace fdmopt
