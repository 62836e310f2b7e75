#include "fdmopt/harness.hpp"

#include "fdmopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace fdmopt {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::vector<std::string> MethodResult::objects() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (std::find(out.begin(), out.end(), e.object) == out.end()) out.push_back(e.object);
  return out;
}

double MethodResult::object_objective(const std::string& object) const {
  std::vector<double> v;
  for (const auto& e : entries)
    if (e.object == object) v.push_back(e.objective);
  return median(std::move(v));
}

bool MethodResult::object_infeasible(const std::string& object) const {
  int total = 0;
  int failed = 0;
  for (const auto& e : entries) {
    if (e.object != object) continue;
    ++total;
    failed += e.infeasible ? 1 : 0;
  }
  // Majority rule: with one entry this is simply that entry's flag.
  return total > 0 && 2 * failed >= total + (total % 2 == 0 ? 1 : 0);
}

Json method_result_to_json(const MethodResult& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"object", e.object},
                       {"seed", e.seed},
                       {"objective", e.objective},
                       {"infeasible", e.infeasible},
                       {"brim_adjusted", e.brim_adjusted},
                       {"config", config_to_json(e.config)}});
  }
  return {{"method", r.method}, {"entries", std::move(entries)}};
}

MethodResult method_result_from_json(const Json& doc) {
  MethodResult r;
  try {
    r.method = doc.at("method").get<std::string>();
    for (const Json& e : doc.at("entries")) {
      MethodEntry m;
      m.object = e.at("object").get<std::string>();
      m.seed = e.at("seed").get<int>();
      m.objective = e.at("objective").get<double>();
      m.infeasible = e.at("infeasible").get<bool>();
      m.brim_adjusted = e.value("brim_adjusted", false);
      m.config = config_from_json(e.at("config"));
      r.entries.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed method result: ") + e.what());
  }
  return r;
}

ObjectiveWeights referenced_weights(const Evaluator& evaluator, ObjectiveWeights weights) {
  const References refs = compute_references(evaluator);
  weights.t_ref = refs.t_ref;
  weights.c_ref = refs.c_ref;
  return weights;
}

MethodEntry score_with_brim_rule(const Evaluator& evaluator, PrintConfig config, const ObjectiveWeights& weights,
                                 const std::string& object) {
  EvaluationReport r = evaluator.evaluate(config, weights);
  MethodEntry e;
  if (r.triggered(VetoKind::low_bed_adhesion)) {
    config.brim_width = 5.0;
    r = evaluator.evaluate(config, weights);
    e.brim_adjusted = true;
  }
  e.object = object;
  e.objective = r.objective;
  e.infeasible = r.infeasible;
  e.config = r.config;
  return e;
}

MethodEntry baseline_default(const Evaluator& evaluator, const ObjectiveWeights& weights, const std::string& object) {
  return score_with_brim_rule(evaluator, default_config(), weights, object);
}

const std::array<Orientation, 6>& axis_rotations() {
  static const std::array<Orientation, 6> rotations = {{
      {0, 270, 0},  // +X up
      {0, 90, 0},   // -X up
      {90, 0, 0},   // +Y up
      {270, 0, 0},  // -Y up
      {0, 0, 0},    // +Z up
      {180, 0, 0},  // -Z up
  }};
  return rotations;
}

ReorientChoice choose_orientation(const Evaluator& evaluator) {
  ReorientChoice choice;
  for (const Orientation& o : axis_rotations()) {
    choice.candidates.push_back({o, support_metrics(evaluator.oriented(o)->grid)});
  }
  double least = std::numeric_limits<double>::infinity();
  for (const auto& c : choice.candidates) least = std::min(least, c.metrics.unsupported_down_area);
  const double limit = least * (1.0 + kReorientNearTie) + 1e-9;
  const RotationScore* best = nullptr;
  for (const auto& c : choice.candidates) {
    if (c.metrics.unsupported_down_area > limit) continue;
    if (!best || c.metrics.bed_contact_area > best->metrics.bed_contact_area) best = &c;
  }
  choice.orientation = best->orientation;
  return choice;
}

MethodEntry baseline_reorient(const Evaluator& evaluator, const ObjectiveWeights& weights, const std::string& object) {
  PrintConfig c = default_config();
  c.orientation = choose_orientation(evaluator).orientation;
  return score_with_brim_rule(evaluator, c, weights, object);
}

MethodEntry baseline_external(const Evaluator& evaluator, std::string_view document, const ObjectiveWeights& weights,
                              const std::string& object) {
  const PrintConfig c = load_config_document(document);
  const auto violations = validate(c);
  if (!violations.empty()) {
    std::string msg = "configuration document is invalid:";
    for (const auto& v : violations) msg += "\n  " + v.parameter + ": " + v.message;
    throw ValidationError(msg);
  }
  return score_with_brim_rule(evaluator, c, weights, object);
}

double WinRateMatrix::mean_win_rate(std::size_t i) const {
  if (variants.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (std::size_t j = 0; j < variants.size(); ++j)
    if (j != i) sum += p[i][j];
  return sum / static_cast<double>(variants.size() - 1);
}

std::string WinRateMatrix::to_csv() const {
  std::ostringstream os;
  os << "variant";
  for (const auto& v : variants) os << ',' << v;
  os << ",mean\n";
  for (std::size_t i = 0; i < variants.size(); ++i) {
    os << variants[i];
    for (std::size_t j = 0; j < variants.size(); ++j) os << ',' << (i == j ? std::string() : num(p[i][j]));
    os << ',' << num(mean_win_rate(i)) << '\n';
  }
  return os.str();
}

std::string WinRateMatrix::to_text() const {
  std::size_t w = 8;
  for (const auto& v : variants) w = std::max(w, v.size() + 2);
  std::ostringstream os;
  os << "Win rate of row over column (tie tolerance " << tie_tolerance << ", object ties count 0.5)\n";
  os << std::setw(static_cast<int>(w)) << std::left << "";
  for (const auto& v : variants) os << std::setw(static_cast<int>(w)) << std::right << v;
  os << std::setw(static_cast<int>(w)) << "mean" << '\n';
  for (std::size_t i = 0; i < variants.size(); ++i) {
    os << std::setw(static_cast<int>(w)) << std::left << variants[i];
    for (std::size_t j = 0; j < variants.size(); ++j)
      os << std::setw(static_cast<int>(w)) << std::right << (i == j ? std::string("-") : num(p[i][j], 3));
    os << std::setw(static_cast<int>(w)) << std::right << num(mean_win_rate(i), 3) << '\n';
  }
  return os.str();
}

WinRateMatrix win_rate_matrix(const std::vector<MethodResult>& variants, double tol) {
  WinRateMatrix m;
  m.tie_tolerance = tol;
  const std::size_t n = variants.size();
  std::vector<std::map<std::pair<std::string, int>, double>> table(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.variants.push_back(variants[i].method);
    for (const auto& e : variants[i].entries) {
      if (!table[i].emplace(std::make_pair(e.object, e.seed), e.objective).second) {
        throw AlignmentError(variants[i].method + " has two entries for " + e.object + " seed " + std::to_string(e.seed));
      }
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    bool aligned = table[i].size() == table[0].size();
    for (auto it = table[i].begin(); aligned && it != table[i].end(); ++it) aligned = table[0].count(it->first) > 0;
    if (!aligned) throw AlignmentError(variants[i].method + " does not cover the same objects and seeds as " + variants[0].method);
  }
  std::vector<std::string> objects;
  for (const auto& [key, v] : table.empty() ? std::map<std::pair<std::string, int>, double>{} : table[0])
    if (objects.empty() || objects.back() != key.first) objects.push_back(key.first);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.p.assign(n, std::vector<double>(n, nan));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double score = 0.0;
      for (const auto& obj : objects) {
        int wi = 0, wj = 0;
        for (const auto& [key, a] : table[i]) {
          if (key.first != obj) continue;
          const double b = table[j].at(key);
          if (std::abs(a - b) <= tol) {
            ++wi;
            ++wj;
          } else if (a < b) {
            ++wi;
          } else {
            ++wj;
          }
        }
        score += wi > wj ? 1.0 : (wi == wj ? 0.5 : 0.0);
      }
      m.p[i][j] = objects.empty() ? 0.5 : score / static_cast<double>(objects.size());
    }
  }
  return m;
}

SummaryTable summarize(const std::vector<MethodResult>& results) {
  SummaryTable t;
  for (const auto& r : results)
    for (const auto& o : r.objects())
      if (std::find(t.objects.begin(), t.objects.end(), o) == t.objects.end()) t.objects.push_back(o);
  std::map<std::string, double> best;
  for (const auto& o : t.objects) {
    double b = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
      const double v = r.object_objective(o);
      if (!std::isnan(v)) b = std::min(b, v);
    }
    best[o] = b;
  }
  for (const auto& r : results) {
    SummaryRow row;
    row.method = r.method;
    std::vector<double> medians;
    int counted = 0;
    for (const auto& o : t.objects) {
      const double v = r.object_objective(o);
      if (std::isnan(v)) continue;
      ++counted;
      medians.push_back(v);
      const double b = best[o];
      const double slack = 1e-12 * std::max(1.0, std::abs(b));
      if (v <= b + slack) row.pct_best += 1.0;
      if (v <= b + 0.01 * std::abs(b) + slack) row.pct_within_1 += 1.0;
      if (v <= b + 0.05 * std::abs(b) + slack) row.pct_within_5 += 1.0;
      if (r.object_infeasible(o)) row.pct_likely_fail += 1.0;
    }
    row.median_objective = median(medians);
    if (counted > 0) {
      for (double* p : {&row.pct_best, &row.pct_within_1, &row.pct_within_5, &row.pct_likely_fail})
        *p = 100.0 * *p / counted;
    }
    t.rows.push_back(row);
  }
  t.note = results.size() == 1
               ? "single method: it is the best by convention"
               : "best and within-x% are relative to the per-object best among the " +
                     std::to_string(results.size()) + " listed methods";
  return t;
}

std::string SummaryTable::to_csv() const {
  std::ostringstream os;
  os << "method,median_objective,pct_best,pct_within_1,pct_within_5,pct_likely_fail\n";
  for (const auto& r : rows) {
    os << r.method << ',' << num(r.median_objective, 6) << ',' << num(r.pct_best, 1) << ',' << num(r.pct_within_1, 1)
       << ',' << num(r.pct_within_5, 1) << ',' << num(r.pct_likely_fail, 1) << '\n';
  }
  return os.str();
}

std::string SummaryTable::to_text() const {
  std::size_t w = 6;
  for (const auto& r : rows) w = std::max(w, r.method.size());
  std::ostringstream os;
  os << "# " << note << " (" << objects.size() << " objects)\n";
  os << std::left << std::setw(static_cast<int>(w + 2)) << "method" << std::right << std::setw(12) << "median Obj"
     << std::setw(8) << "best%" << std::setw(8) << "<=1%" << std::setw(8) << "<=5%" << std::setw(8) << "fail%" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(w + 2)) << r.method << std::right << std::setw(12)
       << num(r.median_objective) << std::setw(8) << num(r.pct_best, 1) << std::setw(8) << num(r.pct_within_1, 1)
       << std::setw(8) << num(r.pct_within_5, 1) << std::setw(8) << num(r.pct_likely_fail, 1) << '\n';
  }
  return os.str();
}

std::vector<CurvePoint> best_so_far_curves(const std::vector<CurveInput>& traces, int resamples, std::uint64_t seed) {
  if (traces.empty()) return {};
  const std::size_t len = traces.front().best_so_far.size();
  for (const auto& t : traces) {
    if (t.best_so_far.size() != len) throw AlignmentError("best-so-far traces have unequal lengths");
  }
  // Per-object mean over its seeds.
  std::vector<std::string> objects;
  std::vector<std::vector<double>> sums;
  std::vector<int> counts;
  for (const auto& t : traces) {
    auto it = std::find(objects.begin(), objects.end(), t.object);
    std::size_t k = static_cast<std::size_t>(it - objects.begin());
    if (it == objects.end()) {
      objects.push_back(t.object);
      sums.emplace_back(len, 0.0);
      counts.push_back(0);
    }
    for (std::size_t i = 0; i < len; ++i) sums[k][i] += t.best_so_far[i];
    ++counts[k];
  }
  const std::size_t no = objects.size();
  for (std::size_t k = 0; k < no; ++k)
    for (double& v : sums[k]) v /= counts[k];

  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> boot(len, std::vector<double>(static_cast<std::size_t>(resamples)));
  for (int r = 0; r < resamples; ++r) {
    std::vector<std::size_t> pick(no);
    for (auto& p : pick) p = static_cast<std::size_t>((rng() >> 11) * 0x1.0p-53 * static_cast<double>(no));
    for (std::size_t i = 0; i < len; ++i) {
      double s = 0.0;
      for (std::size_t p : pick) s += sums[p][i];
      boot[i][static_cast<std::size_t>(r)] = s / static_cast<double>(no);
    }
  }
  auto quantile = [](std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(v.size() - 1, lo + 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < len; ++i) {
    CurvePoint p;
    p.iteration = static_cast<int>(i);
    for (std::size_t k = 0; k < no; ++k) p.mean += sums[k][i];
    p.mean /= static_cast<double>(no);
    if (resamples > 0) {
      p.lower = quantile(boot[i], 0.025);
      p.upper = quantile(boot[i], 0.975);
    } else {
      p.lower = p.upper = p.mean;
    }
    out.push_back(p);
  }
  return out;
}

std::string curves_to_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "iteration,mean,lower95,upper95\n";
  for (const auto& p : curve) os << p.iteration << ',' << num(p.mean, 6) << ',' << num(p.lower, 6) << ',' << num(p.upper, 6) << '\n';
  return os.str();
}

std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& method, const std::string& object,
                                 int seed, const char* extension) {
  return dir / method / (object + ".seed" + std::to_string(seed) + extension);
}

void write_method_result(const std::filesystem::path& dir, const MethodResult& result) {
  const auto folder = dir / result.method;
  std::filesystem::create_directories(folder);
  std::ofstream out(folder / "summary.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (folder / "summary.json").string());
  out << method_result_to_json(result).dump(2) << '\n';
}

std::vector<MethodResult> load_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("results directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto summary = entry.path() / "summary.json";
    if (entry.is_directory() && std::filesystem::exists(summary)) files.push_back(summary);
  }
  std::sort(files.begin(), files.end());
  std::vector<MethodResult> out;
  for (const auto& f : files) {
    try {
      out.push_back(method_result_from_json(Json::parse(read_file(f))));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(f.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<CurveInput> load_curves(const std::filesystem::path& dir, const std::string& method) {
  std::vector<std::filesystem::path> files;
  const auto folder = dir / method;
  if (!std::filesystem::is_directory(folder)) return {};
  for (const auto& entry : std::filesystem::directory_iterator(folder)) {
    if (entry.path().extension() == ".json" && entry.path().filename() != "summary.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CurveInput> out;
  for (const auto& f : files) {
    const Json doc = Json::parse(read_file(f));
    if (!doc.contains("best_so_far")) continue;
    out.push_back({doc.at("object").get<std::string>(), doc.at("best_so_far").get<std::vector<double>>()});
  }
  return out;
}

MethodEntry entry_from_trace(const RunTrace& trace) {
  MethodEntry e;
  e.object = trace.object;
  e.seed = static_cast<int>(trace.seed);
  if (const EvaluationReport* f = trace.final_report()) {
    e.objective = f->objective;
    e.infeasible = false;
    e.config = f->config;
    return e;
  }
  // No feasible observation: report the best capped one, flagged.
  const EvaluationReport* best = nullptr;
  for (const auto& r : trace.records)
    if (!best || r.report.objective < best->objective) best = &r.report;
  e.infeasible = true;
  if (best) {
    e.objective = best->objective;
    e.config = best->config;
  } else {
    e.objective = std::numeric_limits<double>::infinity();
  }
  return e;
}

}  // namespace fdmopt
