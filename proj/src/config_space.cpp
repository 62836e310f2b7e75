#include "fdmopt/config_space.hpp"

#include "fdmopt/error.hpp"
#include "fdmopt/json_io.hpp"
#include "fdmopt/sobol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace fdmopt {

namespace {

constexpr double kLattice = 1e6;
constexpr double kTol = 1e-12;

const std::vector<ParamSpec> kSpecs = {
    {"layer_height", ParamKind::continuous, 0.05, 0.30, {}},
    {"first_layer_height", ParamKind::continuous, 0.10, 0.35, {}},
    {"infill_density", ParamKind::continuous, 0.0, 1.0, {}},
    {"infill_pattern", ParamKind::categorical, 0, 0, {"rectilinear", "grid", "gyroid", "honeycomb"}},
    {"brim_width", ParamKind::continuous, 0.0, 10.0, {}},
    {"support_material", ParamKind::categorical, 0, 0, {"off", "on"}},
    {"perimeters", ParamKind::integer, 1, 6, {}},
    {"bottom_solid_layers", ParamKind::integer, 0, 8, {}},
    {"top_solid_layers", ParamKind::integer, 0, 8, {}},
    {"max_volumetric_speed", ParamKind::continuous, 2.0, 20.0, {}},
    {"elephant_foot_compensation", ParamKind::continuous, 0.0, 0.5, {}},
    {"seam_placement", ParamKind::categorical, 0, 0, {"aligned", "nearest", "random"}},
    {"orientation_x", ParamKind::categorical, 0, 0, {"0", "90", "180", "270"}},
    {"orientation_y", ParamKind::categorical, 0, 0, {"0", "90", "180", "270"}},
    {"orientation_z", ParamKind::categorical, 0, 0, {"0", "90", "180", "270"}},
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double lattice_ceil(double v) { return std::ceil(v * kLattice - 1e-6) / kLattice; }

// Lifts first_layer_height to satisfy first >= layer / 2 on the lattice.
void repair(PrintConfig& c) {
  const double floor_value = lattice_ceil(0.5 * c.layer_height);
  if (c.first_layer_height < floor_value) c.first_layer_height = std::min(floor_value, 0.35);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError("invalid numeric value '" + text + "' for " + key);
  }
  return v;
}

void assign_from_text(PrintConfig& c, const std::string& key, const std::string& value) {
  if (!is_parameter(key)) throw ValidationError("unknown parameter '" + key + "'");
  const ParamSpec& spec = parameter_spec(key);
  if (spec.kind == ParamKind::categorical) {
    std::string v = value;
    if (key == "support_material") {
      if (v == "1" || v == "true") v = "on";
      if (v == "0" || v == "false") v = "off";
    }
    const int idx = category_of(key, v);
    if (idx < 0) throw ValidationError("invalid value '" + value + "' for " + key);
    set_category_index(c, key, idx);
    return;
  }
  const double v = parse_number(key, value);
  if (spec.kind == ParamKind::integer && v != std::round(v)) {
    throw ValidationError(key + " must be an integer, got " + value);
  }
  set_parameter_value(c, key, v);
}

}  // namespace

PrintConfig default_config() { return PrintConfig{}; }

const std::vector<ParamSpec>& parameter_specs() { return kSpecs; }

bool is_parameter(std::string_view name) {
  return std::any_of(kSpecs.begin(), kSpecs.end(), [&](const ParamSpec& s) { return s.name == name; });
}

const ParamSpec& parameter_spec(std::string_view name) {
  for (const auto& s : kSpecs)
    if (s.name == name) return s;
  throw ValidationError("unknown parameter '" + std::string(name) + "'");
}

EncodedBlock encoded_block(std::string_view name) {
  int offset = 0;
  for (const auto& s : kSpecs) {
    if (s.name == name) return {offset, s.width()};
    offset += s.width();
  }
  throw ValidationError("unknown parameter '" + std::string(name) + "'");
}

int encoded_dimension() {
  static const int dim = [] {
    int d = 0;
    for (const auto& s : kSpecs) d += s.width();
    return d;
  }();
  return dim;
}

std::string_view to_string(InfillPattern p) { return kSpecs[3].categories[static_cast<int>(p)]; }
std::string_view to_string(SeamPlacement s) { return kSpecs[11].categories[static_cast<int>(s)]; }

int category_of(std::string_view param, std::string_view category) {
  const auto& cats = parameter_spec(param).categories;
  for (std::size_t i = 0; i < cats.size(); ++i)
    if (cats[i] == category) return static_cast<int>(i);
  return -1;
}

double parameter_value(const PrintConfig& c, std::string_view name) {
  if (name == "layer_height") return c.layer_height;
  if (name == "first_layer_height") return c.first_layer_height;
  if (name == "infill_density") return c.infill_density;
  if (name == "brim_width") return c.brim_width;
  if (name == "perimeters") return c.perimeters;
  if (name == "bottom_solid_layers") return c.bottom_solid_layers;
  if (name == "top_solid_layers") return c.top_solid_layers;
  if (name == "max_volumetric_speed") return c.max_volumetric_speed;
  if (name == "elephant_foot_compensation") return c.elephant_foot_compensation;
  return category_index(c, name);
}

int category_index(const PrintConfig& c, std::string_view name) {
  if (name == "infill_pattern") return static_cast<int>(c.infill_pattern);
  if (name == "support_material") return c.support_material ? 1 : 0;
  if (name == "seam_placement") return static_cast<int>(c.seam_placement);
  if (name == "orientation_x") return c.orientation.rx / 90;
  if (name == "orientation_y") return c.orientation.ry / 90;
  if (name == "orientation_z") return c.orientation.rz / 90;
  throw ValidationError("'" + std::string(name) + "' is not a categorical parameter");
}

void set_parameter_value(PrintConfig& c, std::string_view name, double v) {
  if (name == "layer_height") c.layer_height = v;
  else if (name == "first_layer_height") c.first_layer_height = v;
  else if (name == "infill_density") c.infill_density = v;
  else if (name == "brim_width") c.brim_width = v;
  else if (name == "perimeters") c.perimeters = static_cast<int>(std::lround(v));
  else if (name == "bottom_solid_layers") c.bottom_solid_layers = static_cast<int>(std::lround(v));
  else if (name == "top_solid_layers") c.top_solid_layers = static_cast<int>(std::lround(v));
  else if (name == "max_volumetric_speed") c.max_volumetric_speed = v;
  else if (name == "elephant_foot_compensation") c.elephant_foot_compensation = v;
  else set_category_index(c, name, static_cast<int>(std::lround(v)));
}

void set_category_index(PrintConfig& c, std::string_view name, int idx) {
  if (name == "infill_pattern") c.infill_pattern = static_cast<InfillPattern>(idx);
  else if (name == "support_material") c.support_material = idx != 0;
  else if (name == "seam_placement") c.seam_placement = static_cast<SeamPlacement>(idx);
  else if (name == "orientation_x") c.orientation.rx = 90 * idx;
  else if (name == "orientation_y") c.orientation.ry = 90 * idx;
  else if (name == "orientation_z") c.orientation.rz = 90 * idx;
  else throw ValidationError("'" + std::string(name) + "' is not a categorical parameter");
}

std::vector<ConfigViolation> validate(const PrintConfig& c) {
  std::vector<ConfigViolation> out;
  for (const auto& spec : kSpecs) {
    const std::string name(spec.name);
    if (spec.kind == ParamKind::categorical) {
      if (name.rfind("orientation_", 0) == 0) {
        const int deg = name == "orientation_x" ? c.orientation.rx
                        : name == "orientation_y" ? c.orientation.ry
                                                  : c.orientation.rz;
        if (!Orientation::valid_angle(deg)) out.push_back({name, "angle must be one of 0, 90, 180, 270"});
        continue;
      }
      const int idx = category_index(c, name);
      if (idx < 0 || idx >= spec.width()) out.push_back({name, "value outside its enumeration"});
      continue;
    }
    const double v = parameter_value(c, name);
    if (!std::isfinite(v) || v < spec.lower - kTol || v > spec.upper + kTol) {
      std::ostringstream msg;
      msg << "value " << v << " outside [" << spec.lower << ", " << spec.upper << "]";
      out.push_back({name, msg.str()});
    }
  }
  if (c.first_layer_height < 0.5 * c.layer_height - kTol) {
    out.push_back({"first_layer_height", "must be at least half of layer_height"});
  }
  return out;
}

double quantize(double value) { return std::round(value * kLattice) / kLattice; }

ConfigVector encode(const PrintConfig& c) {
  ConfigVector x = ConfigVector::Zero(encoded_dimension());
  int offset = 0;
  for (const auto& spec : kSpecs) {
    if (spec.kind == ParamKind::categorical) {
      x(offset + category_index(c, spec.name)) = 1.0;
    } else {
      x(offset) = (parameter_value(c, spec.name) - spec.lower) / spec.range();
    }
    offset += spec.width();
  }
  return x;
}

PrintConfig decode(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != encoded_dimension()) {
    throw DimensionError("config vector has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(encoded_dimension()));
  }
  PrintConfig c;
  int offset = 0;
  for (const auto& spec : kSpecs) {
    if (spec.kind == ParamKind::categorical) {
      Eigen::Index best = 0;
      x.segment(offset, spec.width()).maxCoeff(&best);
      set_category_index(c, spec.name, static_cast<int>(best));
    } else {
      const double u = std::clamp(std::isfinite(x(offset)) ? x(offset) : 0.0, 0.0, 1.0);
      double v = spec.lower + u * spec.range();
      v = spec.kind == ParamKind::integer ? std::round(v) : std::clamp(quantize(v), spec.lower, spec.upper);
      set_parameter_value(c, spec.name, v);
    }
    offset += spec.width();
  }
  repair(c);
  return c;
}

std::vector<PrintConfig> sobol_sample(int n, std::uint64_t seed) {
  const Eigen::MatrixXd u = sobol_points(n, static_cast<int>(kSpecs.size()), seed);
  std::vector<PrintConfig> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    PrintConfig c;
    for (std::size_t d = 0; d < kSpecs.size(); ++d) {
      const ParamSpec& spec = kSpecs[d];
      const double ud = u(i, static_cast<Eigen::Index>(d));
      switch (spec.kind) {
        case ParamKind::continuous:
          set_parameter_value(c, spec.name, std::clamp(quantize(spec.lower + ud * spec.range()), spec.lower, spec.upper));
          break;
        case ParamKind::integer: {
          const int levels = static_cast<int>(spec.range()) + 1;
          set_parameter_value(c, spec.name, spec.lower + std::min(levels - 1, static_cast<int>(ud * levels)));
          break;
        }
        case ParamKind::categorical:
          set_category_index(c, spec.name, std::min(spec.width() - 1, static_cast<int>(ud * spec.width())));
          break;
      }
    }
    repair(c);
    out.push_back(c);
  }
  return out;
}

std::string to_kv_text(const PrintConfig& c) {
  std::ostringstream os;
  for (const auto& spec : kSpecs) {
    os << spec.name << " = ";
    if (spec.name == "support_material") {
      os << (c.support_material ? 1 : 0);
    } else if (spec.kind == ParamKind::categorical) {
      os << spec.categories[category_index(c, spec.name)];
    } else if (spec.kind == ParamKind::integer) {
      os << static_cast<int>(parameter_value(c, spec.name));
    } else {
      os << format_double(parameter_value(c, spec.name));
    }
    os << "\n";
  }
  return os.str();
}

PrintConfig parse_kv_text(std::string_view text) {
  PrintConfig c = default_config();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("line " + std::to_string(line_no) + ": expected 'name = value'");
    assign_from_text(c, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  return c;
}

Json config_to_json(const PrintConfig& c) {
  Json j = Json::object();
  for (const auto& spec : kSpecs) {
    const std::string name(spec.name);
    if (name == "support_material") {
      j[name] = c.support_material;
    } else if (name.rfind("orientation_", 0) == 0) {
      j[name] = 90 * category_index(c, name);
    } else if (spec.kind == ParamKind::categorical) {
      j[name] = std::string(spec.categories[category_index(c, name)]);
    } else if (spec.kind == ParamKind::integer) {
      j[name] = static_cast<int>(parameter_value(c, name));
    } else {
      j[name] = parameter_value(c, name);
    }
  }
  return j;
}

PrintConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("configuration document must be a JSON object");
  PrintConfig c = default_config();
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    if (v.is_boolean()) assign_from_text(c, key, v.get<bool>() ? "true" : "false");
    else if (v.is_string()) assign_from_text(c, key, v.get<std::string>());
    else if (v.is_number()) {
      if (key.rfind("orientation_", 0) == 0) {
        assign_from_text(c, key, std::to_string(v.get<int>()));
      } else {
        if (!is_parameter(key)) throw ValidationError("unknown parameter '" + key + "'");
        const ParamSpec& spec = parameter_spec(key);
        if (spec.kind == ParamKind::categorical) {
          if (key != "support_material") throw ValidationError("invalid value for " + key);
          assign_from_text(c, key, v.get<double>() != 0.0 ? "on" : "off");
        } else {
          const double d = v.get<double>();
          if (spec.kind == ParamKind::integer && d != std::round(d)) throw ValidationError(key + " must be an integer");
          set_parameter_value(c, key, d);
        }
      }
    } else {
      throw ValidationError("invalid value for " + key);
    }
  }
  return c;
}

std::string to_json_text(const PrintConfig& c) { return config_to_json(c).dump(2) + "\n"; }

PrintConfig parse_json_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("configuration JSON does not parse: ") + e.what());
  }
  return config_from_json(doc);
}

PrintConfig load_config_document(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_json_text(text);
  return parse_kv_text(text);
}

}  // namespace fdmopt
