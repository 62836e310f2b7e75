#pragma once

#include "fdmopt/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fdmopt {

enum class InfillPattern { rectilinear, grid, gyroid, honeycomb };
enum class SeamPlacement { aligned, nearest, random };

/// The tunable print configuration: build orientation plus twelve slicer
/// parameters. Lengths in mm, speeds in mm^3/s.
struct PrintConfig {
  Orientation orientation;
  double layer_height = 0.20;
  double first_layer_height = 0.20;
  double infill_density = 0.15;
  InfillPattern infill_pattern = InfillPattern::grid;
  double brim_width = 0.0;
  bool support_material = false;
  int perimeters = 2;
  int bottom_solid_layers = 4;
  int top_solid_layers = 5;
  double max_volumetric_speed = 11.0;
  double elephant_foot_compensation = 0.2;
  SeamPlacement seam_placement = SeamPlacement::aligned;

  bool operator==(const PrintConfig&) const = default;
};

/// Pinned PLA profile for a 0.4 mm nozzle, 0.20 mm layers.
PrintConfig default_config();

enum class ParamKind { continuous, integer, categorical };

struct ParamSpec {
  std::string_view name;
  ParamKind kind;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::string_view> categories;  // categorical only

  int width() const { return kind == ParamKind::categorical ? static_cast<int>(categories.size()) : 1; }
  double range() const { return upper - lower; }
};

/// All tunable parameters in encoding order.
const std::vector<ParamSpec>& parameter_specs();
const ParamSpec& parameter_spec(std::string_view name);
bool is_parameter(std::string_view name);

struct EncodedBlock {
  int offset = 0;
  int width = 1;
};
EncodedBlock encoded_block(std::string_view name);

/// Numeric value of a continuous/integer parameter, or the category index of
/// a categorical one.
double parameter_value(const PrintConfig& config, std::string_view name);
int category_index(const PrintConfig& config, std::string_view name);
void set_parameter_value(PrintConfig& config, std::string_view name, double value);
void set_category_index(PrintConfig& config, std::string_view name, int index);
int category_of(std::string_view param, std::string_view category);

std::string_view to_string(InfillPattern p);
std::string_view to_string(SeamPlacement s);

struct ConfigViolation {
  std::string parameter;
  std::string message;
};

std::vector<ConfigViolation> validate(const PrintConfig& config);

/// Surrogate input: continuous and integer parameters min-max scaled to
/// [0,1], each categorical one-hot.
using ConfigVector = Eigen::VectorXd;

int encoded_dimension();
ConfigVector encode(const PrintConfig& config);
/// Total on any vector of the right size: clamps, rounds integers, picks the
/// argmax category, and lifts first_layer_height to half the layer height.
PrintConfig decode(const Eigen::Ref<const Eigen::VectorXd>& vector);

/// Continuous values are kept on a 1e-6 lattice so decode(encode(c)) == c.
double quantize(double value);

/// Scrambled-Sobol configurations; categoricals are stratified by bins.
std::vector<PrintConfig> sobol_sample(int n, std::uint64_t seed);

std::string to_kv_text(const PrintConfig& config);
/// Parses `name = value` lines; '#' starts a comment. Missing keys keep their
/// default_config() values. Throws ValidationError on unknown keys or bad values.
PrintConfig parse_kv_text(std::string_view text);

std::string to_json_text(const PrintConfig& config);
PrintConfig parse_json_text(std::string_view text);

/// Loads either format, choosing JSON when the document starts with '{'.
PrintConfig load_config_document(std::string_view text);

}  // namespace fdmopt
