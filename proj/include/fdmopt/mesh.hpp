#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fdmopt {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

inline constexpr double kDefaultVoxelPitch = 0.8;
inline constexpr std::size_t kDefaultCellCap = 4'000'000;

/// Indexed triangle soup in millimetres. Normals are unit length and derived
/// from the vertex winding, never taken from the file.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> normals;
  /// Zero-area triangles removed while building the mesh.
  std::size_t dropped_degenerate = 0;

  std::size_t face_count() const { return triangles.size(); }
  Eigen::AlignedBox3d bounds() const;
  double surface_area() const;
  double face_area(std::size_t f) const;
  Vec3 face_centroid(std::size_t f) const;
  /// Every undirected edge is shared by exactly two faces.
  bool is_closed() const;
};

/// Builds a mesh from raw geometry: merges nothing, drops degenerate faces and
/// computes normals. Throws EmptyMeshError when no usable face remains and
/// GeometryError on out-of-range indices or non-finite coordinates.
TriangleMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles);

/// Parses binary or ASCII STL. Coincident vertices are welded exactly.
TriangleMesh parse_mesh(std::span<const std::uint8_t> bytes);
TriangleMesh load_mesh(const std::filesystem::path& path);

std::string to_binary_stl(const TriangleMesh& mesh);
std::string to_ascii_stl(const TriangleMesh& mesh, const std::string& name = "part");

/// Build orientation: rotations about global X, Y, Z in degrees, each a
/// multiple of 90 in [0, 270].
struct Orientation {
  int rx = 0;
  int ry = 0;
  int rz = 0;

  static bool valid_angle(int degrees) {
    return degrees == 0 || degrees == 90 || degrees == 180 || degrees == 270;
  }
  bool valid() const { return valid_angle(rx) && valid_angle(ry) && valid_angle(rz); }
  /// Rz * Ry * Rx with exact integer entries.
  Eigen::Matrix3d rotation() const;
  bool operator==(const Orientation&) const = default;
};

/// Rotates about the bounding-box centre and drops the part onto z = 0.
TriangleMesh orient(const TriangleMesh& mesh, const Orientation& orientation);

/// Occupancy raster. Index (i, j, k) covers
/// [origin + (i, j, k) * pitch, origin + (i + 1, j + 1, k + 1) * pitch).
/// k = 0 is the build plate.
struct VoxelGrid {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double pitch = kDefaultVoxelPitch;
  Vec3 origin = Vec3::Zero();
  std::vector<std::uint8_t> cells;
  /// Set when the mesh was not closed and the shell fallback was used.
  bool shell_only = false;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  bool occupied(int i, int j, int k) const {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return false;
    return cells[index(i, j, k)] != 0;
  }
  std::size_t count() const;
  /// Lowest z index holding an occupied cell, or -1 when empty.
  int lowest_occupied_slice() const;
  int highest_occupied_slice() const;
};

VoxelGrid voxelize(const TriangleMesh& mesh, double pitch = kDefaultVoxelPitch,
                   std::size_t cell_cap = kDefaultCellCap);

struct RegionStats {
  int label = 0;  // 1-based
  int cells = 0;
  Vec2 centroid = Vec2::Zero();  // mm, in grid XY frame
  /// No overlap with the previous layer's mask.
  bool is_new = false;
};

/// One 2D raster shared by every deposition layer cut from the same voxel
/// slices. Labels use 4-connectivity; 0 marks empty cells.
struct LayerMask {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> cells;
  std::vector<int> labels;
  int component_count = 0;
  int first_slice = 0;  // voxel z range this mask was built from
  int last_slice = 0;

  bool at(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return false;
    return cells[static_cast<std::size_t>(j) * nx + i] != 0;
  }
  int area_cells() const;
};

struct Layer {
  std::shared_ptr<const LayerMask> mask;
  std::vector<RegionStats> regions;
  double z_bottom = 0.0;
};

struct LayerStack {
  int nx = 0;
  int ny = 0;
  double pitch = kDefaultVoxelPitch;
  double layer_height = 0.2;
  Vec3 origin = Vec3::Zero();
  std::vector<Layer> layers;

  std::size_t size() const { return layers.size(); }
  bool empty() const { return layers.empty(); }
  double cell_area() const { return pitch * pitch; }
};

LayerStack slice(const VoxelGrid& grid, double layer_height);

/// Labels 4-connected regions of a binary raster; returns the component count.
int label_regions(const std::vector<std::uint8_t>& cells, int nx, int ny, std::vector<int>& labels);

struct FaceSlope {
  double theta_deg = 0.0;  // angle between the face normal and +Z
  double area = 0.0;       // mm^2
  double centroid_z = 0.0;
};

std::vector<FaceSlope> face_slopes(const TriangleMesh& mesh);

struct SupportMetrics {
  double unsupported_down_area = 0.0;  // mm^2
  double bed_contact_area = 0.0;       // mm^2
};

SupportMetrics support_metrics(const VoxelGrid& grid);

}  // namespace fdmopt
