#include "fdmopt/mesh.hpp"

#include "fdmopt/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace fdmopt {

namespace {

constexpr double kDegenerateArea = 1e-12;

struct VertexWelder {
  std::map<std::array<double, 3>, int> index;
  std::vector<Vec3> vertices;

  int add(const Vec3& p) {
    const std::array<double, 3> key{p.x(), p.y(), p.z()};
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(vertices.size()));
    if (inserted) vertices.push_back(p);
    return it->second;
  }
};

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32(const std::uint8_t* p) { return std::bit_cast<float>(read_u32(p)); }

TriangleMesh parse_binary(std::span<const std::uint8_t> bytes) {
  const std::uint32_t declared = read_u32(bytes.data() + 80);
  VertexWelder welder;
  std::vector<std::array<int, 3>> tris;
  tris.reserve(declared);
  std::size_t offset = 84;
  for (std::uint32_t f = 0; f < declared; ++f, offset += 50) {
    if (offset + 50 > bytes.size()) {
      throw ParseError("truncated binary STL: declared " + std::to_string(declared) +
                           " facets, record " + std::to_string(f) + " incomplete",
                       offset);
    }
    std::array<int, 3> tri{};
    for (int v = 0; v < 3; ++v) {
      const std::uint8_t* p = bytes.data() + offset + 12 + 12 * v;
      const Vec3 pos(read_f32(p), read_f32(p + 4), read_f32(p + 8));
      if (!pos.allFinite()) throw ParseError("non-finite vertex coordinate", offset + 12 + 12 * v);
      tri[v] = welder.add(pos);
    }
    tris.push_back(tri);
  }
  return make_mesh(std::move(welder.vertices), std::move(tris));
}

class AsciiReader {
 public:
  explicit AsciiReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Returns false at end of input.
  bool next(std::string& token) {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
    if (pos_ >= bytes_.size()) return false;
    start_ = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    token.assign(reinterpret_cast<const char*>(bytes_.data() + start_), pos_ - start_);
    return true;
  }

  void expect(const char* keyword) {
    std::string tok;
    if (!next(tok)) throw ParseError(std::string("unexpected end of ASCII STL, expected '") + keyword + "'", pos_);
    if (tok != keyword) throw ParseError("expected '" + std::string(keyword) + "', found '" + tok + "'", start_);
  }

  double number() {
    std::string tok;
    if (!next(tok)) throw ParseError("unexpected end of ASCII STL, expected a number", pos_);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
      throw ParseError("invalid number '" + tok + "'", start_);
    }
    return v;
  }

  void skip_line() {
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
  }

  std::size_t token_start() const { return start_; }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t start_ = 0;
};

TriangleMesh parse_ascii(std::span<const std::uint8_t> bytes) {
  AsciiReader reader(bytes);
  reader.expect("solid");
  reader.skip_line();  // solid name is free text
  VertexWelder welder;
  std::vector<std::array<int, 3>> tris;
  std::string tok;
  while (true) {
    if (!reader.next(tok)) throw ParseError("missing 'endsolid'", reader.position());
    if (tok == "endsolid") break;
    if (tok != "facet") throw ParseError("expected 'facet' or 'endsolid', found '" + tok + "'", reader.token_start());
    reader.expect("normal");
    for (int i = 0; i < 3; ++i) reader.number();
    reader.expect("outer");
    reader.expect("loop");
    std::array<int, 3> tri{};
    for (int v = 0; v < 3; ++v) {
      reader.expect("vertex");
      const double x = reader.number();
      const double y = reader.number();
      const double z = reader.number();
      tri[v] = welder.add(Vec3(x, y, z));
    }
    reader.expect("endloop");
    reader.expect("endfacet");
    tris.push_back(tri);
  }
  return make_mesh(std::move(welder.vertices), std::move(tris));
}

bool starts_with_solid(std::span<const std::uint8_t> bytes) {
  std::size_t i = 0;
  while (i < bytes.size() && std::isspace(bytes[i])) ++i;
  return bytes.size() - i >= 5 && std::memcmp(bytes.data() + i, "solid", 5) == 0;
}

void append_f32(std::string& out, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((u >> s) & 0xFF));
}

std::array<double, 2> exact_cos_sin(int degrees) {
  switch (((degrees % 360) + 360) % 360) {
    case 0: return {1.0, 0.0};
    case 90: return {0.0, 1.0};
    case 180: return {-1.0, 0.0};
    case 270: return {0.0, -1.0};
    default: {
      const double r = degrees * std::numbers::pi / 180.0;
      return {std::cos(r), std::sin(r)};
    }
  }
}

}  // namespace

Eigen::AlignedBox3d TriangleMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& tri : triangles)
    for (int v : tri) box.extend(vertices[v]);
  return box;
}

double TriangleMesh::face_area(std::size_t f) const {
  const auto& t = triangles[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

Vec3 TriangleMesh::face_centroid(std::size_t f) const {
  const auto& t = triangles[f];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double TriangleMesh::surface_area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < triangles.size(); ++f) total += face_area(f);
  return total;
}

bool TriangleMesh::is_closed() const {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e];
      int b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  return std::all_of(edges.begin(), edges.end(), [](const auto& kv) { return kv.second == 2; });
}

TriangleMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles) {
  TriangleMesh mesh;
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw GeometryError("mesh has a non-finite vertex coordinate");
  }
  const int nv = static_cast<int>(vertices.size());
  mesh.vertices = std::move(vertices);
  for (const auto& t : triangles) {
    for (int idx : t) {
      if (idx < 0 || idx >= nv) throw GeometryError("triangle index out of range");
    }
    const Vec3 n = (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    const double twice_area = n.norm();
    if (0.5 * twice_area <= kDegenerateArea) {
      ++mesh.dropped_degenerate;
      continue;
    }
    mesh.triangles.push_back(t);
    mesh.normals.push_back(n / twice_area);
  }
  if (mesh.triangles.empty()) {
    throw EmptyMeshError("mesh has no usable triangles (" + std::to_string(mesh.dropped_degenerate) +
                         " degenerate dropped)");
  }
  return mesh;
}

TriangleMesh parse_mesh(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 84) {
    const std::uint64_t declared = read_u32(bytes.data() + 80);
    if (84 + 50 * declared == bytes.size()) return parse_binary(bytes);
  }
  if (starts_with_solid(bytes)) return parse_ascii(bytes);
  if (bytes.size() < 84) throw ParseError("truncated binary STL header", bytes.size());
  return parse_binary(bytes);
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mesh file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_mesh(bytes);
}

std::string to_binary_stl(const TriangleMesh& mesh) {
  std::string out(80, '\0');
  const std::string header = "fdmopt binary stl";
  std::copy(header.begin(), header.end(), out.begin());
  const auto n = static_cast<std::uint32_t>(mesh.triangles.size());
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((n >> s) & 0xFF));
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    for (int c = 0; c < 3; ++c) append_f32(out, static_cast<float>(mesh.normals[f][c]));
    for (int v : mesh.triangles[f])
      for (int c = 0; c < 3; ++c) append_f32(out, static_cast<float>(mesh.vertices[v][c]));
    out.push_back('\0');
    out.push_back('\0');
  }
  return out;
}

std::string to_ascii_stl(const TriangleMesh& mesh, const std::string& name) {
  std::ostringstream os;
  os.precision(9);
  os << "solid " << name << "\n";
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const Vec3& n = mesh.normals[f];
    os << "  facet normal " << n.x() << ' ' << n.y() << ' ' << n.z() << "\n    outer loop\n";
    for (int v : mesh.triangles[f]) {
      const Vec3& p = mesh.vertices[v];
      os << "      vertex " << p.x() << ' ' << p.y() << ' ' << p.z() << "\n";
    }
    os << "    endloop\n  endfacet\n";
  }
  os << "endsolid " << name << "\n";
  return os.str();
}

Eigen::Matrix3d Orientation::rotation() const {
  const auto [cx, sx] = exact_cos_sin(rx);
  const auto [cy, sy] = exact_cos_sin(ry);
  const auto [cz, sz] = exact_cos_sin(rz);
  Eigen::Matrix3d Rx, Ry, Rz;
  Rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  Ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  Rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return Rz * Ry * Rx;
}

TriangleMesh orient(const TriangleMesh& mesh, const Orientation& orientation) {
  const Eigen::Matrix3d R = orientation.rotation();
  const Vec3 centre = mesh.bounds().center();
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = R * (v - centre) + centre;
  for (auto& n : out.normals) n = R * n;
  const double min_z = out.bounds().min().z();
  for (auto& v : out.vertices) v.z() -= min_z;
  return out;
}

std::size_t VoxelGrid::count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](std::uint8_t c) { return c != 0; }));
}

int VoxelGrid::lowest_occupied_slice() const {
  const std::size_t plane = static_cast<std::size_t>(nx) * ny;
  for (int k = 0; k < nz; ++k) {
    const auto begin = cells.begin() + static_cast<std::ptrdiff_t>(k * plane);
    if (std::any_of(begin, begin + static_cast<std::ptrdiff_t>(plane), [](std::uint8_t c) { return c != 0; })) return k;
  }
  return -1;
}

int VoxelGrid::highest_occupied_slice() const {
  const std::size_t plane = static_cast<std::size_t>(nx) * ny;
  for (int k = nz - 1; k >= 0; --k) {
    const auto begin = cells.begin() + static_cast<std::ptrdiff_t>(k * plane);
    if (std::any_of(begin, begin + static_cast<std::ptrdiff_t>(plane), [](std::uint8_t c) { return c != 0; })) return k;
  }
  return -1;
}

VoxelGrid voxelize(const TriangleMesh& mesh, double pitch, std::size_t cell_cap) {
  if (!(pitch > 0.0)) throw GeometryError("voxel pitch must be positive");
  const auto box = mesh.bounds();
  const Vec3 extent = box.sizes();
  auto cells_along = [pitch](double len) { return std::max(1, static_cast<int>(std::ceil(len / pitch - 1e-9))); };

  VoxelGrid grid;
  grid.pitch = pitch;
  grid.origin = box.min();
  const double nx = std::max(1.0, std::ceil(extent.x() / pitch - 1e-9));
  const double ny = std::max(1.0, std::ceil(extent.y() / pitch - 1e-9));
  const double nz = std::max(1.0, std::ceil(extent.z() / pitch - 1e-9));
  if (nx * ny * nz > static_cast<double>(cell_cap)) {
    std::ostringstream msg;
    msg << "voxel grid " << nx << "x" << ny << "x" << nz << " exceeds the cap of " << cell_cap
        << " cells; use a coarser pitch than " << pitch << " mm";
    throw ResolutionError(msg.str());
  }
  grid.nx = cells_along(extent.x());
  grid.ny = cells_along(extent.y());
  grid.nz = cells_along(extent.z());
  grid.cells.assign(static_cast<std::size_t>(grid.nx) * grid.ny * grid.nz, 0);

  if (!mesh.is_closed()) {
    grid.shell_only = true;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
      const auto& t = mesh.triangles[f];
      const Vec3& a = mesh.vertices[t[0]];
      const Vec3 ab = mesh.vertices[t[1]] - a;
      const Vec3 ac = mesh.vertices[t[2]] - a;
      const double longest = std::max({ab.norm(), ac.norm(), (ac - ab).norm()});
      const int steps = std::max(1, static_cast<int>(std::ceil(longest / (pitch / 3.0))));
      for (int u = 0; u <= steps; ++u) {
        for (int v = 0; u + v <= steps; ++v) {
          const Vec3 p = a + ab * (double(u) / steps) + ac * (double(v) / steps);
          const Vec3 rel = (p - grid.origin) / pitch;
          const int i = std::clamp(static_cast<int>(std::floor(rel.x())), 0, grid.nx - 1);
          const int j = std::clamp(static_cast<int>(std::floor(rel.y())), 0, grid.ny - 1);
          const int k = std::clamp(static_cast<int>(std::floor(rel.z())), 0, grid.nz - 1);
          grid.cells[grid.index(i, j, k)] = 1;
        }
      }
    }
    return grid;
  }

  // Parity ray casting along +Z through every column centre. The ray is
  // nudged off the lattice so it never grazes shared edges of the tessellation.
  const double jitter_x = 1.2345678e-6 * pitch;
  const double jitter_y = 2.3456789e-6 * pitch;
  std::vector<std::vector<double>> hits(static_cast<std::size_t>(grid.nx) * grid.ny);
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (std::abs(det) < 1e-14) continue;  // vertical in projection
    const double min_x = std::min({a.x(), b.x(), c.x()});
    const double max_x = std::max({a.x(), b.x(), c.x()});
    const double min_y = std::min({a.y(), b.y(), c.y()});
    const double max_y = std::max({a.y(), b.y(), c.y()});
    const int i0 = std::max(0, static_cast<int>(std::ceil((min_x - grid.origin.x()) / pitch - 0.5)) - 1);
    const int i1 = std::min(grid.nx - 1, static_cast<int>(std::floor((max_x - grid.origin.x()) / pitch - 0.5)) + 1);
    const int j0 = std::max(0, static_cast<int>(std::ceil((min_y - grid.origin.y()) / pitch - 0.5)) - 1);
    const int j1 = std::min(grid.ny - 1, static_cast<int>(std::floor((max_y - grid.origin.y()) / pitch - 0.5)) + 1);
    for (int j = j0; j <= j1; ++j) {
      const double y = grid.origin.y() + (j + 0.5) * pitch + jitter_y;
      for (int i = i0; i <= i1; ++i) {
        const double x = grid.origin.x() + (i + 0.5) * pitch + jitter_x;
        const double l1 = ((b.x() - x) * (c.y() - y) - (c.x() - x) * (b.y() - y)) / det;
        const double l2 = ((c.x() - x) * (a.y() - y) - (a.x() - x) * (c.y() - y)) / det;
        const double l3 = 1.0 - l1 - l2;
        if (l1 < 0.0 || l2 < 0.0 || l3 < 0.0) continue;
        hits[static_cast<std::size_t>(j) * grid.nx + i].push_back(l1 * a.z() + l2 * b.z() + l3 * c.z());
      }
    }
  }
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      auto& zs = hits[static_cast<std::size_t>(j) * grid.nx + i];
      if (zs.empty()) continue;
      std::sort(zs.begin(), zs.end());
      std::size_t below = 0;
      for (int k = 0; k < grid.nz; ++k) {
        const double zc = grid.origin.z() + (k + 0.5) * pitch;
        while (below < zs.size() && zs[below] < zc) ++below;
        if (below % 2 == 1) grid.cells[grid.index(i, j, k)] = 1;
      }
    }
  }
  return grid;
}

int LayerMask::area_cells() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](std::uint8_t c) { return c != 0; }));
}

int label_regions(const std::vector<std::uint8_t>& cells, int nx, int ny, std::vector<int>& labels) {
  labels.assign(cells.size(), 0);
  int next = 0;
  std::vector<int> stack;
  for (int start = 0; start < nx * ny; ++start) {
    if (!cells[start] || labels[start]) continue;
    labels[start] = ++next;
    stack.push_back(start);
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      const int i = c % nx;
      const int j = c / nx;
      const int nbr[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= nx || n[1] >= ny) continue;
        const int idx = n[1] * nx + n[0];
        if (cells[idx] && !labels[idx]) {
          labels[idx] = next;
          stack.push_back(idx);
        }
      }
    }
  }
  return next;
}

LayerStack slice(const VoxelGrid& grid, double layer_height) {
  if (!(layer_height > 0.0)) throw GeometryError("layer height must be positive");
  LayerStack stack;
  stack.nx = grid.nx;
  stack.ny = grid.ny;
  stack.pitch = grid.pitch;
  stack.layer_height = layer_height;
  stack.origin = grid.origin;
  const int top = grid.highest_occupied_slice();
  if (top < 0) return stack;
  // Sampling can leave the lowest slices empty when the part rests on an edge
  // or a point; the first occupied slice is treated as the build plate.
  const int bottom = grid.lowest_occupied_slice();
  const double base = bottom * grid.pitch;

  const double height = (top + 1 - bottom) * grid.pitch;
  const int count = static_cast<int>(std::ceil(height / layer_height - 1e-9));
  const double eps = 1e-9;
  const std::size_t plane = static_cast<std::size_t>(grid.nx) * grid.ny;

  std::map<std::pair<int, int>, std::shared_ptr<const LayerMask>> cache;
  stack.layers.reserve(count);
  for (int l = 0; l < count; ++l) {
    const double z0 = l * layer_height;
    const double z1 = (l + 1) * layer_height;
    // Voxel slices whose z-extent intersects the open band (z0, z1).
    const int k_lo = std::max(0, static_cast<int>(std::floor((z0 + base) / grid.pitch + eps)));
    const int k_hi = std::min(grid.nz - 1, static_cast<int>(std::ceil((z1 + base) / grid.pitch - eps)) - 1);
    auto& slot = cache[{k_lo, k_hi}];
    if (!slot) {
      auto mask = std::make_shared<LayerMask>();
      mask->nx = grid.nx;
      mask->ny = grid.ny;
      mask->first_slice = k_lo;
      mask->last_slice = k_hi;
      mask->cells.assign(plane, 0);
      for (int k = k_lo; k <= k_hi; ++k) {
        const std::uint8_t* src = grid.cells.data() + k * plane;
        for (std::size_t c = 0; c < plane; ++c) mask->cells[c] |= src[c];
      }
      mask->component_count = label_regions(mask->cells, mask->nx, mask->ny, mask->labels);
      slot = std::move(mask);
    }

    Layer layer;
    layer.mask = slot;
    layer.z_bottom = z0;
    const LayerMask& m = *slot;
    if (l > 0 && stack.layers.back().mask == slot) {
      layer.regions = stack.layers.back().regions;
      for (auto& r : layer.regions) r.is_new = false;
    } else {
      layer.regions.resize(m.component_count);
      std::vector<bool> overlaps(m.component_count, false);
      const LayerMask* below = l > 0 ? stack.layers.back().mask.get() : nullptr;
      for (int j = 0; j < m.ny; ++j) {
        for (int i = 0; i < m.nx; ++i) {
          const int lab = m.labels[static_cast<std::size_t>(j) * m.nx + i];
          if (!lab) continue;
          auto& r = layer.regions[lab - 1];
          r.label = lab;
          ++r.cells;
          r.centroid += Vec2((i + 0.5) * grid.pitch, (j + 0.5) * grid.pitch);
          if (below && below->at(i, j)) overlaps[lab - 1] = true;
        }
      }
      for (int r = 0; r < m.component_count; ++r) {
        layer.regions[r].centroid /= layer.regions[r].cells;
        layer.regions[r].is_new = !overlaps[r];
      }
    }
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

std::vector<FaceSlope> face_slopes(const TriangleMesh& mesh) {
  std::vector<FaceSlope> out;
  out.reserve(mesh.triangles.size());
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    FaceSlope s;
    s.theta_deg = std::acos(std::clamp(mesh.normals[f].z(), -1.0, 1.0)) * 180.0 / std::numbers::pi;
    s.area = mesh.face_area(f);
    s.centroid_z = mesh.face_centroid(f).z();
    out.push_back(s);
  }
  return out;
}

SupportMetrics support_metrics(const VoxelGrid& grid) {
  SupportMetrics m;
  const int k0 = grid.lowest_occupied_slice();
  if (k0 < 0) return m;
  const double face = grid.pitch * grid.pitch;
  for (int k = k0; k < grid.nz; ++k) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        if (!grid.occupied(i, j, k)) continue;
        if (k == k0) {
          m.bed_contact_area += face;
        } else if (!grid.occupied(i, j, k - 1)) {
          m.unsupported_down_area += face;
        }
      }
    }
  }
  return m;
}

}  // namespace fdmopt
