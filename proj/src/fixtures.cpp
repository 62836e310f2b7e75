#include "fdmopt/fixtures.hpp"

#include "fdmopt/error.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace fdmopt::fixtures {

namespace {

using Soup = std::vector<std::array<Vec3, 3>>;

double signed_volume(const TriangleMesh& m) {
  double v = 0.0;
  for (const auto& t : m.triangles) v += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]]));
  return v / 6.0;
}

// Welds exactly coincident corners (treating -0 as +0), drops degenerate
// faces and flips the winding if the enclosed volume comes out negative.
TriangleMesh finish(const Soup& soup) {
  std::map<std::array<double, 3>, int> index;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> tris;
  for (const auto& tri : soup) {
    std::array<int, 3> t{};
    for (int c = 0; c < 3; ++c) {
      std::array<double, 3> key{tri[c].x() + 0.0, tri[c].y() + 0.0, tri[c].z() + 0.0};
      auto [it, inserted] = index.try_emplace(key, static_cast<int>(vertices.size()));
      if (inserted) vertices.emplace_back(key[0], key[1], key[2]);
      t[c] = it->second;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    tris.push_back(t);
  }
  TriangleMesh mesh = make_mesh(std::move(vertices), std::move(tris));
  if (signed_volume(mesh) < 0.0) {
    for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
    for (auto& n : mesh.normals) n = -n;
  }
  return mesh;
}

void add_quad(Soup& soup, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  soup.push_back({a, b, c});
  soup.push_back({a, c, d});
}

TriangleMesh transformed(const TriangleMesh& mesh, const Eigen::Matrix3d& R, const Vec3& shift) {
  Soup soup;
  for (const auto& t : mesh.triangles) {
    soup.push_back({R * mesh.vertices[t[0]] + shift, R * mesh.vertices[t[1]] + shift, R * mesh.vertices[t[2]] + shift});
  }
  return finish(soup);
}

// Lays a profile drawn in the XY plane into the XZ plane, extruded along +Y.
TriangleMesh stand_up(const TriangleMesh& flat, double depth) {
  Eigen::Matrix3d R;
  R << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  return transformed(flat, R, Vec3(0, depth, 0));
}

double cross2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool inside_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross2(a, b, p) >= 0 && cross2(b, c, p) >= 0 && cross2(c, a, p) >= 0;
}

std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec2>& poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> out;
  std::size_t guard = 0;
  while (idx.size() > 3 && guard++ < 10 * poly.size() * poly.size()) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int a = idx[(i + idx.size() - 1) % idx.size()];
      const int b = idx[i];
      const int c = idx[(i + 1) % idx.size()];
      if (cross2(poly[a], poly[b], poly[c]) <= 0) continue;
      bool blocked = false;
      for (int other : idx) {
        if (other == a || other == b || other == c) continue;
        if (inside_triangle(poly[other], poly[a], poly[b], poly[c])) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      out.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw GeometryError("polygon is not simple and counter-clockwise");
  }
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

}  // namespace

TriangleMesh box(const Vec3& lo, const Vec3& hi) {
  return rectilinear({lo.x(), hi.x()}, {lo.y(), hi.y()}, {lo.z(), hi.z()}, [](int, int, int) { return true; });
}

TriangleMesh rectilinear(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& zs,
                         const std::function<bool(int, int, int)>& occupied) {
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  const int nz = static_cast<int>(zs.size()) - 1;
  auto occ = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return false;
    return occupied(i, j, k);
  };
  auto p = [&](int i, int j, int k) { return Vec3(xs[i], ys[j], zs[k]); };
  Soup soup;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (!occ(i, j, k)) continue;
        if (!occ(i - 1, j, k)) add_quad(soup, p(i, j, k), p(i, j, k + 1), p(i, j + 1, k + 1), p(i, j + 1, k));
        if (!occ(i + 1, j, k)) add_quad(soup, p(i + 1, j, k), p(i + 1, j + 1, k), p(i + 1, j + 1, k + 1), p(i + 1, j, k + 1));
        if (!occ(i, j - 1, k)) add_quad(soup, p(i, j, k), p(i + 1, j, k), p(i + 1, j, k + 1), p(i, j, k + 1));
        if (!occ(i, j + 1, k)) add_quad(soup, p(i, j + 1, k), p(i, j + 1, k + 1), p(i + 1, j + 1, k + 1), p(i + 1, j + 1, k));
        if (!occ(i, j, k - 1)) add_quad(soup, p(i, j, k), p(i, j + 1, k), p(i + 1, j + 1, k), p(i + 1, j, k));
        if (!occ(i, j, k + 1)) add_quad(soup, p(i, j, k + 1), p(i + 1, j, k + 1), p(i + 1, j + 1, k + 1), p(i, j + 1, k + 1));
      }
    }
  }
  return finish(soup);
}

TriangleMesh prism(const std::vector<Vec2>& polygon, double z0, double z1) {
  Soup soup;
  for (const auto& t : ear_clip(polygon)) {
    const Vec2& a = polygon[t[0]];
    const Vec2& b = polygon[t[1]];
    const Vec2& c = polygon[t[2]];
    soup.push_back({Vec3(a.x(), a.y(), z1), Vec3(b.x(), b.y(), z1), Vec3(c.x(), c.y(), z1)});
    soup.push_back({Vec3(a.x(), a.y(), z0), Vec3(c.x(), c.y(), z0), Vec3(b.x(), b.y(), z0)});
  }
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % polygon.size()];
    add_quad(soup, Vec3(a.x(), a.y(), z0), Vec3(b.x(), b.y(), z0), Vec3(b.x(), b.y(), z1), Vec3(a.x(), a.y(), z1));
  }
  return finish(soup);
}

TriangleMesh revolve(const std::vector<Vec2>& profile, int segments) {
  const bool open = profile.front().x() == 0.0 && profile.back().x() == 0.0;
  const std::size_t edges = open ? profile.size() - 1 : profile.size();
  auto at = [&](const Vec2& rz, int s) {
    const double phi = 2.0 * std::numbers::pi * (s % segments) / segments;
    return Vec3(rz.x() * std::cos(phi), rz.x() * std::sin(phi), rz.y());
  };
  Soup soup;
  for (std::size_t e = 0; e < edges; ++e) {
    const Vec2& a = profile[e];
    const Vec2& b = profile[(e + 1) % profile.size()];
    for (int s = 0; s < segments; ++s) add_quad(soup, at(a, s), at(b, s), at(b, s + 1), at(a, s + 1));
  }
  return finish(soup);
}

TriangleMesh icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& tri : f) {
      const int ab = midpoint(tri[0], tri[1]);
      const int bc = midpoint(tri[1], tri[2]);
      const int ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  Soup soup;
  for (const auto& tri : f) soup.push_back({v[tri[0]] * radius, v[tri[1]] * radius, v[tri[2]] * radius});
  return finish(soup);
}

TriangleMesh merge(const std::vector<TriangleMesh>& parts) {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> tris;
  for (const auto& m : parts) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), m.vertices.begin(), m.vertices.end());
    for (const auto& t : m.triangles) tris.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  return make_mesh(std::move(vertices), std::move(tris));
}

TriangleMesh unit_cube() { return cube(1.0); }

TriangleMesh cube(double size) { return box(Vec3::Zero(), Vec3::Constant(size)); }

TriangleMesh l_bracket() {
  // Inverted L: a 6 mm post carrying a 30 mm arm at the top, 10 mm deep.
  const std::vector<Vec2> profile = {{0, 0}, {6, 0}, {6, 24}, {30, 24}, {30, 30}, {0, 30}};
  return stand_up(prism(profile, 0.0, 10.0), 10.0);
}

TriangleMesh mushroom() {
  const std::vector<Vec2> profile = {{0, 0}, {4, 0}, {4, 12}, {12, 12}, {12, 16}, {0, 22}};
  return revolve(profile, 24);
}

TriangleMesh table() {
  return rectilinear({0, 4, 36, 40}, {0, 4, 26, 30}, {0, 20, 24},
                     [](int i, int j, int k) { return k == 1 || (i != 1 && j != 1); });
}

TriangleMesh pillar() { return box(Vec3::Zero(), Vec3(2.4, 2.4, 40.0)); }

TriangleMesh twin_towers() {
  return rectilinear({0, 6, 34, 40}, {0, 2, 8, 10}, {0, 2, 26},
                     [](int i, int j, int k) { return k == 0 || (i != 1 && j == 1); });
}

TriangleMesh ring() { return revolve({{8, 0}, {10, 0}, {10, 12}, {8, 12}}, 32); }

TriangleMesh wedge() { return stand_up(prism({{0, 0}, {20, 0}, {0, 20}}, 0.0, 15.0), 15.0); }

TriangleMesh sphere() {
  TriangleMesh s = icosphere(10.0, 2);
  return transformed(s, Eigen::Matrix3d::Identity(), Vec3(10, 10, 10));
}

TriangleMesh arch() {
  return rectilinear({0, 6, 30, 36}, {0, 10}, {0, 15, 19}, [](int i, int, int k) { return k == 1 || i != 1; });
}

TriangleMesh stacked_cubes() {
  return merge({box(Vec3::Zero(), Vec3(10, 10, 10)), box(Vec3(0, 0, 15), Vec3(10, 10, 25))});
}

TriangleMesh floating_pair() {
  return merge({box(Vec3::Zero(), Vec3(10, 10, 10)), box(Vec3(15, 0, 5), Vec3(25, 10, 15))});
}

std::vector<NamedMesh> optimization_suite() {
  return {{"cube", cube(20.0)},   {"l_bracket", l_bracket()}, {"mushroom", mushroom()}, {"table", table()},
          {"pillar", pillar()},   {"twin_towers", twin_towers()}, {"ring", ring()},   {"wedge", wedge()},
          {"sphere", sphere()},   {"arch", arch()}};
}

}  // namespace fdmopt::fixtures
