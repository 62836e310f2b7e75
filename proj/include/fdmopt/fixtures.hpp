#pragma once

#include "fdmopt/mesh.hpp"

#include <functional>
#include <string>
#include <vector>

// Procedural test parts. Every generator returns a closed, outward-facing
// mesh in millimetres with its lowest point at z = 0 unless stated otherwise.
namespace fdmopt::fixtures {

TriangleMesh box(const Vec3& min, const Vec3& max);

/// Boundary of a union of lattice cells. Cell (i, j, k) spans
/// [xs[i], xs[i+1]] x [ys[j], ys[j+1]] x [zs[k], zs[k+1]].
TriangleMesh rectilinear(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::vector<double>& zs,
                         const std::function<bool(int, int, int)>& occupied);

/// Extrudes a simple counter-clockwise polygon between z0 and z1.
TriangleMesh prism(const std::vector<Vec2>& polygon, double z0, double z1);

/// Surface of revolution about +Z. `profile` holds (radius, z) points; when
/// both endpoints lie on the axis the profile is open, otherwise it is closed.
TriangleMesh revolve(const std::vector<Vec2>& profile, int segments);

TriangleMesh icosphere(double radius, int subdivisions);

/// Concatenates meshes without welding.
TriangleMesh merge(const std::vector<TriangleMesh>& parts);

TriangleMesh unit_cube();
TriangleMesh cube(double size);
TriangleMesh l_bracket();
TriangleMesh mushroom();
TriangleMesh table();
TriangleMesh pillar();
TriangleMesh twin_towers();
TriangleMesh ring();
TriangleMesh wedge();
TriangleMesh sphere();
TriangleMesh arch();
/// Two 10 mm cubes, the upper one floating 5 mm above the lower one.
TriangleMesh stacked_cubes();
/// A cube on the bed plus a second cube floating 5 mm above the bed.
TriangleMesh floating_pair();

struct NamedMesh {
  std::string name;
  TriangleMesh mesh;
};

/// The ten single-part meshes used for optimisation experiments.
std::vector<NamedMesh> optimization_suite();

}  // namespace fdmopt::fixtures
