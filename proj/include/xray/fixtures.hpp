#pragma once

#include <string>
#include <vector>

#include "xray/geometry.hpp"

namespace xray::fixtures {

/// Axis-aligned box [lo, hi] with outward faces (inward when `inward`).
TriangleMesh box(const Vec3& lo, const Vec3& hi, bool inward = false);

/// Unit cube [-0.5, 0.5]^3.
TriangleMesh cube();

/// Subdivided icosahedron projected onto a sphere.
TriangleMesh icosphere(double radius = 0.5, int subdivisions = 4);

/// Latitude/longitude sphere with `rings` x `segments` quads split in two.
TriangleMesh uv_sphere(double radius, int rings, int segments);

/// Hollow box (outer [-0.5, 0.5]^3, cavity [-0.4, 0.4]^3) holding a solid
/// cube [-0.2, 0.2]^3. A central ray crosses the shell twice before reaching
/// the inner cube.
TriangleMesh nested_cubes();

/// Torus around the y axis.
TriangleMesh torus(double major = 0.35, double minor = 0.15, int major_segments = 64,
                   int minor_segments = 32);

/// Appends `b` to `a`.
TriangleMesh merge(const TriangleMesh& a, const TriangleMesh& b);

/// Colors each vertex from its position so color channels carry signal.
void paint_by_position(TriangleMesh& mesh);

struct NamedMesh {
  std::string name;
  TriangleMesh mesh;
};

/// cube, icosphere, nested_cubes, torus.
std::vector<NamedMesh> sweep_suite();

}  // namespace xray::fixtures
