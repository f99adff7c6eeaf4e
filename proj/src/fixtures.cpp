#include "xray/fixtures.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <utility>

namespace xray::fixtures {

TriangleMesh box(const Vec3& lo, const Vec3& hi, bool inward) {
  TriangleMesh m;
  for (int c = 0; c < 8; ++c) {
    m.vertices.emplace_back(c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(),
                            c & 4 ? hi.z() : lo.z());
  }
  // Quads listed counter-clockwise seen from outside.
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    if (inward) {
      m.faces.push_back({q[0], q[2], q[1]});
      m.faces.push_back({q[0], q[3], q[2]});
    } else {
      m.faces.push_back({q[0], q[1], q[2]});
      m.faces.push_back({q[0], q[2], q[3]});
    }
  }
  return m;
}

TriangleMesh cube() { return box(Vec3::Constant(-0.5), Vec3::Constant(0.5)); }

TriangleMesh icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : m.vertices) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      const int id = static_cast<int>(m.vertices.size());
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      mid.emplace(key, id);
      return id;
    };
    std::vector<Face> faces;
    faces.reserve(m.faces.size() * 4);
    for (const Face& f : m.faces) {
      const int a = midpoint(f[0], f[1]);
      const int b = midpoint(f[1], f[2]);
      const int c = midpoint(f[2], f[0]);
      faces.push_back({f[0], a, c});
      faces.push_back({f[1], b, a});
      faces.push_back({f[2], c, b});
      faces.push_back({a, b, c});
    }
    m.faces = std::move(faces);
  }
  for (auto& v : m.vertices) v *= radius;
  return m;
}

TriangleMesh uv_sphere(double radius, int rings, int segments) {
  TriangleMesh m;
  const double pi = std::numbers::pi;
  m.vertices.emplace_back(0, radius, 0);
  for (int r = 1; r < rings; ++r) {
    const double theta = pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double phi = 2.0 * pi * s / segments;
      m.vertices.emplace_back(radius * std::sin(theta) * std::sin(phi), radius * std::cos(theta),
                              radius * std::sin(theta) * std::cos(phi));
    }
  }
  const int south = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0, -radius, 0);
  auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s) m.faces.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      m.faces.push_back({a, c, d});
      m.faces.push_back({a, d, b});
    }
  }
  for (int s = 0; s < segments; ++s) {
    m.faces.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  }
  return m;
}

TriangleMesh merge(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh m = a;
  const auto offset = static_cast<std::int32_t>(a.vertices.size());
  m.vertices.insert(m.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (const Face& f : b.faces) m.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  if (a.vertex_colors && b.vertex_colors) {
    m.vertex_colors->insert(m.vertex_colors->end(), b.vertex_colors->begin(),
                            b.vertex_colors->end());
  } else {
    m.vertex_colors.reset();
  }
  m.vertex_normals.reset();
  return m;
}

TriangleMesh nested_cubes() {
  TriangleMesh shell = merge(box(Vec3::Constant(-0.5), Vec3::Constant(0.5)),
                             box(Vec3::Constant(-0.4), Vec3::Constant(0.4), true));
  return merge(shell, box(Vec3::Constant(-0.2), Vec3::Constant(0.2)));
}

TriangleMesh torus(double major, double minor, int major_segments, int minor_segments) {
  TriangleMesh m;
  const double pi = std::numbers::pi;
  for (int i = 0; i < major_segments; ++i) {
    const double u = 2.0 * pi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double v = 2.0 * pi * j / minor_segments;
      const double rr = major + minor * std::cos(v);
      m.vertices.emplace_back(rr * std::cos(u), minor * std::sin(v), rr * std::sin(u));
    }
  }
  auto id = [&](int i, int j) {
    return (i % major_segments) * minor_segments + (j % minor_segments);
  };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      m.faces.push_back({a, d, c});
      m.faces.push_back({a, c, b});
    }
  }
  return m;
}

void paint_by_position(TriangleMesh& mesh) {
  std::vector<Rgb> colors;
  colors.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) {
    colors.push_back((v.array() * 0.8 + 0.5).cwiseMax(0.0).cwiseMin(1.0).matrix());
  }
  mesh.vertex_colors = std::move(colors);
}

std::vector<NamedMesh> sweep_suite() {
  return {{"cube", cube()},
          {"icosphere", icosphere()},
          {"nested_cubes", nested_cubes()},
          {"torus", torus()}};
}

}  // namespace xray::fixtures
