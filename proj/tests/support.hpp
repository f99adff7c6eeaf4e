#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>

#include "xray/geometry.hpp"

namespace xray::test {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("xray_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Number of faces incident to each undirected edge.
inline std::map<std::pair<int, int>, int> edge_incidence(const TriangleMesh& m) {
  std::map<std::pair<int, int>, int> edges;
  for (const Face& f : m.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  return edges;
}

/// Closed two-manifold check: every edge used by exactly two faces, once in
/// each direction (consistent orientation).
inline bool is_closed_oriented_manifold(const TriangleMesh& m) {
  std::map<std::pair<int, int>, int> directed;
  for (const Face& f : m.faces) {
    for (int k = 0; k < 3; ++k) ++directed[{f[k], f[(k + 1) % 3]}];
  }
  for (const auto& [e, n] : directed) {
    if (n != 1) return false;
    auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return !m.faces.empty();
}

inline long euler_characteristic(const TriangleMesh& m) {
  std::vector<char> used(m.vertices.size(), 0);
  for (const Face& f : m.faces) {
    for (int v : f) used[static_cast<std::size_t>(v)] = 1;
  }
  long v = 0;
  for (char u : used) v += u;
  return v - static_cast<long>(edge_incidence(m).size()) + static_cast<long>(m.faces.size());
}

/// Connected components over face adjacency (shared vertices).
inline int component_count(const TriangleMesh& m) {
  std::vector<int> parent(m.vertices.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Face& f : m.faces) {
    parent[find(f[1])] = find(f[0]);
    parent[find(f[2])] = find(f[0]);
  }
  std::vector<char> root(m.vertices.size(), 0);
  std::vector<char> used(m.vertices.size(), 0);
  for (const Face& f : m.faces) {
    for (int v : f) used[v] = 1;
  }
  int n = 0;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (used[i] && !root[find(static_cast<int>(i))]) {
      root[find(static_cast<int>(i))] = 1;
      ++n;
    }
  }
  return n;
}

/// Distance from p to the surface of the axis-aligned box [-h, h]^3.
inline double box_surface_distance(const Vec3& p, double h) {
  const Vec3 q = p.cwiseAbs() - Vec3::Constant(h);
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return std::abs(outside + inside);
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

}  // namespace xray::test
