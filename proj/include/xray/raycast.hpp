#pragma once

#include <cstdint>
#include <vector>

#include "xray/geometry.hpp"

namespace xray {

/// Hits closer than this along the ray are treated as self-intersections.
inline constexpr double kMinHitDepth = 1e-6;
/// Relative (to scene scale) depth tolerance for merging coincident hits.
inline constexpr double kDuplicateHitTolerance = 1e-6;
/// Upper bound on recorded hits per ray.
inline constexpr std::size_t kMaxHitsPerRay = 64;

struct HitRecord {
  double depth = 0.0;  // ray parameter; equals distance for unit directions
  std::int32_t face_index = -1;
  Vec3 barycentric = Vec3::Zero();  // weights of the face's corners 0, 1, 2
  Vec3 position = Vec3::Zero();
};

struct SurfaceSample {
  double depth = 0.0;
  Vec3 normal = Vec3::Zero();
  Rgb color = Rgb::Ones();
};

/// Bounding volume hierarchy over a triangle mesh (binned SAH, leaves of at
/// most four triangles). Immutable after construction; queries may run
/// concurrently.
class BvhAccel {
 public:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // first triangle (leaf) or left child (inner)
    std::uint32_t count = 0;  // triangle count; 0 marks an inner node
  };

  explicit BvhAccel(const TriangleMesh& mesh);

  [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
  /// Triangle indices in leaf order.
  [[nodiscard]] const std::vector<std::uint32_t>& order() const noexcept { return order_; }
  [[nodiscard]] std::size_t triangle_count() const noexcept { return order_.size(); }
  [[nodiscard]] double scene_scale() const noexcept { return scene_scale_; }

  /// Visits every leaf triangle whose subtree box the ray enters, calling
  /// visit(triangle_index).
  template <typename Visitor>
  void traverse(const Ray& ray, Visitor&& visit) const;

 private:
  void build(const TriangleMesh& mesh);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  double scene_scale_ = 1.0;
};

BvhAccel build_bvh(const TriangleMesh& mesh);

/// Möller-Trumbore test of one triangle. Returns false on a miss or a hit
/// closer than kMinHitDepth.
bool intersect_triangle(const TriangleMesh& mesh, std::int32_t face,
                        const Ray& ray, HitRecord& hit);

/// Every intersection of the ray with the mesh, ascending by depth, with
/// coincident hits (shared edges or vertices) merged and at most
/// kMaxHitsPerRay entries.
std::vector<HitRecord> cast_ray_all_hits(const BvhAccel& accel,
                                         const TriangleMesh& mesh,
                                         const Ray& ray);

/// Same contract as cast_ray_all_hits, testing every triangle.
std::vector<HitRecord> cast_ray_all_hits_brute_force(const TriangleMesh& mesh,
                                                     const Ray& ray);

/// Depth, geometric face normal (not flipped toward the ray) and
/// barycentrically interpolated vertex color (white when the mesh has none).
SurfaceSample surface_attributes(const TriangleMesh& mesh, const HitRecord& hit);

// ------------------------------------------------------------------ inline

namespace detail {

inline bool ray_enters_box(const Aabb& box, const Vec3& origin,
                           const Vec3& inv_dir) {
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.lo[a] - origin[a]) * inv_dir[a];
    double t1 = (box.hi[a] - origin[a]) * inv_dir[a];
    // 0 * inf gives NaN when the origin lies on a slab plane of a parallel
    // ray; such a slab never constrains the interval.
    if (std::isnan(t0) || std::isnan(t1)) continue;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return false;
  }
  return true;
}

}  // namespace detail

template <typename Visitor>
void BvhAccel::traverse(const Ray& ray, Visitor&& visit) const {
  if (nodes_.empty()) return;
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!detail::ray_enters_box(node.box, ray.origin, inv_dir)) continue;
    if (node.count > 0) {
      for (std::uint32_t k = 0; k < node.count; ++k) visit(order_[node.first + k]);
    } else {
      stack[top++] = node.first;
      stack[top++] = node.first + 1;
    }
  }
}

}  // namespace xray
