#include "xray/raycast.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "xray/error.hpp"

namespace xray {
namespace {

constexpr std::uint32_t kMaxLeafSize = 4;
constexpr int kBinCount = 16;
// Hits within this barycentric slack of an edge still count, so rays through
// shared edges register on at least one side before duplicate merging.
constexpr double kBarycentricSlack = 1e-10;

struct BuildTri {
  Aabb box;
  Vec3 centroid;
};

double half_area(const Aabb& b) {
  const Vec3 e = b.extent();
  if (!(e.x() >= 0.0)) return 0.0;
  return e.x() * e.y() + e.y() * e.z() + e.z() * e.x();
}

std::vector<HitRecord> finalize_hits(std::vector<HitRecord> hits,
                                     double scene_scale) {
  std::sort(hits.begin(), hits.end(), [](const HitRecord& a, const HitRecord& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.face_index < b.face_index);
  });
  const double tol = kDuplicateHitTolerance * scene_scale;
  std::vector<HitRecord> out;
  out.reserve(std::min(hits.size(), kMaxHitsPerRay));
  for (const HitRecord& h : hits) {
    if (!out.empty() && h.depth - out.back().depth < tol) continue;
    out.push_back(h);
    if (out.size() == kMaxHitsPerRay) break;
  }
  return out;
}

double scene_scale_of(const TriangleMesh& mesh) {
  const double s = bounds(mesh.vertices).extent().maxCoeff();
  return s > 0.0 ? s : 1.0;
}

}  // namespace

BvhAccel::BvhAccel(const TriangleMesh& mesh) { build(mesh); }

void BvhAccel::build(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw Error(Errc::kEmptyMesh, "cannot build a BVH over an empty mesh");
  scene_scale_ = scene_scale_of(mesh);
  const double pad = 1e-7 * scene_scale_;

  const std::size_t n = mesh.faces.size();
  std::vector<BuildTri> tris(n);
  for (std::size_t f = 0; f < n; ++f) {
    Aabb b;
    for (auto idx : mesh.faces[f]) b.extend(mesh.vertices[idx]);
    b.lo.array() -= pad;
    b.hi.array() += pad;
    tris[f] = {b, b.center()};
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.clear();
  nodes_.reserve(2 * n / kMaxLeafSize + 1);
  nodes_.push_back({});

  struct Task {
    std::uint32_t node, begin, end;
  };
  std::vector<Task> tasks{{0, 0, static_cast<std::uint32_t>(n)}};
  while (!tasks.empty()) {
    const Task task = tasks.back();
    tasks.pop_back();
    Aabb box, cbox;
    for (std::uint32_t k = task.begin; k < task.end; ++k) {
      box.extend(tris[order_[k]].box);
      cbox.extend(tris[order_[k]].centroid);
    }
    nodes_[task.node].box = box;
    const std::uint32_t count = task.end - task.begin;
    if (count <= kMaxLeafSize) {
      nodes_[task.node].first = task.begin;
      nodes_[task.node].count = count;
      continue;
    }

    // Binned SAH over all three axes.
    int best_axis = -1;
    int best_split = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    const Vec3 cext = cbox.extent();
    for (int axis = 0; axis < 3; ++axis) {
      if (!(cext[axis] > 0.0)) continue;
      std::array<Aabb, kBinCount> bin_box;
      std::array<std::uint32_t, kBinCount> bin_count{};
      const double scale = kBinCount / cext[axis];
      for (std::uint32_t k = task.begin; k < task.end; ++k) {
        const BuildTri& t = tris[order_[k]];
        const int b = std::min(kBinCount - 1,
                               static_cast<int>((t.centroid[axis] - cbox.lo[axis]) * scale));
        bin_box[b].extend(t.box);
        ++bin_count[b];
      }
      std::array<double, kBinCount> right_cost{};
      Aabb acc;
      std::uint32_t acc_count = 0;
      for (int b = kBinCount - 1; b > 0; --b) {
        acc.extend(bin_box[b]);
        acc_count += bin_count[b];
        right_cost[b] = acc_count ? half_area(acc) * acc_count : 0.0;
      }
      acc = Aabb{};
      acc_count = 0;
      for (int b = 0; b < kBinCount - 1; ++b) {
        acc.extend(bin_box[b]);
        acc_count += bin_count[b];
        if (acc_count == 0 || acc_count == count) continue;
        const double cost = half_area(acc) * acc_count + right_cost[b + 1];
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_split = b;
        }
      }
    }

    std::uint32_t mid = task.begin;
    if (best_axis >= 0) {
      const double scale = kBinCount / cext[best_axis];
      auto* first = order_.data() + task.begin;
      auto* last = order_.data() + task.end;
      auto* pivot = std::partition(first, last, [&](std::uint32_t t) {
        const int b = std::min(kBinCount - 1,
                               static_cast<int>((tris[t].centroid[best_axis] - cbox.lo[best_axis]) * scale));
        return b <= best_split;
      });
      mid = static_cast<std::uint32_t>(pivot - order_.data());
    }
    if (mid == task.begin || mid == task.end) {
      // Coincident centroids: split by count along the widest axis.
      int axis = 0;
      cext.maxCoeff(&axis);
      mid = task.begin + count / 2;
      std::nth_element(order_.begin() + task.begin, order_.begin() + mid,
                       order_.begin() + task.end, [&](std::uint32_t a, std::uint32_t b) {
                         return tris[a].centroid[axis] < tris[b].centroid[axis];
                       });
    }

    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_.push_back({});
    nodes_[task.node].first = left;
    nodes_[task.node].count = 0;
    tasks.push_back({left, task.begin, mid});
    tasks.push_back({left + 1, mid, task.end});
  }
}

BvhAccel build_bvh(const TriangleMesh& mesh) { return BvhAccel(mesh); }

bool intersect_triangle(const TriangleMesh& mesh, std::int32_t face,
                        const Ray& ray, HitRecord& hit) {
  const Face& f = mesh.faces[static_cast<std::size_t>(face)];
  const Vec3& v0 = mesh.vertices[f[0]];
  const Vec3 e1 = mesh.vertices[f[1]] - v0;
  const Vec3 e2 = mesh.vertices[f[2]] - v0;
  const Vec3 p = ray.direction.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) <= 1e-14 * e1.norm() * e2.norm()) return false;
  const double inv_det = 1.0 / det;
  const Vec3 s = ray.origin - v0;
  const double u = s.dot(p) * inv_det;
  if (u < -kBarycentricSlack || u > 1.0 + kBarycentricSlack) return false;
  const Vec3 q = s.cross(e1);
  const double v = ray.direction.dot(q) * inv_det;
  if (v < -kBarycentricSlack || u + v > 1.0 + kBarycentricSlack) return false;
  const double t = e2.dot(q) * inv_det;
  if (!(t > kMinHitDepth)) return false;

  Vec3 bary(1.0 - u - v, u, v);
  bary = bary.cwiseMax(0.0);
  bary /= bary.sum();
  hit.depth = t;
  hit.face_index = face;
  hit.barycentric = bary;
  hit.position = ray.origin + t * ray.direction;
  return true;
}

std::vector<HitRecord> cast_ray_all_hits(const BvhAccel& accel,
                                         const TriangleMesh& mesh,
                                         const Ray& ray) {
  std::vector<HitRecord> hits;
  HitRecord hit;
  accel.traverse(ray, [&](std::uint32_t tri) {
    if (intersect_triangle(mesh, static_cast<std::int32_t>(tri), ray, hit)) {
      hits.push_back(hit);
    }
  });
  return finalize_hits(std::move(hits), accel.scene_scale());
}

std::vector<HitRecord> cast_ray_all_hits_brute_force(const TriangleMesh& mesh,
                                                     const Ray& ray) {
  std::vector<HitRecord> hits;
  HitRecord hit;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (intersect_triangle(mesh, static_cast<std::int32_t>(f), ray, hit)) {
      hits.push_back(hit);
    }
  }
  return finalize_hits(std::move(hits), scene_scale_of(mesh));
}

SurfaceSample surface_attributes(const TriangleMesh& mesh, const HitRecord& hit) {
  SurfaceSample s;
  s.depth = hit.depth;
  s.normal = face_normal(mesh, static_cast<std::size_t>(hit.face_index));
  if (mesh.vertex_colors) {
    const Face& f = mesh.faces[static_cast<std::size_t>(hit.face_index)];
    const auto& c = *mesh.vertex_colors;
    s.color = hit.barycentric[0] * c[f[0]] + hit.barycentric[1] * c[f[1]] +
              hit.barycentric[2] * c[f[2]];
    s.color = s.color.cwiseMax(0.0).cwiseMin(1.0);
  }
  return s;
}

}  // namespace xray
