#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "xray/geometry.hpp"

namespace xray {

/// Static kd-tree over a point set answering exact nearest-neighbor queries.
class NearestNeighborIndex {
 public:
  explicit NearestNeighborIndex(std::vector<Vec3> points);

  struct Result {
    std::size_t index = 0;
    double distance = 0.0;
  };
  [[nodiscard]] Result nearest(const Vec3& q) const;
  [[nodiscard]] double distance(const Vec3& q) const { return nearest(q).distance; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] const Vec3& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    std::uint32_t begin, end;  // range in order_
    std::int32_t left = -1, right = -1;
    int axis = -1;             // -1 for leaves
    double split = 0.0;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Brute-force nearest distance, for testing.
double nearest_distance_brute_force(const std::vector<Vec3>& points, const Vec3& q);

struct MetricReport {
  double chamfer = 0.0;
  double f_score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double threshold = 0.0;
};

/// `n` points drawn uniformly over the surface area; normals are face normals
/// and colors are interpolated (white when the mesh has none).
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// chamfer = mean_{q in Q} d(q, P) + mean_{p in P} d(p, Q) with unsquared
/// Euclidean distances. precision counts Q-side distances below the
/// threshold, recall the P-side ones.
MetricReport chamfer_f_score(const PointCloud& p, const PointCloud& q, double threshold);
MetricReport chamfer_f_score_brute_force(const PointCloud& p, const PointCloud& q,
                                         double threshold);

struct IcpResult {
  RigidTransform transform;  // maps src onto dst
  double rmse = 0.0;
  int iterations = 0;
  std::vector<double> rmse_history;  // index 0 = before the first update
};

/// Point-to-point ICP from the identity. Stops when the RMSE improves by less
/// than `tol` or after `max_iter` updates.
IcpResult icp_align(const PointCloud& src, const PointCloud& dst, int max_iter = 50,
                    double tol = 1e-10);

/// Rotation + translation minimizing sum |R a_i + t - b_i|^2 (Kabsch). Throws
/// Error(kDegenerateConfiguration) when the cross-covariance has rank < 2.
RigidTransform best_rigid_transform(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

inline constexpr std::size_t kDefaultSampleCount = 16384;
inline constexpr double kDefaultFScoreThreshold = 0.1;

/// Normalize both meshes, sample both with the same seed, ICP-align the
/// prediction to the ground truth, then score.
MetricReport evaluate_pair(const TriangleMesh& pred, const TriangleMesh& gt,
                           std::size_t n_samples = kDefaultSampleCount,
                           double threshold = kDefaultFScoreThreshold,
                           std::uint64_t seed = 0);

/// Scores the meshes in their own coordinates: no normalization, no ICP.
MetricReport evaluate_unaligned(const TriangleMesh& pred, const TriangleMesh& gt,
                                std::size_t n_samples = kDefaultSampleCount,
                                double threshold = kDefaultFScoreThreshold,
                                std::uint64_t seed = 0);

}  // namespace xray
