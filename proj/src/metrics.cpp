#include "xray/metrics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xray/error.hpp"
#include "xray/parallel.hpp"
#include "xray/rng.hpp"

namespace xray {
namespace {

constexpr std::uint32_t kLeafSize = 8;

std::vector<double> nearest_distances(const NearestNeighborIndex& index,
                                      const std::vector<Vec3>& queries) {
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), 4096, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = index.distance(queries[i]);
  });
  return out;
}

MetricReport score(const std::vector<double>& q_to_p, const std::vector<double>& p_to_q,
                   double threshold) {
  MetricReport r;
  r.threshold = threshold;
  double sq = 0.0, sp = 0.0;
  std::size_t nq = 0, np = 0;
  for (double d : q_to_p) {
    sq += d;
    nq += d < threshold;
  }
  for (double d : p_to_q) {
    sp += d;
    np += d < threshold;
  }
  r.chamfer = sq / static_cast<double>(q_to_p.size()) + sp / static_cast<double>(p_to_q.size());
  r.precision = static_cast<double>(nq) / static_cast<double>(q_to_p.size());
  r.recall = static_cast<double>(np) / static_cast<double>(p_to_q.size());
  r.f_score = r.precision + r.recall > 0.0
                  ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                  : 0.0;
  return r;
}

void require_points(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error(Errc::kEmptyPointCloud, "empty point cloud");
}

double rmse_of(const std::vector<Vec3>& src, const RigidTransform& t,
               const NearestNeighborIndex& dst, std::vector<Vec3>* matches) {
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto nn = dst.nearest(t.apply(src[i]));
    sum += nn.distance * nn.distance;
    if (matches) (*matches)[i] = dst.point(nn.index);
  }
  return std::sqrt(sum / static_cast<double>(src.size()));
}

}  // namespace

NearestNeighborIndex::NearestNeighborIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error(Errc::kEmptyPointCloud, "cannot index an empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t NearestNeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;
  Aabb box;
  for (std::uint32_t k = begin; k < end; ++k) box.extend(points_[order_[k]]);
  int axis = 0;
  if (!(box.extent().maxCoeff(&axis) > 0.0)) return id;  // all points coincide
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

NearestNeighborIndex::Result NearestNeighborIndex::nearest(const Vec3& q) const {
  Result best{0, std::numeric_limits<double>::infinity()};
  double best_sq = std::numeric_limits<double>::infinity();
  struct Entry {
    std::int32_t node;
    double bound_sq;
  };
  Entry stack[128];
  int top = 0;
  stack[top++] = {0, 0.0};
  while (top > 0) {
    const Entry e = stack[--top];
    if (e.bound_sq > best_sq) continue;
    const Node& n = nodes_[e.node];
    if (n.axis < 0) {
      for (std::uint32_t k = n.begin; k < n.end; ++k) {
        const double d = (points_[order_[k]] - q).squaredNorm();
        if (d < best_sq || (d == best_sq && order_[k] < best.index)) {
          best_sq = d;
          best.index = order_[k];
        }
      }
      continue;
    }
    // Left holds coordinates <= split, right >= split.
    const double diff = q[n.axis] - n.split;
    const std::int32_t near = diff <= 0.0 ? n.left : n.right;
    const std::int32_t far = diff <= 0.0 ? n.right : n.left;
    stack[top++] = {far, std::max(e.bound_sq, diff * diff)};
    stack[top++] = {near, e.bound_sq};
  }
  best.distance = (points_[best.index] - q).norm();
  return best;
}

double nearest_distance_brute_force(const std::vector<Vec3>& points, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : points) best = std::min(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.empty()) throw Error(Errc::kEmptyMesh, "cannot sample an empty mesh");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += face_area(mesh, f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw Error(Errc::kDegenerateFace, "mesh has zero surface area");

  Rng rng(seed);
  PointCloud pc;
  pc.positions.reserve(n);
  pc.normals.reserve(n);
  pc.colors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t f = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
    while (f > 0 && cumulative[f] == cumulative[f - 1]) --f;  // skip zero-area faces
    const double s = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3 bary(1.0 - s, s * (1.0 - r2), s * r2);
    const Face& face = mesh.faces[f];
    pc.positions.push_back(bary[0] * mesh.vertices[face[0]] + bary[1] * mesh.vertices[face[1]] +
                           bary[2] * mesh.vertices[face[2]]);
    const Vec3 cross = (mesh.vertices[face[1]] - mesh.vertices[face[0]])
                           .cross(mesh.vertices[face[2]] - mesh.vertices[face[0]]);
    const double len = cross.norm();
    pc.normals.push_back(len > 0.0 ? Vec3(cross / len) : Vec3::Zero());
    if (mesh.vertex_colors) {
      const auto& c = *mesh.vertex_colors;
      pc.colors.push_back(bary[0] * c[face[0]] + bary[1] * c[face[1]] + bary[2] * c[face[2]]);
    } else {
      pc.colors.push_back(Rgb::Ones());
    }
  }
  return pc;
}

MetricReport chamfer_f_score(const PointCloud& p, const PointCloud& q, double threshold) {
  require_points(p, q);
  const NearestNeighborIndex ip(p.positions);
  const NearestNeighborIndex iq(q.positions);
  return score(nearest_distances(ip, q.positions), nearest_distances(iq, p.positions), threshold);
}

MetricReport chamfer_f_score_brute_force(const PointCloud& p, const PointCloud& q,
                                         double threshold) {
  require_points(p, q);
  std::vector<double> q_to_p, p_to_q;
  for (const Vec3& x : q.positions) q_to_p.push_back(nearest_distance_brute_force(p.positions, x));
  for (const Vec3& x : p.positions) p_to_q.push_back(nearest_distance_brute_force(q.positions, x));
  return score(q_to_p, p_to_q, threshold);
}

RigidTransform best_rigid_transform(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size()) throw Error(Errc::kShapeMismatch, "correspondence count mismatch");
  if (a.size() < 3) {
    throw Error(Errc::kDegenerateConfiguration, "rigid fit needs at least 3 points");
  }
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
  }
  ca /= static_cast<double>(a.size());
  cb /= static_cast<double>(b.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) h += (a[i] - ca) * (b[i] - cb).transpose();

  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv[1] > 1e-12 * sv[0])) {
    throw Error(Errc::kDegenerateConfiguration,
                "rank-deficient cross-covariance (collinear or coincident points)");
  }
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = cb - t.rotation * ca;
  return t;
}

IcpResult icp_align(const PointCloud& src, const PointCloud& dst, int max_iter, double tol) {
  require_points(src, dst);
  if (src.size() < 3 || dst.size() < 3) {
    throw Error(Errc::kDegenerateConfiguration, "ICP needs at least 3 points per cloud");
  }
  const NearestNeighborIndex index(dst.positions);
  IcpResult out;
  std::vector<Vec3> matches(src.size());
  double rmse = rmse_of(src.positions, out.transform, index, &matches);
  out.rmse_history.push_back(rmse);
  std::vector<Vec3> next_matches(src.size());
  for (int it = 0; it < max_iter && rmse > 0.0; ++it) {
    const RigidTransform candidate = best_rigid_transform(src.positions, matches);
    const double next = rmse_of(src.positions, candidate, index, &next_matches);
    if (!(next <= rmse)) break;  // rounding-level increase: keep the better pose
    const double gain = rmse - next;
    out.transform = candidate;
    rmse = next;
    matches.swap(next_matches);
    out.rmse_history.push_back(rmse);
    out.iterations = it + 1;
    if (gain < tol) break;
  }
  out.rmse = rmse;
  return out;
}

MetricReport evaluate_pair(const TriangleMesh& pred, const TriangleMesh& gt, std::size_t n_samples,
                           double threshold, std::uint64_t seed) {
  pred.validate();
  gt.validate();
  const NormalizedMesh np = normalize_mesh(pred);
  const NormalizedMesh ng = normalize_mesh(gt);
  PointCloud sp = sample_surface(np.mesh, n_samples, seed);
  const PointCloud sg = sample_surface(ng.mesh, n_samples, seed);
  const IcpResult icp = icp_align(sp, sg);
  for (Vec3& p : sp.positions) p = icp.transform.apply(p);
  return chamfer_f_score(sp, sg, threshold);
}

MetricReport evaluate_unaligned(const TriangleMesh& pred, const TriangleMesh& gt,
                                std::size_t n_samples, double threshold, std::uint64_t seed) {
  pred.validate();
  gt.validate();
  return chamfer_f_score(sample_surface(pred, n_samples, seed), sample_surface(gt, n_samples, seed),
                         threshold);
}

}  // namespace xray
