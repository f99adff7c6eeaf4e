#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace xray {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Rgb = Eigen::Vector3d;
using Face = std::array<std::int32_t, 3>;

/// Horizontal field of view used by the reference X-Ray decoder (radians).
inline constexpr double kDefaultFovX = 0.8575560450553894;
/// Camera distance to the object center used for view sampling.
inline constexpr double kDefaultCameraDistance = 1.2;

/// Indexed triangle mesh. Colors and normals are per-vertex and optional.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::optional<std::vector<Rgb>> vertex_colors;
  std::optional<std::vector<Vec3>> vertex_normals;

  [[nodiscard]] bool empty() const noexcept { return faces.empty(); }

  /// Throws Error if any invariant is violated (index range, distinct corner
  /// indices, attribute lengths, finite coordinates).
  void validate() const;
};

/// Oriented point set: positions, unit normals and RGB colors of equal length.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<Rgb> colors;

  [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
  [[nodiscard]] bool empty() const noexcept { return positions.empty(); }
};

/// Pinhole camera. `c2w` maps camera coordinates to world coordinates; the
/// camera looks down its local -z axis with +y up.
struct Camera {
  int width = 1;
  int height = 1;
  double fov_x = kDefaultFovX;
  Mat4 c2w = Mat4::Identity();

  [[nodiscard]] Vec3 position() const { return c2w.block<3, 1>(0, 3); }
  [[nodiscard]] Mat3 rotation() const { return c2w.block<3, 3>(0, 0); }
  /// Focal length in pixels (square pixels).
  [[nodiscard]] double focal() const;

  void validate() const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3(0, 0, -1);
};

/// One ray per pixel, stored row-major (row j, column i).
class RayGrid {
 public:
  RayGrid(int width, int height, Vec3 origin, std::vector<Vec3> directions);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] Ray at(int row, int col) const;
  [[nodiscard]] const Vec3& origin() const noexcept { return origin_; }
  [[nodiscard]] const Vec3& direction(int row, int col) const {
    return directions_[static_cast<std::size_t>(row) * width_ + col];
  }

 private:
  int width_;
  int height_;
  Vec3 origin_;
  std::vector<Vec3> directions_;
};

/// Similarity transform p -> scale * rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  [[nodiscard]] Vec3 apply(const Vec3& p) const {
    return scale * (rotation * p) + translation;
  }
  [[nodiscard]] Vec3 apply_direction(const Vec3& d) const {
    return rotation * d;
  }
  /// this ∘ other (apply `other` first).
  [[nodiscard]] RigidTransform compose(const RigidTransform& other) const;
  /// Rotation angle of the rotation block, radians.
  [[nodiscard]] double rotation_angle() const;
};

TriangleMesh transform_mesh(const TriangleMesh& mesh, const RigidTransform& t);

struct NormalizedMesh {
  TriangleMesh mesh;
  RigidTransform transform;  // original -> normalized
};

/// Centers the axis-aligned bounding box at the origin and scales uniformly so
/// the largest extent is exactly 1.
NormalizedMesh normalize_mesh(const TriangleMesh& mesh);

/// Per-pixel camera rays: pixel (row j, col i) has camera-frame direction
/// ((i - cx) / fx, -(j - cy) / fx, -1) with cx = W/2, cy = H/2, rotated into
/// the world frame and normalized.
RayGrid generate_rays(const Camera& camera);

/// Camera at `position` looking at the origin with world up +y.
Camera look_at_origin(const Vec3& position, int width, int height,
                      double fov_x = kDefaultFovX);

/// Camera on a sphere of radius `distance` around the origin. Azimuth 0 and
/// elevation 0 place the camera on +z.
Camera spherical_camera(double azimuth_deg, double elevation_deg,
                        double distance, int width, int height,
                        double fov_x = kDefaultFovX);

struct ViewSample {
  double azimuth_deg;
  double elevation_deg;
  Camera camera;
};

/// `n` random views: azimuth in [-180, 180), elevation in [0, 45], distance
/// 1.2. Deterministic per seed on every platform.
std::vector<ViewSample> sample_views(std::uint64_t seed, int n, int width = 256,
                                     int height = 256);

Vec3 face_normal(const TriangleMesh& mesh, std::size_t face_index);
double face_area(const TriangleMesh& mesh, std::size_t face_index);

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  [[nodiscard]] Vec3 extent() const { return hi - lo; }
  [[nodiscard]] Vec3 center() const { return 0.5 * (lo + hi); }
};

Aabb bounds(const std::vector<Vec3>& points);

}  // namespace xray
