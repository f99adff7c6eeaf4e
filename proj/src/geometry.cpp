#include "xray/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "xray/error.hpp"
#include "xray/rng.hpp"

namespace xray {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::kParse: return "parse error";
    case Errc::kIndexOutOfRange: return "index out of range";
    case Errc::kEmptyMesh: return "empty mesh";
    case Errc::kIo: return "i/o error";
    case Errc::kZeroExtent: return "zero-extent mesh";
    case Errc::kDegenerateFace: return "degenerate face";
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kBadMagic: return "bad magic";
    case Errc::kVersionMismatch: return "version mismatch";
    case Errc::kTruncatedPayload: return "truncated payload";
    case Errc::kCorruptHit: return "corrupt hit channel";
    case Errc::kOutsideDomain: return "point outside domain";
    case Errc::kNonConvergence: return "solver did not converge";
    case Errc::kDegenerateIso: return "degenerate iso-value";
    case Errc::kDegenerateConfiguration: return "degenerate configuration";
    case Errc::kShapeMismatch: return "shape mismatch";
    case Errc::kDomain: return "domain error";
    case Errc::kEmptyPointCloud: return "empty point cloud";
  }
  return "unknown error";
}

void TriangleMesh::validate() const {
  const auto n = static_cast<std::int64_t>(vertices.size());
  for (const Vec3& v : vertices) {
    if (!v.allFinite()) throw Error(Errc::kParse, "non-finite vertex coordinate");
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    for (auto idx : face) {
      if (idx < 0 || idx >= n) {
        throw Error(Errc::kIndexOutOfRange,
                    "face " + std::to_string(f) + " references vertex " +
                        std::to_string(idx) + " of " + std::to_string(n));
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw Error(Errc::kDegenerateFace,
                  "face " + std::to_string(f) + " repeats a vertex index");
    }
  }
  if (vertex_colors && vertex_colors->size() != vertices.size()) {
    throw Error(Errc::kInvalidArgument, "vertex color count mismatch");
  }
  if (vertex_normals && vertex_normals->size() != vertices.size()) {
    throw Error(Errc::kInvalidArgument, "vertex normal count mismatch");
  }
}

double Camera::focal() const {
  return 0.5 * width / std::tan(0.5 * fov_x);
}

void Camera::validate() const {
  if (width < 1 || height < 1) {
    throw Error(Errc::kInvalidArgument, "camera resolution must be >= 1");
  }
  if (!(fov_x > 0.0 && fov_x < std::numbers::pi)) {
    throw Error(Errc::kInvalidArgument, "fov_x must lie in (0, pi)");
  }
  const Mat3 r = rotation();
  if (!((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-9)) {
    throw Error(Errc::kInvalidArgument, "camera rotation is not orthonormal");
  }
}

RayGrid::RayGrid(int width, int height, Vec3 origin,
                 std::vector<Vec3> directions)
    : width_(width),
      height_(height),
      origin_(std::move(origin)),
      directions_(std::move(directions)) {}

Ray RayGrid::at(int row, int col) const {
  return Ray{origin_, direction(row, col)};
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.scale = scale * other.scale;
  out.translation = scale * (rotation * other.translation) + translation;
  return out;
}

double RigidTransform::rotation_angle() const {
  const double c = std::clamp(0.5 * (rotation.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const RigidTransform& t) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = t.apply(v);
  if (out.vertex_normals) {
    for (Vec3& n : *out.vertex_normals) n = t.apply_direction(n);
  }
  return out;
}

Aabb bounds(const std::vector<Vec3>& points) {
  Aabb box;
  for (const Vec3& p : points) box.extend(p);
  return box;
}

NormalizedMesh normalize_mesh(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw Error(Errc::kEmptyMesh, "cannot normalize an empty mesh");
  const Aabb box = bounds(mesh.vertices);
  const double max_extent = box.extent().maxCoeff();
  if (!(max_extent > 0.0)) {
    throw Error(Errc::kZeroExtent, "all mesh vertices coincide");
  }
  const Vec3 center = box.center();
  const double s = 1.0 / max_extent;

  NormalizedMesh out{mesh, {}};
  for (Vec3& v : out.mesh.vertices) v = (v - center) * s;
  out.transform.scale = s;
  out.transform.translation = -s * center;
  return out;
}

RayGrid generate_rays(const Camera& camera) {
  camera.validate();
  const int w = camera.width;
  const int h = camera.height;
  const double fx = camera.focal();
  const double cx = w / 2.0;
  const double cy = h / 2.0;
  const Mat3 rot = camera.rotation();

  std::vector<Vec3> dirs(static_cast<std::size_t>(w) * h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const Vec3 d_cam((i - cx) / fx, -(j - cy) / fx, -1.0);
      dirs[static_cast<std::size_t>(j) * w + i] = (rot * d_cam).normalized();
    }
  }
  return RayGrid(w, h, camera.position(), std::move(dirs));
}

Camera look_at_origin(const Vec3& position, int width, int height,
                      double fov_x) {
  const Vec3 forward = (-position).normalized();
  Vec3 up(0, 1, 0);
  if (forward.cross(up).norm() < 1e-12) up = Vec3(0, 0, -1);
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 cam_up = right.cross(forward);

  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fov_x = fov_x;
  cam.c2w.block<3, 1>(0, 0) = right;
  cam.c2w.block<3, 1>(0, 1) = cam_up;
  cam.c2w.block<3, 1>(0, 2) = -forward;
  cam.c2w.block<3, 1>(0, 3) = position;
  return cam;
}

Camera spherical_camera(double azimuth_deg, double elevation_deg,
                        double distance, int width, int height, double fov_x) {
  const double az = azimuth_deg * std::numbers::pi / 180.0;
  const double el = elevation_deg * std::numbers::pi / 180.0;
  const Vec3 pos(distance * std::cos(el) * std::sin(az),
                 distance * std::sin(el),
                 distance * std::cos(el) * std::cos(az));
  return look_at_origin(pos, width, height, fov_x);
}

std::vector<ViewSample> sample_views(std::uint64_t seed, int n, int width,
                                     int height) {
  if (n < 1) throw Error(Errc::kInvalidArgument, "view count must be >= 1");
  Rng rng(seed);
  std::vector<ViewSample> views;
  views.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double az = rng.uniform(-180.0, 180.0);
    const double el = 45.0 * rng.uniform();
    views.push_back({az, el,
                     spherical_camera(az, el, kDefaultCameraDistance, width,
                                      height)});
  }
  return views;
}

Vec3 face_normal(const TriangleMesh& mesh, std::size_t face_index) {
  if (face_index >= mesh.faces.size()) {
    throw Error(Errc::kIndexOutOfRange, "face index out of range");
  }
  const Face& f = mesh.faces[face_index];
  const Vec3& a = mesh.vertices[f[0]];
  const Vec3 e1 = mesh.vertices[f[1]] - a;
  const Vec3 e2 = mesh.vertices[f[2]] - a;
  const Vec3 n = e1.cross(e2);
  const double len = n.norm();
  // Relative test so colinear corners with rounding noise still count.
  if (!(len > 1e-14 * e1.norm() * e2.norm()) || len == 0.0) {
    throw Error(Errc::kDegenerateFace,
                "face " + std::to_string(face_index) + " has zero area");
  }
  return n / len;
}

double face_area(const TriangleMesh& mesh, std::size_t face_index) {
  const Face& f = mesh.faces[face_index];
  const Vec3& a = mesh.vertices[f[0]];
  return 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
}

}  // namespace xray
