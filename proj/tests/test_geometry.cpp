#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "xray/error.hpp"
#include "xray/fixtures.hpp"
#include "xray/geometry.hpp"

using namespace xray;

TEST_CASE("normalize_mesh maps a 2-unit cube onto the unit cube") {
  TriangleMesh m = fixtures::box(Vec3::Zero(), Vec3::Constant(2.0));
  const NormalizedMesh n = normalize_mesh(m);
  const Aabb b = bounds(n.mesh.vertices);
  CHECK((b.lo - Vec3::Constant(-0.5)).norm() < 1e-15);
  CHECK((b.hi - Vec3::Constant(0.5)).norm() < 1e-15);
  CHECK(n.transform.scale == doctest::Approx(0.5));
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    CHECK((n.transform.apply(m.vertices[i]) - n.mesh.vertices[i]).norm() < 1e-12);
  }
}

TEST_CASE("normalize_mesh keeps aspect ratio of an elongated box") {
  const NormalizedMesh n = normalize_mesh(fixtures::box(Vec3(0, 0, 0), Vec3(4, 1, 1)));
  const Aabb b = bounds(n.mesh.vertices);
  CHECK(b.lo.x() == doctest::Approx(-0.5));
  CHECK(b.hi.x() == doctest::Approx(0.5));
  CHECK(b.lo.y() == doctest::Approx(-0.125));
  CHECK(b.hi.z() == doctest::Approx(0.125));
}

TEST_CASE("normalize_mesh is idempotent") {
  TriangleMesh m = fixtures::torus();
  for (Vec3& v : m.vertices) v = 3.0 * v + Vec3(1, -2, 0.5);
  const TriangleMesh once = normalize_mesh(m).mesh;
  const NormalizedMesh twice = normalize_mesh(once);
  CHECK(twice.transform.scale == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < once.vertices.size(); ++i) {
    CHECK((once.vertices[i] - twice.mesh.vertices[i]).norm() < 1e-9);
  }
}

TEST_CASE("normalize_mesh rejects empty and zero-extent meshes") {
  CHECK_THROWS_AS(normalize_mesh(TriangleMesh{}), Error);
  TriangleMesh point;
  point.vertices = {Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1)};
  point.faces = {{0, 1, 2}};
  try {
    normalize_mesh(point);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kZeroExtent);
  }
}

TEST_CASE("generate_rays on a 2x2 image with unit focal length") {
  Camera cam;
  cam.width = 2;
  cam.height = 2;
  cam.fov_x = 2.0 * std::atan(1.0);  // fx = 0.5 * 2 / tan(pi/4) = 1
  CHECK(cam.focal() == doctest::Approx(1.0));
  const RayGrid rays = generate_rays(cam);
  const Vec3 expected = Vec3(-1, 1, -1) / std::sqrt(3.0);
  CHECK((rays.direction(0, 0) - expected).norm() < 1e-15);
  CHECK(rays.origin().norm() == 0.0);
}

TEST_CASE("generate_rays center pixel of an odd image is half a pixel off -z") {
  Camera cam;
  cam.width = 17;
  cam.height = 17;
  const RayGrid rays = generate_rays(cam);
  const Vec3 d = rays.direction(8, 8);
  const double fx = cam.focal();
  // Pixel 8 sits at 8 - 8.5 = -0.5 pixels from the principal point.
  const Vec3 expected = Vec3(-0.5 / fx, 0.5 / fx, -1.0).normalized();
  CHECK((d - expected).norm() < 1e-15);
  CHECK(std::abs(d.x() / d.z()) <= 0.5 / fx + 1e-15);
}

TEST_CASE("generate_rays yields unit directions sharing the camera origin") {
  for (int res : {2, 17, 64, 256}) {
    const Camera cam = spherical_camera(30.0, 20.0, 1.2, res, res);
    const RayGrid rays = generate_rays(cam);
    double worst = 0.0;
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) {
        worst = std::max(worst, std::abs(rays.direction(j, i).norm() - 1.0));
        CHECK(rays.at(j, i).origin == cam.position());
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("spherical_camera anchor case sits on +z looking down -z") {
  const Camera cam = spherical_camera(0.0, 0.0, 1.2, 8, 8);
  CHECK((cam.position() - Vec3(0, 0, 1.2)).norm() < 1e-15);
  CHECK((cam.rotation() * Vec3(0, 0, -1) - Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK((cam.rotation() * Vec3(0, 1, 0) - Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("sample_views is deterministic, in range and at distance 1.2") {
  const auto a = sample_views(7, 8);
  const auto b = sample_views(7, 8);
  const auto c = sample_views(8, 8);
  REQUIRE(a.size() == 8);
  bool any_differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].camera.c2w == b[k].camera.c2w);
    CHECK(a[k].azimuth_deg >= -180.0);
    CHECK(a[k].azimuth_deg < 180.0);
    CHECK(a[k].elevation_deg >= 0.0);
    CHECK(a[k].elevation_deg <= 45.0);
    CHECK(std::abs(a[k].camera.position().norm() - 1.2) < 1e-9);
    any_differs = any_differs || a[k].camera.c2w != c[k].camera.c2w;

    // The central ray of an odd image passes through the origin up to the
    // half-pixel offset of the integer pixel convention; an even image's
    // ray (H/2, W/2) is exactly the optical axis.
    Camera cam = a[k].camera;
    cam.width = cam.height = 64;
    const Ray r = generate_rays(cam).at(32, 32);
    const Vec3 to_origin = -r.origin;
    const double miss = (to_origin - to_origin.dot(r.direction) * r.direction).norm();
    CHECK(miss < 1e-6);
  }
  CHECK(any_differs);
  CHECK_THROWS_AS(sample_views(1, 0), Error);
}

TEST_CASE("face_normal follows the right-hand rule and rejects colinear faces") {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(2, 0, 0)};
  m.faces = {{0, 1, 2}, {0, 2, 1}, {0, 1, 3}};
  CHECK((face_normal(m, 0) - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK((face_normal(m, 1) - Vec3(0, 0, -1)).norm() < 1e-15);
  try {
    face_normal(m, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDegenerateFace);
  }
}

TEST_CASE("mesh validation catches bad indices and attribute lengths") {
  TriangleMesh m = fixtures::cube();
  CHECK_NOTHROW(m.validate());
  m.faces.push_back({0, 1, 9});
  CHECK_THROWS_AS(m.validate(), Error);
  m = fixtures::cube();
  m.vertex_colors = std::vector<Rgb>(3, Rgb::Ones());
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("camera validation") {
  Camera cam;
  CHECK_NOTHROW(cam.validate());
  cam.fov_x = 4.0;
  CHECK_THROWS_AS(cam.validate(), Error);
  cam = Camera{};
  cam.c2w(0, 0) = 2.0;
  CHECK_THROWS_AS(cam.validate(), Error);
}

TEST_CASE("rigid transform composition") {
  std::mt19937_64 rng(3);
  RigidTransform a{test::random_rotation(rng), Vec3(1, 2, 3), 2.0};
  RigidTransform b{test::random_rotation(rng), Vec3(-1, 0, 4), 0.5};
  const Vec3 p(0.3, -0.2, 0.9);
  CHECK((a.compose(b).apply(p) - a.apply(b.apply(p))).norm() < 1e-12);
  RigidTransform rz;
  rz.rotation = Eigen::AngleAxisd(0.25, Vec3::UnitZ()).toRotationMatrix();
  CHECK(rz.rotation_angle() == doctest::Approx(0.25));
}
