#include <doctest.h>

#include <random>

#include "support.hpp"
#include "xray/error.hpp"
#include "xray/fixtures.hpp"
#include "xray/raycast.hpp"

using namespace xray;

namespace {

Ray random_ray(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3 origin(u(rng), u(rng), u(rng));
  origin = origin.normalized() * 1.5;
  const Vec3 target(0.6 * u(rng), 0.6 * u(rng), 0.6 * u(rng));
  return Ray{origin, (target - origin).normalized()};
}

void check_same_hits(const std::vector<HitRecord>& a, const std::vector<HitRecord>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(std::abs(a[k].depth - b[k].depth) < 1e-9);
    CHECK(a[k].face_index == b[k].face_index);
  }
}

}  // namespace

TEST_CASE("central ray through the unit cube hits at 0.7 and 1.7") {
  const TriangleMesh cube = fixtures::cube();
  const BvhAccel bvh(cube);
  const auto hits = cast_ray_all_hits(bvh, cube, Ray{Vec3(0, 0, 1.2), Vec3(0, 0, -1)});
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].depth == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(hits[1].depth == doctest::Approx(1.7).epsilon(1e-12));
  CHECK((surface_attributes(cube, hits[0]).normal - Vec3(0, 0, 1)).norm() < 1e-12);
  CHECK((surface_attributes(cube, hits[1]).normal - Vec3(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("a ray that misses returns nothing") {
  const TriangleMesh cube = fixtures::cube();
  const BvhAccel bvh(cube);
  CHECK(cast_ray_all_hits(bvh, cube, Ray{Vec3(0, 0, 1.2), Vec3(0, 0, 1)}).empty());
  CHECK(cast_ray_all_hits(bvh, cube, Ray{Vec3(2, 0, 1.2), Vec3(0, 0, -1)}).empty());
}

TEST_CASE("stacked cubes give four strictly increasing hits") {
  const TriangleMesh stack = fixtures::merge(fixtures::box(Vec3(-0.5, -0.5, 1.0), Vec3(0.5, 0.5, 2.0)),
                                             fixtures::box(Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)));
  const BvhAccel bvh(stack);
  const Ray ray{Vec3(0.1, 0.2, 3.0), Vec3(0, 0, -1)};
  const auto hits = cast_ray_all_hits(bvh, stack, ray);
  REQUIRE(hits.size() == 4);
  const double expected[] = {1.0, 2.0, 2.5, 3.5};
  for (int k = 0; k < 4; ++k) CHECK(hits[k].depth == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("ray through a shared edge is merged to one hit per surface") {
  const TriangleMesh cube = fixtures::cube();
  const BvhAccel bvh(cube);
  // x = y lies on the diagonal shared by the two triangles of each z face.
  const auto hits = cast_ray_all_hits(bvh, cube, Ray{Vec3(0.2, 0.2, 1.2), Vec3(0, 0, -1)});
  CHECK(hits.size() == 2);
}

TEST_CASE("single triangle hit and miss") {
  TriangleMesh tri;
  tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  tri.faces = {{0, 1, 2}};
  const BvhAccel bvh(tri);
  CHECK(bvh.nodes().size() == 1);
  const auto hit = cast_ray_all_hits(bvh, tri, Ray{Vec3(0.25, 0.25, 1), Vec3(0, 0, -1)});
  REQUIRE(hit.size() == 1);
  CHECK(hit[0].depth == doctest::Approx(1.0));
  CHECK((hit[0].barycentric - Vec3(0.5, 0.25, 0.25)).norm() < 1e-12);
  CHECK(cast_ray_all_hits(bvh, tri, Ray{Vec3(0.75, 0.75, 1), Vec3(0, 0, -1)}).empty());
  CHECK_THROWS_AS(BvhAccel(TriangleMesh{}), Error);
}

TEST_CASE("BVH covers every triangle once and boxes contain their triangles") {
  const TriangleMesh sphere = fixtures::uv_sphere(0.5, 71, 72);
  REQUIRE(sphere.faces.size() >= 10000);
  const BvhAccel bvh(sphere);
  std::vector<int> seen(sphere.faces.size(), 0);
  for (auto t : bvh.order()) ++seen[t];
  for (int s : seen) CHECK(s == 1);
  for (const auto& node : bvh.nodes()) {
    if (node.count == 0) continue;
    CHECK(node.count <= 4);
    for (std::uint32_t k = 0; k < node.count; ++k) {
      for (auto v : sphere.faces[bvh.order()[node.first + k]]) {
        const Vec3& p = sphere.vertices[v];
        CHECK((p.array() >= node.box.lo.array()).all());
        CHECK((p.array() <= node.box.hi.array()).all());
      }
    }
  }
}

TEST_CASE("BVH hits equal brute force on random rays") {
  std::mt19937_64 rng(11);
  const TriangleMesh meshes[] = {fixtures::cube(), fixtures::uv_sphere(0.5, 71, 72),
                                 fixtures::nested_cubes(), fixtures::torus()};
  for (const TriangleMesh& mesh : meshes) {
    const BvhAccel bvh(mesh);
    for (int k = 0; k < 1000; ++k) {
      const Ray ray = random_ray(rng);
      check_same_hits(cast_ray_all_hits(bvh, mesh, ray), cast_ray_all_hits_brute_force(mesh, ray));
    }
  }
}

TEST_CASE("hit records are consistent and sorted") {
  std::mt19937_64 rng(5);
  const TriangleMesh mesh = fixtures::torus();
  const BvhAccel bvh(mesh);
  for (int k = 0; k < 300; ++k) {
    const Ray ray = random_ray(rng);
    const auto hits = cast_ray_all_hits(bvh, mesh, ray);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const HitRecord& h = hits[i];
      if (i > 0) CHECK(h.depth > hits[i - 1].depth);
      CHECK((h.position - (ray.origin + h.depth * ray.direction)).norm() < 1e-6);
      const Face& f = mesh.faces[h.face_index];
      const Vec3 p = h.barycentric[0] * mesh.vertices[f[0]] +
                     h.barycentric[1] * mesh.vertices[f[1]] +
                     h.barycentric[2] * mesh.vertices[f[2]];
      CHECK((p - h.position).norm() < 1e-6);
      CHECK(h.barycentric.minCoeff() >= 0.0);
      CHECK(h.barycentric.sum() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("closed meshes give an even number of hits") {
  std::mt19937_64 rng(9);
  for (const TriangleMesh& mesh : {fixtures::cube(), fixtures::icosphere(0.5, 3)}) {
    const BvhAccel bvh(mesh);
    int checked = 0;
    for (int k = 0; k < 500; ++k) {
      const Ray ray = random_ray(rng);
      const auto hits = cast_ray_all_hits(bvh, mesh, ray);
      // Skip rays passing close to an edge, where a crossing may register
      // on one side only.
      bool near_edge = false;
      for (const auto& h : hits) near_edge = near_edge || h.barycentric.minCoeff() < 1e-6;
      if (near_edge) continue;
      CHECK(hits.size() % 2 == 0);
      ++checked;
    }
    CHECK(checked > 400);
  }
}

TEST_CASE("translating mesh and ray together leaves depths unchanged") {
  std::mt19937_64 rng(2);
  const TriangleMesh mesh = fixtures::icosphere(0.5, 3);
  const Vec3 shift(0.3, -0.7, 1.1);
  RigidTransform t;
  t.translation = shift;
  const TriangleMesh moved = transform_mesh(mesh, t);
  const BvhAccel a(mesh), b(moved);
  for (int k = 0; k < 200; ++k) {
    const Ray ray = random_ray(rng);
    const auto h0 = cast_ray_all_hits(a, mesh, ray);
    const auto h1 = cast_ray_all_hits(b, moved, Ray{ray.origin + shift, ray.direction});
    REQUIRE(h0.size() == h1.size());
    for (std::size_t i = 0; i < h0.size(); ++i) CHECK(std::abs(h0[i].depth - h1[i].depth) < 1e-9);
  }
}

TEST_CASE("surface colors: barycentric mean and white default") {
  TriangleMesh tri;
  tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  tri.faces = {{0, 1, 2}};
  const Vec3 centroid = Vec3(1, 1, 0) / 3.0;
  const Ray ray{centroid + Vec3(0, 0, 1), Vec3(0, 0, -1)};
  const auto hits = cast_ray_all_hits_brute_force(tri, ray);
  REQUIRE(hits.size() == 1);
  CHECK((surface_attributes(tri, hits[0]).color - Rgb::Ones()).norm() == 0.0);
  tri.vertex_colors = std::vector<Rgb>{Rgb(1, 0, 0), Rgb(0, 1, 0), Rgb(0, 0, 1)};
  CHECK((surface_attributes(tri, hits[0]).color - Rgb::Constant(1.0 / 3.0)).norm() < 1e-12);
}

TEST_CASE("hit lists are capped") {
  TriangleMesh layers;
  for (int k = 0; k < 80; ++k) {
    const double z = -0.01 * k;
    const auto base = static_cast<std::int32_t>(layers.vertices.size());
    layers.vertices.push_back(Vec3(-1, -1, z));
    layers.vertices.push_back(Vec3(1, -1, z));
    layers.vertices.push_back(Vec3(0, 1, z));
    layers.faces.push_back({base, base + 1, base + 2});
  }
  const BvhAccel bvh(layers);
  const auto hits = cast_ray_all_hits(bvh, layers, Ray{Vec3(0, 0, 1), Vec3(0, 0, -1)});
  CHECK(hits.size() == kMaxHitsPerRay);
  CHECK(hits.back().depth == doctest::Approx(1.0 + 0.01 * 63));
}
