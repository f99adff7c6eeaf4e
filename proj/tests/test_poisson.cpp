#include <doctest.h>

#include <cmath>
#include <functional>

#include "support.hpp"
#include "xray/error.hpp"
#include "xray/fixtures.hpp"
#include "xray/metrics.hpp"
#include "xray/poisson.hpp"

using namespace xray;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kParse;
}

PointCloud single_point(const Vec3& p, const Vec3& n) {
  PointCloud pc;
  pc.positions.push_back(p);
  pc.normals.push_back(n);
  pc.colors.push_back(Rgb::Ones());
  return pc;
}

PointCloud sphere_cloud(double radius, std::size_t n, bool inward = false) {
  PointCloud pc = sample_surface(fixtures::icosphere(radius, 5), n, 7);
  // Exact radial positions and normals so the analytic oracle applies.
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const Vec3 u = pc.positions[i].normalized();
    pc.positions[i] = radius * u;
    pc.normals[i] = inward ? Vec3(-u) : u;
  }
  return pc;
}

double signed_volume(const TriangleMesh& m) {
  double v = 0.0;
  for (const Face& f : m.faces) {
    v += m.vertices[f[0]].dot(m.vertices[f[1]].cross(m.vertices[f[2]])) / 6.0;
  }
  return v;
}

double max_radius_error(const TriangleMesh& m, double r) {
  double worst = 0.0;
  for (const Vec3& v : m.vertices) worst = std::max(worst, std::abs(v.norm() - r));
  return worst;
}

// phi*(x) = prod sin(pi (x + 0.6) / 1.2): zero on the boundary of the domain.
double smooth_phi(const Vec3& p) {
  const double k = M_PI / (2.0 * kDomainHalfWidth);
  return std::sin(k * (p.x() + kDomainHalfWidth)) * std::sin(k * (p.y() + kDomainHalfWidth)) *
         std::sin(k * (p.z() + kDomainHalfWidth));
}

// Boundary-zero polynomial that is not a discrete eigenfunction.
double bubble_phi(const Vec3& p) {
  const double h2 = kDomainHalfWidth * kDomainHalfWidth;
  return 10.0 * (h2 - p.x() * p.x()) * (h2 - p.y() * p.y()) * (h2 - p.z() * p.z()) *
         (1.0 + p.x() + 0.5 * p.y() * p.z());
}

ScalarField sampled(int res, const std::function<double(const Vec3&)>& fn) {
  ScalarField f(res);
  for (int k = 0; k < res; ++k) {
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) f(i, j, k) = fn(f.node_position(i, j, k));
    }
  }
  return f;
}

// Max-norm error of the discrete solve against the continuous phi*, with the
// continuous Laplacian as the source (grid units: h^2 * lap).
double manufactured_error(int res) {
  const double k = M_PI / (2.0 * kDomainHalfWidth);
  ScalarField f(res);
  const double h = f.spacing();
  f = sampled(res, [&](const Vec3& p) { return -3.0 * k * k * h * h * smooth_phi(p); });
  const SolveReport s = solve_poisson(f, 0.0, DensityField(res), 1e-12, 4000);
  REQUIRE(s.converged);
  const ScalarField exact = sampled(res, smooth_phi);
  double err = 0.0;
  for (std::size_t n = 0; n < exact.size(); ++n) err = std::max(err, std::abs(s.phi[n] - exact[n]));
  return err;
}

}  // namespace

TEST_CASE("splat: point on a node is a delta") {
  const int res = 32;
  DensityField probe(res);
  const Vec3 p = probe.node_position(10, 11, 12);
  const SplatResult s = splat_normals(single_point(p, Vec3(0, 0, 1)), res);
  const std::size_t at = probe.index(10, 11, 12);
  for (std::size_t n = 0; n < s.density.size(); ++n) {
    if (n == at) {
      CHECK(s.density[n] == doctest::Approx(1.0));
      CHECK((s.normals[n] - Vec3(0, 0, 1)).norm() < 1e-12);
    } else {
      CHECK(s.density[n] == doctest::Approx(0.0));
      CHECK(s.normals[n].norm() < 1e-12);
    }
  }
}

TEST_CASE("splat: point at a cell center spreads normal/8 to each corner") {
  const int res = 16;
  DensityField probe(res);
  const Vec3 p = probe.node_position(4, 5, 6) + Vec3::Constant(0.5 * probe.spacing());
  const Vec3 normal = Vec3(1, 2, 2) / 3.0;
  const SplatResult s = splat_normals(single_point(p, normal), res);
  int touched = 0;
  for (int k = 0; k < res; ++k) {
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) {
        const bool corner = i >= 4 && i <= 5 && j >= 5 && j <= 6 && k >= 6 && k <= 7;
        const Vec3 expect = corner ? Vec3(normal / 8.0) : Vec3::Zero();
        CHECK((s.normals(i, j, k) - expect).norm() < 1e-12);
        touched += corner;
      }
    }
  }
  CHECK(touched == 8);
}

TEST_CASE("splat: density sums to the point count") {
  const PointCloud pc = sample_surface(fixtures::torus(), 3000, 3);
  for (auto weighting : {SplatWeighting::kUniform, SplatWeighting::kInverseDensity}) {
    const SplatResult s = splat_normals(pc, 48, weighting);
    double total = 0.0;
    for (double d : s.density.values()) total += d;
    CHECK(total == doctest::Approx(3000.0).epsilon(1e-12));
    REQUIRE(s.sample_weight.size() == pc.size());
  }
}

TEST_CASE("splat: inverse-density weighting scales each normal by 1/density") {
  const PointCloud pc = sample_surface(fixtures::icosphere(0.4, 3), 500, 4);
  const SplatResult s = splat_normals(pc, 24, SplatWeighting::kInverseDensity);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    CHECK(s.sample_weight[i] == doctest::Approx(1.0 / s.density.sample(pc.positions[i])));
  }
  const SplatResult u = splat_normals(pc, 24);
  for (double w : u.sample_weight) CHECK(w == 1.0);
}

TEST_CASE("splat: errors") {
  CHECK(code_of([] { splat_normals(PointCloud{}, 16); }) == Errc::kEmptyPointCloud);
  CHECK(code_of([] { splat_normals(single_point(Vec3(0.7, 0, 0), Vec3(1, 0, 0)), 16); }) ==
        Errc::kOutsideDomain);
  PointCloud bad = single_point(Vec3::Zero(), Vec3(1, 0, 0));
  bad.normals.clear();
  CHECK(code_of([&] { splat_normals(bad, 16); }) == Errc::kShapeMismatch);
  CHECK(code_of([] { splat_normals(single_point(Vec3::Zero(), Vec3(1, 0, 0)), 2); }) ==
        Errc::kInvalidArgument);
}

TEST_CASE("divergence of analytic fields") {
  const int res = 12;
  VectorField constant(res), linear(res), rotational(res);
  for (int k = 0; k < res; ++k) {
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) {
        constant(i, j, k) = Vec3(0.3, -1.0, 2.0);
        linear(i, j, k) = Vec3(i, 0, 0);
        rotational(i, j, k) = Vec3(-j, i, 0);
      }
    }
  }
  const ScalarField dc = divergence(constant), dl = divergence(linear), dr = divergence(rotational);
  for (int k = 1; k < res - 1; ++k) {
    for (int j = 1; j < res - 1; ++j) {
      for (int i = 1; i < res - 1; ++i) {
        CHECK(std::abs(dc(i, j, k)) < 1e-12);
        CHECK(dl(i, j, k) == doctest::Approx(1.0));
        CHECK(std::abs(dr(i, j, k)) < 1e-12);
      }
    }
  }
}

TEST_CASE("solve: zero source gives zero potential") {
  const SolveReport s = solve_poisson(ScalarField(16), 0.0, DensityField(16), 1e-8, 100);
  CHECK(s.converged);
  for (double v : s.phi.values()) CHECK(v == 0.0);
}

TEST_CASE("solve: manufactured discrete solution is recovered") {
  const int res = 24;
  const ScalarField exact = sampled(res, bubble_phi);
  const ScalarField f = laplacian(exact);
  const double tol = 1e-10;
  const SolveReport s = solve_poisson(f, 0.0, DensityField(res), tol, 2000);
  REQUIRE(s.converged);
  CHECK(s.iterations > 10);
  CHECK(s.relative_residual <= tol * 1.01);

  double err = 0.0, norm = 0.0;
  for (std::size_t n = 0; n < exact.size(); ++n) {
    err += (s.phi[n] - exact[n]) * (s.phi[n] - exact[n]);
    norm += exact[n] * exact[n];
  }
  // The 7-point operator has condition number about (2R/pi)^2 on this grid.
  const double cond = std::pow(2.0 * res / M_PI, 2);
  CHECK(std::sqrt(err) <= cond * tol * std::sqrt(norm));

  // Independent residual check with the public Laplacian.
  const ScalarField lphi = laplacian(s.phi);
  double r2 = 0.0, f2 = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    r2 += (f[n] - lphi[n]) * (f[n] - lphi[n]);
    f2 += f[n] * f[n];
  }
  CHECK(std::sqrt(r2 / f2) <= tol * 1.01);

  REQUIRE(s.residual_history.size() == static_cast<std::size_t>(s.iterations) + 1);
  CHECK(s.residual_history.front() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < s.residual_history.size(); ++i) {
    CHECK(s.residual_history[i] <= s.residual_history[i - 1] * (1.0 + 1e-12));
  }
}

TEST_CASE("solve: screened system") {
  const int res = 16;
  const PointCloud pc = sample_surface(fixtures::icosphere(0.4, 3), 2000, 5);
  const SplatResult sp = splat_normals(pc, res);
  const ScalarField f = divergence(sp.normals);
  const SolveReport s = solve_poisson(f, 4.0, sp.density, 1e-9, 2000);
  REQUIRE(s.converged);
  // Residual of (lap - 4 density) phi = f evaluated independently.
  const ScalarField lphi = laplacian(s.phi);
  double r2 = 0.0, f2 = 0.0;
  for (int k = 1; k < res - 1; ++k) {
    for (int j = 1; j < res - 1; ++j) {
      for (int i = 1; i < res - 1; ++i) {
        const double r = f(i, j, k) - (lphi(i, j, k) - 4.0 * sp.density(i, j, k) * s.phi(i, j, k));
        r2 += r * r;
        f2 += f(i, j, k) * f(i, j, k);
      }
    }
  }
  CHECK(std::sqrt(r2 / f2) <= 1e-8);
}

TEST_CASE("solve: iteration cap is reported, not thrown") {
  const ScalarField f = laplacian(sampled(24, bubble_phi));
  const SolveReport s = solve_poisson(f, 0.0, DensityField(24), 1e-12, 2);
  CHECK_FALSE(s.converged);
  CHECK(s.iterations == 2);
  CHECK(s.relative_residual > 1e-12);
  CHECK(code_of([] { solve_poisson(ScalarField(16), 0.0, DensityField(8), 1e-6, 10); }) ==
        Errc::kShapeMismatch);
}

TEST_CASE("solve: max-norm error shrinks when the grid doubles") {
  const double e32 = manufactured_error(32);
  const double e64 = manufactured_error(64);
  MESSAGE("e32 = " << e32 << ", e64 = " << e64);
  CHECK(e64 < e32);
  CHECK(e64 / e32 < 0.35);  // second order: about (31/63)^2
}

TEST_CASE("extract: sphere distance field") {
  const int res = 64;
  const ScalarField phi = sampled(res, [](const Vec3& p) { return p.norm() - 0.4; });
  const IsoSurface iso = extract_isosurface(phi, 0.0);
  CHECK(max_radius_error(iso.mesh, 0.4) <= 2.0 * 1.2 / 64);
  CHECK(test::is_closed_oriented_manifold(iso.mesh));
  CHECK(test::euler_characteristic(iso.mesh) == 2);
  CHECK(test::component_count(iso.mesh) == 1);
  CHECK(signed_volume(iso.mesh) > 0.0);  // gradient points outward
  CHECK(signed_volume(iso.mesh) ==
        doctest::Approx(4.0 / 3.0 * M_PI * 0.064).epsilon(0.01));
  CHECK(iso.vertex_density.empty());
}

TEST_CASE("extract: reversed gradient reverses orientation") {
  const ScalarField phi = sampled(32, [](const Vec3& p) { return 0.3 - p.norm(); });
  const IsoSurface iso = extract_isosurface(phi, 0.0);
  CHECK(test::is_closed_oriented_manifold(iso.mesh));
  CHECK(signed_volume(iso.mesh) < 0.0);
}

TEST_CASE("extract: torus level set has genus one") {
  const ScalarField phi = sampled(48, [](const Vec3& p) {
    const double q = std::hypot(p.x(), p.z()) - 0.35;
    return std::hypot(q, p.y()) - 0.12;
  });
  const IsoSurface iso = extract_isosurface(phi, 0.0);
  CHECK(test::is_closed_oriented_manifold(iso.mesh));
  CHECK(test::euler_characteristic(iso.mesh) == 0);
}

TEST_CASE("extract: degenerate iso values") {
  CHECK(code_of([] { extract_isosurface(ScalarField(8, 1.0), 1.0); }) == Errc::kDegenerateIso);
  const ScalarField phi = sampled(8, [](const Vec3& p) { return p.x(); });
  CHECK(code_of([&] { extract_isosurface(phi, 5.0); }) == Errc::kDegenerateIso);
  CHECK(code_of([&] { extract_isosurface(phi, -0.6); }) == Errc::kDegenerateIso);
}

TEST_CASE("iso value at samples is the (weighted) mean") {
  const ScalarField phi = sampled(16, [](const Vec3& p) { return p.x(); });
  PointCloud pc = single_point(Vec3(0.1, 0, 0), Vec3(1, 0, 0));
  pc.positions.push_back(Vec3(-0.3, 0.2, 0));
  pc.normals.push_back(Vec3(1, 0, 0));
  pc.colors.push_back(Rgb::Ones());
  // Trilinear interpolation is exact for linear fields.
  CHECK(iso_value_at_samples(phi, pc) == doctest::Approx(-0.1));
  CHECK(iso_value_at_samples(phi, pc, {3.0, 1.0}) == doctest::Approx((0.3 - 0.3) / 4.0));
}

TEST_CASE("density trim: thresholds at the extremes") {
  const Reconstruction rec = reconstruct(sphere_cloud(0.4, 5000), {32});
  const TriangleMesh same = density_trim(rec.mesh, rec.vertex_density, 0.0);
  CHECK(same.vertices == rec.mesh.vertices);
  CHECK(same.faces == rec.mesh.faces);
  double maxd = 0.0;
  for (double d : rec.vertex_density) maxd = std::max(maxd, d);
  const TriangleMesh none = density_trim(rec.mesh, rec.vertex_density, maxd * 1.0001);
  CHECK(none.faces.empty());
  CHECK(none.vertices.empty());
  CHECK(code_of([&] { density_trim(rec.mesh, {1.0}, 0.5); }) == Errc::kShapeMismatch);
}

TEST_CASE("density trim: keeps compact indices and colors") {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  m.faces = {{0, 1, 2}, {1, 3, 2}};
  m.vertex_colors = std::vector<Rgb>{Rgb(0, 0, 0), Rgb(1, 0, 0), Rgb(0, 1, 0), Rgb(1, 1, 0)};
  const TriangleMesh t = density_trim(m, {0.0, 1.0, 1.0, 1.0}, 0.5);
  REQUIRE(t.vertices.size() == 3);
  REQUIRE(t.faces.size() == 1);
  CHECK(t.vertices[t.faces[0][0]] == Vec3(1, 0, 0));
  CHECK(t.vertices[t.faces[0][1]] == Vec3(1, 1, 0));
  CHECK(t.vertices[t.faces[0][2]] == Vec3(0, 1, 0));
  REQUIRE(t.vertex_colors);
  CHECK((*t.vertex_colors)[t.faces[0][1]] == Rgb(1, 1, 0));
  CHECK_NOTHROW(t.validate());
}

TEST_CASE("density trim removes a sparse outlier blob and keeps the sphere") {
  // Dense sphere plus 50 scattered samples of a small far-away sphere.
  PointCloud pc = sample_surface(fixtures::icosphere(0.3, 4), 100000, 1);
  for (Vec3& p : pc.positions) p += Vec3(-0.1, -0.1, -0.1);
  const PointCloud blob = sample_surface(fixtures::icosphere(0.08, 2), 50, 2);
  for (std::size_t i = 0; i < blob.size(); ++i) {
    pc.positions.push_back(blob.positions[i] + Vec3(0.4, 0.4, 0.4));
    pc.normals.push_back(blob.normals[i]);
    pc.colors.push_back(blob.colors[i]);
  }
  PoissonOptions options;
  options.resolution = 64;
  const Reconstruction rec = reconstruct(pc, options);
  REQUIRE(test::component_count(rec.mesh) > 1);
  bool blob_present = false;
  for (const Vec3& v : rec.mesh.vertices) blob_present |= v.x() > 0.25;
  REQUIRE(blob_present);

  double maxd = 0.0;
  for (double d : rec.vertex_density) maxd = std::max(maxd, d);
  const TriangleMesh trimmed = density_trim(rec.mesh, rec.vertex_density, 0.01 * maxd);
  CHECK(test::component_count(trimmed) == 1);
  CHECK(test::is_closed_oriented_manifold(trimmed));
  for (const Vec3& v : trimmed.vertices) CHECK(v.x() < 0.25);
  double worst = 0.0;
  for (const Vec3& v : trimmed.vertices) {
    worst = std::max(worst, std::abs((v - Vec3::Constant(-0.1)).norm() - 0.3));
  }
  CHECK(worst <= 2.0 * 1.2 / 64);
}

TEST_CASE("reconstruct: sphere cloud") {
  PoissonOptions options;
  options.resolution = 64;
  const Reconstruction rec = reconstruct(sphere_cloud(0.4, 10000), options);
  CHECK(test::is_closed_oriented_manifold(rec.mesh));
  CHECK(test::euler_characteristic(rec.mesh) == 2);
  CHECK(max_radius_error(rec.mesh, 0.4) <= 2.0 * 1.2 / 64);
  CHECK(signed_volume(rec.mesh) > 0.0);
  CHECK(rec.relative_residual <= options.tol);
  REQUIRE(rec.vertex_density.size() == rec.mesh.vertices.size());
  REQUIRE(rec.mesh.vertex_colors);
  for (std::size_t i = 0; i < rec.mesh.vertices.size(); ++i) {
    if (rec.vertex_density[i] <= 1e-12) continue;
    CHECK(((*rec.mesh.vertex_colors)[i] - Rgb::Ones()).norm() < 1e-9);
  }
}

TEST_CASE("reconstruct: inward normals flip the orientation") {
  PoissonOptions options;
  options.resolution = 64;
  const Reconstruction out = reconstruct(sphere_cloud(0.4, 10000), options);
  const Reconstruction in = reconstruct(sphere_cloud(0.4, 10000, true), options);
  CHECK(test::is_closed_oriented_manifold(in.mesh));
  CHECK(max_radius_error(in.mesh, 0.4) <= 2.0 * 1.2 / 64);
  CHECK(signed_volume(in.mesh) < 0.0);
  CHECK(signed_volume(in.mesh) == doctest::Approx(-signed_volume(out.mesh)).epsilon(1e-6));
}

TEST_CASE("reconstruct: errors") {
  CHECK(code_of([] { reconstruct(PointCloud{}); }) == Errc::kEmptyPointCloud);
  PoissonOptions capped;
  capped.resolution = 32;
  capped.max_iter = 2;
  try {
    reconstruct(sphere_cloud(0.4, 2000), capped);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNonConvergence);
    CHECK(std::string(e.what()).find("2 iterations") != std::string::npos);
  }
  PoissonOptions big;
  big.resolution = 257;
  CHECK(code_of([&] { reconstruct(sphere_cloud(0.4, 100), big); }) == Errc::kInvalidArgument);
}

TEST_CASE("reconstruct: colors are density-weighted sample colors") {
  PointCloud pc = sphere_cloud(0.4, 5000);
  for (std::size_t i = 0; i < pc.size(); ++i) pc.colors[i] = Rgb(0.2, 0.4, 0.6);
  const Reconstruction rec = reconstruct(pc, {32});
  for (std::size_t i = 0; i < rec.mesh.vertices.size(); ++i) {
    const Rgb c = (*rec.mesh.vertex_colors)[i];
    if (rec.vertex_density[i] > 1e-12) {
      CHECK((c - Rgb(0.2, 0.4, 0.6)).norm() < 1e-9);
    } else {
      CHECK((c - Rgb::Constant(0.5)).norm() < 1e-12);
    }
  }
}

TEST_CASE("reconstruction commutes with a 90 degree grid rotation") {
  const Mat3 rz = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix().array().round();
  for (const TriangleMesh& mesh : {fixtures::torus(), fixtures::icosphere(0.4, 3)}) {
    const PointCloud pc = sample_surface(mesh, 8000, 11);
    PointCloud rotated = pc;
    for (std::size_t i = 0; i < pc.size(); ++i) {
      rotated.positions[i] = rz * pc.positions[i];
      rotated.normals[i] = rz * pc.normals[i];
    }
    PoissonOptions options;
    options.resolution = 48;
    const Reconstruction a = reconstruct(pc, options);
    const Reconstruction b = reconstruct(rotated, options);
    CHECK(test::is_closed_oriented_manifold(a.mesh));
    REQUIRE(a.mesh.vertices.size() == b.mesh.vertices.size());
    REQUIRE(a.mesh.faces.size() == b.mesh.faces.size());
    std::vector<Vec3> ra;
    for (const Vec3& v : a.mesh.vertices) ra.push_back(rz * v);
    const NearestNeighborIndex index(b.mesh.vertices);
    double worst = 0.0;
    for (const Vec3& v : ra) worst = std::max(worst, index.distance(v));
    CHECK(worst <= 1e-6);
  }
}
