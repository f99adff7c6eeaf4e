#pragma once

#include <vector>

#include "xray/geometry.hpp"

namespace xray {

/// Cubic reconstruction domain [-0.6, 0.6]^3: normalized meshes plus a 10%
/// margin so the zero boundary condition never clips geometry.
inline constexpr double kDomainHalfWidth = 0.6;
inline constexpr int kMaxPoissonResolution = 256;
inline constexpr int kDefaultPoissonResolution = 128;

/// Regular grid of R^3 nodes spanning the domain; node (i, j, k) sits at
/// -0.6 + (i, j, k) * spacing with spacing = 1.2 / (R - 1). x varies fastest.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int resolution, T fill) : res_(resolution), values_(cube(resolution), fill) {}

  [[nodiscard]] int resolution() const noexcept { return res_; }
  [[nodiscard]] double spacing() const noexcept { return 2.0 * kDomainHalfWidth / (res_ - 1); }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::size_t index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(k) * res_ + j) * res_ + i;
  }
  [[nodiscard]] Vec3 node_position(int i, int j, int k) const {
    const double h = spacing();
    return Vec3(-kDomainHalfWidth + i * h, -kDomainHalfWidth + j * h, -kDomainHalfWidth + k * h);
  }
  /// Continuous grid coordinates of a world point.
  [[nodiscard]] Vec3 to_grid(const Vec3& p) const {
    return (p.array() + kDomainHalfWidth).matrix() / spacing();
  }

  const T& operator()(int i, int j, int k) const { return values_[index(i, j, k)]; }
  T& operator()(int i, int j, int k) { return values_[index(i, j, k)]; }
  const T& operator[](std::size_t n) const { return values_[n]; }
  T& operator[](std::size_t n) { return values_[n]; }

  [[nodiscard]] const std::vector<T>& values() const noexcept { return values_; }
  [[nodiscard]] std::vector<T>& values() noexcept { return values_; }

 private:
  static std::size_t cube(int r) {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(r) * static_cast<std::size_t>(r);
  }

  int res_ = 0;
  std::vector<T> values_;
};

/// Splatted normal field.
class VectorField : public Grid<Vec3> {
 public:
  VectorField() = default;
  explicit VectorField(int resolution) : Grid(resolution, Vec3::Zero()) {}
};

/// Source term f or potential phi.
class ScalarField : public Grid<double> {
 public:
  ScalarField() = default;
  explicit ScalarField(int resolution, double fill = 0.0) : Grid(resolution, fill) {}

  /// Trilinear interpolation; points outside the domain are clamped to it.
  [[nodiscard]] double sample(const Vec3& p) const;
};

/// Per-node sample weight; sums to the point count.
class DensityField : public ScalarField {
 public:
  DensityField() = default;
  explicit DensityField(int resolution) : ScalarField(resolution) {}
};

struct SplatResult {
  VectorField normals;
  DensityField density;
  Grid<Vec3> color_sum;  // density-weighted color accumulator
  /// Per-point factor applied to its normal before splatting.
  std::vector<double> sample_weight;
};

enum class SplatWeighting {
  kUniform,         // every normal counts once
  kInverseDensity,  // normal scaled by 1 / (trilinear density at the point)
};

/// Distributes each normal to the 8 surrounding nodes with trilinear weights;
/// density accumulates the same (unscaled) weights. kInverseDensity makes the
/// field proportional to surface area instead of sample count, which matters
/// for ray-cast clouds whose density varies with view angle and distance.
SplatResult splat_normals(const PointCloud& pc, int resolution,
                          SplatWeighting weighting = SplatWeighting::kUniform);

/// Central differences in the interior, one-sided on the boundary, in grid
/// units (node spacing 1).
ScalarField divergence(const VectorField& v);

/// Discrete 7-point Laplacian in grid units; boundary nodes map to zero.
ScalarField laplacian(const ScalarField& phi);

struct SolveReport {
  ScalarField phi;
  double relative_residual = 0.0;  // ||f - A phi|| / ||f|| at exit
  int iterations = 0;
  bool converged = false;
  /// Relative residual after each iteration (index 0 = initial guess).
  std::vector<double> residual_history;
};

/// Solves (lap - screening * density) phi = f at interior nodes with phi = 0
/// on the boundary by the conjugate residual method (a Krylov method of the
/// conjugate gradient family whose residual norm never increases).
/// Non-convergence is reported through `converged`, not thrown.
SolveReport solve_poisson(const ScalarField& f, double screening_weight,
                          const DensityField& density, double tol, int max_iter);

/// Mean of phi sampled trilinearly at the cloud positions, weighted when
/// `weights` is non-empty.
double iso_value_at_samples(const ScalarField& phi, const PointCloud& pc,
                            const std::vector<double>& weights = {});

struct IsoSurface {
  TriangleMesh mesh;
  double iso = 0.0;
  std::vector<double> vertex_density;  // empty when no density was given
};

/// Extracts the phi = iso level set as a closed triangle mesh oriented along
/// the gradient of phi. Each grid cube is split into 24 tetrahedra around its
/// center and face centers, so the output is a two-manifold and the
/// extraction commutes with the grid's rotational symmetries.
IsoSurface extract_isosurface(const ScalarField& phi, double iso,
                              const DensityField* density = nullptr);

/// Same as above with iso = iso_value_at_samples(phi, pc).
IsoSurface extract_isosurface(const ScalarField& phi, const PointCloud& pc,
                              const DensityField* density = nullptr);

/// Drops vertices whose density is below `threshold` with every incident face
/// and compacts the vertex indices.
TriangleMesh density_trim(const TriangleMesh& mesh,
                          const std::vector<double>& per_vertex_density,
                          double threshold);

struct PoissonOptions {
  int resolution = kDefaultPoissonResolution;
  double screening = 0.0;
  /// Absolute per-vertex density threshold; 0 keeps every vertex.
  double trim = 0.0;
  double tol = 1e-6;
  int max_iter = 0;  // 0 selects 10 * resolution
  bool density_weighting = true;  // splat with SplatWeighting::kInverseDensity
};

struct Reconstruction {
  TriangleMesh mesh;
  std::vector<double> vertex_density;
  double iso = 0.0;
  double relative_residual = 0.0;
  int iterations = 0;
};

/// splat -> divergence -> solve -> extract -> trim. Throws
/// Error(kNonConvergence) carrying the achieved residual when the solver
/// stalls.
Reconstruction reconstruct(const PointCloud& pc, const PoissonOptions& options = {});

}  // namespace xray
