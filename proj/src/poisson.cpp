#include "xray/poisson.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <unordered_map>

#include "xray/error.hpp"
#include "xray/parallel.hpp"

namespace xray {
namespace {

void check_resolution(int r) {
  if (r < 4 || r > kMaxPoissonResolution) {
    throw Error(Errc::kInvalidArgument,
                "Poisson resolution must lie in [4, " + std::to_string(kMaxPoissonResolution) +
                    "], got " + std::to_string(r));
  }
}

struct Trilinear {
  std::array<std::size_t, 8> index;
  std::array<double, 8> weight;
};

template <typename T>
Trilinear trilinear(const Grid<T>& grid, const Vec3& p) {
  const int r = grid.resolution();
  const Vec3 g = grid.to_grid(p);
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp(g[a], 0.0, static_cast<double>(r - 1));
    base[a] = std::min(static_cast<int>(std::floor(c)), r - 2);
    frac[a] = c - base[a];
  }
  Trilinear t;
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
    t.index[corner] = grid.index(base[0] + dx, base[1] + dy, base[2] + dz);
    t.weight[corner] = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                       (dz ? frac[2] : 1.0 - frac[2]);
  }
  return t;
}

// Deterministic dot product: one partial sum per z-slab, summed in order.
double dot(const std::vector<double>& a, const std::vector<double>& b, int r) {
  const std::size_t slab = static_cast<std::size_t>(r) * r;
  std::vector<double> partial(static_cast<std::size_t>(r), 0.0);
  parallel_for(static_cast<std::size_t>(r), 1, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      double s = 0.0;
      for (std::size_t n = k * slab; n < (k + 1) * slab; ++n) s += a[n] * b[n];
      partial[k] = s;
    }
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

/// out = (-lap + diag) x on interior nodes, 0 on the boundary.
void apply_operator(const std::vector<double>& x, const std::vector<double>& diag,
                    std::vector<double>& out, int r) {
  const std::size_t sx = 1, sy = static_cast<std::size_t>(r), sz = sy * sy;
  parallel_for(static_cast<std::size_t>(r), 1, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      for (std::size_t j = 0; j < static_cast<std::size_t>(r); ++j) {
        const std::size_t row = k * sz + j * sy;
        const bool boundary_row = k == 0 || j == 0 || k + 1 == static_cast<std::size_t>(r) ||
                                  j + 1 == static_cast<std::size_t>(r);
        if (boundary_row) {
          std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(row), r, 0.0);
          continue;
        }
        out[row] = 0.0;
        out[row + r - 1] = 0.0;
        for (std::size_t n = row + 1; n < row + r - 1; ++n) {
          out[n] = (6.0 + diag[n]) * x[n] - x[n - sx] - x[n + sx] - x[n - sy] - x[n + sy] -
                   x[n - sz] - x[n + sz];
        }
      }
    }
  });
}

}  // namespace

double ScalarField::sample(const Vec3& p) const {
  const Trilinear t = trilinear(*this, p);
  double v = 0.0;
  for (int c = 0; c < 8; ++c) v += t.weight[c] * (*this)[t.index[c]];
  return v;
}

SplatResult splat_normals(const PointCloud& pc, int resolution, SplatWeighting weighting) {
  check_resolution(resolution);
  if (pc.empty()) throw Error(Errc::kEmptyPointCloud, "empty point cloud");
  if (pc.normals.size() != pc.size()) {
    throw Error(Errc::kShapeMismatch, "point cloud normal count mismatch");
  }
  SplatResult out{VectorField(resolution), DensityField(resolution),
                  Grid<Vec3>(resolution, Vec3::Zero()), {}};
  const bool has_colors = pc.colors.size() == pc.size();
  std::vector<Trilinear> stencil(pc.size());
  for (std::size_t n = 0; n < pc.size(); ++n) {
    const Vec3& p = pc.positions[n];
    if (!p.allFinite() || p.cwiseAbs().maxCoeff() > kDomainHalfWidth) {
      throw Error(Errc::kOutsideDomain,
                  "point " + std::to_string(n) + " lies outside [-0.6, 0.6]^3");
    }
    stencil[n] = trilinear(out.normals, p);
    const Rgb c = has_colors ? pc.colors[n] : Rgb::Ones();
    for (int k = 0; k < 8; ++k) {
      out.density[stencil[n].index[k]] += stencil[n].weight[k];
      out.color_sum[stencil[n].index[k]] += stencil[n].weight[k] * c;
    }
  }
  out.sample_weight.resize(pc.size());
  for (std::size_t n = 0; n < pc.size(); ++n) {
    const Trilinear& t = stencil[n];
    double d = 0.0;
    for (int k = 0; k < 8; ++k) d += t.weight[k] * out.density[t.index[k]];
    // d >= 1/8 from the point's own contribution.
    const double w = weighting == SplatWeighting::kInverseDensity ? 1.0 / d : 1.0;
    out.sample_weight[n] = w;
    for (int k = 0; k < 8; ++k) out.normals[t.index[k]] += (w * t.weight[k]) * pc.normals[n];
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  const int r = v.resolution();
  ScalarField f(r);
  for (int k = 0; k < r; ++k) {
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < r; ++i) {
        const int c[3] = {i, j, k};
        double div = 0.0;
        for (int a = 0; a < 3; ++a) {
          int lo[3] = {i, j, k};
          int hi[3] = {i, j, k};
          double scale = 0.5;
          if (c[a] == 0) {
            hi[a] = 1;
            scale = 1.0;
          } else if (c[a] == r - 1) {
            lo[a] = r - 2;
            scale = 1.0;
          } else {
            lo[a] = c[a] - 1;
            hi[a] = c[a] + 1;
          }
          div += scale * (v(hi[0], hi[1], hi[2])[a] - v(lo[0], lo[1], lo[2])[a]);
        }
        f(i, j, k) = div;
      }
    }
  }
  return f;
}

ScalarField laplacian(const ScalarField& phi) {
  const int r = phi.resolution();
  ScalarField out(r);
  for (int k = 1; k < r - 1; ++k) {
    for (int j = 1; j < r - 1; ++j) {
      for (int i = 1; i < r - 1; ++i) {
        out(i, j, k) = phi(i - 1, j, k) + phi(i + 1, j, k) + phi(i, j - 1, k) + phi(i, j + 1, k) +
                       phi(i, j, k - 1) + phi(i, j, k + 1) - 6.0 * phi(i, j, k);
      }
    }
  }
  return out;
}

SolveReport solve_poisson(const ScalarField& f, double screening_weight,
                          const DensityField& density, double tol, int max_iter) {
  const int r = f.resolution();
  check_resolution(r);
  if (density.resolution() != r) {
    throw Error(Errc::kShapeMismatch, "density and source resolutions differ");
  }
  if (screening_weight < 0.0) throw Error(Errc::kInvalidArgument, "screening weight must be >= 0");
  const std::size_t n = f.size();

  // Solve M x = b with M = -(lap - w * density) (SPD) and b = -f.
  std::vector<double> diag(n, 0.0), b(n, 0.0);
  for (int k = 1; k < r - 1; ++k) {
    for (int j = 1; j < r - 1; ++j) {
      for (int i = 1; i < r - 1; ++i) {
        const std::size_t idx = f.index(i, j, k);
        b[idx] = -f[idx];
        diag[idx] = screening_weight * density[idx];
      }
    }
  }

  SolveReport report;
  report.phi = ScalarField(r);
  const double b_norm = std::sqrt(dot(b, b, r));
  report.residual_history.push_back(b_norm > 0.0 ? 1.0 : 0.0);
  if (b_norm == 0.0) {
    report.converged = true;
    return report;
  }

  std::vector<double>& x = report.phi.values();
  std::vector<double> res = b, p = b, ar(n), ap(n);
  apply_operator(res, diag, ar, r);
  ap = ar;
  double r_ar = dot(res, ar, r);
  const std::size_t slab = static_cast<std::size_t>(r) * r;
  std::vector<double> partial(static_cast<std::size_t>(r));

  for (int it = 1; it <= max_iter; ++it) {
    const double ap_ap = dot(ap, ap, r);
    if (!(ap_ap > 0.0)) break;
    const double alpha = r_ar / ap_ap;
    parallel_for(static_cast<std::size_t>(r), 1, [&](std::size_t k0, std::size_t k1) {
      for (std::size_t k = k0; k < k1; ++k) {
        double s = 0.0;
        for (std::size_t m = k * slab; m < (k + 1) * slab; ++m) {
          x[m] += alpha * p[m];
          res[m] -= alpha * ap[m];
          s += res[m] * res[m];
        }
        partial[k] = s;
      }
    });
    double rr = 0.0;
    for (double s : partial) rr += s;
    const double rel = std::sqrt(rr) / b_norm;
    report.residual_history.push_back(rel);
    report.iterations = it;
    if (rel <= tol) {
      report.converged = true;
      break;
    }
    apply_operator(res, diag, ar, r);
    const double r_ar_new = dot(res, ar, r);
    const double beta = r_ar_new / r_ar;
    r_ar = r_ar_new;
    parallel_for(static_cast<std::size_t>(r), 1, [&](std::size_t k0, std::size_t k1) {
      for (std::size_t m = k0 * slab; m < k1 * slab; ++m) {
        p[m] = res[m] + beta * p[m];
        ap[m] = ar[m] + beta * ap[m];
      }
    });
  }

  // Report the true residual rather than the recursively updated one.
  apply_operator(x, diag, ar, r);
  double true_rr = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double d = b[m] - ar[m];
    true_rr += d * d;
  }
  report.relative_residual = std::sqrt(true_rr) / b_norm;
  return report;
}

double iso_value_at_samples(const ScalarField& phi, const PointCloud& pc,
                            const std::vector<double>& weights) {
  if (pc.empty()) throw Error(Errc::kEmptyPointCloud, "empty point cloud");
  if (!weights.empty() && weights.size() != pc.size()) {
    throw Error(Errc::kShapeMismatch, "sample weight count mismatch");
  }
  double sum = 0.0, wsum = 0.0;
  for (std::size_t n = 0; n < pc.size(); ++n) {
    const double w = weights.empty() ? 1.0 : weights[n];
    sum += w * phi.sample(pc.positions[n]);
    wsum += w;
  }
  return sum / wsum;
}

IsoSurface extract_isosurface(const ScalarField& phi, double iso,
                              const DensityField* density) {
  const int r = phi.resolution();
  if (r < 2) throw Error(Errc::kInvalidArgument, "grid too small for extraction");
  const auto [min_it, max_it] = std::minmax_element(phi.values().begin(), phi.values().end());
  if (!(iso > *min_it && iso < *max_it)) {
    throw Error(Errc::kDegenerateIso, "iso-value " + std::to_string(iso) +
                                          " outside the potential range [" +
                                          std::to_string(*min_it) + ", " +
                                          std::to_string(*max_it) + "]");
  }
  const std::uint64_t n_nodes = phi.size();
  const double h = phi.spacing();

  struct Node {
    std::uint64_t id;
    double value;
    Vec3 pos;
  };
  auto lattice_pos = [&](double i, double j, double k) {
    return Vec3(-kDomainHalfWidth + i * h, -kDomainHalfWidth + j * h, -kDomainHalfWidth + k * h);
  };

  IsoSurface out;
  out.iso = iso;
  TriangleMesh& mesh = out.mesh;
  std::unordered_map<std::uint64_t, std::int32_t> edge_vertex;

  auto edge_point = [&](const Node& a, const Node& b) -> std::int32_t {
    const Node& lo = a.id < b.id ? a : b;
    const Node& hi = a.id < b.id ? b : a;
    const std::uint64_t key = lo.id * (5 * n_nodes) + hi.id;
    auto [it, inserted] = edge_vertex.try_emplace(key, static_cast<std::int32_t>(mesh.vertices.size()));
    if (inserted) {
      const double t = (iso - lo.value) / (hi.value - lo.value);
      mesh.vertices.push_back(lo.pos + t * (hi.pos - lo.pos));
    }
    return it->second;
  };

  auto emit = [&](std::int32_t a, std::int32_t b, std::int32_t c, const Vec3& uphill) {
    const Vec3 nrm = (mesh.vertices[b] - mesh.vertices[a]).cross(mesh.vertices[c] - mesh.vertices[a]);
    if (nrm.dot(uphill) < 0.0) std::swap(b, c);
    mesh.faces.push_back({a, b, c});
  };

  auto tetra = [&](const std::array<const Node*, 4>& t) {
    std::array<const Node*, 4> below{}, above{};
    int nb = 0, na = 0;
    for (const Node* v : t) {
      if (v->value < iso) below[nb++] = v; else above[na++] = v;
    }
    if (nb == 0 || na == 0) return;
    Vec3 cb = Vec3::Zero(), ca = Vec3::Zero();
    for (int m = 0; m < nb; ++m) cb += below[m]->pos;
    for (int m = 0; m < na; ++m) ca += above[m]->pos;
    const Vec3 uphill = ca / na - cb / nb;
    if (nb == 1) {
      emit(edge_point(*below[0], *above[0]), edge_point(*below[0], *above[1]),
           edge_point(*below[0], *above[2]), uphill);
    } else if (na == 1) {
      emit(edge_point(*below[0], *above[0]), edge_point(*below[1], *above[0]),
           edge_point(*below[2], *above[0]), uphill);
    } else {
      // Quad a0-b0, a0-b1, a1-b1, a1-b0 in cyclic order.
      const std::int32_t q0 = edge_point(*below[0], *above[0]);
      const std::int32_t q1 = edge_point(*below[0], *above[1]);
      const std::int32_t q2 = edge_point(*below[1], *above[1]);
      const std::int32_t q3 = edge_point(*below[1], *above[0]);
      emit(q0, q1, q2, uphill);
      emit(q0, q2, q3, uphill);
    }
  };

  std::array<Node, 8> corner;
  std::array<Node, 6> face;
  Node center;
  for (int k = 0; k + 1 < r; ++k) {
    for (int j = 0; j + 1 < r; ++j) {
      for (int i = 0; i + 1 < r; ++i) {
        int below_count = 0;
        double sum = 0.0;
        for (int c = 0; c < 8; ++c) {
          const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
          const std::size_t idx = phi.index(i + dx, j + dy, k + dz);
          corner[c] = {idx, phi[idx], lattice_pos(i + dx, j + dy, k + dz)};
          below_count += corner[c].value < iso;
        }
        // A sign-uniform cube can still straddle iso at an averaged node
        // through rounding, so only skip when the averages agree too.
        bool mixed = below_count != 0 && below_count != 8;
        for (int a = 0; a < 3; ++a) {
          for (int s = 0; s < 2; ++s) {
            // Corners with bit a == s, ascending global index (x, then y, then z
            // bits), so both cubes sharing the face compute the same value.
            double v[4];
            int m = 0;
            for (int c = 0; c < 8; ++c) {
              if (((c >> a) & 1) == s) v[m++] = corner[c].value;
            }
            Node& fc = face[a * 2 + s];
            fc.value = ((v[0] + v[1]) + (v[2] + v[3])) * 0.25;
            double lat[3] = {i + 0.5, j + 0.5, k + 0.5};
            int cell[3] = {i, j, k};
            lat[a] = cell[a] + s;
            cell[a] += s;
            fc.id = n_nodes * (1 + a) + phi.index(cell[0], cell[1], cell[2]);
            fc.pos = lattice_pos(lat[0], lat[1], lat[2]);
            mixed = mixed || ((fc.value < iso) != (corner[0].value < iso));
          }
        }
        for (const Node& c : corner) sum += c.value;
        center = {4 * n_nodes + phi.index(i, j, k), sum * 0.125,
                  lattice_pos(i + 0.5, j + 0.5, k + 0.5)};
        mixed = mixed || ((center.value < iso) != (corner[0].value < iso));
        if (!mixed) continue;

        for (int a = 0; a < 3; ++a) {
          const int b = (a + 1) % 3, c = (a + 2) % 3;
          for (int s = 0; s < 2; ++s) {
            // Face corners in cyclic order over the two free axes.
            static constexpr int kCycle[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            int ring[4];
            for (int m = 0; m < 4; ++m) {
              ring[m] = (s << a) | (kCycle[m][0] << b) | (kCycle[m][1] << c);
            }
            for (int m = 0; m < 4; ++m) {
              tetra({&center, &face[a * 2 + s], &corner[ring[m]], &corner[ring[(m + 1) % 4]]});
            }
          }
        }
      }
    }
  }

  if (density) {
    out.vertex_density.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) out.vertex_density.push_back(density->sample(v));
  }
  return out;
}

IsoSurface extract_isosurface(const ScalarField& phi, const PointCloud& pc,
                              const DensityField* density) {
  return extract_isosurface(phi, iso_value_at_samples(phi, pc), density);
}

TriangleMesh density_trim(const TriangleMesh& mesh,
                          const std::vector<double>& per_vertex_density,
                          double threshold) {
  if (per_vertex_density.size() != mesh.vertices.size()) {
    throw Error(Errc::kShapeMismatch, "per-vertex density count mismatch");
  }
  std::vector<std::int32_t> remap(mesh.vertices.size(), -1);
  TriangleMesh out;
  if (mesh.vertex_colors) out.vertex_colors.emplace();
  if (mesh.vertex_normals) out.vertex_normals.emplace();
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (per_vertex_density[v] < threshold) continue;
    remap[v] = static_cast<std::int32_t>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[v]);
    if (mesh.vertex_colors) out.vertex_colors->push_back((*mesh.vertex_colors)[v]);
    if (mesh.vertex_normals) out.vertex_normals->push_back((*mesh.vertex_normals)[v]);
  }
  for (const Face& f : mesh.faces) {
    const Face g{remap[f[0]], remap[f[1]], remap[f[2]]};
    if (g[0] >= 0 && g[1] >= 0 && g[2] >= 0) out.faces.push_back(g);
  }
  // Vertices that lost all their faces are kept; they are harmless for
  // sampling and keep the vertex map a pure filter.
  return out;
}

Reconstruction reconstruct(const PointCloud& pc, const PoissonOptions& options) {
  check_resolution(options.resolution);
  const SplatResult splat = splat_normals(
      pc, options.resolution,
      options.density_weighting ? SplatWeighting::kInverseDensity : SplatWeighting::kUniform);
  const ScalarField f = divergence(splat.normals);
  const int max_iter = options.max_iter > 0 ? options.max_iter : 10 * options.resolution;
  SolveReport solve = solve_poisson(f, options.screening, splat.density, options.tol, max_iter);
  if (!solve.converged) {
    throw Error(Errc::kNonConvergence,
                "Poisson solve stopped after " + std::to_string(solve.iterations) +
                    " iterations at relative residual " + std::to_string(solve.relative_residual));
  }
  IsoSurface iso = extract_isosurface(
      solve.phi, iso_value_at_samples(solve.phi, pc, splat.sample_weight), &splat.density);

  std::vector<Rgb> colors;
  colors.reserve(iso.mesh.vertices.size());
  for (std::size_t v = 0; v < iso.mesh.vertices.size(); ++v) {
    const Trilinear t = trilinear(splat.color_sum, iso.mesh.vertices[v]);
    Rgb c = Rgb::Zero();
    for (int k = 0; k < 8; ++k) c += t.weight[k] * splat.color_sum[t.index[k]];
    const double w = iso.vertex_density[v];
    colors.push_back(w > 1e-12 ? Rgb((c / w).cwiseMax(0.0).cwiseMin(1.0)) : Rgb(0.5, 0.5, 0.5));
  }
  iso.mesh.vertex_colors = std::move(colors);

  Reconstruction out;
  out.iso = iso.iso;
  out.relative_residual = solve.relative_residual;
  out.iterations = solve.iterations;
  if (options.trim > 0.0) {
    out.mesh = density_trim(iso.mesh, iso.vertex_density, options.trim);
    for (std::size_t v = 0; v < iso.vertex_density.size(); ++v) {
      if (iso.vertex_density[v] >= options.trim) out.vertex_density.push_back(iso.vertex_density[v]);
    }
  } else {
    out.mesh = std::move(iso.mesh);
    out.vertex_density = std::move(iso.vertex_density);
  }
  return out;
}

}  // namespace xray
