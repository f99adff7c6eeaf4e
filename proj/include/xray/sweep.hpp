#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xray/fixtures.hpp"
#include "xray/geometry.hpp"

namespace xray {

struct SweepOptions {
  std::vector<int> layers{1, 2, 4, 8, 12};
  std::vector<int> resolutions{32, 64, 128, 256, 512};
  int views = 2;
  std::uint64_t seed = 0;
  int poisson_resolution = 64;
  double screening = 0.0;
  double trim = 0.0;
  std::size_t samples = 16384;
  double threshold = 0.1;
  /// When false the *_ms columns are written as 0 so the CSV is byte-stable.
  bool timing = true;
};

struct SweepRow {
  std::string mesh;
  int view = 0;  // -1 marks a mean over all meshes and views
  int layers = 0;
  int resolution = 0;
  double chamfer = 0.0;
  double f_score = 0.0;
  double encode_ms = 0.0;
  double decode_ms = 0.0;
  double recon_ms = 0.0;
  std::string error;  // empty on success
};

/// Encodes each mesh once per (view, resolution) at the largest L, then for
/// every L truncates, decodes in world coordinates, reconstructs and scores
/// against the normalized input. Rows come back in (mesh, view, L,
/// resolution) order whatever the worker count. A failing cell records its
/// error and the sweep continues.
std::vector<SweepRow> run_sweep(const std::vector<fixtures::NamedMesh>& meshes,
                                const SweepOptions& options);

/// Mean chamfer and F-score per (L, resolution) over successful rows, as rows
/// with mesh "mean" and view -1, ordered by (L, resolution).
std::vector<SweepRow> aggregate(const std::vector<SweepRow>& rows);

inline constexpr const char* kSweepCsvHeader =
    "mesh,view,layers,resolution,chamfer,f_score,encode_ms,decode_ms,recon_ms,error";

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Line chart of mean chamfer against L (one line per resolution) and
/// against resolution (one line per L).
std::string sweep_svg(const std::vector<SweepRow>& means);

}  // namespace xray
