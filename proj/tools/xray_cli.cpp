// Command-line front end: encode, decode, eval, sweep, views, info.
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "xray/codec.hpp"
#include "xray/error.hpp"
#include "xray/fixtures.hpp"
#include "xray/mesh_io.hpp"
#include "xray/metrics.hpp"
#include "xray/poisson.hpp"
#include "xray/sweep.hpp"

namespace fs = std::filesystem;
using namespace xray;

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

struct EncodeArgs {
  std::string mesh, out;
  int width = 256, height = 256, layers = 8;
  double azimuth = 0.0, elevation = 0.0, distance = kDefaultCameraDistance;
};

int cmd_encode(const EncodeArgs& a) {
  const TriangleMesh mesh = normalize_mesh(load_mesh(a.mesh)).mesh;
  const Camera cam = spherical_camera(a.azimuth, a.elevation, a.distance, a.width, a.height);
  const XRayTensor x = encode(mesh, cam, a.layers, a.height, a.width);
  write_xray(x, a.out);
  int max_layer = 0;
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) max_layer = std::max(max_layer, x.hit_count(r, c));
  }
  std::cout << "wrote " << a.out << " (" << a.layers << "x" << a.height << "x" << a.width
            << ")\n"
            << "total hits: " << x.total_hits() << "\n"
            << "max layers used: " << max_layer << "\n";
  return 0;
}

struct DecodeArgs {
  std::string in, out;
  int poisson_res = kDefaultPoissonResolution;
  double screening = 0.0;
  double trim = 0.0;
  bool points_only = false;
  std::string frame = "world";
};

int cmd_decode(const DecodeArgs& a) {
  const XRayTensor x = read_xray(a.in);
  const PointCloud pc = decode_to_pointcloud(
      x, a.frame == "camera" ? DecodeFrame::kCamera : DecodeFrame::kWorld);
  if (pc.empty()) throw Error(Errc::kEmptyPointCloud, "empty point cloud: no hits in " + a.in);
  std::cout << "points: " << pc.size() << "\n";
  if (a.points_only) {
    save_point_cloud(pc, a.out);
    std::cout << "wrote " << a.out << "\n";
    return 0;
  }
  PoissonOptions po;
  po.resolution = a.poisson_res;
  po.screening = a.screening;
  po.trim = a.trim;
  const Reconstruction rec = reconstruct(pc, po);
  save_mesh(rec.mesh, a.out);
  std::cout << "solver iterations: " << rec.iterations << "\n"
            << "solver residual: " << fmt("%.3e", rec.relative_residual) << "\n"
            << "vertices: " << rec.mesh.vertices.size() << "\n"
            << "faces: " << rec.mesh.faces.size() << "\n"
            << "wrote " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string pred, gt, csv;
  std::size_t samples = kDefaultSampleCount;
  double threshold = kDefaultFScoreThreshold;
  std::uint64_t seed = 0;
  bool no_align = false;
};

int cmd_eval(const EvalArgs& a) {
  const TriangleMesh pred = load_mesh(a.pred);
  const TriangleMesh gt = load_mesh(a.gt);
  const MetricReport r = a.no_align
                             ? evaluate_unaligned(pred, gt, a.samples, a.threshold, a.seed)
                             : evaluate_pair(pred, gt, a.samples, a.threshold, a.seed);
  std::cout << "chamfer: " << fmt("%.6f", r.chamfer) << "\n"
            << "f_score@" << fmt("%g", a.threshold) << ": " << fmt("%.6f", r.f_score) << "\n"
            << "precision: " << fmt("%.6f", r.precision) << "\n"
            << "recall: " << fmt("%.6f", r.recall) << "\n";
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw Error(Errc::kIo, "cannot write " + a.csv);
    out << "pred,gt,chamfer,f_score,precision,recall,threshold\n"
        << a.pred << ',' << a.gt << ',' << fmt("%.9g", r.chamfer) << ','
        << fmt("%.9g", r.f_score) << ',' << fmt("%.9g", r.precision) << ','
        << fmt("%.9g", r.recall) << ',' << fmt("%.9g", r.threshold) << '\n';
  }
  return 0;
}

struct SweepArgs {
  std::string mesh_dir, out = "sweep.csv", svg;
  SweepOptions options;
  bool no_timing = false;
};

std::vector<fixtures::NamedMesh> load_mesh_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, "not a directory: " + dir);
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".obj" || ext == ".ply")) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw Error(Errc::kIo, "no .obj or .ply meshes in " + dir);
  std::vector<fixtures::NamedMesh> meshes;
  for (const auto& p : paths) meshes.push_back({p.stem().string(), load_mesh(p)});
  return meshes;
}

int cmd_sweep(SweepArgs a) {
  a.options.timing = !a.no_timing;
  const auto meshes = a.mesh_dir.empty() ? fixtures::sweep_suite() : load_mesh_dir(a.mesh_dir);
  std::vector<SweepRow> rows = run_sweep(meshes, a.options);
  const std::vector<SweepRow> means = aggregate(rows);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += !r.error.empty();
  rows.insert(rows.end(), means.begin(), means.end());
  {
    std::ofstream out(a.out);
    if (!out) throw Error(Errc::kIo, "cannot write " + a.out);
    write_sweep_csv(rows, out);
  }
  if (!a.svg.empty()) {
    std::ofstream out(a.svg);
    if (!out) throw Error(Errc::kIo, "cannot write " + a.svg);
    out << sweep_svg(means);
  }
  std::cout << "layers,resolution,mean_chamfer,mean_f_score\n";
  for (const auto& m : means) {
    std::cout << m.layers << ',' << m.resolution << ',' << fmt("%.6f", m.chamfer) << ','
              << fmt("%.6f", m.f_score) << '\n';
  }
  std::cout << "cells: " << rows.size() - means.size() << " (" << failed << " failed)\n"
            << "wrote " << a.out << "\n";
  return 0;
}

struct ViewsArgs {
  std::string mesh, out_dir = ".";
  int num = 8, width = 256, height = 256, layers = 8;
  std::uint64_t seed = 0;
};

int cmd_views(const ViewsArgs& a) {
  const TriangleMesh mesh = normalize_mesh(load_mesh(a.mesh)).mesh;
  fs::create_directories(a.out_dir);
  const std::string stem = fs::path(a.mesh).stem().string();
  int index = 0;
  for (const ViewSample& v : sample_views(a.seed, a.num, a.width, a.height)) {
    const XRayTensor x = encode(mesh, v.camera, a.layers, a.height, a.width);
    char name[128];
    std::snprintf(name, sizeof name, "%s_view%02d_az%+08.3f_el%+07.3f.xray", stem.c_str(), index,
                  v.azimuth_deg, v.elevation_deg);
    const fs::path path = fs::path(a.out_dir) / name;
    write_xray(x, path);
    std::cout << path.string() << " distance " << fmt("%.3f", v.camera.position().norm())
              << " hits " << x.total_hits() << "\n";
    ++index;
  }
  return 0;
}

int cmd_info(const std::string& path) {
  const XRayTensor x = read_xray(path);
  const XRayHeader& h = x.header();
  const Camera cam = x.camera();
  const Vec3 p = cam.position();
  std::cout << "layers: " << h.layers << "\nheight: " << h.height << "\nwidth: " << h.width
            << "\nfov_x: " << fmt("%.6f", h.fov_x) << "\ncamera position: ("
            << fmt("%.6f", p.x()) << ", " << fmt("%.6f", p.y()) << ", " << fmt("%.6f", p.z())
            << ")\n";
  const double pixels = static_cast<double>(h.height) * h.width;
  for (int l = 0; l < x.layers(); ++l) {
    std::size_t hits = 0;
    for (int r = 0; r < x.height(); ++r) {
      for (int c = 0; c < x.width(); ++c) hits += x.at(l, kHit, r, c) == 1.0f;
    }
    std::cout << "layer " << l << " occupancy: " << fmt("%.2f", 100.0 * hits / pixels) << "%\n";
  }
  const int grid = static_cast<int>(std::max(h.height, h.width));
  std::cout << format_percent(storage_ratio(x.layers(), grid)) << " smaller than " << grid
            << "³ dense grid\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-layer ray-cast surface encoding tools"};
  app.require_subcommand(1);

  EncodeArgs enc;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a mesh into an .xray file");
  encode_cmd->add_option("mesh", enc.mesh, "Input mesh (.obj or .ply)")->required();
  encode_cmd->add_option("out", enc.out, "Output .xray path")->required();
  encode_cmd->add_option("--width", enc.width)->check(CLI::PositiveNumber)->capture_default_str();
  encode_cmd->add_option("--height", enc.height)->check(CLI::PositiveNumber)->capture_default_str();
  encode_cmd->add_option("--layers", enc.layers)->check(CLI::PositiveNumber)->capture_default_str();
  encode_cmd->add_option("--azimuth", enc.azimuth, "Degrees")->capture_default_str();
  encode_cmd->add_option("--elevation", enc.elevation, "Degrees")->capture_default_str();
  encode_cmd->add_option("--distance", enc.distance)->check(CLI::PositiveNumber)->capture_default_str();

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "Decode an .xray file to points or a mesh");
  decode_cmd->add_option("xray", dec.in)->required();
  decode_cmd->add_option("out", dec.out, "Output .ply or .obj")->required();
  decode_cmd->add_option("--poisson-res", dec.poisson_res)
      ->check(CLI::Range(4, kMaxPoissonResolution))
      ->capture_default_str();
  decode_cmd->add_option("--screening", dec.screening)->check(CLI::NonNegativeNumber)->capture_default_str();
  decode_cmd->add_option("--trim", dec.trim, "Absolute per-vertex density threshold")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  decode_cmd->add_flag("--points-only", dec.points_only, "Write the decoded point cloud");
  decode_cmd->add_option("--frame", dec.frame, "Point frame")
      ->check(CLI::IsMember({"world", "camera"}))
      ->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Chamfer distance and F-score between meshes");
  eval_cmd->add_option("pred", ev.pred)->required();
  eval_cmd->add_option("gt", ev.gt)->required();
  eval_cmd->add_option("--samples", ev.samples)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--threshold", ev.threshold)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed)->capture_default_str();
  eval_cmd->add_option("--csv", ev.csv, "Also write the report as CSV");
  eval_cmd->add_flag("--no-align", ev.no_align,
                     "Score in the input coordinates (skip normalization and ICP)");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Intrinsic error over layers and resolution");
  sweep_cmd->add_option("mesh_dir", sw.mesh_dir, "Directory of meshes (default: built-in fixtures)");
  sweep_cmd->add_option("--layers-list", sw.options.layers)->delimiter(',')->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--res-list", sw.options.resolutions)->delimiter(',')->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sw.out)->capture_default_str();
  sweep_cmd->add_option("--svg", sw.svg, "Also write an SVG line plot");
  sweep_cmd->add_option("--views", sw.options.views)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--seed", sw.options.seed)->capture_default_str();
  sweep_cmd->add_option("--poisson-res", sw.options.poisson_resolution)
      ->check(CLI::Range(4, kMaxPoissonResolution))
      ->capture_default_str();
  sweep_cmd->add_option("--samples", sw.options.samples)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--threshold", sw.options.threshold)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--screening", sw.options.screening)->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--trim", sw.options.trim)->check(CLI::NonNegativeNumber);
  sweep_cmd->add_flag("--no-timing", sw.no_timing, "Write zero timings for byte-stable output");

  ViewsArgs vw;
  auto* views_cmd = app.add_subcommand("views", "Encode random camera views of a mesh");
  views_cmd->add_option("mesh", vw.mesh)->required();
  views_cmd->add_option("--num", vw.num)->check(CLI::PositiveNumber)->capture_default_str();
  views_cmd->add_option("--seed", vw.seed)->capture_default_str();
  views_cmd->add_option("--out-dir", vw.out_dir)->capture_default_str();
  views_cmd->add_option("--width", vw.width)->check(CLI::PositiveNumber)->capture_default_str();
  views_cmd->add_option("--height", vw.height)->check(CLI::PositiveNumber)->capture_default_str();
  views_cmd->add_option("--layers", vw.layers)->check(CLI::PositiveNumber)->capture_default_str();

  std::string info_path;
  auto* info_cmd = app.add_subcommand("info", "Print header and occupancy of an .xray file");
  info_cmd->add_option("xray", info_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*encode_cmd) return cmd_encode(enc);
    if (*decode_cmd) return cmd_decode(dec);
    if (*eval_cmd) return cmd_eval(ev);
    if (*sweep_cmd) return cmd_sweep(sw);
    if (*views_cmd) return cmd_views(vw);
    if (*info_cmd) return cmd_info(info_path);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
