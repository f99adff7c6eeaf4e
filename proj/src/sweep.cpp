#include "xray/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "xray/codec.hpp"
#include "xray/error.hpp"
#include "xray/metrics.hpp"
#include "xray/parallel.hpp"
#include "xray/poisson.hpp"

namespace xray {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::vector<SweepRow> run_sweep(const std::vector<fixtures::NamedMesh>& meshes,
                                const SweepOptions& options) {
  if (meshes.empty()) throw Error(Errc::kInvalidArgument, "sweep needs at least one mesh");
  if (options.layers.empty() || options.resolutions.empty() || options.views < 1) {
    throw Error(Errc::kInvalidArgument, "sweep needs layers, resolutions and views");
  }
  for (int l : options.layers) {
    if (l < 1) throw Error(Errc::kInvalidArgument, "layer counts must be positive");
  }
  for (int r : options.resolutions) {
    if (r < 1) throw Error(Errc::kInvalidArgument, "resolutions must be positive");
  }
  const int max_layers = *std::max_element(options.layers.begin(), options.layers.end());
  const std::vector<ViewSample> views = sample_views(options.seed, options.views);

  std::vector<NormalizedMesh> normalized;
  normalized.reserve(meshes.size());
  for (const auto& m : meshes) normalized.push_back(normalize_mesh(m.mesh));

  const std::size_t nl = options.layers.size();
  const std::size_t nr = options.resolutions.size();
  const std::size_t nv = views.size();
  std::vector<SweepRow> rows(meshes.size() * nv * nl * nr);
  auto row_at = [&](std::size_t m, std::size_t v, std::size_t l, std::size_t r) -> SweepRow& {
    return rows[((m * nv + v) * nl + l) * nr + r];
  };

  // One job per (mesh, view, resolution): the encode is shared by every L.
  parallel_jobs(meshes.size() * nv * nr, [&](std::size_t job) {
    const std::size_t r = job % nr;
    const std::size_t v = (job / nr) % nv;
    const std::size_t m = job / (nr * nv);
    const int res = options.resolutions[r];
    for (std::size_t l = 0; l < nl; ++l) {
      SweepRow& row = row_at(m, v, l, r);
      row.mesh = meshes[m].name;
      row.view = static_cast<int>(v);
      row.layers = options.layers[l];
      row.resolution = res;
    }

    XRayTensor full;
    double encode_ms = 0.0;
    try {
      const auto t0 = Clock::now();
      full = encode(normalized[m].mesh, views[v].camera, max_layers, res, res);
      encode_ms = ms_since(t0);
    } catch (const std::exception& e) {
      for (std::size_t l = 0; l < nl; ++l) row_at(m, v, l, r).error = e.what();
      return;
    }

    for (std::size_t l = 0; l < nl; ++l) {
      SweepRow& row = row_at(m, v, l, r);
      row.encode_ms = encode_ms;
      try {
        auto t0 = Clock::now();
        const XRayTensor x = pad_or_truncate(full, row.layers);
        const PointCloud pc = decode_to_pointcloud(x, DecodeFrame::kWorld);
        row.decode_ms = ms_since(t0);

        t0 = Clock::now();
        PoissonOptions po;
        po.resolution = options.poisson_resolution;
        po.screening = options.screening;
        po.trim = options.trim;
        const Reconstruction rec = reconstruct(pc, po);
        row.recon_ms = ms_since(t0);

        const MetricReport rep = evaluate_pair(rec.mesh, normalized[m].mesh, options.samples,
                                               options.threshold, options.seed);
        row.chamfer = rep.chamfer;
        row.f_score = rep.f_score;
      } catch (const std::exception& e) {
        row.chamfer = std::nan("");
        row.f_score = std::nan("");
        row.error = e.what();
      }
    }
  });

  if (!options.timing) {
    for (SweepRow& row : rows) row.encode_ms = row.decode_ms = row.recon_ms = 0.0;
  }
  return rows;
}

std::vector<SweepRow> aggregate(const std::vector<SweepRow>& rows) {
  struct Acc {
    double chamfer = 0.0, f_score = 0.0, encode = 0.0, decode = 0.0, recon = 0.0;
    int n = 0, failed = 0;
  };
  std::map<std::pair<int, int>, Acc> cells;
  for (const SweepRow& row : rows) {
    if (row.view < 0) continue;
    Acc& a = cells[{row.layers, row.resolution}];
    if (!row.error.empty()) {
      ++a.failed;
      continue;
    }
    a.chamfer += row.chamfer;
    a.f_score += row.f_score;
    a.encode += row.encode_ms;
    a.decode += row.decode_ms;
    a.recon += row.recon_ms;
    ++a.n;
  }
  std::vector<SweepRow> out;
  for (const auto& [key, a] : cells) {
    SweepRow row;
    row.mesh = "mean";
    row.view = -1;
    row.layers = key.first;
    row.resolution = key.second;
    if (a.n > 0) {
      row.chamfer = a.chamfer / a.n;
      row.f_score = a.f_score / a.n;
      row.encode_ms = a.encode / a.n;
      row.decode_ms = a.decode / a.n;
      row.recon_ms = a.recon / a.n;
    } else {
      row.chamfer = row.f_score = std::nan("");
    }
    if (a.failed > 0) row.error = std::to_string(a.failed) + " failed cells excluded";
    out.push_back(row);
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  for (const SweepRow& r : rows) {
    out << csv_field(r.mesh) << ',' << r.view << ',' << r.layers << ',' << r.resolution << ','
        << num(r.chamfer) << ',' << num(r.f_score) << ',' << num(r.encode_ms) << ','
        << num(r.decode_ms) << ',' << num(r.recon_ms) << ',' << csv_field(r.error) << '\n';
  }
}

std::string sweep_svg(const std::vector<SweepRow>& means) {
  std::set<int> layers, res;
  double cmax = 0.0;
  std::map<std::pair<int, int>, double> cd;
  for (const SweepRow& r : means) {
    if (!std::isfinite(r.chamfer)) continue;
    layers.insert(r.layers);
    res.insert(r.resolution);
    cd[{r.layers, r.resolution}] = r.chamfer;
    cmax = std::max(cmax, r.chamfer);
  }
  if (cmax <= 0.0) cmax = 1.0;

  constexpr double kW = 420, kH = 300, kPad = 50;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";

  auto panel = [&](double x0, const std::vector<int>& xs, const std::set<int>& series,
                   bool x_is_layers, const char* xlabel, const char* series_label) {
    const double pw = kW - 2 * kPad, ph = kH - 2 * kPad;
    svg << "<g transform=\"translate(" << x0 << ",0)\">\n";
    svg << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad
        << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\""
        << kH - kPad << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">"
        << xlabel << "</text>\n";
    svg << "<text x=\"" << kPad << "\" y=\"" << kPad - 10 << "\">chamfer (max " << num(cmax)
        << ")</text>\n";
    auto px = [&](std::size_t i) {
      return kPad + (xs.size() > 1 ? pw * static_cast<double>(i) / (xs.size() - 1) : pw / 2);
    };
    for (std::size_t i = 0; i < xs.size(); ++i) {
      svg << "<text x=\"" << px(i) << "\" y=\"" << kH - kPad + 14
          << "\" text-anchor=\"middle\">" << xs[i] << "</text>\n";
    }
    int s_index = 0;
    for (int s : series) {
      const char* color = kColors[s_index % 8];
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto key = x_is_layers ? std::make_pair(xs[i], s) : std::make_pair(s, xs[i]);
        auto it = cd.find(key);
        if (it == cd.end()) continue;
        svg << px(i) << ',' << kH - kPad - ph * it->second / cmax << ' ';
      }
      svg << "\"/>\n";
      svg << "<text x=\"" << kW - kPad + 4 << "\" y=\"" << kPad + 12 * s_index << "\" fill=\""
          << color << "\">" << series_label << s << "</text>\n";
      ++s_index;
    }
    svg << "</g>\n";
  };
  panel(0, std::vector<int>(layers.begin(), layers.end()), res, true, "layers", "res ");
  panel(kW, std::vector<int>(res.begin(), res.end()), layers, false, "resolution", "L ");
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace xray
