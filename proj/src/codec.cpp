#include "xray/codec.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "xray/error.hpp"
#include "xray/parallel.hpp"
#include "xray/raycast.hpp"

namespace xray {
namespace {

constexpr double kHitTolerance = 1e-6;

XRayHeader make_header(int layers, int height, int width, const Camera& camera) {
  if (layers < 1 || height < 1 || width < 1) {
    throw Error(Errc::kInvalidArgument, "X-Ray dimensions must be >= 1");
  }
  XRayHeader h;
  h.layers = static_cast<std::uint32_t>(layers);
  h.height = static_cast<std::uint32_t>(height);
  h.width = static_cast<std::uint32_t>(width);
  h.fov_x = static_cast<float>(camera.fov_x);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) h.c2w[r * 4 + c] = static_cast<float>(camera.c2w(r, c));
  }
  return h;
}

std::size_t payload_size(const XRayHeader& h) {
  return static_cast<std::size_t>(h.layers) * kChannelCount * h.height * h.width;
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

XRayTensor::XRayTensor(int layers, int height, int width, const Camera& camera)
    : header_(make_header(layers, height, width, camera)),
      data_(payload_size(header_), 0.0f) {}

XRayTensor::XRayTensor(XRayHeader header, std::vector<float> data)
    : header_(header), data_(std::move(data)) {
  if (data_.size() != payload_size(header_)) {
    throw Error(Errc::kShapeMismatch, "X-Ray payload does not match its header dimensions");
  }
}

Camera XRayTensor::camera() const {
  Camera cam;
  cam.width = width();
  cam.height = height();
  cam.fov_x = header_.fov_x;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) cam.c2w(r, c) = header_.c2w[r * 4 + c];
  }
  Eigen::JacobiSVD<Mat3> svd(cam.rotation(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  cam.c2w.block<3, 3>(0, 0) = svd.matrixU() * svd.matrixV().transpose();
  cam.c2w.row(3) << 0, 0, 0, 1;
  return cam;
}

int XRayTensor::hit_count(int row, int col) const {
  int n = 0;
  for (int l = 0; l < layers(); ++l) {
    if (at(l, kHit, row, col) > 0.5f) ++n;
  }
  return n;
}

std::size_t XRayTensor::total_hits() const {
  std::size_t n = 0;
  const std::size_t plane = static_cast<std::size_t>(height()) * width();
  for (int l = 0; l < layers(); ++l) {
    const float* hit = data_.data() + index(l, kHit, 0, 0);
    n += static_cast<std::size_t>(std::count_if(hit, hit + plane, [](float h) { return h > 0.5f; }));
  }
  return n;
}

void XRayTensor::validate() const {
  if (data_.size() != payload_size(header_)) {
    throw Error(Errc::kShapeMismatch, "payload size mismatch");
  }
  for (int row = 0; row < height(); ++row) {
    for (int col = 0; col < width(); ++col) {
      bool open = true;
      float last_depth = 0.0f;
      for (int l = 0; l < layers(); ++l) {
        const float h = at(l, kHit, row, col);
        if (h != 0.0f && h != 1.0f) throw Error(Errc::kCorruptHit, "hit value not in {0, 1}");
        if (h == 1.0f) {
          if (!open) throw Error(Errc::kInvalidArgument, "hit after an empty layer");
          const float d = at(l, kDepth, row, col);
          if (!(d > last_depth)) throw Error(Errc::kInvalidArgument, "depths not strictly increasing");
          last_depth = d;
          const Vec3 n(at(l, kNormalX, row, col), at(l, kNormalY, row, col),
                       at(l, kNormalZ, row, col));
          if (std::abs(n.norm() - 1.0) > 1e-3) throw Error(Errc::kInvalidArgument, "normal not unit");
          for (int c = kColorR; c <= kColorB; ++c) {
            const float v = at(l, c, row, col);
            if (!(v >= 0.0f && v <= 1.0f)) throw Error(Errc::kInvalidArgument, "color out of [0, 1]");
          }
        } else {
          open = false;
          for (int c = 0; c < kChannelCount; ++c) {
            if (at(l, c, row, col) != 0.0f) {
              throw Error(Errc::kInvalidArgument, "non-zero payload in an empty layer");
            }
          }
        }
      }
    }
  }
}

XRayTensor encode(const TriangleMesh& mesh, const Camera& camera, int layers,
                  int height, int width) {
  Camera cam = camera;
  cam.width = width;
  cam.height = height;
  XRayTensor x(layers, height, width, cam);
  if (mesh.faces.empty()) return x;

  const RayGrid rays = generate_rays(cam);
  const BvhAccel accel(mesh);
  // Each row's pixels are written by exactly one block.
  parallel_for(static_cast<std::size_t>(height), 4, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      const int row = static_cast<int>(r);
      for (int col = 0; col < width; ++col) {
        const auto hits = cast_ray_all_hits(accel, mesh, rays.at(row, col));
        const int n = std::min<int>(layers, static_cast<int>(hits.size()));
        for (int l = 0; l < n; ++l) {
          const SurfaceSample s = surface_attributes(mesh, hits[l]);
          x.at(l, kHit, row, col) = 1.0f;
          x.at(l, kDepth, row, col) = static_cast<float>(s.depth);
          for (int k = 0; k < 3; ++k) {
            x.at(l, kNormalX + k, row, col) = static_cast<float>(s.normal[k]);
            x.at(l, kColorR + k, row, col) = static_cast<float>(s.color[k]);
          }
        }
      }
    }
  });
  return x;
}

XRayTensor pad_or_truncate(const XRayTensor& x, int target_layers) {
  if (target_layers < 1) throw Error(Errc::kInvalidArgument, "target layer count must be >= 1");
  XRayHeader h = x.header();
  h.layers = static_cast<std::uint32_t>(target_layers);
  std::vector<float> data(payload_size(h), 0.0f);
  const std::size_t layer_size = static_cast<std::size_t>(kChannelCount) * x.height() * x.width();
  const std::size_t keep = std::min(target_layers, x.layers()) * layer_size;
  std::copy_n(x.data().begin(), keep, data.begin());
  return XRayTensor(h, std::move(data));
}

PointCloud decode_to_pointcloud(const XRayTensor& x, DecodeFrame frame) {
  Camera cam = x.camera();
  if (frame == DecodeFrame::kCamera) cam.c2w = Mat4::Identity();
  const RayGrid rays = generate_rays(cam);

  PointCloud pc;
  for (int l = 0; l < x.layers(); ++l) {
    for (int row = 0; row < x.height(); ++row) {
      for (int col = 0; col < x.width(); ++col) {
        const float h = x.at(l, kHit, row, col);
        if (std::abs(h) <= kHitTolerance) continue;
        if (std::abs(h - 1.0f) > kHitTolerance) {
          throw Error(Errc::kCorruptHit, "hit channel value " + std::to_string(h) +
                                             " is neither 0 nor 1");
        }
        const double depth = x.at(l, kDepth, row, col);
        pc.positions.push_back(rays.origin() + depth * rays.direction(row, col));
        pc.normals.emplace_back(x.at(l, kNormalX, row, col), x.at(l, kNormalY, row, col),
                                x.at(l, kNormalZ, row, col));
        pc.colors.emplace_back(x.at(l, kColorR, row, col), x.at(l, kColorG, row, col),
                               x.at(l, kColorB, row, col));
      }
    }
  }
  return pc;
}

std::vector<std::uint8_t> serialize_xray(const XRayTensor& x) {
  const XRayHeader& h = x.header();
  std::vector<std::uint8_t> out;
  out.reserve(XRayHeader::kBytes + x.data().size() * 4);
  out.insert(out.end(), XRayHeader::kMagic.begin(), XRayHeader::kMagic.end());
  put_le(out, h.version);
  put_le(out, h.layers);
  put_le(out, h.height);
  put_le(out, h.width);
  put_le(out, h.fov_x);
  for (float v : h.c2w) put_le(out, v);
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(x.data().data());
    out.insert(out.end(), p, p + x.data().size() * sizeof(float));
  } else {
    for (float v : x.data()) put_le(out, v);
  }
  return out;
}

XRayTensor deserialize_xray(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < XRayHeader::kBytes) {
    throw Error(Errc::kTruncatedPayload, "file shorter than the X-Ray header");
  }
  if (!std::equal(XRayHeader::kMagic.begin(), XRayHeader::kMagic.end(), bytes.begin())) {
    throw Error(Errc::kBadMagic, "not an X-Ray file (bad magic)");
  }
  const std::uint8_t* p = bytes.data() + 4;
  XRayHeader h;
  h.version = get_le<std::uint32_t>(p);
  if (h.version != XRayHeader::kVersion) {
    throw Error(Errc::kVersionMismatch,
                "unsupported X-Ray version " + std::to_string(h.version));
  }
  h.layers = get_le<std::uint32_t>(p + 4);
  h.height = get_le<std::uint32_t>(p + 8);
  h.width = get_le<std::uint32_t>(p + 12);
  h.fov_x = get_le<float>(p + 16);
  for (int k = 0; k < 16; ++k) h.c2w[k] = get_le<float>(p + 20 + 4 * k);
  if (h.layers == 0 || h.height == 0 || h.width == 0) {
    throw Error(Errc::kParse, "X-Ray header has a zero dimension");
  }

  const std::size_t count = payload_size(h);
  const std::size_t available = bytes.size() - XRayHeader::kBytes;
  if (available < count * 4) {
    throw Error(Errc::kTruncatedPayload,
                "payload has " + std::to_string(available) + " bytes, expected " +
                    std::to_string(count * 4));
  }
  if (available > count * 4) {
    throw Error(Errc::kParse, "trailing bytes after the X-Ray payload");
  }
  std::vector<float> data(count);
  const std::uint8_t* payload = bytes.data() + XRayHeader::kBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data.data(), payload, count * sizeof(float));
  } else {
    for (std::size_t i = 0; i < count; ++i) data[i] = get_le<float>(payload + 4 * i);
  }
  return XRayTensor(h, std::move(data));
}

void write_xray(const XRayTensor& x, const std::filesystem::path& path) {
  const auto bytes = serialize_xray(x);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIo, "failed writing '" + path.string() + "'");
}

XRayTensor read_xray(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_xray(bytes);
}

double storage_ratio(int layers, int grid_resolution) {
  if (layers < 1 || grid_resolution < 1) {
    throw Error(Errc::kInvalidArgument, "storage_ratio arguments must be >= 1");
  }
  return 1.0 - static_cast<double>(layers) / grid_resolution;
}

std::string format_percent(double fraction) {
  const double hundredths = std::round(fraction * 10000.0);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", hundredths / 100.0);
  return buf;
}

}  // namespace xray
