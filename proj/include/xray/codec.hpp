#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xray/geometry.hpp"

namespace xray {

/// Channel layout of one X-Ray layer.
enum Channel : int {
  kHit = 0,
  kDepth = 1,
  kNormalX = 2,
  kNormalY = 3,
  kNormalZ = 4,
  kColorR = 5,
  kColorG = 6,
  kColorB = 7,
  kChannelCount = 8,
};

struct XRayHeader {
  static constexpr std::array<char, 4> kMagic{'X', 'R', 'A', 'Y'};
  static constexpr std::uint32_t kVersion = 1;
  /// Size of the serialized header in bytes.
  static constexpr std::size_t kBytes = 4 + 4 + 3 * 4 + 4 + 16 * 4;

  std::uint32_t version = kVersion;
  std::uint32_t layers = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  float fov_x = static_cast<float>(kDefaultFovX);
  std::array<float, 16> c2w{};  // row-major

  friend bool operator==(const XRayHeader&, const XRayHeader&) = default;
};

/// Multi-layer surface tensor of shape [layers][8][height][width]. For each
/// pixel ray, layer k holds the k-th surface crossing (hit, depth, normal,
/// color); layers past the last crossing are all zero.
class XRayTensor {
 public:
  XRayTensor() = default;
  XRayTensor(int layers, int height, int width, const Camera& camera);
  XRayTensor(XRayHeader header, std::vector<float> data);

  [[nodiscard]] int layers() const noexcept { return static_cast<int>(header_.layers); }
  [[nodiscard]] int height() const noexcept { return static_cast<int>(header_.height); }
  [[nodiscard]] int width() const noexcept { return static_cast<int>(header_.width); }
  [[nodiscard]] const XRayHeader& header() const noexcept { return header_; }
  [[nodiscard]] const std::vector<float>& data() const noexcept { return data_; }
  [[nodiscard]] std::vector<float>& data() noexcept { return data_; }

  [[nodiscard]] std::size_t index(int layer, int channel, int row, int col) const {
    return ((static_cast<std::size_t>(layer) * kChannelCount + channel) * height() + row) *
               width() +
           col;
  }
  [[nodiscard]] float at(int layer, int channel, int row, int col) const {
    return data_[index(layer, channel, row, col)];
  }
  float& at(int layer, int channel, int row, int col) {
    return data_[index(layer, channel, row, col)];
  }

  /// Camera stored in the header (rotation re-orthonormalized after the
  /// float round trip).
  [[nodiscard]] Camera camera() const;

  /// Number of layers with hit = 1 at a pixel.
  [[nodiscard]] int hit_count(int row, int col) const;
  [[nodiscard]] std::size_t total_hits() const;

  /// Throws Error(kCorruptHit / kInvalidArgument) when any representation
  /// invariant fails: binary hits, prefix-dense hits per pixel, zero payload
  /// for empty slots, positive strictly increasing depths, unit normals,
  /// colors in [0, 1].
  void validate() const;

  friend bool operator==(const XRayTensor&, const XRayTensor&) = default;

 private:
  XRayHeader header_;
  std::vector<float> data_;
};

/// Ray-casts every pixel of `camera` (resolution overridden by height x
/// width) and records the nearest `layers` surface crossings per pixel.
XRayTensor encode(const TriangleMesh& mesh, const Camera& camera, int layers,
                  int height, int width);

/// Keeps the nearest `target_layers` layers, zero-padding when growing.
XRayTensor pad_or_truncate(const XRayTensor& x, int target_layers);

enum class DecodeFrame {
  kCamera,  // identity camera pose (reference decoder behavior)
  kWorld,   // the stored camera-to-world pose
};

/// One point per (pixel, layer) with hit = 1 at r_o + depth * r_d, carrying
/// the stored normal and color verbatim. Normals are recorded in world
/// coordinates, so only kWorld yields a frame-consistent oriented cloud for
/// surface reconstruction.
PointCloud decode_to_pointcloud(const XRayTensor& x,
                                DecodeFrame frame = DecodeFrame::kCamera);

void write_xray(const XRayTensor& x, const std::filesystem::path& path);
XRayTensor read_xray(const std::filesystem::path& path);

/// Serialization to and from an in-memory byte buffer (same layout as files).
std::vector<std::uint8_t> serialize_xray(const XRayTensor& x);
XRayTensor deserialize_xray(const std::vector<std::uint8_t>& bytes);

/// Fraction of elements saved versus a dense grid_resolution^3 volume at the
/// same grid_resolution^2 frame footprint: 1 - layers / grid_resolution.
double storage_ratio(int layers, int grid_resolution);

/// Percentage with two decimals, e.g. 0.96875 -> "96.88%".
std::string format_percent(double fraction);

}  // namespace xray
