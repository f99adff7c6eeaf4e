#pragma once

#include <filesystem>

#include "xray/geometry.hpp"

namespace xray {

enum class MeshFormat { kObj, kPly };
enum class PlyEncoding { kAscii, kBinaryLittleEndian };

/// Picks the format from the file extension (.obj / .ply, case-insensitive).
MeshFormat format_from_path(const std::filesystem::path& path);

/// Loads an OBJ or PLY triangle mesh. Polygons are fan-triangulated, faces
/// that repeat a corner index are dropped, and OBJ materials are ignored.
TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
TriangleMesh load_mesh(const std::filesystem::path& path);

void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
               MeshFormat format, PlyEncoding encoding = PlyEncoding::kAscii);
void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Point cloud PLY with x y z nx ny nz red green blue vertex properties.
void save_point_cloud(const PointCloud& cloud,
                      const std::filesystem::path& path);
/// Reads the vertex element of any PLY file. Missing normals read as zero and
/// missing colors as white.
PointCloud load_point_cloud(const std::filesystem::path& path);

}  // namespace xray
