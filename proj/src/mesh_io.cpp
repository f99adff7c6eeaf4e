#include "xray/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xray/error.hpp"

namespace xray {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view tok, const std::string& where) {
  // from_chars for double is available in libstdc++ >= 11.
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(Errc::kParse, where + ": bad number '" + std::string(tok) + "'");
  }
  return v;
}

long parse_long(std::string_view tok, const std::string& where) {
  long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(Errc::kParse, where + ": bad index '" + std::string(tok) + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write '" + path.string() + "'");
  return out;
}

void append_fan(std::vector<Face>& faces, const std::vector<long>& poly) {
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    const Face f{static_cast<std::int32_t>(poly[0]),
                 static_cast<std::int32_t>(poly[k]),
                 static_cast<std::int32_t>(poly[k + 1])};
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
    faces.push_back(f);
  }
}

void check_indices(const std::vector<long>& poly, std::size_t n,
                   const std::string& where) {
  for (long idx : poly) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
      throw Error(Errc::kIndexOutOfRange,
                  where + ": vertex index " + std::to_string(idx) +
                      " out of range for " + std::to_string(n) + " vertices");
    }
  }
}

// ---------------------------------------------------------------- OBJ

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  TriangleMesh mesh;
  std::vector<Rgb> colors;
  std::vector<Vec3> normals;
  std::vector<std::pair<long, long>> normal_refs;  // (vertex, normal)
  std::size_t colored = 0;
  std::vector<std::vector<long>> polys;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw Error(Errc::kParse, where + ": vertex needs 3 coordinates");
      mesh.vertices.emplace_back(parse_double(tok[1], where), parse_double(tok[2], where),
                                 parse_double(tok[3], where));
      if (tok.size() >= 7) {
        colors.emplace_back(parse_double(tok[4], where), parse_double(tok[5], where),
                            parse_double(tok[6], where));
        ++colored;
      } else {
        colors.emplace_back(1.0, 1.0, 1.0);
      }
    } else if (tok[0] == "vn") {
      if (tok.size() < 4) throw Error(Errc::kParse, where + ": normal needs 3 components");
      normals.emplace_back(parse_double(tok[1], where), parse_double(tok[2], where),
                           parse_double(tok[3], where));
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw Error(Errc::kParse, where + ": face needs >= 3 vertices");
      std::vector<long> poly;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string_view corner = tok[k];
        const auto slash = corner.find('/');
        long v = parse_long(corner.substr(0, slash), where);
        v = v < 0 ? static_cast<long>(mesh.vertices.size()) + v : v - 1;
        poly.push_back(v);
        if (slash != std::string_view::npos) {
          const auto slash2 = corner.find('/', slash + 1);
          if (slash2 != std::string_view::npos && slash2 + 1 < corner.size()) {
            long n = parse_long(corner.substr(slash2 + 1), where);
            n = n < 0 ? static_cast<long>(normals.size()) + n : n - 1;
            normal_refs.emplace_back(v, n);
          }
        }
      }
      // Negative indices are resolved against the vertices read so far, so
      // range checking is deferred until every vertex is known.
      polys.push_back(std::move(poly));
    }
    // Everything else (vt, usemtl, mtllib, o, g, s, l, p) is ignored.
  }

  const std::size_t nv = mesh.vertices.size();
  for (std::size_t p = 0; p < polys.size(); ++p) {
    check_indices(polys[p], nv, path.string() + ": face " + std::to_string(p));
    append_fan(mesh.faces, polys[p]);
  }
  if (mesh.faces.empty()) throw Error(Errc::kEmptyMesh, path.string() + ": no faces");
  if (colored > 0) mesh.vertex_colors = std::move(colors);

  if (!normal_refs.empty()) {
    std::vector<Vec3> per_vertex(nv, Vec3::Zero());
    std::vector<char> seen(nv, 0);
    for (auto [v, n] : normal_refs) {
      if (n < 0 || static_cast<std::size_t>(n) >= normals.size()) {
        throw Error(Errc::kIndexOutOfRange, path.string() + ": normal index out of range");
      }
      const double len = normals[n].norm();
      if (len > 0.0) {
        per_vertex[v] = normals[n] / len;
        seen[v] = 1;
      }
    }
    if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) {
      mesh.vertex_normals = std::move(per_vertex);
    }
  }
  mesh.validate();
  return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z();
    if (mesh.vertex_colors) {
      const Rgb& c = (*mesh.vertex_colors)[i];
      out << ' ' << c.x() << ' ' << c.y() << ' ' << c.z();
    }
    out << '\n';
  }
  if (mesh.vertex_normals) {
    for (const Vec3& n : *mesh.vertex_normals) {
      out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
    }
  }
  for (const Face& f : mesh.faces) {
    out << 'f';
    for (auto idx : f) {
      out << ' ' << idx + 1;
      if (mesh.vertex_normals) out << "//" << idx + 1;
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::kIo, "failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- PLY

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

PlyType parse_ply_type(const std::string& name, const std::string& where) {
  if (name == "char" || name == "int8") return PlyType::kI8;
  if (name == "uchar" || name == "uint8") return PlyType::kU8;
  if (name == "short" || name == "int16") return PlyType::kI16;
  if (name == "ushort" || name == "uint16") return PlyType::kU16;
  if (name == "int" || name == "int32") return PlyType::kI32;
  if (name == "uint" || name == "uint32") return PlyType::kU32;
  if (name == "float" || name == "float32") return PlyType::kF32;
  if (name == "double" || name == "float64") return PlyType::kF64;
  throw Error(Errc::kParse, where + ": unknown PLY type '" + name + "'");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kI8:
    case PlyType::kU8: return 1;
    case PlyType::kI16:
    case PlyType::kU16: return 2;
    case PlyType::kI32:
    case PlyType::kU32:
    case PlyType::kF32: return 4;
    case PlyType::kF64: return 8;
  }
  return 0;
}

bool ply_is_integer(PlyType t) { return t != PlyType::kF32 && t != PlyType::kF64; }

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kF32;
  bool is_list = false;
  PlyType count_type = PlyType::kU8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;

  [[nodiscard]] int find(std::initializer_list<const char*> names) const {
    for (const char* n : names) {
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (props[i].name == n) return static_cast<int>(i);
      }
    }
    return -1;
  }
};

/// Streams values out of the body of a PLY file in either encoding.
class PlyReader {
 public:
  PlyReader(std::istream& in, bool binary, std::string where)
      : in_(in), binary_(binary), where_(std::move(where)) {}

  double read(PlyType t) {
    if (!binary_) {
      std::string tok;
      if (!(in_ >> tok)) throw Error(Errc::kParse, where_ + ": unexpected end of data");
      return parse_double(tok, where_);
    }
    unsigned char buf[8];
    const std::size_t n = ply_size(t);
    if (!in_.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n))) {
      throw Error(Errc::kParse, where_ + ": unexpected end of binary data");
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + n);
    switch (t) {
      case PlyType::kI8: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
      case PlyType::kU8: return buf[0];
      case PlyType::kI16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
      case PlyType::kU16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
      case PlyType::kI32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
      case PlyType::kU32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
      case PlyType::kF32: { float v; std::memcpy(&v, buf, 4); return v; }
      case PlyType::kF64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0.0;
  }

 private:
  std::istream& in_;
  bool binary_;
  std::string where_;
};

struct PlyData {
  std::vector<Vec3> positions;
  std::optional<std::vector<Vec3>> normals;
  std::optional<std::vector<Rgb>> colors;
  std::vector<std::vector<long>> polys;
};

PlyData read_ply(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw Error(Errc::kParse, where + ": missing 'ply' signature");
  }
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  while (true) {
    if (!std::getline(in, line)) throw Error(Errc::kParse, where + ": unterminated header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw Error(Errc::kParse, where + ": unsupported PLY format '" + fmt + "'");
      }
      have_format = true;
    } else if (kw == "element") {
      PlyElement el;
      long long count = -1;
      ls >> el.name >> count;
      if (count < 0) throw Error(Errc::kParse, where + ": bad element count");
      el.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(el));
    } else if (kw == "property") {
      if (elements.empty()) throw Error(Errc::kParse, where + ": property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, it;
        ls >> ct >> it;
        p.is_list = true;
        p.count_type = parse_ply_type(ct, where);
        p.type = parse_ply_type(it, where);
      } else {
        p.type = parse_ply_type(type, where);
      }
      ls >> p.name;
      if (p.name.empty()) throw Error(Errc::kParse, where + ": unnamed property");
      elements.back().props.push_back(std::move(p));
    }
    // comment / obj_info lines are skipped.
  }
  if (!have_format) throw Error(Errc::kParse, where + ": missing format line");

  PlyReader reader(in, binary, where);
  PlyData data;
  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ir = -1, ig = -1, ib = -1, il = -1;
    if (is_vertex) {
      ix = el.find({"x"});
      iy = el.find({"y"});
      iz = el.find({"z"});
      if (ix < 0 || iy < 0 || iz < 0) throw Error(Errc::kParse, where + ": vertex lacks x/y/z");
      inx = el.find({"nx"});
      iny = el.find({"ny"});
      inz = el.find({"nz"});
      ir = el.find({"red", "r", "diffuse_red"});
      ig = el.find({"green", "g", "diffuse_green"});
      ib = el.find({"blue", "b", "diffuse_blue"});
      if (inx >= 0 && iny >= 0 && inz >= 0) data.normals.emplace();
      if (ir >= 0 && ig >= 0 && ib >= 0) data.colors.emplace();
    }
    if (is_face) {
      il = el.find({"vertex_indices", "vertex_index"});
      if (il < 0 || !el.props[il].is_list) {
        throw Error(Errc::kParse, where + ": face lacks a vertex_indices list");
      }
    }
    std::vector<double> scalars(el.props.size());
    for (std::size_t r = 0; r < el.count; ++r) {
      std::vector<long> poly;
      for (std::size_t p = 0; p < el.props.size(); ++p) {
        const PlyProperty& prop = el.props[p];
        if (prop.is_list) {
          const double cnt = reader.read(prop.count_type);
          if (cnt < 0 || cnt != std::floor(cnt)) throw Error(Errc::kParse, where + ": bad list count");
          for (long k = 0; k < static_cast<long>(cnt); ++k) {
            const double v = reader.read(prop.type);
            if (static_cast<int>(p) == il) poly.push_back(static_cast<long>(v));
          }
        } else {
          scalars[p] = reader.read(prop.type);
        }
      }
      if (is_vertex) {
        data.positions.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
        if (data.normals) data.normals->emplace_back(scalars[inx], scalars[iny], scalars[inz]);
        if (data.colors) {
          Rgb c(scalars[ir], scalars[ig], scalars[ib]);
          if (ply_is_integer(el.props[ir].type)) c /= 255.0;
          data.colors->push_back(c);
        }
      } else if (is_face) {
        if (poly.size() < 3) throw Error(Errc::kParse, where + ": face with < 3 vertices");
        data.polys.push_back(std::move(poly));
      }
    }
  }
  return data;
}

TriangleMesh load_ply(const std::filesystem::path& path) {
  PlyData data = read_ply(path);
  TriangleMesh mesh;
  mesh.vertices = std::move(data.positions);
  for (std::size_t p = 0; p < data.polys.size(); ++p) {
    check_indices(data.polys[p], mesh.vertices.size(),
                  path.string() + ": face " + std::to_string(p));
    append_fan(mesh.faces, data.polys[p]);
  }
  if (mesh.faces.empty()) throw Error(Errc::kEmptyMesh, path.string() + ": no faces");
  mesh.vertex_colors = std::move(data.colors);
  if (data.normals) {
    bool all_unit = true;
    for (Vec3& n : *data.normals) {
      const double len = n.norm();
      if (len > 0.0) n /= len; else all_unit = false;
    }
    if (all_unit) mesh.vertex_normals = std::move(data.normals);
  }
  mesh.validate();
  return mesh;
}

std::uint8_t to_u8(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path,
              PlyEncoding encoding) {
  std::ofstream out = open_out(path);
  const bool binary = encoding == PlyEncoding::kBinaryLittleEndian;
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << mesh.vertices.size() << '\n';
  out << "property double x\nproperty double y\nproperty double z\n";
  if (mesh.vertex_normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (mesh.vertex_colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.faces.size() << '\n';
  out << "property list uchar int vertex_indices\nend_header\n";

  out << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    if (binary) {
      for (int k = 0; k < 3; ++k) put_le(out, v[k]);
      if (mesh.vertex_normals) for (int k = 0; k < 3; ++k) put_le(out, (*mesh.vertex_normals)[i][k]);
      if (mesh.vertex_colors) for (int k = 0; k < 3; ++k) put_le(out, to_u8((*mesh.vertex_colors)[i][k]));
    } else {
      out << v.x() << ' ' << v.y() << ' ' << v.z();
      if (mesh.vertex_normals) {
        const Vec3& n = (*mesh.vertex_normals)[i];
        out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
      }
      if (mesh.vertex_colors) {
        const Rgb& c = (*mesh.vertex_colors)[i];
        out << ' ' << int(to_u8(c.x())) << ' ' << int(to_u8(c.y())) << ' ' << int(to_u8(c.z()));
      }
      out << '\n';
    }
  }
  for (const Face& f : mesh.faces) {
    if (binary) {
      put_le<std::uint8_t>(out, 3);
      for (auto idx : f) put_le<std::int32_t>(out, idx);
    } else {
      out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
  }
  if (!out) throw Error(Errc::kIo, "failed writing '" + path.string() + "'");
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".obj") return MeshFormat::kObj;
  if (ext == ".ply") return MeshFormat::kPly;
  throw Error(Errc::kInvalidArgument, "unknown mesh extension '" + ext + "'");
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  return format == MeshFormat::kObj ? load_obj(path) : load_ply(path);
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_path(path));
}

void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
               MeshFormat format, PlyEncoding encoding) {
  if (mesh.empty() || mesh.vertices.empty()) {
    throw Error(Errc::kEmptyMesh, "refusing to save an empty mesh");
  }
  mesh.validate();
  if (format == MeshFormat::kObj) {
    save_obj(mesh, path);
  } else {
    save_ply(mesh, path, encoding);
  }
}

void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
  save_mesh(mesh, path, format_from_path(path));
}

void save_point_cloud(const PointCloud& cloud,
                      const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << '\n';
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  out << std::setprecision(9);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Vec3& n = cloud.normals[i];
    const Rgb& c = cloud.colors[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << n.x() << ' ' << n.y()
        << ' ' << n.z() << ' ' << int(to_u8(c.x())) << ' ' << int(to_u8(c.y()))
        << ' ' << int(to_u8(c.z())) << '\n';
  }
  if (!out) throw Error(Errc::kIo, "failed writing '" + path.string() + "'");
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  PlyData data = read_ply(path);
  PointCloud cloud;
  const std::size_t n = data.positions.size();
  cloud.positions = std::move(data.positions);
  cloud.normals = data.normals ? std::move(*data.normals) : std::vector<Vec3>(n, Vec3::Zero());
  cloud.colors = data.colors ? std::move(*data.colors) : std::vector<Rgb>(n, Rgb::Ones());
  return cloud;
}

}  // namespace xray
