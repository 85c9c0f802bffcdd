#include "semreg/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

namespace semreg {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view next_token(std::string_view& s) {
  s = trim(s);
  const auto end = s.find_first_of(" \t\r");
  std::string_view tok = s.substr(0, end);
  s.remove_prefix(end == std::string_view::npos ? s.size() : end);
  return tok;
}

double parse_double(std::string_view tok, const std::string& where) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(where + ": bad number '" + std::string(tok) + "'");
  }
  return value;
}

long parse_long(std::string_view tok, const std::string& where) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(where + ": bad index '" + std::string(tok) + "'");
  }
  return value;
}

int resolve_index(long idx, std::size_t count, const std::string& where) {
  long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (idx == 0 || resolved < 0 || resolved >= static_cast<long>(count)) {
    throw Error(where + ": index " + std::to_string(idx) + " out of range");
  }
  return static_cast<int>(resolved);
}

} // namespace

std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0 as well
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

ObjData read_obj(const fs::path& path) {
  const std::string text = slurp(path);
  ObjData out;
  std::vector<Face> uv_faces;
  bool all_faces_have_uv = true;
  std::size_t line_no = 0;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::string_view tag = next_token(line);
    if (tag == "v") {
      std::vector<double> vals;
      while (!trim(line).empty()) vals.push_back(parse_double(next_token(line), where));
      if (vals.size() != 3 && vals.size() != 6) throw Error(where + ": expected 3 or 6 vertex values");
      out.mesh.positions.emplace_back(vals[0], vals[1], vals[2]);
      if (vals.size() == 6) out.mesh.colors.emplace_back(vals[3], vals[4], vals[5]);
    } else if (tag == "vt") {
      const double u = parse_double(next_token(line), where);
      const double v = parse_double(next_token(line), where);
      out.atlas.uvs.emplace_back(u, v);
    } else if (tag == "f") {
      std::vector<int> vi;
      std::vector<int> ti;
      while (!trim(line).empty()) {
        std::string_view corner = next_token(line);
        const auto s1 = corner.find('/');
        vi.push_back(resolve_index(parse_long(corner.substr(0, s1), where), out.mesh.positions.size(), where));
        if (s1 != std::string_view::npos) {
          std::string_view after = corner.substr(s1 + 1);
          const auto s2 = after.find('/');
          std::string_view vt = after.substr(0, s2);
          if (!vt.empty()) ti.push_back(resolve_index(parse_long(vt, where), out.atlas.uvs.size(), where));
        }
      }
      if (vi.size() < 3) throw Error(where + ": face with fewer than 3 corners");
      const bool has_uv = ti.size() == vi.size();
      all_faces_have_uv = all_faces_have_uv && has_uv;
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        out.mesh.faces.push_back({vi[0], vi[k], vi[k + 1]});
        if (has_uv) uv_faces.push_back({ti[0], ti[k], ti[k + 1]});
      }
    }
  }
  if (!out.mesh.colors.empty() && out.mesh.colors.size() != out.mesh.positions.size()) {
    throw Error(path.string() + ": only some vertices carry colors");
  }
  out.mesh.validate();
  if (all_faces_have_uv && !out.mesh.faces.empty()) {
    out.atlas.faces = std::move(uv_faces);
    out.atlas.validate(out.mesh.face_count());
  } else {
    out.atlas = UvAtlas{};
  }
  return out;
}

void write_obj(const fs::path& path, const Mesh& mesh, const UvAtlas* atlas) {
  const bool with_uv = atlas != nullptr && !atlas->empty();
  if (with_uv) atlas->validate(mesh.face_count());
  std::string out;
  out.reserve(mesh.positions.size() * 48 + mesh.faces.size() * 32);
  for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
    const Vec3& p = mesh.positions[i];
    out += "v " + format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z());
    if (mesh.has_colors()) {
      const Vec3& c = mesh.colors[i];
      out += " " + format_double(c.x()) + " " + format_double(c.y()) + " " + format_double(c.z());
    }
    out += '\n';
  }
  if (with_uv) {
    for (const Vec2& t : atlas->uvs) out += "vt " + format_double(t.x()) + " " + format_double(t.y()) + '\n';
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    out += 'f';
    for (int k = 0; k < 3; ++k) {
      out += ' ';
      out += std::to_string(mesh.faces[f][k] + 1);
      if (with_uv) {
        out += '/';
        out += std::to_string(atlas->faces[f][k] + 1);
      }
    }
    out += '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

namespace {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType parse_ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::i8;
  if (name == "uchar" || name == "uint8") return PlyType::u8;
  if (name == "short" || name == "int16") return PlyType::i16;
  if (name == "ushort" || name == "uint16") return PlyType::u16;
  if (name == "int" || name == "int32") return PlyType::i32;
  if (name == "uint" || name == "uint32") return PlyType::u32;
  if (name == "float" || name == "float32") return PlyType::f32;
  if (name == "double" || name == "float64") return PlyType::f64;
  throw Error("unsupported PLY type " + name);
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f32;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  return v;
}

class PlyReader {
 public:
  PlyReader(const std::string& data, std::size_t offset, bool binary) : data_(data), pos_(offset), binary_(binary) {}

  double read(PlyType t) {
    if (!binary_) return parse_double(token(), "ply");
    if (pos_ + ply_size(t) > data_.size()) throw Error("PLY body truncated");
    const char* p = data_.data() + pos_;
    pos_ += ply_size(t);
    switch (t) {
      case PlyType::i8: return load_le<std::int8_t>(p);
      case PlyType::u8: return load_le<std::uint8_t>(p);
      case PlyType::i16: return load_le<std::int16_t>(p);
      case PlyType::u16: return load_le<std::uint16_t>(p);
      case PlyType::i32: return load_le<std::int32_t>(p);
      case PlyType::u32: return load_le<std::uint32_t>(p);
      case PlyType::f32: return load_le<float>(p);
      case PlyType::f64: return load_le<double>(p);
    }
    return 0.0;
  }

 private:
  std::string_view token() {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (start == pos_) throw Error("PLY body truncated");
    return std::string_view(data_).substr(start, pos_ - start);
  }

  const std::string& data_;
  std::size_t pos_;
  bool binary_;
};

} // namespace

Mesh read_ply(const fs::path& path) {
  const std::string data = slurp(path);
  const auto header_end = data.find("end_header");
  if (data.rfind("ply", 0) != 0 || header_end == std::string::npos) {
    throw Error(path.string() + ": not a PLY file");
  }
  std::size_t body = data.find('\n', header_end);
  if (body == std::string::npos) throw Error(path.string() + ": header not terminated");
  ++body;

  std::istringstream header(data.substr(0, header_end));
  std::string line;
  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        throw Error(path.string() + ": unsupported PLY format " + fmt);
      }
    } else if (word == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw Error(path.string() + ": property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(count_type);
        p.type = parse_ply_type(item_type);
      } else {
        p.type = parse_ply_type(type);
        ls >> p.name;
      }
      elements.back().props.push_back(p);
    }
  }

  Mesh mesh;
  PlyReader reader(data, body, binary);
  for (const PlyElement& e : elements) {
    if (e.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (std::size_t k = 0; k < e.props.size(); ++k) {
        const std::string& n = e.props[k].name;
        const int idx = static_cast<int>(k);
        if (n == "x") ix = idx;
        if (n == "y") iy = idx;
        if (n == "z") iz = idx;
        if (n == "red" || n == "r") ir = idx;
        if (n == "green" || n == "g") ig = idx;
        if (n == "blue" || n == "b") ib = idx;
      }
      if (ix < 0 || iy < 0 || iz < 0) throw Error(path.string() + ": vertex element lacks x/y/z");
      const bool colors = ir >= 0 && ig >= 0 && ib >= 0;
      mesh.positions.reserve(e.count);
      std::vector<double> vals(e.props.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          const PlyProperty& p = e.props[k];
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(reader.read(p.count_type));
            for (std::size_t j = 0; j < n; ++j) reader.read(p.type);
            vals[k] = 0.0;
          } else {
            vals[k] = reader.read(p.type);
          }
        }
        mesh.positions.emplace_back(vals[ix], vals[iy], vals[iz]);
        if (colors) {
          // Integer channels are 0..255; float channels are already in [0,1].
          const bool integral = e.props[ir].type != PlyType::f32 && e.props[ir].type != PlyType::f64;
          const double s = integral ? 1.0 / 255.0 : 1.0;
          mesh.colors.emplace_back(vals[ir] * s, vals[ig] * s, vals[ib] * s);
        }
      }
    } else if (e.name == "face") {
      mesh.faces.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const PlyProperty& p : e.props) {
          if (!p.is_list) {
            reader.read(p.type);
            continue;
          }
          const auto n = static_cast<std::size_t>(reader.read(p.count_type));
          std::vector<int> idx(n);
          for (std::size_t j = 0; j < n; ++j) idx[j] = static_cast<int>(reader.read(p.type));
          if (p.name != "vertex_indices" && p.name != "vertex_index") continue;
          if (n < 3) throw Error(path.string() + ": face with fewer than 3 corners");
          for (std::size_t k = 1; k + 1 < n; ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
        }
      }
    } else {
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const PlyProperty& p : e.props) {
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(reader.read(p.count_type));
            for (std::size_t j = 0; j < n; ++j) reader.read(p.type);
          } else {
            reader.read(p.type);
          }
        }
      }
    }
  }
  mesh.validate();
  return mesh;
}

void write_ply(const fs::path& path, const Mesh& mesh) {
  mesh.validate();
  std::string out = "ply\nformat binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(mesh.positions.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (mesh.has_colors()) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "element face " + std::to_string(mesh.faces.size()) + "\n";
  out += "property list uchar int vertex_indices\nend_header\n";
  auto put = [&out](const auto& v) {
    char buf[sizeof(v)];
    std::memcpy(buf, &v, sizeof(v));
    out.append(buf, sizeof(v));
  };
  for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
    for (int k = 0; k < 3; ++k) put(static_cast<float>(mesh.positions[i][k]));
    if (mesh.has_colors()) {
      for (int k = 0; k < 3; ++k) {
        const double c = std::clamp(mesh.colors[i][k], 0.0, 1.0);
        put(static_cast<std::uint8_t>(std::lround(c * 255.0)));
      }
    }
  }
  for (const Face& f : mesh.faces) {
    put(static_cast<std::uint8_t>(3));
    for (int k = 0; k < 3; ++k) put(static_cast<std::int32_t>(f[k]));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Mesh read_mesh(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return read_obj(path).mesh;
  if (ext == ".ply") return read_ply(path);
  throw Error("unsupported mesh extension '" + ext + "' for " + path.string());
}

} // namespace semreg
