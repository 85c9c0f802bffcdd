#include "semreg/template_io.hpp"

#include "semreg/mesh_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace semreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
std::vector<T> read_binary(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open sidecar " + path.string());
  std::vector<T> out(expected);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(expected * sizeof(T)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(T))) {
    throw Error("sidecar " + path.string() + " is shorter than " + std::to_string(expected * sizeof(T)) + " bytes");
  }
  in.peek();
  if (!in.eof()) throw Error("sidecar " + path.string() + " has trailing bytes");
  return out;
}

template <typename T>
void write_binary(const fs::path& path, const std::vector<T>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(T)));
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) throw Error(where.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(where.string() + ": field '" + key + "': " + e.what());
  }
}

Mat3 matrix_from(const std::vector<double>& v, std::size_t offset) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[offset + 3 * r + c];
  return m;
}

} // namespace

SemanticTemplate load_template(const fs::path& manifest) {
  const json doc = read_json(manifest);
  const fs::path dir = manifest.parent_path();
  if (doc.value("format", "") != "semreg-template") throw Error(manifest.string() + ": not a semreg-template manifest");

  SemanticTemplate t;
  ObjData obj = read_obj(dir / field<std::string>(doc, "mesh", manifest));
  if (obj.atlas.empty()) throw Error(manifest.string() + ": template OBJ has no per-corner UVs");
  t.mesh = std::move(obj.mesh);
  t.atlas = std::move(obj.atlas);
  const std::size_t nv = t.mesh.positions.size();

  const json& w = doc.at("weights");
  t.weights.joints = field<int>(w, "joints", manifest);
  const std::size_t nj = static_cast<std::size_t>(t.weights.joints);
  const auto wf = read_binary<float>(dir / field<std::string>(w, "file", manifest), nv * nj);
  t.weights.values.assign(wf.begin(), wf.end());
  // float32 storage rounds each row; restore an exact partition of unity.
  for (std::size_t v = 0; v < nv; ++v) {
    double sum = 0.0;
    for (std::size_t j = 0; j < nj; ++j) sum += t.weights.values[v * nj + j];
    if (sum > 0.0)
      for (std::size_t j = 0; j < nj; ++j) t.weights.values[v * nj + j] /= sum;
  }

  const auto jf = read_binary<double>(dir / field<std::string>(doc, "joints", manifest), nj * 3);
  for (std::size_t j = 0; j < nj; ++j) t.joints.emplace_back(jf[3 * j], jf[3 * j + 1], jf[3 * j + 2]);
  const auto pf = read_binary<std::int32_t>(dir / field<std::string>(doc, "parents", manifest), nj);
  t.parents.assign(pf.begin(), pf.end());
  for (std::size_t j = 0; j < nj; ++j) {
    if (t.parents[j] == static_cast<int>(j)) t.parents[j] = -1;  // root stored as self
  }

  const json& l = doc.at("labels");
  t.label_names = field<std::vector<std::string>>(l, "names", manifest);
  t.labels = read_binary<std::uint8_t>(dir / field<std::string>(l, "file", manifest), nv);

  const auto cf = read_binary<double>(dir / field<std::string>(doc, "canonical_pose", manifest), nj * 9 + 3);
  t.canonical_pose.rotations.resize(nj);
  for (std::size_t j = 0; j < nj; ++j) t.canonical_pose.rotations[j] = matrix_from(cf, 9 * j);
  t.canonical_pose.translation = Vec3(cf[9 * nj], cf[9 * nj + 1], cf[9 * nj + 2]);

  t.subdivision_level = field<int>(doc, "subdivision_level", manifest);
  for (const json& lv : doc.at("base_counts")) {
    LevelRecord rec;
    rec.vertex_count = field<int>(lv, "vertices", manifest);
    rec.uv_count = field<int>(lv, "uvs", manifest);
    const auto nf = field<std::size_t>(lv, "faces", manifest);
    const auto raw = read_binary<std::int32_t>(dir / field<std::string>(lv, "faces_file", manifest), nf * 6);
    for (std::size_t f = 0; f < nf; ++f) rec.faces.push_back({raw[3 * f], raw[3 * f + 1], raw[3 * f + 2]});
    for (std::size_t f = 0; f < nf; ++f) {
      rec.uv_faces.push_back({raw[3 * (nf + f)], raw[3 * (nf + f) + 1], raw[3 * (nf + f) + 2]});
    }
    t.levels.push_back(std::move(rec));
  }
  t.validate();
  return t;
}

void save_template(const fs::path& manifest, const SemanticTemplate& t) {
  t.validate();
  const fs::path dir = manifest.parent_path();
  const std::string stem = manifest.stem().string();
  const std::size_t nj = static_cast<std::size_t>(t.joint_count());

  json doc;
  doc["format"] = "semreg-template";
  doc["version"] = 1;
  doc["mesh"] = stem + ".obj";
  write_obj(dir / (stem + ".obj"), t.mesh, &t.atlas);

  std::vector<float> wf(t.weights.values.begin(), t.weights.values.end());
  write_binary(dir / (stem + ".weights.f32"), wf);
  doc["weights"] = {{"file", stem + ".weights.f32"}, {"joints", t.weights.joints}};

  std::vector<double> jf;
  for (const Vec3& j : t.joints) jf.insert(jf.end(), {j.x(), j.y(), j.z()});
  write_binary(dir / (stem + ".joints.f64"), jf);
  doc["joints"] = stem + ".joints.f64";

  std::vector<std::int32_t> pf(t.parents.begin(), t.parents.end());
  write_binary(dir / (stem + ".parents.i32"), pf);
  doc["parents"] = stem + ".parents.i32";

  write_binary(dir / (stem + ".labels.u8"), t.labels);
  doc["labels"] = {{"file", stem + ".labels.u8"}, {"names", t.label_names}};

  std::vector<double> cf;
  for (std::size_t j = 0; j < nj; ++j) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cf.push_back(t.canonical_pose.rotations[j](r, c));
  }
  cf.insert(cf.end(), {t.canonical_pose.translation.x(), t.canonical_pose.translation.y(),
                       t.canonical_pose.translation.z()});
  write_binary(dir / (stem + ".canonical.f64"), cf);
  doc["canonical_pose"] = stem + ".canonical.f64";

  doc["subdivision_level"] = t.subdivision_level;
  json counts = json::array();
  for (std::size_t k = 0; k < t.levels.size(); ++k) {
    const LevelRecord& lv = t.levels[k];
    std::vector<std::int32_t> raw;
    raw.reserve(lv.faces.size() * 6);
    for (const Face& f : lv.faces) raw.insert(raw.end(), f.begin(), f.end());
    for (const Face& f : lv.uv_faces) raw.insert(raw.end(), f.begin(), f.end());
    const std::string file = stem + ".level" + std::to_string(k) + ".i32";
    write_binary(dir / file, raw);
    counts.push_back({{"vertices", lv.vertex_count}, {"uvs", lv.uv_count}, {"faces", lv.faces.size()},
                      {"faces_file", file}});
  }
  doc["base_counts"] = counts;

  std::ofstream out(manifest);
  if (!out) throw Error("cannot write " + manifest.string());
  out << doc.dump(2) << '\n';
}

Pose read_pose(const fs::path& path) {
  const json doc = read_json(path);
  Pose pose;
  if (doc.contains("rotations")) {
    for (const json& r : doc.at("rotations")) {
      const auto v = r.get<std::vector<double>>();
      if (v.size() != 9) throw Error(path.string() + ": rotations must hold 9 values each");
      pose.rotations.push_back(matrix_from(v, 0));
    }
  } else if (doc.contains("axis_angle")) {
    std::vector<Vec3> aa;
    for (const json& r : doc.at("axis_angle")) {
      const auto v = r.get<std::vector<double>>();
      if (v.size() != 3) throw Error(path.string() + ": axis_angle entries must hold 3 values");
      aa.emplace_back(v[0], v[1], v[2]);
    }
    pose = Pose::from_axis_angle(aa);
  } else {
    throw Error(path.string() + ": pose needs 'rotations' or 'axis_angle'");
  }
  if (doc.contains("translation")) {
    const auto t = doc.at("translation").get<std::vector<double>>();
    if (t.size() != 3) throw Error(path.string() + ": translation must hold 3 values");
    pose.translation = Vec3(t[0], t[1], t[2]);
  }
  return pose;
}

void write_pose(const fs::path& path, const Pose& pose) {
  json doc;
  json rots = json::array();
  for (const Mat3& r : pose.rotations) {
    rots.push_back({r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)});
  }
  doc["rotations"] = rots;
  doc["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

} // namespace semreg
