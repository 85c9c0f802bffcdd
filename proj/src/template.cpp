#include "semreg/template.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace semreg {

Pose Pose::identity(int joints) {
  Pose p;
  p.rotations.assign(static_cast<std::size_t>(joints), Mat3::Identity());
  return p;
}

Pose Pose::from_axis_angle(std::span<const Vec3> axis_angles, const Vec3& translation) {
  Pose p;
  p.translation = translation;
  p.rotations.reserve(axis_angles.size());
  for (const Vec3& aa : axis_angles) {
    const double angle = aa.norm();
    if (angle < 1e-300) {
      p.rotations.push_back(Mat3::Identity());
    } else {
      p.rotations.push_back(Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix());
    }
  }
  return p;
}

void Pose::validate(int joints) const {
  if (joint_count() != joints) {
    throw Error("pose has " + std::to_string(joint_count()) + " joint rotations, template has " +
                std::to_string(joints));
  }
  for (int j = 0; j < joints; ++j) {
    const Mat3& r = rotations[j];
    if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 || r.determinant() < 0.0) {
      throw Error("pose rotation " + std::to_string(j) + " is not a proper rotation");
    }
  }
}

int SemanticTemplate::label_id(const std::string& name) const {
  const auto it = std::find(label_names.begin(), label_names.end(), name);
  return it == label_names.end() ? -1 : static_cast<int>(it - label_names.begin());
}

void SemanticTemplate::validate() const {
  mesh.validate();
  atlas.validate(mesh.face_count());
  const int nv = vertex_count();
  const int nj = joint_count();
  if (nj == 0) throw Error("template has no joints");
  if (weights.joints != nj || weights.vertex_count() != nv ||
      weights.values.size() != static_cast<std::size_t>(nv) * nj) {
    throw Error("skinning weights must be " + std::to_string(nv) + " x " + std::to_string(nj));
  }
  for (int v = 0; v < nv; ++v) {
    double sum = 0.0;
    for (double w : weights.row(v)) {
      if (w < 0.0) throw Error("negative skinning weight at vertex " + std::to_string(v));
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error("skinning weights of vertex " + std::to_string(v) + " sum to " + std::to_string(sum));
  }
  if (static_cast<int>(parents.size()) != nj) throw Error("parent count does not match joint count");
  for (int j = 0; j < nj; ++j) {
    if (j == 0 ? parents[j] != -1 : (parents[j] < 0 || parents[j] >= j)) {
      throw Error("joint " + std::to_string(j) + " has invalid parent " + std::to_string(parents[j]));
    }
  }
  canonical_pose.validate(nj);
  if (static_cast<int>(labels.size()) != nv) throw Error("label count does not match vertex count");
  for (std::uint8_t l : labels) {
    if (l >= label_names.size()) throw Error("label id " + std::to_string(l) + " has no name");
  }
  if (static_cast<int>(levels.size()) != subdivision_level) {
    throw Error("template records " + std::to_string(levels.size()) + " coarser levels but subdivision_level is " +
                std::to_string(subdivision_level));
  }
  int prev_v = 0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const LevelRecord& lv = levels[k];
    if (lv.vertex_count < prev_v || lv.vertex_count > nv || lv.uv_count > static_cast<int>(atlas.uvs.size()) ||
        lv.faces.size() != lv.uv_faces.size()) {
      throw Error("level record " + std::to_string(k) + " is inconsistent");
    }
    for (std::size_t f = 0; f < lv.faces.size(); ++f) {
      for (int c = 0; c < 3; ++c) {
        if (lv.faces[f][c] < 0 || lv.faces[f][c] >= lv.vertex_count || lv.uv_faces[f][c] < 0 ||
            lv.uv_faces[f][c] >= lv.uv_count) {
          throw Error("level record " + std::to_string(k) + " face " + std::to_string(f) + " out of range");
        }
      }
    }
    prev_v = lv.vertex_count;
  }
}

namespace {

/// Sorted unique edges of `faces` with a lookup from key to the new vertex index.
struct EdgeIndex {
  std::vector<std::uint64_t> keys;
  std::unordered_map<std::uint64_t, int> to_new;
};

EdgeIndex index_edges(const std::vector<Face>& faces, int first_new, bool check_manifold) {
  EdgeIndex out;
  std::unordered_map<std::uint64_t, int> use;
  use.reserve(faces.size() * 2);
  for (const Face& t : faces) {
    for (int k = 0; k < 3; ++k) ++use[edge_key(t[k], t[(k + 1) % 3])];
  }
  out.keys.reserve(use.size());
  for (const auto& [key, count] : use) {
    if (check_manifold && count > 2) {
      throw Error("non-manifold edge (" + std::to_string(key >> 32) + ", " + std::to_string(key & 0xffffffffu) +
                  ") is shared by " + std::to_string(count) + " faces");
    }
    out.keys.push_back(key);
  }
  // Lexicographic (min, max) order: the key packs min in the high word.
  std::sort(out.keys.begin(), out.keys.end());
  out.to_new.reserve(out.keys.size());
  for (std::size_t i = 0; i < out.keys.size(); ++i) out.to_new.emplace(out.keys[i], first_new + static_cast<int>(i));
  return out;
}

} // namespace

SemanticTemplate subdivide_midpoint(const SemanticTemplate& tmpl) {
  tmpl.validate();
  const int nv = tmpl.vertex_count();
  const int nuv = static_cast<int>(tmpl.atlas.uvs.size());
  const EdgeIndex edges = index_edges(tmpl.mesh.faces, nv, true);
  const EdgeIndex uv_edges = index_edges(tmpl.atlas.faces, nuv, false);

  SemanticTemplate out;
  out.joints = tmpl.joints;
  out.parents = tmpl.parents;
  out.canonical_pose = tmpl.canonical_pose;
  out.label_names = tmpl.label_names;
  out.subdivision_level = tmpl.subdivision_level + 1;
  out.levels = tmpl.levels;
  out.levels.push_back({nv, nuv, tmpl.mesh.faces, tmpl.atlas.faces});

  const std::size_t ne = edges.keys.size();
  const int nj = tmpl.joint_count();
  out.mesh.positions = tmpl.mesh.positions;
  out.mesh.positions.reserve(nv + ne);
  out.weights.joints = nj;
  out.weights.values = tmpl.weights.values;
  out.weights.values.resize((nv + ne) * nj);
  out.labels = tmpl.labels;
  out.labels.reserve(nv + ne);
  if (tmpl.mesh.has_colors()) out.mesh.colors = tmpl.mesh.colors;
  for (std::size_t e = 0; e < ne; ++e) {
    const int a = static_cast<int>(edges.keys[e] >> 32);
    const int b = static_cast<int>(edges.keys[e] & 0xffffffffu);
    out.mesh.positions.push_back(0.5 * (tmpl.mesh.positions[a] + tmpl.mesh.positions[b]));
    if (tmpl.mesh.has_colors()) out.mesh.colors.push_back(0.5 * (tmpl.mesh.colors[a] + tmpl.mesh.colors[b]));
    auto row = out.weights.row(nv + static_cast<int>(e));
    const auto ra = tmpl.weights.row(a);
    const auto rb = tmpl.weights.row(b);
    for (int j = 0; j < nj; ++j) row[j] = 0.5 * (ra[j] + rb[j]);
    out.labels.push_back(tmpl.labels[std::min(a, b)]);
  }

  out.atlas.uvs = tmpl.atlas.uvs;
  out.atlas.uvs.reserve(nuv + uv_edges.keys.size());
  for (std::uint64_t key : uv_edges.keys) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    out.atlas.uvs.push_back(0.5 * (tmpl.atlas.uvs[a] + tmpl.atlas.uvs[b]));
  }

  auto split = [](const Face& t, const std::unordered_map<std::uint64_t, int>& mid, std::vector<Face>& dst) {
    const int ab = mid.at(edge_key(t[0], t[1]));
    const int bc = mid.at(edge_key(t[1], t[2]));
    const int ca = mid.at(edge_key(t[2], t[0]));
    dst.push_back({t[0], ab, ca});
    dst.push_back({ab, t[1], bc});
    dst.push_back({ca, bc, t[2]});
    dst.push_back({ab, bc, ca});
  };
  out.mesh.faces.reserve(tmpl.mesh.faces.size() * 4);
  out.atlas.faces.reserve(tmpl.atlas.faces.size() * 4);
  for (std::size_t f = 0; f < tmpl.mesh.faces.size(); ++f) {
    split(tmpl.mesh.faces[f], edges.to_new, out.mesh.faces);
    split(tmpl.atlas.faces[f], uv_edges.to_new, out.atlas.faces);
  }
  return out;
}

SemanticTemplate downsample(const SemanticTemplate& tmpl, int level, std::span<const Vec3> positions) {
  if (level < 0 || level > tmpl.subdivision_level) {
    throw Error("downsample level " + std::to_string(level) + " outside [0, " +
                std::to_string(tmpl.subdivision_level) + "]");
  }
  if (!positions.empty() && static_cast<int>(positions.size()) != tmpl.vertex_count()) {
    throw Error("downsample positions must have one entry per template vertex");
  }
  SemanticTemplate out = tmpl;
  if (!positions.empty()) out.mesh.positions.assign(positions.begin(), positions.end());
  if (level == tmpl.subdivision_level) return out;

  const LevelRecord& lv = tmpl.levels[level];
  out.mesh.positions.resize(lv.vertex_count);
  if (out.mesh.has_colors()) out.mesh.colors.resize(lv.vertex_count);
  out.mesh.faces = lv.faces;
  out.atlas.uvs.resize(lv.uv_count);
  out.atlas.faces = lv.uv_faces;
  out.weights.values.resize(static_cast<std::size_t>(lv.vertex_count) * tmpl.joint_count());
  out.labels.resize(lv.vertex_count);
  out.subdivision_level = level;
  out.levels.resize(level);
  return out;
}

std::vector<Affine> skinning_transforms(const SemanticTemplate& tmpl, const Pose& pose) {
  const int nj = tmpl.joint_count();
  pose.validate(nj);
  std::vector<Mat3> global_r(nj);
  std::vector<Vec3> global_t(nj);
  for (int j = 0; j < nj; ++j) {
    const int p = tmpl.parents[j];
    if (p < 0) {
      global_r[j] = pose.rotations[j];
      global_t[j] = tmpl.joints[j] + pose.translation;
    } else {
      global_r[j] = global_r[p] * pose.rotations[j];
      global_t[j] = global_r[p] * (tmpl.joints[j] - tmpl.joints[p]) + global_t[p];
    }
  }
  std::vector<Affine> out(nj);
  for (int j = 0; j < nj; ++j) {
    out[j].leftCols<3>() = global_r[j];
    out[j].col(3) = global_t[j] - global_r[j] * tmpl.joints[j];
  }
  return out;
}

namespace {

Affine blend(const std::vector<Affine>& transforms, std::span<const double> row) {
  Affine m = Affine::Zero();
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] != 0.0) m += row[j] * transforms[j];
  }
  return m;
}

void check_vertex_count(const SemanticTemplate& tmpl, std::span<const Vec3> vertices) {
  if (static_cast<int>(vertices.size()) != tmpl.vertex_count() || tmpl.weights.vertex_count() != tmpl.vertex_count()) {
    throw Error("LBS expects " + std::to_string(tmpl.vertex_count()) + " vertices with matching weight rows, got " +
                std::to_string(vertices.size()));
  }
}

} // namespace

std::vector<Vec3> lbs_pose(const SemanticTemplate& tmpl, std::span<const Vec3> vertices, const Pose& pose) {
  check_vertex_count(tmpl, vertices);
  const auto transforms = skinning_transforms(tmpl, pose);
  std::vector<Vec3> out(vertices.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(vertices.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    const Affine m = blend(transforms, tmpl.weights.row(static_cast<int>(v)));
    out[v] = m.leftCols<3>() * vertices[v] + m.col(3);
  }
  return out;
}

UnposeResult lbs_unpose(const SemanticTemplate& tmpl, std::span<const Vec3> vertices, const Pose& pose) {
  check_vertex_count(tmpl, vertices);
  const auto transforms = skinning_transforms(tmpl, pose);
  UnposeResult out;
  out.positions.resize(vertices.size());
  out.singular.assign(vertices.size(), 0);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(vertices.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    const Affine m = blend(transforms, tmpl.weights.row(static_cast<int>(v)));
    const Mat3 linear = m.leftCols<3>();
    if (std::abs(linear.determinant()) <= 1e-9) {
      out.singular[v] = 1;
      out.positions[v] = vertices[v];
      continue;
    }
    out.positions[v] = linear.partialPivLu().solve(vertices[v] - m.col(3));
  }
  return out;
}

std::vector<Vec3> lbs_repose(const SemanticTemplate& tmpl, std::span<const Vec3> vertices, const Pose& from,
                             const Pose& to) {
  const UnposeResult rest = lbs_unpose(tmpl, vertices, from);
  return lbs_pose(tmpl, rest.positions, to);
}

} // namespace semreg
