#include "semreg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace semreg {

void Mesh::validate() const {
  const int n = vertex_count();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= n) {
        throw Error("face " + std::to_string(f) + " references vertex " + std::to_string(t[k]) +
                    " outside [0, " + std::to_string(n) + ")");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error("face " + std::to_string(f) + " repeats a vertex index");
    }
  }
  if (!colors.empty() && colors.size() != positions.size()) {
    throw Error("color count does not match vertex count");
  }
}

void UvAtlas::validate(int mesh_face_count) const {
  if (static_cast<int>(faces.size()) != mesh_face_count) {
    throw Error("uv face count " + std::to_string(faces.size()) + " does not match mesh face count " +
                std::to_string(mesh_face_count));
  }
  const int n = static_cast<int>(uvs.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      if (faces[f][k] < 0 || faces[f][k] >= n) {
        throw Error("uv face " + std::to_string(f) + " references uv " + std::to_string(faces[f][k]) +
                    " outside [0, " + std::to_string(n) + ")");
      }
    }
  }
}

Aabb Mesh::bounds() const {
  Aabb box;
  for (const Vec3& p : positions) box.extend(p);
  return box;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

double face_area(const Mesh& mesh, int face) {
  const Face& t = mesh.faces[static_cast<std::size_t>(face)];
  return triangle_area(mesh.positions[t[0]], mesh.positions[t[1]], mesh.positions[t[2]]);
}

NormalField face_normals(const Mesh& mesh) {
  NormalField out;
  const std::ptrdiff_t nf = mesh.face_count();
  out.normals.assign(static_cast<std::size_t>(nf), Vec3::Zero());
  out.degenerate.assign(static_cast<std::size_t>(nf), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t f = 0; f < nf; ++f) {
    const Face& t = mesh.faces[static_cast<std::size_t>(f)];
    const Vec3 n = (mesh.positions[t[1]] - mesh.positions[t[0]]).cross(mesh.positions[t[2]] - mesh.positions[t[0]]);
    const double twice_area = n.norm();
    if (0.5 * twice_area < kDegenerateArea) {
      out.degenerate[static_cast<std::size_t>(f)] = 1;
    } else {
      out.normals[static_cast<std::size_t>(f)] = n / twice_area;
    }
  }
  return out;
}

NormalField vertex_normals(const Mesh& mesh) {
  // Accumulate serially in face order so the result does not depend on scheduling.
  std::vector<Vec3> acc(mesh.positions.size(), Vec3::Zero());
  std::vector<int> touched(mesh.positions.size(), 0);
  for (const Face& t : mesh.faces) {
    const Vec3 n = (mesh.positions[t[1]] - mesh.positions[t[0]]).cross(mesh.positions[t[2]] - mesh.positions[t[0]]);
    for (int k = 0; k < 3; ++k) {
      acc[t[k]] += n;
      touched[t[k]] = 1;
    }
  }
  NormalField out;
  out.normals.assign(acc.size(), Vec3::Zero());
  out.degenerate.assign(acc.size(), 0);
  const std::ptrdiff_t nv = static_cast<std::ptrdiff_t>(acc.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < nv; ++v) {
    const double len = acc[v].norm();
    if (!touched[v] || len < 2.0 * kDegenerateArea) {
      out.degenerate[v] = 1;
    } else {
      out.normals[v] = acc[v] / len;
    }
  }
  return out;
}

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

} // namespace

FaceComponents connected_components(const Mesh& mesh) {
  const int nf = mesh.face_count();
  std::vector<int> parent(static_cast<std::size_t>(nf));
  std::iota(parent.begin(), parent.end(), 0);
  std::unordered_map<std::uint64_t, int> first_face;
  first_face.reserve(static_cast<std::size_t>(nf) * 2);
  for (int f = 0; f < nf; ++f) {
    const Face& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      const auto key = edge_key(t[k], t[(k + 1) % 3]);
      auto [it, inserted] = first_face.emplace(key, f);
      if (!inserted) {
        const int a = find_root(parent, it->second);
        const int b = find_root(parent, f);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  FaceComponents out;
  out.face_component.assign(static_cast<std::size_t>(nf), -1);
  std::vector<int> root_to_id(static_cast<std::size_t>(nf), -1);
  for (int f = 0; f < nf; ++f) {
    const int r = find_root(parent, f);
    if (root_to_id[r] < 0) {
      root_to_id[r] = static_cast<int>(out.component_size.size());
      out.component_size.push_back(0);
    }
    out.face_component[f] = root_to_id[r];
    ++out.component_size[root_to_id[r]];
  }
  return out;
}

Mesh remove_faces(const Mesh& mesh, std::span<const int> faces_to_remove) {
  Flags drop(mesh.faces.size(), 0);
  for (int f : faces_to_remove) {
    if (f < 0 || f >= mesh.face_count()) {
      throw Error("remove_faces: face index " + std::to_string(f) + " out of range");
    }
    drop[f] = 1;
  }
  Mesh out;
  out.positions = mesh.positions;
  out.colors = mesh.colors;
  out.faces.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!drop[f]) out.faces.push_back(mesh.faces[f]);
  }
  return out;
}

QualityField triangle_quality(const Mesh& mesh) {
  QualityField out;
  const std::ptrdiff_t nf = mesh.face_count();
  out.quality.assign(static_cast<std::size_t>(nf), 0.0);
  out.degenerate.assign(static_cast<std::size_t>(nf), 0);
  const double k = 4.0 * std::sqrt(3.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t f = 0; f < nf; ++f) {
    const Face& t = mesh.faces[f];
    const Vec3& a = mesh.positions[t[0]];
    const Vec3& b = mesh.positions[t[1]];
    const Vec3& c = mesh.positions[t[2]];
    const double area = triangle_area(a, b, c);
    const double sum_sq = (b - a).squaredNorm() + (c - b).squaredNorm() + (a - c).squaredNorm();
    if (area < kDegenerateArea || sum_sq <= 0.0) {
      out.degenerate[f] = 1;
    } else {
      out.quality[f] = std::min(1.0, k * area / sum_sq);
    }
  }
  return out;
}

double min_interior_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  if (triangle_area(a, b, c) < kDegenerateArea) return 0.0;
  auto angle = [](const Vec3& p, const Vec3& q, const Vec3& r) {
    const Vec3 u = q - p;
    const Vec3 v = r - p;
    return std::atan2(u.cross(v).norm(), u.dot(v));
  };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> nbrs(mesh.positions.size());
  for (const Face& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      nbrs[t[k]].push_back(t[(k + 1) % 3]);
      nbrs[t[k]].push_back(t[(k + 2) % 3]);
    }
  }
  for (auto& list : nbrs) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return nbrs;
}

} // namespace semreg
