#pragma once

#include "semreg/core.hpp"

#include <span>

namespace semreg {

/// Indexed triangle surface. Vertex order is semantic identity: nothing in the
/// library renumbers vertices, and removing faces leaves unreferenced vertices in place.
struct Mesh {
  std::vector<Vec3> positions;
  std::vector<Face> faces;
  std::vector<Vec3> colors;  ///< Optional per-vertex RGB in [0,1]; empty or one per vertex.

  int vertex_count() const { return static_cast<int>(positions.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  bool has_colors() const { return !colors.empty(); }

  /// Throws Error on out-of-range or repeated indices, or a color/vertex count mismatch.
  void validate() const;
  Aabb bounds() const;
};

/// Per-corner texture coordinates (OBJ style): faces[f] indexes `uvs` for the
/// corners of mesh face f, so seams carry distinct UV vertices.
struct UvAtlas {
  std::vector<Vec2> uvs;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
  /// Throws unless there is one UV face per mesh face and every index is valid.
  void validate(int mesh_face_count) const;
};

inline constexpr double kDegenerateArea = 1e-12;

/// Per-element unit vectors. `degenerate[i]` marks entries returned as the zero vector.
struct NormalField {
  std::vector<Vec3> normals;
  Flags degenerate;
};

NormalField face_normals(const Mesh& mesh);

/// Area-weighted average of incident face normals. Unreferenced vertices are flagged.
NormalField vertex_normals(const Mesh& mesh);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double face_area(const Mesh& mesh, int face);

/// Faces sharing an undirected edge belong to the same component.
struct FaceComponents {
  std::vector<int> face_component;  ///< Component id per face, numbered by lowest face index.
  std::vector<int> component_size;  ///< Face count per component.
};

FaceComponents connected_components(const Mesh& mesh);

/// Drops the listed faces. Positions, colors and vertex ordering are untouched.
Mesh remove_faces(const Mesh& mesh, std::span<const int> faces_to_remove);

/// Shape quality q = 4*sqrt(3)*area / (l1^2 + l2^2 + l3^2); 1 for equilateral triangles.
struct QualityField {
  std::vector<double> quality;
  Flags degenerate;
};

QualityField triangle_quality(const Mesh& mesh);

/// Smallest interior angle of a triangle in radians (0 for degenerate input).
double min_interior_angle(const Vec3& a, const Vec3& b, const Vec3& c);

/// Sorted unique neighbor lists built from face edges.
std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh);

/// Undirected edge key with the smaller index in the high word.
inline std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(a < b ? a : b);
  const auto hi = static_cast<std::uint32_t>(a < b ? b : a);
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

} // namespace semreg
