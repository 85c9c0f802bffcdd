#pragma once

#include "semreg/mesh.hpp"

#include <optional>

namespace semreg {

struct RayHit {
  double t = 0.0;       ///< Distance along the (unit) ray direction.
  Vec3 point;           ///< origin + t * direction
  int face = -1;
  Vec3 bary;            ///< Barycentric weights of the face's three corners.
};

struct SurfacePoint {
  double distance = 0.0;
  Vec3 point;
  int face = -1;
  Vec3 bary;
};

/// Moller-Trumbore intersection against triangle (a, b, c). Returns t and the
/// barycentric pair (u, v) of corners b and c. Edges are closed with a 1e-12
/// tolerance so rays through shared edges never slip between two faces.
bool intersect_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& origin, const Vec3& dir,
                        double& t, double& u, double& v);

/// Closest point on triangle (a, b, c) to p (Voronoi-region walk). Vertex
/// regions return exact unit barycentrics.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, Vec3& bary);

/// Bounding volume hierarchy over a mesh's faces. Read-only after construction
/// and safe to share across threads. Query results are identical to an
/// exhaustive scan over all faces, with ties broken by lowest face index.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(Mesh mesh);

  /// Nearest hit with t in [t_min, t_max]; ties at equal t go to the lowest face index.
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& direction, double t_min, double t_max) const;

  /// Every hit with t in [t_min, t_max], unordered.
  void all_hits(const Vec3& origin, const Vec3& direction, double t_min, double t_max,
                std::vector<RayHit>& hits) const;

  /// Closest surface point. Requires at least one face.
  SurfacePoint closest_point(const Vec3& p) const;

  /// Ray-parity containment test, see is_inside().
  bool is_inside(const Vec3& p) const;

  const Mesh& mesh() const { return mesh_; }
  const Aabb& bounds() const { return bounds_; }
  bool empty() const { return mesh_.faces.empty(); }

 private:
  struct Node {
    Aabb box;
    int left = -1;   ///< Child index; -1 for leaves.
    int right = -1;
    int first = 0;   ///< Offset into order_ for leaves.
    int count = 0;
  };

  struct Parity {
    int crossings = 0;
    bool ambiguous = false;
  };
  Parity crossing_parity(const Vec3& p, const Vec3& dir, double t_min) const;

  Mesh mesh_;
  Aabb bounds_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
};

std::optional<RayHit> raycast(const Bvh& bvh, const Vec3& origin, const Vec3& direction, double t_min,
                              double t_max);

/// Point containment by crossing parity along +x with self-hit epsilon
/// 1e-6 * bbox diagonal. The count along +x must agree with the count along -x;
/// when a probe grazes an edge or the two halves disagree (open surface) a few
/// fixed tilted directions are tried next. If none gives a clean answer the
/// point is reported outside.
bool is_inside(const Bvh& bvh, const Vec3& point);

} // namespace semreg
