#pragma once

#include "semreg/bvh.hpp"
#include "semreg/sdf.hpp"
#include "semreg/template.hpp"
#include "semreg/uv_map.hpp"

namespace semreg {

/// Sampling and culling parameters. The angle threshold is in radians.
struct SnsConfig {
  double range = 0.0;        ///< Max cast/march distance (m); 0 selects 0.05 x target bbox diagonal.
  double angle_threshold = 2.0;
  double area_threshold = 3.0;
  double edge_threshold = 3.0;
  int connectivity_threshold = 500;  ///< Components with fewer faces are dropped.
  double sdf_step = 0.0;     ///< March step (m); 0 selects range / 256.
  int bisection_steps = 20;
  int mask_resolution = 1024;

  void validate() const;
  double resolved_range(const Aabb& target_bounds) const;
  double resolved_step(double range) const;
};

struct SamplePoints {
  std::vector<Vec3> points;  ///< Sampled position, or the query vertex when invalid.
  Flags valid;
  std::vector<double> t;     ///< |signed step| along the normal, 0 when invalid.
};

/// Casts along +n from vertices inside the target and -n otherwise, keeping
/// the nearest hit with t in [0, r].
SamplePoints sample_explicit(std::span<const Vec3> vertices, std::span<const Vec3> normals, const Bvh& target,
                             const SnsConfig& cfg);

/// Fixed-step march with the same direction rule, driven by the SDF sign at
/// the vertex, refined by bisection on the first sign change.
SamplePoints sample_implicit(std::span<const Vec3> vertices, std::span<const Vec3> normals, const SdfField& sdf,
                             const SnsConfig& cfg);

struct CullResult {
  Flags culled_face;
  Flags invalid_vertex;     ///< Every vertex of a culled face.
  Flags degenerate_reference;
  int culled_count = 0;
};

/// Per-face indicators against the reference: normal angle > theta, area ratio
/// > s, longest/shortest sampled edge > r_e. Only faces with `active[f]` set
/// are tested (all faces when `active` is empty).
CullResult cull_faces(const Mesh& sampled, const Mesh& reference, const SnsConfig& cfg, const Flags& active = {});

struct SnsStats {
  int missed_vertices = 0;
  int culled_posed = 0;
  int culled_canonical = 0;
  int removed_components = 0;
  int removed_component_faces = 0;
};

struct SnsResult {
  Mesh sampled;         ///< Template vertex order; only surviving faces.
  Flags valid_vertex;   ///< Sampled and still referenced by a surviving face.
  HoleMask hole_mask;   ///< Texels owned by a removed template face.
  double range = 0.0;
  SnsStats stats;
};

/// Full sampling pipeline on the template posed by `pose`.
SnsResult sns_register(const SemanticTemplate& tmpl, const Pose& pose, const Bvh& target, const SnsConfig& cfg);
SnsResult sns_register(const SemanticTemplate& tmpl, const Pose& pose, const SdfField& target, const SnsConfig& cfg);

/// Rebuilds a result from its file form: the sampled mesh in template order
/// with only surviving faces, plus the hole mask. Referenced vertices are valid.
SnsResult sns_result_from_partial(const Mesh& partial, const HoleMask& holes);

/// Hole mask of a face subset: texels owned by a face whose `kept` flag is 0.
HoleMask hole_mask_from_faces(const UvRaster& raster, const Flags& kept);

} // namespace semreg
