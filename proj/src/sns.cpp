#include "semreg/sns.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace semreg {

void SnsConfig::validate() const {
  if (range < 0.0) throw Error("sns: range must be positive");
  if (!(angle_threshold > 0.0) || !(area_threshold > 0.0) || !(edge_threshold > 0.0)) {
    throw Error("sns: thresholds must be positive");
  }
  if (connectivity_threshold < 0) throw Error("sns: connectivity threshold must be non-negative");
  if (sdf_step < 0.0) throw Error("sns: sdf_step must be positive");
  if (bisection_steps < 0) throw Error("sns: bisection steps must be non-negative");
  if (mask_resolution <= 0) throw Error("sns: mask resolution must be positive");
}

double SnsConfig::resolved_range(const Aabb& target_bounds) const {
  return range > 0.0 ? range : 0.05 * target_bounds.diagonal();
}

double SnsConfig::resolved_step(double r) const { return sdf_step > 0.0 ? sdf_step : r / 256.0; }

namespace {

void require_sizes(std::span<const Vec3> vertices, std::span<const Vec3> normals) {
  if (vertices.size() != normals.size()) throw Error("sns: vertex and normal counts differ");
}

SamplePoints empty_samples(std::span<const Vec3> vertices) {
  SamplePoints s;
  s.points.assign(vertices.begin(), vertices.end());
  s.valid.assign(vertices.size(), 0);
  s.t.assign(vertices.size(), 0.0);
  return s;
}

bool zero_normal(const Vec3& n) { return n.squaredNorm() < 0.25; }

} // namespace

SamplePoints sample_explicit(std::span<const Vec3> vertices, std::span<const Vec3> normals, const Bvh& target,
                             const SnsConfig& cfg) {
  cfg.validate();
  require_sizes(vertices, normals);
  SamplePoints s = empty_samples(vertices);
  if (target.empty()) return s;
  const double r = cfg.resolved_range(target.bounds());
  const auto n = static_cast<std::ptrdiff_t>(vertices.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    if (zero_normal(normals[v])) continue;
    const Vec3 dir = target.is_inside(vertices[v]) ? Vec3(normals[v]) : Vec3(-normals[v]);
    if (const auto hit = target.raycast(vertices[v], dir, 0.0, r)) {
      s.points[v] = hit->point;
      s.valid[v] = 1;
      s.t[v] = hit->t;
    }
  }
  return s;
}

SamplePoints sample_implicit(std::span<const Vec3> vertices, std::span<const Vec3> normals, const SdfField& sdf,
                             const SnsConfig& cfg) {
  cfg.validate();
  require_sizes(vertices, normals);
  SamplePoints s = empty_samples(vertices);
  const double r = cfg.resolved_range(sdf.bbox());
  const double step = cfg.resolved_step(r);
  const double tol = 1e-6 * r;
  const int steps = static_cast<int>(std::ceil(r / step - 1e-9));
  const auto n = static_cast<std::ptrdiff_t>(vertices.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    if (zero_normal(normals[v])) continue;
    const Vec3& p0 = vertices[v];
    const double f0 = sdf.query(p0);
    if (f0 == 0.0) {
      s.valid[v] = 1;
      continue;
    }
    const Vec3 dir = f0 < 0.0 ? Vec3(normals[v]) : Vec3(-normals[v]);
    double t_prev = 0.0;
    double f_prev = f0;
    for (int k = 1; k <= steps; ++k) {
      const double t = std::min(r, k * step);
      const double f = sdf.query(p0 + t * dir);
      if ((f < 0.0) == (f0 < 0.0) && f != 0.0) {
        t_prev = t;
        f_prev = f;
        continue;
      }
      // Sign change in (t_prev, t]: bisect keeping f(lo) on the vertex side.
      double lo = t_prev, hi = t, f_lo = f_prev, f_hi = f;
      for (int b = 0; b < cfg.bisection_steps && f_hi != 0.0; ++b) {
        const double mid = 0.5 * (lo + hi);
        const double fm = sdf.query(p0 + mid * dir);
        if ((fm < 0.0) == (f0 < 0.0) && fm != 0.0) {
          lo = mid;
          f_lo = fm;
        } else {
          hi = mid;
          f_hi = fm;
        }
      }
      const double best = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
      if (std::min(std::abs(f_lo), std::abs(f_hi)) <= tol) {
        s.points[v] = p0 + best * dir;
        s.valid[v] = 1;
        s.t[v] = best;
      }
      break;
    }
  }
  return s;
}

CullResult cull_faces(const Mesh& sampled, const Mesh& reference, const SnsConfig& cfg, const Flags& active) {
  if (sampled.faces != reference.faces) throw Error("cull_faces: sampled and reference face lists differ");
  if (sampled.positions.size() != reference.positions.size()) throw Error("cull_faces: vertex counts differ");
  if (!active.empty() && active.size() != sampled.faces.size()) throw Error("cull_faces: active mask size mismatch");
  const int nf = sampled.face_count();
  CullResult res;
  res.culled_face.assign(nf, 0);
  res.degenerate_reference.assign(nf, 0);
  res.invalid_vertex.assign(sampled.positions.size(), 0);

#pragma omp parallel for schedule(static)
  for (int f = 0; f < nf; ++f) {
    if (!active.empty() && !active[f]) continue;
    const Face& t = sampled.faces[f];
    const Vec3& a = sampled.positions[t[0]];
    const Vec3& b = sampled.positions[t[1]];
    const Vec3& c = sampled.positions[t[2]];
    const Vec3& ra = reference.positions[t[0]];
    const Vec3& rb = reference.positions[t[1]];
    const Vec3& rc = reference.positions[t[2]];
    const Vec3 ns = (b - a).cross(c - a);
    const Vec3 nr = (rb - ra).cross(rc - ra);
    const double area_s = 0.5 * ns.norm();
    const double area_r = 0.5 * nr.norm();
    if (area_r < kDegenerateArea) {
      res.degenerate_reference[f] = 1;
      res.culled_face[f] = 1;
      continue;
    }
    if (area_s < kDegenerateArea) {
      res.culled_face[f] = 1;
      continue;
    }
    const double cosang = std::clamp(ns.dot(nr) / (2.0 * area_s * 2.0 * area_r), -1.0, 1.0);
    const double angle = std::acos(cosang);
    const double area_ratio = area_s / area_r;
    const double l0 = (b - a).norm(), l1 = (c - b).norm(), l2 = (a - c).norm();
    const double edge_ratio = std::max({l0, l1, l2}) / std::min({l0, l1, l2});
    if (angle > cfg.angle_threshold || area_ratio > cfg.area_threshold || edge_ratio > cfg.edge_threshold) {
      res.culled_face[f] = 1;
    }
  }
  for (int f = 0; f < nf; ++f) {
    if (!res.culled_face[f]) continue;
    ++res.culled_count;
    for (int v : sampled.faces[f]) res.invalid_vertex[v] = 1;
  }
  return res;
}

HoleMask hole_mask_from_faces(const UvRaster& raster, const Flags& kept) {
  HoleMask m(raster.width, raster.height, 1);
  for (std::size_t t = 0; t < raster.texel_count(); ++t) {
    const int f = raster.face[t];
    if (f < 0) continue;
    m.coverage[t] = 1;
    if (!kept[f]) m.data[t] = 1.0;
  }
  return m;
}

namespace {

using Sampler = std::function<SamplePoints(std::span<const Vec3>, std::span<const Vec3>)>;

/// Drops every face that references an invalid vertex.
void drop_faces_touching(const std::vector<Face>& faces, const Flags& invalid_vertex, Flags& kept) {
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (!kept[f]) continue;
    for (int v : faces[f]) {
      if (invalid_vertex[v]) {
        kept[f] = 0;
        break;
      }
    }
  }
}

SnsResult run_sns(const SemanticTemplate& tmpl, const Pose& pose, const SnsConfig& cfg, double range,
                  const Sampler& sampler) {
  cfg.validate();
  tmpl.validate();
  pose.validate(tmpl.joint_count());
  const int nv = tmpl.vertex_count();
  const int nf = tmpl.mesh.face_count();

  Mesh posed_ref;
  posed_ref.positions = lbs_pose(tmpl, tmpl.mesh.positions, pose);
  posed_ref.faces = tmpl.mesh.faces;
  const NormalField normals = vertex_normals(posed_ref);

  SnsResult res;
  res.range = range;
  const SamplePoints samples = sampler(posed_ref.positions, normals.normals);
  Flags invalid(nv, 0);
  for (int v = 0; v < nv; ++v) {
    if (!samples.valid[v]) {
      invalid[v] = 1;
      ++res.stats.missed_vertices;
    }
  }
  Flags kept(nf, 1);
  drop_faces_touching(tmpl.mesh.faces, invalid, kept);

  Mesh sampled;
  sampled.positions = samples.points;
  sampled.faces = tmpl.mesh.faces;

  // Posed-space cull.
  CullResult posed_cull = cull_faces(sampled, posed_ref, cfg, kept);
  res.stats.culled_posed = posed_cull.culled_count;
  for (int v = 0; v < nv; ++v) invalid[v] |= posed_cull.invalid_vertex[v];
  drop_faces_touching(tmpl.mesh.faces, invalid, kept);

  // Canonical-space cull: both meshes are taken through the rest pose into the canonical pose.
  Mesh canon_ref;
  canon_ref.positions = lbs_pose(tmpl, tmpl.mesh.positions, tmpl.canonical_pose);
  canon_ref.faces = tmpl.mesh.faces;
  const UnposeResult rest = lbs_unpose(tmpl, sampled.positions, pose);
  Mesh canon_sampled;
  canon_sampled.positions = lbs_pose(tmpl, rest.positions, tmpl.canonical_pose);
  canon_sampled.faces = tmpl.mesh.faces;
  for (int v = 0; v < nv; ++v) invalid[v] |= rest.singular[v];
  drop_faces_touching(tmpl.mesh.faces, invalid, kept);
  CullResult canon_cull = cull_faces(canon_sampled, canon_ref, cfg, kept);
  res.stats.culled_canonical = canon_cull.culled_count;
  for (int v = 0; v < nv; ++v) invalid[v] |= canon_cull.invalid_vertex[v];
  drop_faces_touching(tmpl.mesh.faces, invalid, kept);

  // Connectivity check on the surviving faces.
  Mesh surviving;
  surviving.positions = sampled.positions;
  std::vector<int> surviving_ids;
  for (int f = 0; f < nf; ++f) {
    if (kept[f]) {
      surviving.faces.push_back(tmpl.mesh.faces[f]);
      surviving_ids.push_back(f);
    }
  }
  const FaceComponents comps = connected_components(surviving);
  for (int c : comps.component_size) {
    if (c < cfg.connectivity_threshold) {
      ++res.stats.removed_components;
      res.stats.removed_component_faces += c;
    }
  }
  for (std::size_t k = 0; k < surviving_ids.size(); ++k) {
    if (comps.component_size[comps.face_component[k]] < cfg.connectivity_threshold) kept[surviving_ids[k]] = 0;
  }

  res.valid_vertex.assign(nv, 0);
  for (int f = 0; f < nf; ++f) {
    if (!kept[f]) continue;
    res.sampled.faces.push_back(tmpl.mesh.faces[f]);
    for (int v : tmpl.mesh.faces[f]) res.valid_vertex[v] = 1;
  }
  for (int v = 0; v < nv; ++v) {
    if (invalid[v]) res.valid_vertex[v] = 0;
  }
  // Posed samples are kept as cast, so surviving vertices stay exactly on the target.
  res.sampled.positions = sampled.positions;
  for (int v = 0; v < nv; ++v) {
    if (!res.valid_vertex[v]) res.sampled.positions[v] = posed_ref.positions[v];
  }
  const UvRaster raster = rasterize_uv(tmpl.atlas, cfg.mask_resolution, cfg.mask_resolution);
  res.hole_mask = hole_mask_from_faces(raster, kept);
  return res;
}

} // namespace

SnsResult sns_register(const SemanticTemplate& tmpl, const Pose& pose, const Bvh& target, const SnsConfig& cfg) {
  const double range = cfg.resolved_range(target.bounds());
  SnsConfig c = cfg;
  c.range = range;
  return run_sns(tmpl, pose, c, range, [&](std::span<const Vec3> v, std::span<const Vec3> n) {
    return sample_explicit(v, n, target, c);
  });
}

SnsResult sns_register(const SemanticTemplate& tmpl, const Pose& pose, const SdfField& target, const SnsConfig& cfg) {
  const double range = cfg.resolved_range(target.bbox());
  SnsConfig c = cfg;
  c.range = range;
  return run_sns(tmpl, pose, c, range, [&](std::span<const Vec3> v, std::span<const Vec3> n) {
    return sample_implicit(v, n, target, c);
  });
}

} // namespace semreg

namespace semreg {

SnsResult sns_result_from_partial(const Mesh& partial, const HoleMask& holes) {
  partial.validate();
  SnsResult r;
  r.sampled = partial;
  r.valid_vertex.assign(partial.positions.size(), 0);
  for (const Face& f : partial.faces)
    for (int v : f) r.valid_vertex[v] = 1;
  r.hole_mask = holes;
  return r;
}

} // namespace semreg
