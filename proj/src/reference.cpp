#include "semreg/reference.hpp"

#include <algorithm>
#include <cmath>

namespace semreg::reference {

std::optional<RayHit> raycast(const Mesh& mesh, const Vec3& origin, const Vec3& direction, double t_min,
                              double t_max) {
  std::optional<RayHit> best;
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Face& t = mesh.faces[f];
    double tt, u, v;
    if (!intersect_triangle(mesh.positions[t[0]], mesh.positions[t[1]], mesh.positions[t[2]], origin, direction, tt, u,
                            v)) {
      continue;
    }
    if (tt < t_min || tt > t_max) continue;
    if (!best || tt < best->t) {
      best = RayHit{tt, origin + tt * direction, f, Vec3(1.0 - u - v, u, v)};
    }
  }
  return best;
}

SurfacePoint closest_point(const Mesh& mesh, const Vec3& p) {
  SurfacePoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Face& t = mesh.faces[f];
    Vec3 bary;
    const Vec3 q = closest_point_on_triangle(p, mesh.positions[t[0]], mesh.positions[t[1]], mesh.positions[t[2]], bary);
    const double d = (q - p).squaredNorm();
    if (d < best_sq) {
      best_sq = d;
      best = SurfacePoint{0.0, q, f, bary};
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

UvRaster rasterize_uv(const UvAtlas& atlas, int width, int height) {
  UvRaster r;
  r.width = width;
  r.height = height;
  r.face.assign(static_cast<std::size_t>(width) * height, -1);
  r.bary.assign(r.face.size(), Vec3::Zero());
  r.degenerate_faces.assign(atlas.faces.size(), 0);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const Vec2 p = texel_center(i, j, width, height);
      for (std::size_t f = 0; f < atlas.faces.size(); ++f) {
        Vec3 w;
        const bool ok = uv_barycentric(atlas.uvs[atlas.faces[f][0]], atlas.uvs[atlas.faces[f][1]],
                                       atlas.uvs[atlas.faces[f][2]], p, w);
        if (!ok) {
          r.degenerate_faces[f] = 1;
          continue;
        }
        if (uv_inside(w)) {
          r.face[static_cast<std::size_t>(i) * width + j] = static_cast<int>(f);
          r.bary[static_cast<std::size_t>(i) * width + j] = w;
          break;
        }
      }
    }
  }
  return r;
}

UvMap gauss_seidel_inpaint(const UvMap& field, const HoleMask& hole, double tol, int max_sweeps) {
  UvMap out = field;
  const int W = field.width, H = field.height;
  auto unknown = [&](std::size_t t) { return field.covered(t) && hole.data[t] != 0.0; };
  for (std::size_t t = 0; t < out.texel_count(); ++t) {
    if (unknown(t)) out.data[t] = 0.0;
  }
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        const std::size_t t = out.index(i, j);
        if (!unknown(t)) continue;
        double sum = 0.0;
        int deg = 0;
        const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int ii = i + di[k], jj = j + dj[k];
          if (ii < 0 || jj < 0 || ii >= H || jj >= W || !field.covered(out.index(ii, jj))) continue;
          sum += out.data[out.index(ii, jj)];
          ++deg;
        }
        if (deg == 0) continue;
        const double v = sum / deg;
        change = std::max(change, std::abs(v - out.data[t]));
        out.data[t] = v;
      }
    }
    if (change < tol) break;
  }
  return out;
}

NormalImage raycast_normals(const Mesh& mesh, const Camera& cam) {
  NormalImage img;
  img.width = cam.width;
  img.height = cam.height;
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  img.normal.assign(n, Vec3::Zero());
  img.covered.assign(n, 0);
  img.face.assign(n, -1);
  const Mat3 rt = cam.rotation.transpose();
  for (int i = 0; i < cam.height; ++i) {
    for (int j = 0; j < cam.width; ++j) {
      const Vec2 px(j + 0.5, i + 0.5);
      Vec3 origin, dir;
      if (cam.kind == Camera::Kind::Orthographic) {
        const Vec2 xy = (px - cam.principal) / cam.scale;
        // Start far behind the image plane so every surface point is in front.
        origin = rt * (Vec3(xy.x(), xy.y(), -1e6) - cam.translation);
        dir = rt.col(2);
      } else {
        const Vec2 xy = (px - cam.principal) / cam.focal;
        origin = cam.center();
        dir = (rt * Vec3(xy.x(), xy.y(), 1.0)).normalized();
      }
      const auto hit = raycast(mesh, origin, dir, 0.0, std::numeric_limits<double>::infinity());
      if (!hit) continue;
      const Face& t = mesh.faces[hit->face];
      const Vec3 nw =
          (mesh.positions[t[1]] - mesh.positions[t[0]]).cross(mesh.positions[t[2]] - mesh.positions[t[0]]).normalized();
      const std::size_t k = static_cast<std::size_t>(i) * cam.width + j;
      img.normal[k] = cam.rotation * nw;
      img.covered[k] = 1;
      img.face[k] = hit->face;
    }
  }
  return img;
}

std::vector<Vec3> laplacian_step(const Mesh& mesh, const std::vector<Vec3>& positions, double lambda) {
  const int nv = mesh.vertex_count();
  std::vector<std::vector<int>> nbr(nv);
  for (const Face& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      if (std::find(nbr[a].begin(), nbr[a].end(), b) == nbr[a].end()) nbr[a].push_back(b);
      if (std::find(nbr[b].begin(), nbr[b].end(), a) == nbr[b].end()) nbr[b].push_back(a);
    }
  }
  std::vector<Vec3> out(positions);
  for (int v = 0; v < nv; ++v) {
    if (nbr[v].empty()) continue;
    std::sort(nbr[v].begin(), nbr[v].end());
    Vec3 mean = Vec3::Zero();
    for (int u : nbr[v]) mean += positions[u];
    mean /= static_cast<double>(nbr[v].size());
    out[v] = positions[v] + lambda * (mean - positions[v]);
  }
  return out;
}

} // namespace semreg::reference
