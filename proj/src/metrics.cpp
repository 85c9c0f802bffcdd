#include "semreg/metrics.hpp"

#include "semreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace semreg {

double p2s(const Mesh& pred, const Bvh& gt) {
  if (pred.positions.empty()) throw Error("p2s: prediction has no vertices");
  if (gt.empty()) throw Error("p2s: ground truth has no faces");
  const std::size_t n = pred.positions.size();
  std::vector<double> dist(n);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    dist[i] = gt.closest_point(pred.positions[i]).distance;
  }
  return 100.0 * deterministic_sum(n, [&](std::size_t i) { return dist[i]; }) / static_cast<double>(n);
}

double chamfer(const Mesh& a, const Bvh& bvh_a, const Mesh& b, const Bvh& bvh_b) {
  return 0.5 * (p2s(a, bvh_b) + p2s(b, bvh_a));
}

double chamfer(const Mesh& a, const Mesh& b) {
  if (a.faces.empty() || b.faces.empty()) throw Error("chamfer: both meshes need faces");
  return chamfer(a, Bvh(a), b, Bvh(b));
}

namespace {
constexpr int kBandRows = 16;
}

NormalImage render_normals(const Mesh& mesh, const Camera& cam) {
  cam.validate();
  const int W = cam.width, H = cam.height;
  NormalImage img;
  img.width = W;
  img.height = H;
  const std::size_t n = static_cast<std::size_t>(W) * H;
  img.normal.assign(n, Vec3::Zero());
  img.covered.assign(n, 0);
  img.face.assign(n, -1);
  const bool pinhole = cam.kind == Camera::Kind::Pinhole;

  const int nf = mesh.face_count();
  struct Screen {
    Vec2 p[3];
    double key[3];  // depth for orthographic, 1/z for pinhole (both affine in screen space)
    Vec3 normal;
    int i0, i1, j0, j1;
    bool ok;
  };
  std::vector<Screen> scr(nf);
  const int bands = (H + kBandRows - 1) / kBandRows;
  std::vector<std::vector<int>> bucket(bands);
  for (int f = 0; f < nf; ++f) {
    Screen& s = scr[f];
    s.ok = false;
    const Face& t = mesh.faces[f];
    bool all_front = true;
    for (int k = 0; k < 3; ++k) {
      const Camera::Projection p = cam.project(mesh.positions[t[k]]);
      all_front = all_front && p.in_front;
      s.p[k] = p.pixel;
      s.key[k] = pinhole ? 1.0 / p.depth : p.depth;
    }
    if (!all_front) continue;
    const Vec3 n3 = (mesh.positions[t[1]] - mesh.positions[t[0]]).cross(mesh.positions[t[2]] - mesh.positions[t[0]]);
    if (n3.norm() < 2.0 * kDegenerateArea) continue;
    s.normal = cam.rotation * n3.normalized();
    const double xmin = std::min({s.p[0].x(), s.p[1].x(), s.p[2].x()});
    const double xmax = std::max({s.p[0].x(), s.p[1].x(), s.p[2].x()});
    const double ymin = std::min({s.p[0].y(), s.p[1].y(), s.p[2].y()});
    const double ymax = std::max({s.p[0].y(), s.p[1].y(), s.p[2].y()});
    s.j0 = std::max(0, static_cast<int>(std::ceil(xmin - 0.5 - 1e-9)));
    s.j1 = std::min(W - 1, static_cast<int>(std::floor(xmax - 0.5 + 1e-9)));
    s.i0 = std::max(0, static_cast<int>(std::ceil(ymin - 0.5 - 1e-9)));
    s.i1 = std::min(H - 1, static_cast<int>(std::floor(ymax - 0.5 + 1e-9)));
    if (s.i0 > s.i1 || s.j0 > s.j1) continue;
    s.ok = true;
    for (int b = s.i0 / kBandRows; b <= s.i1 / kBandRows; ++b) bucket[b].push_back(f);
  }

  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(dynamic, 1)
  for (int band = 0; band < bands; ++band) {
    const int lo = band * kBandRows, hi = std::min(H - 1, lo + kBandRows - 1);
    for (int f : bucket[band]) {
      const Screen& s = scr[f];
      const Vec2 e1 = s.p[1] - s.p[0], e2 = s.p[2] - s.p[0];
      const double den = e1.x() * e2.y() - e1.y() * e2.x();
      if (std::abs(den) < 1e-18) continue;
      for (int i = std::max(lo, s.i0); i <= std::min(hi, s.i1); ++i) {
        for (int j = s.j0; j <= s.j1; ++j) {
          const Vec2 q = Vec2(j + 0.5, i + 0.5) - s.p[0];
          const double b1 = (q.x() * e2.y() - q.y() * e2.x()) / den;
          const double b2 = (e1.x() * q.y() - e1.y() * q.x()) / den;
          const double b0 = 1.0 - b1 - b2;
          if (b0 < -1e-12 || b1 < -1e-12 || b2 < -1e-12) continue;
          const double key = b0 * s.key[0] + b1 * s.key[1] + b2 * s.key[2];
          const double depth = pinhole ? 1.0 / key : key;
          const std::size_t t = static_cast<std::size_t>(i) * W + j;
          if (depth < zbuf[t]) {  // strict: equal depth keeps the lower face index
            zbuf[t] = depth;
            img.normal[t] = s.normal;
            img.covered[t] = 1;
            img.face[t] = f;
          }
        }
      }
    }
  }
  return img;
}

std::vector<Camera> default_views(const Mesh& a, const Mesh& b, int resolution) {
  Aabb box = a.bounds();
  box.extend(b.bounds());
  if (box.empty()) throw Error("default_views: empty meshes");
  return {Camera::fit_orthographic(box, Vec3(0, 0, -1), Vec3(0, -1, 0), resolution, resolution),
          Camera::fit_orthographic(box, Vec3(0, 0, 1), Vec3(0, -1, 0), resolution, resolution)};
}

double normal_image_error(const Mesh& a, const Mesh& b, const std::vector<Camera>& views) {
  if (views.empty()) throw Error("normal_image_error: no views");
  double total = 0.0;
  int used = 0;
  for (const Camera& cam : views) {
    const NormalImage ia = render_normals(a, cam);
    const NormalImage ib = render_normals(b, cam);
    const std::size_t n = ia.normal.size();
    const double count = deterministic_sum(n, [&](std::size_t t) { return (ia.covered[t] && ib.covered[t]) ? 1.0 : 0.0; });
    if (count == 0.0) continue;
    const double sum = deterministic_sum(n, [&](std::size_t t) {
      return (ia.covered[t] && ib.covered[t]) ? (ia.normal[t] - ib.normal[t]).norm() : 0.0;
    });
    total += sum / count;
    ++used;
  }
  if (used == 0) throw Error("normal_image_error: the meshes share no rendered pixels");
  return total / used;
}

QualityStats mesh_quality_stats(const Mesh& mesh) {
  const QualityField q = triangle_quality(mesh);
  const std::size_t nf = mesh.faces.size();
  if (nf == 0 || std::all_of(q.degenerate.begin(), q.degenerate.end(), [](std::uint8_t d) { return d != 0; })) {
    throw Error("mesh_quality_stats: no non-degenerate faces");
  }
  const double thirty = std::numbers::pi / 6.0;
  QualityStats s;
  s.g_avg = deterministic_sum(nf, [&](std::size_t f) { return q.quality[f]; }) / static_cast<double>(nf);
  const double below = deterministic_sum(nf, [&](std::size_t f) {
    if (q.degenerate[f]) return 1.0;
    const Face& t = mesh.faces[f];
    return min_interior_angle(mesh.positions[t[0]], mesh.positions[t[1]], mesh.positions[t[2]]) < thirty ? 1.0 : 0.0;
  });
  s.pct_angle_below_30 = 100.0 * below / static_cast<double>(nf);
  return s;
}

} // namespace semreg
