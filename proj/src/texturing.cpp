#include "semreg/texturing.hpp"

#include "semreg/parallel.hpp"


#include <cmath>

namespace semreg {

Flags vertex_visibility(const Mesh& mesh, const Bvh& bvh, const Camera& cam) {
  cam.validate();
  const int nv = mesh.vertex_count();
  Flags visible(nv, 0);
  const double eps = 1e-4 * mesh.bounds().diagonal();
  const bool pinhole = cam.kind == Camera::Kind::Pinhole;
#pragma omp parallel for schedule(dynamic, 256)
  for (int v = 0; v < nv; ++v) {
    const Vec3& p = mesh.positions[v];
    if (pinhole && !cam.project(p).in_front) continue;
    const Vec3 dir = cam.direction_to_camera(p);
    const double t_max = pinhole ? (cam.center() - p).norm() - eps : std::numeric_limits<double>::infinity();
    if (t_max <= 0.0) {
      visible[v] = 1;
      continue;
    }
    visible[v] = !bvh.raycast(p + eps * dir, dir, 0.0, t_max).has_value();
  }
  return visible;
}

PartialTexture sample_partial_texture(const Mesh& mesh, const SemanticTemplate& tmpl, const Image& image,
                                      const Camera& cam, int resolution, int erosion) {
  if (mesh.vertex_count() != tmpl.vertex_count() || mesh.faces != tmpl.mesh.faces) {
    throw Error("sample_partial_texture: mesh does not have the template connectivity");
  }
  if (image.channels != 3) throw Error("sample_partial_texture: image must be RGB");
  if (erosion < 0) throw Error("sample_partial_texture: erosion must be >= 0");
  const Bvh bvh(mesh);
  PartialTexture out;
  out.vertex_visible = vertex_visibility(mesh, bvh, cam);
  const UvRaster raster = rasterize_uv(tmpl.atlas, resolution, resolution);
  const UvMap s = interpolate_attribute(raster, tmpl.mesh.faces, mesh.positions);

  HoleMask hidden = empty_mask(s);
  for (std::size_t t = 0; t < s.texel_count(); ++t) {
    const int f = raster.face[t];
    if (f < 0) continue;
    bool ok = true;
    for (int v : tmpl.mesh.faces[f]) ok = ok && out.vertex_visible[v];
    if (ok) {
      const Camera::Projection p = cam.project(Vec3(s.at(t, 0), s.at(t, 1), s.at(t, 2)));
      ok = p.in_front && p.in_frame;
    }
    if (!ok) hidden.data[t] = 1.0;
  }
  hidden = dilate_mask(hidden, erosion);

  out.texture = UvMap(resolution, resolution, 3);
  out.texture.coverage = s.coverage;
  out.visible = empty_mask(s);
  const auto n = static_cast<std::ptrdiff_t>(s.texel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    if (!s.covered(t) || hidden.data[t] != 0.0) continue;
    const Camera::Projection p = cam.project(Vec3(s.at(t, 0), s.at(t, 1), s.at(t, 2)));
    float rgb[3];
    if (!image.sample(p.pixel.x(), p.pixel.y(), rgb)) continue;
    for (int c = 0; c < 3; ++c) out.texture.at(t, c) = rgb[c];
    out.visible.data[t] = 1.0;
  }
  return out;
}

Similarity procrustes(std::span<const Vec3> from, std::span<const Vec3> to, bool with_scale) {
  if (from.size() != to.size() || from.empty()) throw Error("procrustes: point sets must be non-empty and equal size");
  const double n = static_cast<double>(from.size());
  Vec3 mu_a = Vec3::Zero(), mu_b = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    mu_a += from[i];
    mu_b += to[i];
  }
  mu_a /= n;
  mu_b /= n;
  Mat3 cov = Mat3::Zero();
  double var_a = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Vec3 a = from[i] - mu_a;
    cov += (to[i] - mu_b) * a.transpose();
    var_a += a.squaredNorm();
  }
  cov /= n;
  var_a /= n;
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2, 2) = -1.0;
  Similarity s;
  s.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  s.scale = with_scale && var_a > 0.0 ? (svd.singularValues().asDiagonal() * d).trace() / var_a : 1.0;
  s.translation = mu_b - s.scale * (s.rotation * mu_a);
  return s;
}

namespace {

// Transform parameters for acceleration: rotation vector, translation, log scale.
using Params = Eigen::Matrix<double, 7, 1>;

Params to_params(const Similarity& s) {
  const Eigen::AngleAxisd aa(s.rotation);
  Params p;
  p.head<3>() = aa.angle() * aa.axis();
  p.segment<3>(3) = s.translation;
  p(6) = std::log(s.scale);
  return p;
}

Similarity from_params(const Params& p) {
  Similarity s;
  const double angle = p.head<3>().norm();
  s.rotation = angle > 0.0 ? Eigen::AngleAxisd(angle, p.head<3>() / angle).toRotationMatrix() : Mat3::Identity();
  s.translation = p.segment<3>(3);
  s.scale = std::exp(p(6));
  return s;
}

} // namespace

IcpResult icp_align(std::span<const Vec3> source, const Bvh& target, const IcpConfig& cfg) {
  if (target.empty()) throw Error("icp_align: empty target");
  if (cfg.max_iters < 0 || !(cfg.tol >= 0.0)) throw Error("icp_align: bad configuration");
  if (source.size() < 3) throw Error("icp_align: need at least 3 source points");
  {
    Vec3 mu = Vec3::Zero();
    for (const Vec3& p : source) mu += p;
    mu /= static_cast<double>(source.size());
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : source) cov += (p - mu) * (p - mu).transpose();
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 ev = eig.eigenvalues();
    if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-300))) throw Error("icp_align: source points are collinear");
  }

  const std::size_t n = source.size();
  struct State {
    Similarity transform;
    std::vector<Vec3> match;
    double mse = 0.0;
    double mean = 0.0;
  };
  auto evaluate = [&](const Similarity& tr) {
    State st;
    st.transform = tr;
    st.match.resize(n);
    std::vector<double> dist(n);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const Vec3 x = tr.apply(source[i]);
      st.match[i] = target.closest_point(x).point;
      dist[i] = (x - st.match[i]).norm();
    }
    const double dn = static_cast<double>(n);
    st.mean = deterministic_sum(n, [&](std::size_t i) { return dist[i]; }) / dn;
    st.mse = deterministic_sum(n, [&](std::size_t i) { return dist[i] * dist[i]; }) / dn;
    return st;
  };

  IcpResult res;
  State cur = evaluate(Similarity{});
  res.mean_distance = cur.mean;
  if (cur.mean < cfg.tol) return res;  // already aligned

  // Anderson-accelerated fixed point iteration x <- G(x), G = Procrustes onto the
  // current closest points. An accelerated guess is kept only when it lowers the
  // squared error; otherwise the plain ICP step is taken and the history reset,
  // so the objective never increases.
  constexpr int kWindow = 5;
  std::vector<Params> dg, df;
  Params prev_g = Params::Zero(), prev_f = Params::Zero();
  bool have_prev = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    res.history.push_back(std::sqrt(cur.mse));
    const Similarity g_tr = procrustes(source, cur.match, cfg.with_scale);
    const Params g = to_params(g_tr);
    const Params f = g - to_params(cur.transform);
    if (have_prev) {
      dg.push_back(g - prev_g);
      df.push_back(f - prev_f);
      if (static_cast<int>(dg.size()) > kWindow) {
        dg.erase(dg.begin());
        df.erase(df.begin());
      }
    }
    prev_g = g;
    prev_f = f;
    have_prev = true;

    State next;
    bool accepted = false;
    if (!df.empty()) {
      Eigen::MatrixXd F(7, df.size()), G(7, dg.size());
      for (std::size_t k = 0; k < df.size(); ++k) {
        F.col(k) = df[k];
        G.col(k) = dg[k];
      }
      const Eigen::VectorXd gamma = F.completeOrthogonalDecomposition().solve(f);
      const Params x = g - G * gamma;
      if (x.allFinite()) {
        next = evaluate(from_params(x));
        accepted = next.mse < cur.mse;
      }
    }
    if (!accepted) {
      next = evaluate(g_tr);
      dg.clear();
      df.clear();
    }
    ++res.iterations;
    const double gain = std::sqrt(cur.mse) - std::sqrt(next.mse);
    cur = std::move(next);
    res.transform = cur.transform;
    res.mean_distance = cur.mean;
    if (gain < cfg.tol) break;
  }
  return res;
}

ColorTransfer transfer_vertex_colors(const Mesh& semantic, const Bvh& scan, const UvAtlas* atlas, int resolution,
                                     const IcpConfig& cfg) {
  const Mesh& scan_mesh = scan.mesh();
  if (!scan_mesh.has_colors()) throw Error("transfer_vertex_colors: scan has no vertex colors");
  ColorTransfer out;
  out.icp = icp_align(semantic.positions, scan, cfg);
  const int nv = semantic.vertex_count();
  out.colors.resize(nv);
#pragma omp parallel for schedule(dynamic, 256)
  for (int v = 0; v < nv; ++v) {
    const SurfacePoint sp = scan.closest_point(out.icp.transform.apply(semantic.positions[v]));
    const Face& f = scan_mesh.faces[sp.face];
    // Offsets from the dominant corner: exact on vertices and for constant colours.
    int k = 0;
    sp.bary.maxCoeff(&k);
    const Vec3& ck = scan_mesh.colors[f[k]];
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    out.colors[v] = ck + (sp.bary[a] * (scan_mesh.colors[f[a]] - ck) + sp.bary[b] * (scan_mesh.colors[f[b]] - ck));
  }
  if (atlas != nullptr && !atlas->empty()) {
    atlas->validate(semantic.face_count());
    out.texture = interpolate_attribute(rasterize_uv(*atlas, resolution, resolution), semantic.faces, out.colors);
  }
  return out;
}

} // namespace semreg
