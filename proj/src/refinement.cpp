#include "semreg/refinement.hpp"

#include "semreg/parallel.hpp"

#include <cmath>

namespace semreg {

SmoothResult laplacian_smooth(const Mesh& mesh, double lambda, int iterations) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("laplacian_smooth: lambda must lie in (0, 1]");
  if (iterations < 0) throw Error("laplacian_smooth: iterations must be >= 0");
  const auto nbrs = vertex_neighbors(mesh);
  SmoothResult res;
  res.mesh = mesh;
  const int nv = mesh.vertex_count();
  res.isolated.assign(nv, 0);
  for (int v = 0; v < nv; ++v) res.isolated[v] = nbrs[v].empty();
  std::vector<Vec3> next(nv);
  for (int it = 0; it < iterations; ++it) {
    const std::vector<Vec3>& cur = res.mesh.positions;
#pragma omp parallel for schedule(static)
    for (int v = 0; v < nv; ++v) {
      if (nbrs[v].empty()) {
        next[v] = cur[v];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (int u : nbrs[v]) mean += cur[u];
      mean /= static_cast<double>(nbrs[v].size());
      next[v] = cur[v] + lambda * (mean - cur[v]);
    }
    res.mesh.positions.swap(next);
  }
  return res;
}

void ImageStack::validate() const {
  auto check = [](const Image& im, const char* name) {
    if (im.channels != 3 || im.width <= 0 || im.height <= 0) {
      throw Error(std::string("image stack: ") + name + " must be a non-empty RGB image");
    }
  };
  check(rgb, "image");
  check(front_normal, "front normal map");
  check(back_normal, "back normal map");
  if (rgb.width != front_normal.width || rgb.width != back_normal.width || rgb.height != front_normal.height ||
      rgb.height != back_normal.height) {
    throw Error("image stack: resolutions differ");
  }
}

FeatureMap project_image_to_uv(const ImageStack& stack, const UvMap& positions, const Camera& cam) {
  stack.validate();
  cam.validate();
  if (positions.channels != 3) throw Error("project_image_to_uv: position map must have 3 channels");
  FeatureMap out{UvMap(positions.width, positions.height, kFeatureChannels), Flags(positions.texel_count(), 0),
                 Flags(positions.texel_count(), 0)};
  out.features.coverage = positions.coverage;
  const double W = stack.rgb.width;
  const auto n = static_cast<std::ptrdiff_t>(positions.texel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    if (!positions.covered(t)) continue;
    const Vec3 x(positions.at(t, 0), positions.at(t, 1), positions.at(t, 2));
    const Camera::Projection p = cam.project(x);
    if (!p.in_front) {
      out.behind[t] = 1;
      continue;
    }
    float rgb[3], nf[3], nb[3];
    if (!p.in_frame || !stack.rgb.sample(p.pixel.x(), p.pixel.y(), rgb) ||
        !stack.front_normal.sample(p.pixel.x(), p.pixel.y(), nf) ||
        !stack.back_normal.sample(W - p.pixel.x(), p.pixel.y(), nb)) {
      out.out_of_frame[t] = 1;
      continue;
    }
    double* f = &out.features.data[t * kFeatureChannels];
    for (int c = 0; c < 3; ++c) {
      f[c] = rgb[c];
      f[3 + c] = 2.0 * nf[c] - 1.0;
      f[6 + c] = 2.0 * nb[c] - 1.0;
    }
    f[9] = p.depth;
  }
  return out;
}

double displacement_error(const UvMap& z, const UvMap& s_c, const UvMap& s_l, const UvMap& n_l) {
  if (z.channels != 1) throw Error("displacement_error: z must have one channel");
  const MapResult target = encode_displacement(s_c, s_l, n_l);
  if (!z.same_shape(target.map)) throw Error("displacement_error: resolution mismatch");
  const std::size_t n = z.texel_count();
  const double count = deterministic_sum(n, [&](std::size_t t) {
    return (z.covered(t) && target.map.covered(t)) ? 1.0 : 0.0;
  });
  if (count == 0.0) throw Error("displacement_error: empty coverage");
  const double sum = deterministic_sum(n, [&](std::size_t t) {
    if (!z.covered(t) || !target.map.covered(t)) return 0.0;
    const double e = z.data[t] - target.map.data[t];
    return e * e;
  });
  return sum / count;
}

double normal_map_error(const UvMap& n_a, const UvMap& n_b) {
  if (!n_a.same_shape(n_b) || n_a.channels != n_b.channels) throw Error("normal_map_error: shape mismatch");
  const std::size_t n = n_a.texel_count();
  const int C = n_a.channels;
  const double count =
      deterministic_sum(n, [&](std::size_t t) { return (n_a.covered(t) && n_b.covered(t)) ? 1.0 : 0.0; });
  if (count == 0.0) throw Error("normal_map_error: empty coverage");
  const double sum = deterministic_sum(n, [&](std::size_t t) {
    if (!n_a.covered(t) || !n_b.covered(t)) return 0.0;
    double acc = 0.0;
    for (int c = 0; c < C; ++c) {
      const double e = n_a.at(t, c) - n_b.at(t, c);
      acc += e * e;
    }
    return acc;
  });
  return sum / count;
}

RefineResult refine_apply(const Mesh& mesh, const SemanticTemplate& tmpl, const UvMap& z, double lambda,
                          int iterations) {
  if (mesh.vertex_count() != tmpl.vertex_count() || mesh.faces != tmpl.mesh.faces) {
    throw Error("refine_apply: mesh does not have the template connectivity");
  }
  if (z.channels != 1) throw Error("refine_apply: z must have one channel");
  const Mesh smooth = iterations > 0 ? laplacian_smooth(mesh, lambda, iterations).mesh : mesh;
  const NormalField normals = vertex_normals(smooth);
  const UvRaster raster = rasterize_uv(tmpl.atlas, z.width, z.height);
  const UvMap s_l = interpolate_attribute(raster, tmpl.mesh.faces, smooth.positions);
  const UvMap n_l = interpolate_attribute(raster, tmpl.mesh.faces, normals.normals);
  const MapResult s_r = apply_displacement(s_l, n_l, z);
  const VertexSamples v = resample_vertices_from_map(s_r.map, tmpl);
  RefineResult res;
  res.mesh.faces = mesh.faces;
  res.mesh.positions.resize(mesh.positions.size());
  for (int i = 0; i < mesh.vertex_count(); ++i) res.mesh.positions[i] = v.vec3(i);
  res.resample_flagged = v.flagged;
  return res;
}

} // namespace semreg
