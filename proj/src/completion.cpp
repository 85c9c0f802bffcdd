#include "semreg/completion.hpp"

#include "semreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace semreg {

namespace {

constexpr int kDi[4] = {-1, 1, 0, 0};
constexpr int kDj[4] = {0, 0, -1, 1};

} // namespace

InpaintResult harmonic_inpaint(const UvMap& field, const HoleMask& hole, const InpaintOptions& opts) {
  if (field.channels != 1 || hole.channels != 1) throw Error("harmonic_inpaint: expects one-channel maps");
  if (!field.same_shape(hole)) throw Error("harmonic_inpaint: resolution mismatch");
  if (!(opts.tolerance > 0.0)) throw Error("harmonic_inpaint: tolerance must be positive");
  const int W = field.width, H = field.height;
  const std::size_t n = field.texel_count();

  InpaintResult res;
  res.field = field;
  res.unreachable.assign(n, 0);
  std::vector<int> unknown_id(n, -1);
  std::vector<std::size_t> unknowns;
  std::size_t known = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!field.covered(t)) continue;
    if (hole.data[t] != 0.0) {
      unknown_id[t] = static_cast<int>(unknowns.size());
      unknowns.push_back(t);
    } else {
      ++known;
    }
  }
  if (known == 0) throw Error("harmonic_inpaint: no known texels");
  if (unknowns.empty()) {
    res.converged = true;
    return res;
  }

  auto for_neighbors = [&](std::size_t t, auto&& fn) {
    const int i = static_cast<int>(t / W), j = static_cast<int>(t % W);
    for (int k = 0; k < 4; ++k) {
      const int ii = i + kDi[k], jj = j + kDj[k];
      if (ii < 0 || jj < 0 || ii >= H || jj >= W) continue;
      const std::size_t s = static_cast<std::size_t>(ii) * W + jj;
      if (field.covered(s)) fn(s);
    }
  };

  // Unknowns reachable from the Dirichlet data.
  std::vector<std::uint8_t> reached(unknowns.size(), 0);
  std::deque<int> queue;
  for (std::size_t k = 0; k < unknowns.size(); ++k) {
    bool touches_known = false;
    for_neighbors(unknowns[k], [&](std::size_t s) { touches_known |= unknown_id[s] < 0; });
    if (touches_known) {
      reached[k] = 1;
      queue.push_back(static_cast<int>(k));
    }
  }
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    for_neighbors(unknowns[k], [&](std::size_t s) {
      const int u = unknown_id[s];
      if (u >= 0 && !reached[u]) {
        reached[u] = 1;
        queue.push_back(u);
      }
    });
  }

  // Compact system over reachable unknowns: deg x_i - sum x_j = sum f_known.
  std::vector<int> row_of(unknowns.size(), -1);
  std::vector<std::size_t> texel;
  for (std::size_t k = 0; k < unknowns.size(); ++k) {
    if (reached[k]) {
      row_of[k] = static_cast<int>(texel.size());
      texel.push_back(unknowns[k]);
    } else {
      res.unreachable[unknowns[k]] = 1;
      res.field.data[unknowns[k]] = 0.0;
    }
  }
  const int m = static_cast<int>(texel.size());
  std::vector<double> deg(m, 0.0), b(m, 0.0);
  std::vector<std::array<int, 4>> nbr(m);
  double seed_sum = 0.0;
  std::size_t seed_count = 0;
  for (int r = 0; r < m; ++r) {
    nbr[r].fill(-1);
    int slot = 0;
    for_neighbors(texel[r], [&](std::size_t s) {
      deg[r] += 1.0;
      const int u = unknown_id[s];
      if (u >= 0) {
        nbr[r][slot++] = row_of[u];
      } else {
        b[r] += field.data[s];
        seed_sum += field.data[s];
        ++seed_count;
      }
    });
  }
  const double seed = seed_count > 0 ? seed_sum / static_cast<double>(seed_count) : 0.0;

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < m; ++r) {
      double acc = deg[r] * x[r];
      for (int k = 0; k < 4 && nbr[r][k] >= 0; ++k) acc -= x[nbr[r][k]];
      y[r] = acc;
    }
  };
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) {
    return deterministic_sum(static_cast<std::size_t>(m), [&](std::size_t i) { return a[i] * c[i]; });
  };
  auto scaled_residual = [&](const std::vector<double>& r) {
    return deterministic_max(static_cast<std::size_t>(m), 0.0,
                             [&](std::size_t i) { return std::abs(r[i]) / deg[i]; });
  };

  std::vector<double> x(m, seed), r(m), z(m), p(m), ap(m);
  apply(x, ap);
  for (int i = 0; i < m; ++i) r[i] = b[i] - ap[i];
  res.residual = scaled_residual(r);
  for (int i = 0; i < m; ++i) z[i] = r[i] / deg[i];
  p = z;
  double rz = dot(r, z);
  int it = 0;
  while (res.residual >= opts.tolerance && it < opts.max_iterations) {
    apply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      z[i] = r[i] / deg[i];
    }
    ++it;
    res.residual = scaled_residual(r);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
  }
  // Report the true residual rather than the recursively updated one.
  apply(x, ap);
  for (int i = 0; i < m; ++i) r[i] = b[i] - ap[i];
  res.residual = scaled_residual(r);
  res.iterations = it;
  res.converged = res.residual < opts.tolerance;
  for (int i = 0; i < m; ++i) res.field.data[texel[i]] = x[i];
  return res;
}

void CompletionConfig::validate() const {
  if (!(solver.tolerance > 0.0)) throw Error("completion: tolerance must be positive");
  if (solver.max_iterations < 0) throw Error("completion: max iterations must be non-negative");
  if (dilation < 0) throw Error("completion: dilation must be non-negative");
  if (blend_band < 0) throw Error("completion: blend band must be non-negative");
}

std::vector<int> resolve_part_labels(const SemanticTemplate& tmpl, const std::vector<std::string>& names) {
  std::vector<int> ids;
  auto add = [&](const std::string& name) {
    const int id = tmpl.label_id(name);
    if (id < 0) throw Error("unknown part label '" + name + "'");
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  };
  for (const std::string& name : names) {
    if (name == "hands") {
      add("left-hand");
      add("right-hand");
    } else if (name == "feet") {
      add("left-foot");
      add("right-foot");
    } else if (name == "all") {
      for (const std::string& l : tmpl.label_names) add(l);
    } else {
      add(name);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

CompletionResult complete_mesh(const SnsResult& sns, const SemanticTemplate& tmpl, const Pose& pose,
                               const CompletionConfig& cfg) {
  cfg.validate();
  const int nv = tmpl.vertex_count();
  if (sns.sampled.vertex_count() != nv || sns.valid_vertex.size() != static_cast<std::size_t>(nv)) {
    throw Error("complete_mesh: SNS result does not match the template");
  }
  if (sns.hole_mask.channels != 1 || sns.hole_mask.width <= 0) throw Error("complete_mesh: missing hole mask");
  const int W = sns.hole_mask.width, H = sns.hole_mask.height;

  Mesh posed;
  posed.positions = lbs_pose(tmpl, tmpl.mesh.positions, pose);
  posed.faces = tmpl.mesh.faces;
  const NormalField normals = vertex_normals(posed);

  const UvRaster raster = rasterize_uv(tmpl.atlas, W, H);
  const UvMap s_sample = interpolate_attribute(raster, tmpl.mesh.faces, sns.sampled.positions);
  const UvMap s_pose = interpolate_attribute(raster, tmpl.mesh.faces, posed.positions);
  const UvMap n_pose = interpolate_attribute(raster, tmpl.mesh.faces, normals.normals);
  const MapResult dbar = encode_displacement(s_sample, s_pose, n_pose);

  // Fill region: supplied holes plus every texel whose triangle touches an invalid vertex.
  HoleMask region = empty_mask(s_pose);
  for (std::size_t t = 0; t < region.texel_count(); ++t) {
    const int f = raster.face[t];
    if (f < 0) continue;
    bool invalid = sns.hole_mask.data[t] != 0.0 || dbar.flagged[t];
    for (int v : tmpl.mesh.faces[f]) invalid |= !sns.valid_vertex[v];
    if (invalid) region.data[t] = 1.0;
  }
  region = dilate_mask(region, cfg.dilation);

  CompletionResult out;
  InpaintResult filled = harmonic_inpaint(dbar.map, region, cfg.solver);
  out.solver_iterations = filled.iterations;
  UvMap d = std::move(filled.field);

  // Part replacement: w = 1 inside the replaced labels, fading linearly over the band.
  out.replace_weight = UvMap(W, H, 1);
  out.replace_weight.coverage = s_pose.coverage;
  const std::vector<int> parts = resolve_part_labels(tmpl, cfg.replace_parts);
  if (!parts.empty()) {
    std::vector<double> indicator(nv, 0.0);
    for (int v = 0; v < nv; ++v) {
      if (std::binary_search(parts.begin(), parts.end(), static_cast<int>(tmpl.labels[v]))) indicator[v] = 1.0;
    }
    const UvMap ind = interpolate_attribute(raster, tmpl.mesh.faces, indicator, 1);
    std::vector<int> dist(ind.texel_count(), -1);
    std::deque<std::size_t> queue;
    for (std::size_t t = 0; t < ind.texel_count(); ++t) {
      if (ind.covered(t) && ind.data[t] >= 0.5) {
        dist[t] = 0;
        queue.push_back(t);
      }
    }
    while (!queue.empty()) {
      const std::size_t t = queue.front();
      queue.pop_front();
      if (dist[t] >= cfg.blend_band) continue;
      const int i = static_cast<int>(t / W), j = static_cast<int>(t % W);
      for (int k = 0; k < 4; ++k) {
        const int ii = i + kDi[k], jj = j + kDj[k];
        if (ii < 0 || jj < 0 || ii >= H || jj >= W) continue;
        const std::size_t s = static_cast<std::size_t>(ii) * W + jj;
        if (!ind.covered(s) || dist[s] >= 0) continue;
        dist[s] = dist[t] + 1;
        queue.push_back(s);
      }
    }
    for (std::size_t t = 0; t < ind.texel_count(); ++t) {
      if (dist[t] < 0) continue;
      const double w = std::max(0.0, 1.0 - static_cast<double>(dist[t]) / (cfg.blend_band + 1));
      out.replace_weight.data[t] = w;
      d.data[t] *= 1.0 - w;
    }
  }

  const MapResult s_full = apply_displacement(s_pose, n_pose, d);
  const VertexSamples resampled = resample_vertices_from_map(s_full.map, tmpl);

  // Vertices whose footprint lies entirely in the known, unreplaced region keep their exact sample.
  const std::vector<int> first_uv = first_uv_of_vertex(tmpl);
  out.passthrough.assign(nv, 0);
  out.mesh.positions.resize(nv);
  for (int v = 0; v < nv; ++v) {
    out.mesh.positions[v] = resampled.vec3(v);
    if (!sns.valid_vertex[v] || resampled.flagged[v] || first_uv[v] < 0) continue;
    const BilinearStencil st = bilinear_stencil(W, H, tmpl.atlas.uvs[first_uv[v]]);
    bool clean = true;
    for (int k = 0; k < st.count && clean; ++k) {
      const std::size_t t = st.texel[k];
      if (!s_full.map.covered(t)) continue;
      clean = region.data[t] == 0.0 && out.replace_weight.data[t] == 0.0;
    }
    if (clean) {
      out.mesh.positions[v] = sns.sampled.positions[v];
      out.passthrough[v] = 1;
    }
  }
  out.mesh.faces = tmpl.mesh.faces;
  out.resample_flagged = resampled.flagged;
  out.displacement = std::move(d);
  out.fill_region = std::move(region);
  return out;
}

double masked_uv_error(const UvMap& s_p, const UvMap& s_ref, const HoleMask& h_outer, const HoleMask& h_inner) {
  if (!s_p.same_shape(s_ref) || !s_p.same_shape(h_outer) || !s_p.same_shape(h_inner)) {
    throw Error("masked_uv_error: resolution mismatch");
  }
  if (s_p.channels != s_ref.channels) throw Error("masked_uv_error: channel mismatch");
  const std::size_t n = s_p.texel_count();
  for (std::size_t t = 0; t < n; ++t) {
    if (h_inner.data[t] > h_outer.data[t]) throw Error("masked_uv_error: inner mask is not inside the outer mask");
  }
  const double weight = deterministic_sum(n, [&](std::size_t t) { return h_outer.data[t] - h_inner.data[t]; });
  if (!(weight > 0.0)) throw Error("masked_uv_error: empty annulus");
  const int C = s_p.channels;
  const double err = deterministic_sum(n, [&](std::size_t t) {
    const double m = h_outer.data[t] - h_inner.data[t];
    if (m == 0.0) return 0.0;
    double acc = 0.0;
    for (int c = 0; c < C; ++c) {
      const double e = (s_p.at(t, c) - s_ref.at(t, c)) * m;
      acc += e * e;
    }
    return acc;
  });
  return err / weight;
}

} // namespace semreg
