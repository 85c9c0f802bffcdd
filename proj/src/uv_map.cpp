#include "semreg/uv_map.hpp"

#include "semreg/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace semreg {

UvMap::UvMap(int w, int h, int c)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, 0.0),
      coverage(static_cast<std::size_t>(w) * h, 0) {
  if (w <= 0 || h <= 0 || c <= 0) throw Error("UvMap dimensions must be positive");
}

std::size_t UvMap::covered_count() const {
  return static_cast<std::size_t>(std::count(coverage.begin(), coverage.end(), std::uint8_t{1}));
}

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

constexpr double kUvDegenerate = 1e-14;  // twice the UV-space area
constexpr int kBandRows = 16;

void require_same(const UvMap& a, const UvMap& b, const char* what) {
  if (!a.same_shape(b)) throw Error(std::string(what) + ": resolution mismatch");
}

void require_channels(const UvMap& m, int c, const char* what) {
  if (m.channels != c) throw Error(std::string(what) + ": expected " + std::to_string(c) + " channels");
}

} // namespace

bool uv_barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p, Vec3& bary) {
  const double d = cross2(b - a, c - a);
  if (std::abs(d) < kUvDegenerate) return false;
  const double wb = cross2(p - a, c - a) / d;
  const double wc = cross2(b - a, p - a) / d;
  bary = Vec3(1.0 - wb - wc, wb, wc);
  return true;
}

bool uv_inside(const Vec3& bary) { return bary.minCoeff() >= -1e-12; }

Vec2 texel_center(int i, int j, int width, int height) {
  return {(j + 0.5) / width, 1.0 - (i + 0.5) / height};
}

UvRaster rasterize_uv(const UvAtlas& atlas, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("rasterize_uv: resolution must be positive");
  UvRaster r;
  r.width = width;
  r.height = height;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  r.face.assign(n, -1);
  r.bary.assign(n, Vec3::Zero());
  const int nf = static_cast<int>(atlas.faces.size());
  r.degenerate_faces.assign(nf, 0);

  struct Span {
    int i0, i1, j0, j1;
  };
  std::vector<Span> spans(nf);
  const int bands = (height + kBandRows - 1) / kBandRows;
  std::vector<std::vector<int>> bucket(bands);
  for (int f = 0; f < nf; ++f) {
    const Vec2& a = atlas.uvs[atlas.faces[f][0]];
    const Vec2& b = atlas.uvs[atlas.faces[f][1]];
    const Vec2& c = atlas.uvs[atlas.faces[f][2]];
    if (std::abs(cross2(b - a, c - a)) < kUvDegenerate) {
      r.degenerate_faces[f] = 1;
      continue;
    }
    const double umin = std::min({a.x(), b.x(), c.x()}), umax = std::max({a.x(), b.x(), c.x()});
    const double vmin = std::min({a.y(), b.y(), c.y()}), vmax = std::max({a.y(), b.y(), c.y()});
    Span s;
    s.j0 = std::max(0, static_cast<int>(std::ceil(umin * width - 0.5 - 1e-9)));
    s.j1 = std::min(width - 1, static_cast<int>(std::floor(umax * width - 0.5 + 1e-9)));
    s.i0 = std::max(0, static_cast<int>(std::ceil((1.0 - vmax) * height - 0.5 - 1e-9)));
    s.i1 = std::min(height - 1, static_cast<int>(std::floor((1.0 - vmin) * height - 0.5 + 1e-9)));
    spans[f] = s;
    if (s.i0 > s.i1 || s.j0 > s.j1) continue;
    for (int band = s.i0 / kBandRows; band <= s.i1 / kBandRows; ++band) bucket[band].push_back(f);
  }

#pragma omp parallel for schedule(dynamic, 1)
  for (int band = 0; band < bands; ++band) {
    const int row_lo = band * kBandRows;
    const int row_hi = std::min(height - 1, row_lo + kBandRows - 1);
    for (int f : bucket[band]) {  // ascending face order: first writer wins
      const Span& s = spans[f];
      const Vec2& a = atlas.uvs[atlas.faces[f][0]];
      const Vec2& b = atlas.uvs[atlas.faces[f][1]];
      const Vec2& c = atlas.uvs[atlas.faces[f][2]];
      for (int i = std::max(s.i0, row_lo); i <= std::min(s.i1, row_hi); ++i) {
        for (int j = s.j0; j <= s.j1; ++j) {
          const std::size_t t = static_cast<std::size_t>(i) * width + j;
          if (r.face[t] >= 0) continue;
          Vec3 w;
          if (uv_barycentric(a, b, c, texel_center(i, j, width, height), w) && uv_inside(w)) {
            r.face[t] = f;
            r.bary[t] = w;
          }
        }
      }
    }
  }
  return r;
}

UvMap interpolate_attribute(const UvRaster& raster, const std::vector<Face>& faces, std::span<const double> values,
                            int channels) {
  if (channels <= 0 || values.size() % channels != 0) throw Error("interpolate_attribute: bad channel count");
  UvMap m(raster.width, raster.height, channels);
  const std::size_t nv = values.size() / channels;
  for (const Face& tri : faces) {
    for (int k = 0; k < 3; ++k) {
      if (static_cast<std::size_t>(tri[k]) >= nv) throw Error("interpolate_attribute: attribute count mismatch");
    }
  }
  const auto n = static_cast<std::ptrdiff_t>(raster.texel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const int f = raster.face[t];
    if (f < 0) continue;
    const Face& tri = faces[f];
    const Vec3& w = raster.bary[t];
    m.coverage[t] = 1;
    // Anchored at the first corner so constant attributes come out exact.
    for (int c = 0; c < channels; ++c) {
      const double a = values[static_cast<std::size_t>(tri[0]) * channels + c];
      const double b = values[static_cast<std::size_t>(tri[1]) * channels + c];
      const double d = values[static_cast<std::size_t>(tri[2]) * channels + c];
      m.data[t * channels + c] = a + (w[1] * (b - a) + w[2] * (d - a));
    }
  }
  return m;
}

UvMap interpolate_attribute(const UvRaster& raster, const std::vector<Face>& faces, std::span<const Vec3> values) {
  std::vector<double> flat(values.size() * 3);
  for (std::size_t v = 0; v < values.size(); ++v) {
    for (int c = 0; c < 3; ++c) flat[3 * v + c] = values[v][c];
  }
  return interpolate_attribute(raster, faces, flat, 3);
}

UvMap rasterize_attribute_map(const SemanticTemplate& tmpl, std::span<const double> values, int channels,
                              int resolution) {
  if (values.size() != static_cast<std::size_t>(tmpl.vertex_count()) * channels) {
    throw Error("rasterize_attribute_map: attribute count must equal vertex count");
  }
  return interpolate_attribute(rasterize_uv(tmpl.atlas, resolution, resolution), tmpl.mesh.faces, values, channels);
}

UvMap rasterize_attribute_map(const SemanticTemplate& tmpl, std::span<const Vec3> values, int resolution) {
  if (values.size() != static_cast<std::size_t>(tmpl.vertex_count())) {
    throw Error("rasterize_attribute_map: attribute count must equal vertex count");
  }
  return interpolate_attribute(rasterize_uv(tmpl.atlas, resolution, resolution), tmpl.mesh.faces, values);
}

BilinearStencil bilinear_stencil(int width, int height, const Vec2& uv) {
  BilinearStencil st;
  st.x = uv.x() * width - 0.5;
  st.y = (1.0 - uv.y()) * height - 0.5;
  const int j0 = static_cast<int>(std::floor(st.x));
  const int i0 = static_cast<int>(std::floor(st.y));
  const double ax = st.x - j0, ay = st.y - i0;
  for (int di = 0; di < 2; ++di) {
    for (int dj = 0; dj < 2; ++dj) {
      const int i = i0 + di, j = j0 + dj;
      if (i < 0 || j < 0 || i >= height || j >= width) continue;
      const double w = (di ? ay : 1.0 - ay) * (dj ? ax : 1.0 - ax);
      if (w <= 0.0) continue;
      st.texel[st.count] = static_cast<std::size_t>(i) * width + j;
      st.weight[st.count] = w;
      ++st.count;
    }
  }
  return st;
}

std::vector<int> first_uv_of_vertex(const SemanticTemplate& tmpl) {
  std::vector<int> first(tmpl.vertex_count(), -1);
  for (std::size_t f = 0; f < tmpl.mesh.faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int& slot = first[tmpl.mesh.faces[f][k]];
      if (slot < 0) slot = tmpl.atlas.faces[f][k];
    }
  }
  return first;
}

VertexSamples resample_vertices_from_map(const UvMap& map, const SemanticTemplate& tmpl) {
  if (map.covered_count() == 0) throw Error("resample_vertices_from_map: map has no coverage");
  const std::vector<int> first = first_uv_of_vertex(tmpl);
  const int nv = tmpl.vertex_count();
  const int C = map.channels;
  VertexSamples out;
  out.channels = C;
  out.values.assign(static_cast<std::size_t>(nv) * C, 0.0);
  out.flagged.assign(nv, 0);
  const int W = map.width, H = map.height;

#pragma omp parallel for schedule(static)
  for (int v = 0; v < nv; ++v) {
    double* dst = out.values.data() + static_cast<std::size_t>(v) * C;
    if (first[v] < 0) {
      out.flagged[v] = 1;
      continue;
    }
    const BilinearStencil st = bilinear_stencil(W, H, tmpl.atlas.uvs[first[v]]);
    // Offsets from the first covered texel, so a constant map resamples exactly.
    double wsum = 0.0;
    std::size_t anchor = map.texel_count();
    for (int k = 0; k < st.count; ++k) {
      const std::size_t t = st.texel[k];
      if (!map.covered(t)) continue;
      if (anchor == map.texel_count()) anchor = t;
      wsum += st.weight[k];
      for (int c = 0; c < C; ++c) dst[c] += st.weight[k] * (map.at(t, c) - map.at(anchor, c));
    }
    if (wsum > 0.0) {
      for (int c = 0; c < C; ++c) dst[c] = map.at(anchor, c) + dst[c] / wsum;
      continue;
    }
    out.flagged[v] = 1;
    constexpr int kRadius = 3;
    const double x = st.x, y = st.y;
    const int j0 = static_cast<int>(std::floor(x)), i0 = static_cast<int>(std::floor(y));
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_t = 0;
    for (int i = std::max(0, i0 - kRadius); i <= std::min(H - 1, i0 + 1 + kRadius); ++i) {
      for (int j = std::max(0, j0 - kRadius); j <= std::min(W - 1, j0 + 1 + kRadius); ++j) {
        const std::size_t t = map.index(i, j);
        if (!map.covered(t)) continue;
        const double d2 = (i - y) * (i - y) + (j - x) * (j - x);
        if (d2 < best) {
          best = d2;
          best_t = t;
        }
      }
    }
    if (std::isfinite(best)) {
      for (int c = 0; c < C; ++c) dst[c] = map.at(best_t, c);
    }
  }
  return out;
}

MapResult encode_displacement(const UvMap& s_sample, const UvMap& s_pose, const UvMap& n_pose) {
  require_same(s_sample, s_pose, "encode_displacement");
  require_same(s_sample, n_pose, "encode_displacement");
  require_channels(s_sample, 3, "encode_displacement");
  require_channels(s_pose, 3, "encode_displacement");
  require_channels(n_pose, 3, "encode_displacement");
  MapResult r{UvMap(s_pose.width, s_pose.height, 1), Flags(s_pose.texel_count(), 0)};
  const auto n = static_cast<std::ptrdiff_t>(s_pose.texel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    if (!s_sample.coverage[t] || !s_pose.coverage[t] || !n_pose.coverage[t]) continue;
    r.map.coverage[t] = 1;
    const Vec3 nrm(n_pose.at(t, 0), n_pose.at(t, 1), n_pose.at(t, 2));
    const double len = nrm.norm();
    if (len < 1e-9) {
      r.flagged[t] = 1;
      continue;
    }
    const Vec3 off(s_sample.at(t, 0) - s_pose.at(t, 0), s_sample.at(t, 1) - s_pose.at(t, 1),
                   s_sample.at(t, 2) - s_pose.at(t, 2));
    r.map.at(t, 0) = off.dot(nrm) / len;
  }
  return r;
}

MapResult apply_displacement(const UvMap& s_base, const UvMap& n_base, const UvMap& d) {
  require_same(s_base, n_base, "apply_displacement");
  require_same(s_base, d, "apply_displacement");
  require_channels(s_base, 3, "apply_displacement");
  require_channels(n_base, 3, "apply_displacement");
  require_channels(d, 1, "apply_displacement");
  MapResult r{UvMap(s_base.width, s_base.height, 3), Flags(s_base.texel_count(), 0)};
  const auto n = static_cast<std::ptrdiff_t>(s_base.texel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    if (!s_base.coverage[t]) continue;
    r.map.coverage[t] = 1;
    const Vec3 nrm(n_base.at(t, 0), n_base.at(t, 1), n_base.at(t, 2));
    const double len = nrm.norm();
    double scale = 0.0;
    if (len < 1e-9) {
      r.flagged[t] = 1;
    } else if (d.coverage[t]) {
      scale = d.at(t, 0) / len;
    }
    for (int c = 0; c < 3; ++c) r.map.at(t, c) = s_base.at(t, c) + nrm[c] * scale;
  }
  return r;
}

HoleMask combine_masks(const HoleMask& h_r, const HoleMask& h_o) {
  require_same(h_r, h_o, "combine_masks");
  require_channels(h_r, 1, "combine_masks");
  require_channels(h_o, 1, "combine_masks");
  HoleMask out(h_r.width, h_r.height, 1);
  for (std::size_t t = 0; t < out.texel_count(); ++t) {
    out.coverage[t] = h_r.coverage[t] | h_o.coverage[t];
    out.data[t] = h_r.data[t] * (1.0 - h_o.data[t]) + h_o.data[t];
  }
  return out;
}

HoleMask dilate_mask(const HoleMask& mask, int iterations) {
  if (iterations < 0) throw Error("dilate_mask: iterations must be >= 0");
  require_channels(mask, 1, "dilate_mask");
  HoleMask cur = mask;
  const int W = mask.width, H = mask.height;
  for (int it = 0; it < iterations; ++it) {
    HoleMask next = cur;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        const std::size_t t = cur.index(i, j);
        if (!cur.coverage[t] || cur.data[t] != 0.0) continue;
        bool hit = false;
        for (int di = -1; di <= 1 && !hit; ++di) {
          for (int dj = -1; dj <= 1 && !hit; ++dj) {
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || jj < 0 || ii >= H || jj >= W) continue;
            hit = cur.data[cur.index(ii, jj)] != 0.0;
          }
        }
        if (hit) next.data[t] = 1.0;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

HoleMask empty_mask(const UvMap& coverage_source) {
  HoleMask m(coverage_source.width, coverage_source.height, 1);
  m.coverage = coverage_source.coverage;
  return m;
}

std::size_t count_holes(const HoleMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.data.begin(), mask.data.end(), [](double v) { return v != 0.0; }));
}

void write_uvm(const std::filesystem::path& path, const UvMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(map.height), static_cast<std::uint32_t>(map.width),
                                   static_cast<std::uint32_t>(map.channels)};
  out.write("UVM1", 4);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  std::vector<float> f(map.data.begin(), map.data.end());
  out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(map.coverage.data()), static_cast<std::streamsize>(map.coverage.size()));
}

UvMap read_uvm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  std::uint32_t header[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, "UVM1", 4) != 0) throw Error(path.string() + ": not a .uvm file");
  if (header[0] == 0 || header[1] == 0 || header[2] == 0 || header[0] > 16384 || header[1] > 16384 ||
      header[2] > 64) {
    throw Error(path.string() + ": bad .uvm dimensions");
  }
  UvMap m(static_cast<int>(header[1]), static_cast<int>(header[0]), static_cast<int>(header[2]));
  std::vector<float> f(m.data.size());
  in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(m.coverage.data()), static_cast<std::streamsize>(m.coverage.size()));
  if (!in) throw Error(path.string() + ": truncated .uvm file");
  m.data.assign(f.begin(), f.end());
  for (auto& c : m.coverage) c = c != 0;
  return m;
}

void write_mask_png(const std::filesystem::path& path, const HoleMask& mask) {
  require_channels(mask, 1, "write_mask_png");
  Image img(mask.width, mask.height, 1);
  for (std::size_t t = 0; t < mask.texel_count(); ++t) img.data[t] = mask.data[t] != 0.0 ? 1.0f : 0.0f;
  write_png(path, img);
}

HoleMask read_mask_png(const std::filesystem::path& path, const UvMap* coverage) {
  const Image img = read_png(path, 1);
  HoleMask m(img.width, img.height, 1);
  if (coverage != nullptr) {
    if (coverage->width != img.width || coverage->height != img.height) {
      throw Error(path.string() + ": mask resolution does not match the UV map");
    }
    m.coverage = coverage->coverage;
  } else {
    std::fill(m.coverage.begin(), m.coverage.end(), std::uint8_t{1});
  }
  for (std::size_t t = 0; t < m.texel_count(); ++t) {
    m.data[t] = (img.data[t] * 255.0f > 127.0f && m.coverage[t]) ? 1.0 : 0.0;
  }
  return m;
}

void write_map_png(const std::filesystem::path& path, const UvMap& map) {
  Image img(map.width, map.height, 3);
  for (std::size_t t = 0; t < map.texel_count(); ++t) {
    for (int c = 0; c < 3; ++c) img.data[t * 3 + c] = static_cast<float>(map.at(t, std::min(c, map.channels - 1)));
  }
  write_png(path, img);
}

} // namespace semreg
