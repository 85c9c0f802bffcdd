#pragma once

#include "semreg/template.hpp"

#include <filesystem>

namespace semreg {

/// H x W x C grid over the UV square. Texel (row i, col j) has its center at
/// u = (j + 0.5) / W, v = 1 - (i + 0.5) / H, so row 0 is the top (v near 1).
/// Values are held in double precision; uncovered texels are always zero.
struct UvMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;       ///< Row-major, channel fastest.
  std::vector<std::uint8_t> coverage;

  UvMap() = default;
  UvMap(int w, int h, int c);

  std::size_t texel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * width + j; }
  double& at(std::size_t texel, int c) { return data[texel * channels + c]; }
  double at(std::size_t texel, int c) const { return data[texel * channels + c]; }
  bool covered(std::size_t texel) const { return coverage[texel] != 0; }
  std::size_t covered_count() const;
  bool same_shape(const UvMap& other) const { return width == other.width && height == other.height; }
};

/// One-channel 0/1 map; 1 marks a hole. Hole texels are always covered.
using HoleMask = UvMap;

/// Texel ownership: the UV triangle containing each texel center and the
/// barycentric weights of its corners.
struct UvRaster {
  int width = 0;
  int height = 0;
  std::vector<int> face;   ///< -1 for uncovered texels.
  std::vector<Vec3> bary;
  Flags degenerate_faces;  ///< UV triangles with (near) zero area; never rasterized.

  std::size_t texel_count() const { return face.size(); }
};

/// Barycentric weights of p in UV triangle (a, b, c). Returns false when the
/// triangle is degenerate. `inside` uses a closed test so edge texels are owned.
bool uv_barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p, Vec3& bary);
bool uv_inside(const Vec3& bary);
Vec2 texel_center(int i, int j, int width, int height);

/// Scanline rasterization of every UV triangle. Where triangles overlap the
/// lowest face index wins. Parallel over row bands; the result does not depend
/// on the thread count.
UvRaster rasterize_uv(const UvAtlas& atlas, int width, int height);

/// Interpolates K-dimensional per-vertex values (row-major V x K) across UV triangles.
UvMap interpolate_attribute(const UvRaster& raster, const std::vector<Face>& faces,
                            std::span<const double> values, int channels);
UvMap interpolate_attribute(const UvRaster& raster, const std::vector<Face>& faces, std::span<const Vec3> values);

/// Convenience: rasterize the template atlas at resolution x resolution and interpolate.
UvMap rasterize_attribute_map(const SemanticTemplate& tmpl, std::span<const double> values, int channels,
                              int resolution);
UvMap rasterize_attribute_map(const SemanticTemplate& tmpl, std::span<const Vec3> values, int resolution);

struct VertexSamples {
  std::vector<double> values;  ///< V x C row-major.
  int channels = 0;
  Flags flagged;  ///< No covered texel in the bilinear stencil (nearest-texel fallback or 0).

  Vec3 vec3(int v) const { return {values[3 * v], values[3 * v + 1], values[3 * v + 2]}; }
};

/// Bilinear footprint of a UV point: up to four in-range texels with positive
/// weight. Coverage is not consulted.
struct BilinearStencil {
  int count = 0;
  std::size_t texel[4];
  double weight[4];
  double x = 0.0, y = 0.0;  ///< Continuous texel coordinates (column, row) of the point.
};
BilinearStencil bilinear_stencil(int width, int height, const Vec2& uv);

/// UV index used to sample each vertex: the first corner referencing it in
/// face order, or -1 for unreferenced vertices.
std::vector<int> first_uv_of_vertex(const SemanticTemplate& tmpl);

/// Bilinear sample per vertex at its first UV occurrence. Uncovered texels are
/// dropped from the stencil and the remaining weights renormalized. When no
/// stencil texel is covered the vertex is flagged and takes the nearest covered
/// texel within 3 texels, or zero.
VertexSamples resample_vertices_from_map(const UvMap& map, const SemanticTemplate& tmpl);

struct MapResult {
  UvMap map;
  Flags flagged;  ///< Per texel: covered but the normal was shorter than 1e-9.
};

/// d = ((S_sample - S_pose) . N) / |N| on texels covered by all three maps.
MapResult encode_displacement(const UvMap& s_sample, const UvMap& s_pose, const UvMap& n_pose);

/// S = S_base + (N / |N|) d on covered texels.
MapResult apply_displacement(const UvMap& s_base, const UvMap& n_base, const UvMap& d);

/// H_sup = H_r (1 - H_o) + H_o per texel; coverage is the union.
HoleMask combine_masks(const HoleMask& h_r, const HoleMask& h_o);

/// Iterated 8-neighbourhood dilation, clipped to the mask's coverage.
HoleMask dilate_mask(const HoleMask& mask, int iterations);

/// Empty (all zero) mask with the given coverage.
HoleMask empty_mask(const UvMap& coverage_source);

std::size_t count_holes(const HoleMask& mask);

/// `.uvm` file: "UVM1", uint32 H, W, C, H*W*C float32 (row-major, channel
/// fastest), then H*W coverage bytes.
void write_uvm(const std::filesystem::path& path, const UvMap& map);
UvMap read_uvm(const std::filesystem::path& path);

/// Mask PNG: 8-bit gray, 255 for holes. Values above 127 read as holes; when
/// `coverage` is given the result is intersected with it and takes its coverage.
void write_mask_png(const std::filesystem::path& path, const HoleMask& mask);
HoleMask read_mask_png(const std::filesystem::path& path, const UvMap* coverage = nullptr);

/// Writes the first three channels as an 8-bit RGB PNG (values clamped to [0,1]).
void write_map_png(const std::filesystem::path& path, const UvMap& map);

} // namespace semreg
