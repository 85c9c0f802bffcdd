#pragma once

#include "semreg/bvh.hpp"
#include "semreg/camera.hpp"
#include "semreg/image.hpp"
#include "semreg/uv_map.hpp"

namespace semreg {

/// A vertex is visible when a ray from v + eps * dir toward the camera
/// (eps = 1e-4 x bbox diagonal) hits nothing. Orthographic cameras have no
/// near plane; pinhole rays stop at the camera center and vertices behind a
/// pinhole camera are invisible.
Flags vertex_visibility(const Mesh& mesh, const Bvh& bvh, const Camera& cam);

struct PartialTexture {
  UvMap texture;       ///< RGB, zero where not visible.
  HoleMask visible;    ///< 1 where texture was sampled.
  Flags vertex_visible;
};

/// Texels are visible when all three corners of their UV triangle are
/// visible and they project inside the image. The visible region is then
/// eroded by `erosion` texels (the complementary hole is dilated) before sampling.
PartialTexture sample_partial_texture(const Mesh& mesh, const SemanticTemplate& tmpl, const Image& image,
                                      const Camera& cam, int resolution, int erosion = 2);

struct IcpConfig {
  int max_iters = 50;
  double tol = 1e-6;   ///< Stop when the RMS correspondence distance improves by less than this (m).
  bool with_scale = false;
};

/// x -> s R x + t
struct Similarity {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
};

struct IcpResult {
  Similarity transform;
  int iterations = 0;
  double mean_distance = 0.0;        ///< Mean correspondence distance after the final update.
  std::vector<double> history;       ///< RMS correspondence distance before each update (non-increasing).
};

/// Weighted Procrustes (Umeyama) fit of `from` onto `to`.
Similarity procrustes(std::span<const Vec3> from, std::span<const Vec3> to, bool with_scale);

/// Closest-surface-point ICP of the source points onto the target.
IcpResult icp_align(std::span<const Vec3> source, const Bvh& target, const IcpConfig& cfg = {});

struct ColorTransfer {
  std::vector<Vec3> colors;
  UvMap texture;  ///< Baked through the atlas; empty when no atlas was given.
  IcpResult icp;
};

/// Aligns the semantic mesh to the scan with ICP, then gives each vertex the
/// barycentric colour of its closest scan point and bakes the colours.
ColorTransfer transfer_vertex_colors(const Mesh& semantic, const Bvh& scan, const UvAtlas* atlas, int resolution,
                                     const IcpConfig& cfg = {});

} // namespace semreg
