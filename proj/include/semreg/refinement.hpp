#pragma once

#include "semreg/camera.hpp"
#include "semreg/image.hpp"
#include "semreg/uv_map.hpp"

namespace semreg {

struct SmoothResult {
  Mesh mesh;
  Flags isolated;  ///< Vertices without neighbours; left in place.
};

/// Uniform-weight Laplacian smoothing with simultaneous (Jacobi) updates:
/// v <- v + lambda (mean(neighbours) - v), repeated `iterations` times.
SmoothResult laplacian_smooth(const Mesh& mesh, double lambda, int iterations);

/// Input image and front/back normal maps, H x W x 3 in [0,1].
struct ImageStack {
  Image rgb;
  Image front_normal;
  Image back_normal;

  void validate() const;
};

struct FeatureMap {
  UvMap features;      ///< 10 channels: RGB, front normal, back normal, camera depth.
  Flags out_of_frame;  ///< Covered texels projecting outside the image.
  Flags behind;        ///< Covered texels behind a pinhole camera.
};

inline constexpr int kFeatureChannels = 10;

/// Projects every covered texel of the position map into the image and
/// samples the stack bilinearly. Normals are decoded as 2p - 1; the back map is
/// read at the mirrored column. Visible and occluded texels are both populated.
FeatureMap project_image_to_uv(const ImageStack& stack, const UvMap& positions, const Camera& cam);

/// Mean over covered texels of (z - ((S_c - S_l) . N_l) / |N_l|)^2.
double displacement_error(const UvMap& z, const UvMap& s_c, const UvMap& s_l, const UvMap& n_l);

/// Mean over shared coverage of |N_a - N_b|^2.
double normal_map_error(const UvMap& n_a, const UvMap& n_b);

struct RefineResult {
  Mesh mesh;
  Flags resample_flagged;
};

/// Smooths `mesh` (template connectivity), then offsets it along its own
/// normals by the displacement map z and resamples the vertices.
RefineResult refine_apply(const Mesh& mesh, const SemanticTemplate& tmpl, const UvMap& z, double lambda,
                          int iterations);

} // namespace semreg
