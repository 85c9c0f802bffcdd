#pragma once

#include "semreg/bvh.hpp"
#include "semreg/camera.hpp"

namespace semreg {

/// Mean distance from every vertex of `pred` to the surface of `gt`, in centimeters.
double p2s(const Mesh& pred, const Bvh& gt);

/// (p2s(a -> b) + p2s(b -> a)) / 2, in centimeters.
double chamfer(const Mesh& a, const Mesh& b);
double chamfer(const Mesh& a, const Bvh& bvh_a, const Mesh& b, const Bvh& bvh_b);

/// Flat-shaded camera-space normal image with a z-buffer.
struct NormalImage {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normal;
  Flags covered;
  std::vector<int> face;  ///< Visible face per pixel, -1 when empty.
};

NormalImage render_normals(const Mesh& mesh, const Camera& cam);

/// Front (looking along -z) and back (looking along +z) orthographic views
/// fitted to the union of both bounding boxes, y up in the image.
std::vector<Camera> default_views(const Mesh& a, const Mesh& b, int resolution = 512);

/// Mean over views of the mean L2 norm of the normal difference on pixels
/// covered in both renders. Throws when no view has mutual coverage.
double normal_image_error(const Mesh& a, const Mesh& b, const std::vector<Camera>& views);

struct QualityStats {
  double g_avg = 0.0;
  double pct_angle_below_30 = 0.0;
};

/// Degenerate faces count as quality 0 and as having an angle below 30 degrees.
QualityStats mesh_quality_stats(const Mesh& mesh);

} // namespace semreg
