#pragma once

// Straightforward serial kernels kept as oracles for the accelerated and
// parallel paths. They favour obviousness over speed.

#include "semreg/bvh.hpp"
#include "semreg/camera.hpp"
#include "semreg/metrics.hpp"
#include "semreg/uv_map.hpp"

namespace semreg::reference {

/// Nearest hit over all faces; equal t goes to the lower face index.
std::optional<RayHit> raycast(const Mesh& mesh, const Vec3& origin, const Vec3& direction, double t_min, double t_max);

/// Closest point over all faces; equal distance goes to the lower face index.
SurfacePoint closest_point(const Mesh& mesh, const Vec3& p);

/// For every texel, the first face (in index order) containing its center.
UvRaster rasterize_uv(const UvAtlas& atlas, int width, int height);

/// Gauss-Seidel sweeps in texel order on the same system harmonic_inpaint solves.
UvMap gauss_seidel_inpaint(const UvMap& field, const HoleMask& hole, double tol, int max_sweeps);

/// Per-pixel ray casting: each pixel takes the normal of the nearest face
/// along the view ray through its center.
NormalImage raycast_normals(const Mesh& mesh, const Camera& cam);

std::vector<Vec3> laplacian_step(const Mesh& mesh, const std::vector<Vec3>& positions, double lambda);

} // namespace semreg::reference
