#pragma once

#include "semreg/core.hpp"

#include <filesystem>
#include <memory>

namespace semreg {

/// Signed distance query, negative inside. Only the sign and continuity of the
/// zero crossing along rays are relied on, not a Lipschitz bound.
class SdfField {
 public:
  virtual ~SdfField() = default;
  virtual double query(const Vec3& p) const = 0;
  virtual Aabb bbox() const = 0;
};

class SphereSdf final : public SdfField {
 public:
  SphereSdf(Vec3 center, double radius);
  double query(const Vec3& p) const override;
  Aabb bbox() const override;

 private:
  Vec3 center_;
  double radius_;
};

/// Half-space n.p - offset (positive on the side n points to). The box is a
/// finite slab of the given half extent around the plane's closest point to the origin.
class PlaneSdf final : public SdfField {
 public:
  PlaneSdf(Vec3 normal, double offset, double half_extent = 10.0);
  double query(const Vec3& p) const override;
  Aabb bbox() const override;

 private:
  Vec3 normal_;
  double offset_;
  double half_extent_;
};

/// Dense float32 grid, trilinearly interpolated. Outside the grid the sample
/// at the clamped point is used plus the distance to the grid box.
///
/// File layout (little endian): "SEMSDF1\0", int32 nx ny nz, float64 origin[3],
/// float64 spacing[3], then nx*ny*nz float32 values with x varying fastest.
class GridSdf final : public SdfField {
 public:
  GridSdf(int nx, int ny, int nz, Vec3 origin, Vec3 spacing, std::vector<float> values);
  double query(const Vec3& p) const override;
  Aabb bbox() const override;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  const Vec3& origin() const { return origin_; }
  const Vec3& spacing() const { return spacing_; }
  const std::vector<float>& values() const { return values_; }

  /// Samples `field` at every grid node.
  static GridSdf sample(const SdfField& field, int nx, int ny, int nz, const Vec3& origin, const Vec3& spacing);

 private:
  float at(int i, int j, int k) const {
    return values_[(static_cast<std::size_t>(k) * ny_ + j) * nx_ + i];
  }
  int nx_, ny_, nz_;
  Vec3 origin_, spacing_;
  std::vector<float> values_;
};

GridSdf read_sdf_grid(const std::filesystem::path& path);
void write_sdf_grid(const std::filesystem::path& path, const GridSdf& grid);

} // namespace semreg
