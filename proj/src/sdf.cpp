#include "semreg/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace semreg {

SphereSdf::SphereSdf(Vec3 center, double radius) : center_(std::move(center)), radius_(radius) {
  if (!(radius > 0.0)) throw Error("sphere SDF radius must be positive");
}

double SphereSdf::query(const Vec3& p) const { return (p - center_).norm() - radius_; }

Aabb SphereSdf::bbox() const {
  Aabb b;
  b.extend(center_ - Vec3::Constant(radius_));
  b.extend(center_ + Vec3::Constant(radius_));
  return b;
}

PlaneSdf::PlaneSdf(Vec3 normal, double offset, double half_extent)
    : normal_(std::move(normal)), offset_(offset), half_extent_(half_extent) {
  const double n = normal_.norm();
  if (n < 1e-12) throw Error("plane SDF normal must be nonzero");
  normal_ /= n;
  offset_ /= n;
}

double PlaneSdf::query(const Vec3& p) const { return normal_.dot(p) - offset_; }

Aabb PlaneSdf::bbox() const {
  const Vec3 c = normal_ * offset_;
  Aabb b;
  b.extend(c - Vec3::Constant(half_extent_));
  b.extend(c + Vec3::Constant(half_extent_));
  return b;
}

GridSdf::GridSdf(int nx, int ny, int nz, Vec3 origin, Vec3 spacing, std::vector<float> values)
    : nx_(nx), ny_(ny), nz_(nz), origin_(std::move(origin)), spacing_(std::move(spacing)), values_(std::move(values)) {
  if (nx < 2 || ny < 2 || nz < 2) throw Error("SDF grid needs at least 2 samples per axis");
  if ((spacing_.array() <= 0.0).any()) throw Error("SDF grid spacing must be positive");
  if (values_.size() != static_cast<std::size_t>(nx) * ny * nz) throw Error("SDF grid value count mismatch");
}

Aabb GridSdf::bbox() const {
  Aabb b;
  b.extend(origin_);
  b.extend(origin_ + Vec3((nx_ - 1) * spacing_.x(), (ny_ - 1) * spacing_.y(), (nz_ - 1) * spacing_.z()));
  return b;
}

double GridSdf::query(const Vec3& p) const {
  const Aabb box = bbox();
  const Vec3 q = p.cwiseMax(box.lo).cwiseMin(box.hi);
  const double outside = (p - q).norm();
  const Vec3 g = (q - origin_).cwiseQuotient(spacing_);
  const int dims[3] = {nx_, ny_, nz_};
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    i0[a] = std::clamp(static_cast<int>(std::floor(g[a])), 0, dims[a] - 2);
    f[a] = std::clamp(g[a] - i0[a], 0.0, 1.0);
  }
  double value = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
    value += w * at(i0[0] + dx, i0[1] + dy, i0[2] + dz);
  }
  return value + outside;
}

GridSdf GridSdf::sample(const SdfField& field, int nx, int ny, int nz, const Vec3& origin, const Vec3& spacing) {
  std::vector<float> values(static_cast<std::size_t>(nx) * ny * nz);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const Vec3 p = origin + Vec3(i * spacing.x(), j * spacing.y(), k * spacing.z());
        values[(static_cast<std::size_t>(k) * ny + j) * nx + i] = static_cast<float>(field.query(p));
      }
    }
  }
  return GridSdf(nx, ny, nz, origin, spacing, std::move(values));
}

namespace {
constexpr char kMagic[8] = {'S', 'E', 'M', 'S', 'D', 'F', '1', '\0'};
}

GridSdf read_sdf_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  std::int32_t dims[3];
  double origin[3], spacing[3];
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  in.read(reinterpret_cast<char*>(origin), sizeof origin);
  in.read(reinterpret_cast<char*>(spacing), sizeof spacing);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error(path.string() + ": not an SDF grid file");
  if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2 || dims[0] > 4096 || dims[1] > 4096 || dims[2] > 4096) {
    throw Error(path.string() + ": bad SDF grid dimensions");
  }
  std::vector<float> values(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!in) throw Error(path.string() + ": truncated SDF grid");
  return GridSdf(dims[0], dims[1], dims[2], Vec3(origin[0], origin[1], origin[2]),
                 Vec3(spacing[0], spacing[1], spacing[2]), std::move(values));
}

void write_sdf_grid(const std::filesystem::path& path, const GridSdf& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::int32_t dims[3] = {grid.nx(), grid.ny(), grid.nz()};
  const double origin[3] = {grid.origin().x(), grid.origin().y(), grid.origin().z()};
  const double spacing[3] = {grid.spacing().x(), grid.spacing().y(), grid.spacing().z()};
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(origin), sizeof origin);
  out.write(reinterpret_cast<const char*>(spacing), sizeof spacing);
  out.write(reinterpret_cast<const char*>(grid.values().data()),
            static_cast<std::streamsize>(grid.values().size() * sizeof(float)));
}

} // namespace semreg
