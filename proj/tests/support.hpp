#pragma once

#include "semreg/fixtures.hpp"
#include "semreg/parallel.hpp"
#include "semreg/uv_map.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testing {

using namespace semreg;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Vec3 random_unit(std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(g), n(g), n(g));
  return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& g, double max_angle) {
  return Eigen::AngleAxisd(uniform(g, 0.0, max_angle), random_unit(g)).toRotationMatrix();
}

inline double rotation_angle(const Mat3& r) {
  // atan2 keeps precision near zero, where acos of the trace does not.
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("semreg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Flat grid wrapped as a one-joint template with uv = (x, y) / size.
inline SemanticTemplate grid_template(int n, double size = 1.0) {
  SemanticTemplate t;
  t.mesh = fixtures::planar_grid(n, size);
  for (const Vec3& p : t.mesh.positions) t.atlas.uvs.emplace_back(p.x() / size, p.y() / size);
  t.atlas.faces = t.mesh.faces;
  t.weights.joints = 1;
  t.weights.values.assign(t.mesh.positions.size(), 1.0);
  t.joints = {Vec3::Zero()};
  t.parents = {-1};
  t.canonical_pose = Pose::identity(1);
  t.labels.assign(t.mesh.positions.size(), 0);
  return t;
}

/// Runs `fn` under two worker counts and returns both results.
template <typename F>
auto at_thread_counts(F fn, int a = 1, int b = 8) {
  decltype(fn()) ra, rb;
  {
    ScopedThreadCount guard(a);
    ra = fn();
  }
  {
    ScopedThreadCount guard(b);
    rb = fn();
  }
  return std::make_pair(ra, rb);
}

inline UvMap full_map(int w, int h, int c) {
  UvMap m(w, h, c);
  std::fill(m.coverage.begin(), m.coverage.end(), 1);
  return m;
}

struct InpaintInstance {
  UvMap field;
  HoleMask hole;
};

// Random coverage with about a third of the covered texels in the hole.
inline InpaintInstance random_instance(std::mt19937_64& g, int w, int h) {
  InpaintInstance in{full_map(w, h, 1), full_map(w, h, 1)};
  for (std::size_t t = 0; t < in.field.texel_count(); ++t) {
    if (uniform(g, 0, 1) < 0.1) {
      in.field.coverage[t] = in.hole.coverage[t] = 0;
      continue;
    }
    in.field.data[t] = uniform(g, -1, 1);
    in.hole.data[t] = uniform(g, 0, 1) < 0.35 ? 1.0 : 0.0;
  }
  in.hole.data[0] = 0.0;
  in.field.coverage[0] = in.hole.coverage[0] = 1;
  return in;
}

// Dense direct solve of the 4-neighbour Dirichlet problem; unreachable texels are left at 0.
inline std::vector<double> dense_fill(const InpaintInstance& in) {
  const int W = in.field.width, H = in.field.height;
  std::vector<int> id(in.field.texel_count(), -1);
  int n = 0;
  for (std::size_t t = 0; t < id.size(); ++t)
    if (in.field.covered(t) && in.hole.data[t] > 0.5) id[t] = n++;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  std::vector<char> reach(n, 0);  // touches a known texel, directly or through the hole
  const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const int r = id[i * W + j];
      if (r < 0) continue;
      for (int k = 0; k < 4; ++k) {
        const int ii = i + di[k], jj = j + dj[k];
        if (ii < 0 || jj < 0 || ii >= H || jj >= W || !in.field.covered(ii * W + jj)) continue;
        A(r, r) += 1.0;
        const int c = id[ii * W + jj];
        if (c >= 0) A(r, c) -= 1.0;
        else b(r) += in.field.data[ii * W + jj], reach[r] = 1;
      }
      if (A(r, r) == 0.0) A(r, r) = 1.0;
    }
  }
  // Rows of unreachable components are singular; regularize them to x = 0.
  {
    std::vector<int> stack;
    for (int r = 0; r < n; ++r)
      if (reach[r]) stack.push_back(r);
    while (!stack.empty()) {
      const int r = stack.back();
      stack.pop_back();
      for (int c = 0; c < n; ++c)
        if (A(r, c) < 0.0 && !reach[c]) reach[c] = 1, stack.push_back(c);
    }
    for (int r = 0; r < n; ++r)
      if (!reach[r]) {
        A.row(r).setZero();
        A.col(r).setZero();
        A(r, r) = 1.0;
        b(r) = 0.0;
      }
  }
  const Eigen::VectorXd x = A.partialPivLu().solve(b);
  std::vector<double> out = in.field.data;
  for (std::size_t t = 0; t < id.size(); ++t) {
    if (!in.field.covered(t)) out[t] = 0.0;
    else if (id[t] >= 0) out[t] = x(id[t]);
  }
  return out;
}

} // namespace testing
