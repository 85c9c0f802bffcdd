#include "helpers.hpp"

#include "semreg/completion.hpp"
#include "semreg/reference.hpp"

using namespace semreg;
using namespace testing;

namespace {

// Per-vertex round-trip tolerance of the bilinear resample: two texels times the
// largest UV gradient of the position field over the incident faces.
std::vector<double> resample_bound(const SemanticTemplate& t, const std::vector<Vec3>& pos, int res) {
  std::vector<double> b(t.vertex_count(), 0.0);
  for (int f = 0; f < t.mesh.face_count(); ++f) {
    const Face& pf = t.mesh.faces[f];
    const Face& uf = t.atlas.faces[f];
    Eigen::Matrix2d e;
    e.col(0) = t.atlas.uvs[uf[1]] - t.atlas.uvs[uf[0]];
    e.col(1) = t.atlas.uvs[uf[2]] - t.atlas.uvs[uf[0]];
    Eigen::Matrix<double, 3, 2> dp;
    dp.col(0) = pos[pf[1]] - pos[pf[0]];
    dp.col(1) = pos[pf[2]] - pos[pf[0]];
    const double g = (dp * e.inverse()).norm();
    for (int k = 0; k < 3; ++k) b[pf[k]] = std::max(b[pf[k]], 2.0 * g / res);
  }
  return b;
}

SnsConfig sphere_cfg(int res) {
  SnsConfig c;
  c.range = 0.5;
  c.connectivity_threshold = 10;
  c.mask_resolution = res;
  return c;
}

} // namespace

TEST_CASE("constant fields fill exactly") {
  auto g = rng(2);
  InpaintInstance in = random_instance(g, 24, 20);
  for (double& v : in.field.data) v = 0.2;
  const InpaintResult r = harmonic_inpaint(in.field, in.hole);
  CHECK(r.converged);
  for (std::size_t t = 0; t < r.field.texel_count(); ++t)
    if (r.field.covered(t) && !r.unreachable[t]) CHECK(std::abs(r.field.data[t] - 0.2) < 1e-9);
}

TEST_CASE("linear fields are reproduced in a rectangle hole") {
  const int W = 32, H = 32;
  UvMap f = full_map(W, H, 1);
  HoleMask h = full_map(W, H, 1);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      f.data[i * W + j] = 0.03 * j - 0.02 * i;
      if (i >= 6 && i < 25 && j >= 4 && j < 29) {
        h.data[i * W + j] = 1.0;
        f.data[i * W + j] = 5.0;
      }
    }
  InpaintOptions o;
  o.tolerance = 1e-12;
  const InpaintResult r = harmonic_inpaint(f, h, o);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) CHECK(std::abs(r.field.data[i * W + j] - (0.03 * j - 0.02 * i)) < 1e-6);
}

TEST_CASE("iterative fill matches a dense direct solve") {
  auto g = rng(77);
  for (int k = 0; k < 10; ++k) {
    const int w = 4 + static_cast<int>(uniform(g, 0, 28.99)), h = 4 + static_cast<int>(uniform(g, 0, 28.99));
    const InpaintInstance in = random_instance(g, w, h);
    InpaintOptions o;
    o.tolerance = 1e-11;
    const InpaintResult r = harmonic_inpaint(in.field, in.hole, o);
    const std::vector<double> oracle = dense_fill(in);
    double worst = 0.0;
    for (std::size_t t = 0; t < oracle.size(); ++t) worst = std::max(worst, std::abs(r.field.data[t] - oracle[t]));
    CHECK(worst < 1e-6);
    for (std::size_t t = 0; t < oracle.size(); ++t)
      if (in.field.covered(t) && in.hole.data[t] == 0.0) CHECK(r.field.data[t] == in.field.data[t]);
  }
}

TEST_CASE("fill obeys the maximum principle and is idempotent") {
  auto g = rng(4);
  const InpaintInstance in = random_instance(g, 30, 30);
  const InpaintResult r = harmonic_inpaint(in.field, in.hole);
  double lo = 1e9, hi = -1e9;
  for (std::size_t t = 0; t < in.field.texel_count(); ++t)
    if (in.field.covered(t) && in.hole.data[t] == 0.0) lo = std::min(lo, in.field.data[t]), hi = std::max(hi, in.field.data[t]);
  for (std::size_t t = 0; t < in.field.texel_count(); ++t) {
    if (in.hole.data[t] == 0.0 || r.unreachable[t]) continue;
    CHECK(r.field.data[t] >= lo - 1e-9);
    CHECK(r.field.data[t] <= hi + 1e-9);
  }

  const InpaintResult again = harmonic_inpaint(r.field, empty_mask(r.field));
  CHECK(again.field.data == r.field.data);
}

TEST_CASE("inpaint matches Gauss-Seidel and is deterministic") {
  auto g = rng(12);
  const InpaintInstance in = random_instance(g, 64, 48);
  InpaintOptions o;
  o.tolerance = 1e-11;
  const auto [a, b] = at_thread_counts([&] { return harmonic_inpaint(in.field, in.hole, o); });
  CHECK(a.field.data == b.field.data);
  const UvMap gs = reference::gauss_seidel_inpaint(in.field, in.hole, 1e-11, 200000);
  for (std::size_t t = 0; t < gs.texel_count(); ++t) CHECK(std::abs(gs.data[t] - a.field.data[t]) < 1e-6);
}

TEST_CASE("inpaint edge cases") {
  UvMap f = full_map(6, 6, 1);
  HoleMask all = full_map(6, 6, 1);
  std::fill(all.data.begin(), all.data.end(), 1.0);
  CHECK_THROWS_AS(harmonic_inpaint(f, all), Error);

  // A hole island walled off by uncovered texels.
  HoleMask h = full_map(6, 6, 1);
  for (int j = 0; j < 6; ++j) f.coverage[2 * 6 + j] = h.coverage[2 * 6 + j] = 0;
  for (int j = 0; j < 12; ++j) h.data[j] = 1.0, f.data[j] = 3.0;
  for (int j = 0; j < 6; ++j) f.data[4 * 6 + j] = 1.5;
  const InpaintResult r = harmonic_inpaint(f, h);
  for (int j = 0; j < 12; ++j) {
    CHECK(r.unreachable[j] == 1);
    CHECK(r.field.data[j] == 0.0);
  }
  for (int j = 0; j < 6; ++j) {
    CHECK(r.field.data[4 * 6 + j] == 1.5);
  }

  CompletionConfig bad;
  bad.solver.tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("hemisphere registration completes to the full sphere") {
  const SemanticTemplate t = fixtures::icosphere_template(4);
  const Bvh target(fixtures::hemisphere(6, 1.2));
  const SnsResult s = sns_register(t, Pose::identity(1), target, sphere_cfg(512));
  CHECK(count_holes(s.hole_mask) > 0);
  CompletionConfig cfg;
  cfg.solver.tolerance = 1e-10;
  const CompletionResult c = complete_mesh(s, t, Pose::identity(1), cfg);
  CHECK(c.mesh.faces == t.mesh.faces);
  double worst = 0.0;
  for (const Vec3& p : c.mesh.positions) worst = std::max(worst, std::abs(p.norm() - 1.2));
  CHECK(worst < 1e-3);
  for (int v = 0; v < t.vertex_count(); ++v)
    if (c.passthrough[v]) CHECK(c.mesh.positions[v] == s.sampled.positions[v]);
}

TEST_CASE("completion without holes keeps the samples") {
  const SemanticTemplate t = fixtures::icosphere_template(3);
  const Bvh target(fixtures::icosphere(5, 1.1));
  const SnsResult s = sns_register(t, Pose::identity(1), target, sphere_cfg(256));
  REQUIRE(count_holes(s.hole_mask) == 0);
  const CompletionResult c = complete_mesh(s, t, Pose::identity(1));
  const std::vector<double> tol = resample_bound(t, s.sampled.positions, 256);
  for (int v = 0; v < t.vertex_count(); ++v) CHECK((c.mesh.positions[v] - s.sampled.positions[v]).norm() <= tol[v]);
}

TEST_CASE("replacing every part gives the posed template") {
  const SemanticTemplate t = fixtures::capsule_template();
  const Pose pose = fixtures::capsule_demo_pose();
  const Bvh target(fixtures::capsule_target(2));
  SnsConfig sc;
  sc.connectivity_threshold = 50;
  sc.mask_resolution = 512;
  const SnsResult s = sns_register(t, pose, target, sc);
  CompletionConfig cfg;
  cfg.replace_parts = {"all"};
  const CompletionResult c = complete_mesh(s, t, pose, cfg);
  const std::vector<Vec3> posed = lbs_pose(t, t.mesh.positions, pose);
  const std::vector<double> tol = resample_bound(t, posed, 512);
  for (double d : c.displacement.data) CHECK(d == 0.0);
  for (int v = 0; v < t.vertex_count(); ++v) CHECK((c.mesh.positions[v] - posed[v]).norm() <= tol[v]);

  CHECK(resolve_part_labels(t, {"hands"}).size() == 2);
  CHECK_THROWS_AS(resolve_part_labels(t, {"tail"}), Error);
}

TEST_CASE("completion is deterministic across worker counts") {
  const SemanticTemplate t = fixtures::icosphere_template(3);
  const Bvh target(fixtures::hemisphere(5, 1.2));
  const SnsResult s = sns_register(t, Pose::identity(1), target, sphere_cfg(128));
  const auto [a, b] = at_thread_counts([&] { return complete_mesh(s, t, Pose::identity(1)); });
  CHECK(a.mesh.positions == b.mesh.positions);
  CHECK(a.displacement.data == b.displacement.data);
}

TEST_CASE("masked UV error") {
  auto g = rng(8);
  UvMap a = full_map(10, 10, 3);
  for (double& v : a.data) v = uniform(g, -1, 1);
  HoleMask outer = full_map(10, 10, 1), inner = full_map(10, 10, 1);
  for (int i = 2; i < 8; ++i)
    for (int j = 2; j < 8; ++j) outer.data[i * 10 + j] = 1.0;
  for (int i = 4; i < 6; ++i)
    for (int j = 4; j < 6; ++j) inner.data[i * 10 + j] = 1.0;
  CHECK(masked_uv_error(a, a, outer, inner) == 0.0);

  UvMap b = a;
  for (std::size_t t = 0; t < b.texel_count(); ++t) {
    const bool annulus = outer.data[t] == 1.0 && inner.data[t] == 0.0;
    for (int c = 0; c < 3; ++c) b.at(t, c) += annulus ? 0.1 : 5.0 * (c + 1);
  }
  double brute = 0.0;
  int count = 0;
  for (std::size_t t = 0; t < b.texel_count(); ++t) {
    if (outer.data[t] != 1.0 || inner.data[t] != 0.0) continue;
    ++count;
    for (int c = 0; c < 3; ++c) brute += (b.at(t, c) - a.at(t, c)) * (b.at(t, c) - a.at(t, c));
  }
  CHECK(masked_uv_error(b, a, outer, inner) == doctest::Approx(brute / count).epsilon(1e-12));
  CHECK(masked_uv_error(b, a, outer, inner) == doctest::Approx(0.03).epsilon(1e-12));

  UvMap out_only = a;
  for (std::size_t t = 0; t < a.texel_count(); ++t)
    if (outer.data[t] == 0.0 || inner.data[t] == 1.0) out_only.at(t, 0) += 1.0;
  CHECK(masked_uv_error(out_only, a, outer, inner) == 0.0);

  CHECK_THROWS_AS(masked_uv_error(a, a, inner, inner), Error);
  CHECK_THROWS_AS(masked_uv_error(a, a, inner, outer), Error);
}
