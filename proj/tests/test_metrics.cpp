#include "helpers.hpp"

#include "semreg/metrics.hpp"
#include "semreg/reference.hpp"

using namespace semreg;
using namespace testing;

namespace {

// Area-uniform random samples on the surface.
std::vector<Vec3> surface_samples(const Mesh& m, int count, std::mt19937_64& g) {
  std::vector<double> cdf;
  double total = 0.0;
  for (int f = 0; f < m.face_count(); ++f) cdf.push_back(total += face_area(m, f));
  std::vector<Vec3> out;
  for (int k = 0; k < count; ++k) {
    const int f = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), uniform(g, 0, total)) - cdf.begin());
    double a = uniform(g, 0, 1), b = uniform(g, 0, 1);
    if (a + b > 1) a = 1 - a, b = 1 - b;
    const Face& tri = m.faces[std::min(f, m.face_count() - 1)];
    out.push_back(m.positions[tri[0]] + a * (m.positions[tri[1]] - m.positions[tri[0]]) +
                  b * (m.positions[tri[2]] - m.positions[tri[0]]));
  }
  return out;
}

double image_error(const NormalImage& a, const NormalImage& b, int* overlap) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t t = 0; t < a.normal.size(); ++t) {
    if (!a.covered[t] || !b.covered[t]) continue;
    sum += (a.normal[t] - b.normal[t]).norm();
    ++n;
  }
  *overlap = n;
  return n > 0 ? sum / n : 0.0;
}

Mesh rotated_about_z(const Mesh& m, double angle) {
  Mesh r = m;
  const Mat3 rot = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
  for (Vec3& p : r.positions) p = rot * p;
  return r;
}

} // namespace

TEST_CASE("point to surface distance") {
  const Mesh unit = fixtures::icosphere(4);
  const Bvh bvh(unit);
  CHECK(p2s(unit, bvh) == 0.0);

  // Vertices of the larger sphere lie 1 cm outside the smaller one's vertices; the
  // faceting of the target only shortens the distance by its chord sag.
  const Mesh big = fixtures::icosphere(4, 1.01);
  const double d = p2s(big, bvh);
  CHECK(d > 1.0 - 1e-9);
  CHECK(d < 1.0 + 100.0 * 0.002);

  Mesh far = unit;
  far.positions[7] += 0.3 * far.positions[7].normalized();
  CHECK(p2s(far, bvh) == doctest::Approx(100.0 * 0.3 / unit.vertex_count()).epsilon(1e-9));

  CHECK_THROWS_AS(p2s(Mesh{}, bvh), Error);
}

TEST_CASE("point to surface matches a dense sample oracle") {
  auto g = rng(6);
  const Mesh pred = fixtures::icosphere(3);
  const Mesh gt = fixtures::icosphere(6, 1.5);
  const std::vector<Vec3> samples = surface_samples(gt, 5000, g);
  double brute = 0.0;
  for (const Vec3& p : pred.positions) {
    double best = 1e30;
    for (const Vec3& s : samples) best = std::min(best, (p - s).squaredNorm());
    brute += std::sqrt(best);
  }
  brute = 100.0 * brute / pred.vertex_count();
  const double d = p2s(pred, Bvh(gt));
  CHECK(std::abs(d - brute) < 0.01 * d);
}

TEST_CASE("chamfer distance") {
  const Mesh a = fixtures::icosphere(4), b = fixtures::icosphere(4, 1.02);
  const Mesh blob = fixtures::asymmetric_blob(3);
  CHECK(chamfer(a, a) == 0.0);
  CHECK(chamfer(a, blob) == chamfer(blob, a));
  const double c = chamfer(a, b);
  CHECK(c == doctest::Approx(2.0).epsilon(0.025));
  CHECK(chamfer(a, Bvh(a), b, Bvh(b)) == c);
  CHECK_THROWS_AS(chamfer(a, Mesh{}), Error);
}

TEST_CASE("normal renders agree with the ray cast oracle") {
  const Mesh blob = fixtures::asymmetric_blob(3);
  for (const Camera& cam : default_views(blob, blob, 96)) {
    const NormalImage r = render_normals(blob, cam);
    const NormalImage o = reference::raycast_normals(blob, cam);
    int same_cover = 0, same_face = 0, both = 0;
    for (std::size_t t = 0; t < r.normal.size(); ++t) {
      same_cover += r.covered[t] == o.covered[t];
      if (!r.covered[t] || !o.covered[t]) continue;
      ++both;
      if (r.face[t] == o.face[t]) {
        ++same_face;
        CHECK((r.normal[t] - o.normal[t]).norm() < 1e-12);
      }
    }
    CHECK(same_cover >= 0.995 * r.normal.size());
    CHECK(same_face >= 0.99 * both);
  }
  const Camera front = default_views(blob, blob, 64)[0];
  const auto [a, b] = at_thread_counts([&] { return render_normals(blob, front); });
  CHECK(a.face == b.face);
}

TEST_CASE("normal image error") {
  const Mesh blob = fixtures::asymmetric_blob(3);
  const std::vector<Camera> views = default_views(blob, blob, 128);
  CHECK(normal_image_error(blob, blob, views) == 0.0);

  const Mesh turned = rotated_about_z(blob, M_PI);
  const std::vector<Camera> both = default_views(blob, turned, 128);
  const double e = normal_image_error(blob, turned, both);
  CHECK(e > 0.05);
  double oracle = 0.0;
  for (const Camera& cam : both) {
    int overlap = 0;
    oracle += image_error(reference::raycast_normals(blob, cam), reference::raycast_normals(turned, cam), &overlap);
    REQUIRE(overlap > 0);
  }
  oracle /= static_cast<double>(both.size());
  CHECK(std::abs(e - oracle) < 0.05 * oracle);

  Mesh away = blob;
  for (Vec3& p : away.positions) p += Vec3(50, 0, 0);
  CHECK_THROWS_AS(normal_image_error(blob, away, views), Error);
}

TEST_CASE("mesh quality statistics") {
  const QualityStats ico = mesh_quality_stats(fixtures::icosahedron_template().mesh);
  CHECK(ico.pct_angle_below_30 == 0.0);
  CHECK(std::abs(ico.g_avg - 1.0) < 1e-12);

  Mesh sliver;
  const double ten = 10.0 * M_PI / 180.0;
  sliver.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(std::cos(ten), std::sin(ten), 0)};
  sliver.faces = {{0, 1, 2}};
  CHECK(mesh_quality_stats(sliver).pct_angle_below_30 == 100.0);

  // Mixed mesh against a plain per-face loop.
  const Mesh blob = fixtures::asymmetric_blob(2);
  auto g = rng(3);
  Mesh mixed = blob;
  for (Vec3& p : mixed.positions) p += 0.08 * Vec3(uniform(g, -1, 1), uniform(g, -1, 1), uniform(g, -1, 1));
  double qsum = 0.0;
  int below = 0;
  for (const Face& f : mixed.faces) {
    const Vec3 a = mixed.positions[f[0]], b = mixed.positions[f[1]], c = mixed.positions[f[2]];
    const double area = 0.5 * (b - a).cross(c - a).norm();
    const double l2 = (b - a).squaredNorm() + (c - b).squaredNorm() + (a - c).squaredNorm();
    qsum += 4.0 * std::sqrt(3.0) * area / l2;
    const auto angle = [](const Vec3& u, const Vec3& v) { return std::atan2(u.cross(v).norm(), u.dot(v)); };
    const double amin = std::min({angle(b - a, c - a), angle(a - b, c - b), angle(a - c, b - c)});
    below += amin < M_PI / 6.0;
  }
  const QualityStats m = mesh_quality_stats(mixed);
  CHECK(m.g_avg == doctest::Approx(qsum / mixed.face_count()).epsilon(1e-12));
  CHECK(m.pct_angle_below_30 == doctest::Approx(100.0 * below / mixed.face_count()).epsilon(1e-12));

  Mesh scaled = mixed;
  for (Vec3& p : scaled.positions) p *= 3.5;
  CHECK(mesh_quality_stats(scaled).g_avg == doctest::Approx(m.g_avg).epsilon(1e-12));

  Mesh flat;
  flat.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  flat.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(mesh_quality_stats(flat), Error);
}
