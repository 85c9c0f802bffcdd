#include "helpers.hpp"

#include "semreg/reference.hpp"
#include "semreg/sns.hpp"

#include <climits>

using namespace semreg;
using namespace testing;

namespace {

int count(const Flags& f) {
  int n = 0;
  for (auto x : f) n += x;
  return n;
}

bool subset(const Flags& a, const Flags& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

SnsConfig sphere_cfg() {
  SnsConfig c;
  c.range = 0.5;
  c.connectivity_threshold = 10;
  c.mask_resolution = 128;
  return c;
}

} // namespace

TEST_CASE("explicit sampling onto concentric spheres") {
  const Mesh unit = fixtures::icosphere(2);
  const Bvh target(fixtures::icosphere(6, 1.2));
  const NormalField n = vertex_normals(unit);
  const SamplePoints s = sample_explicit(unit.positions, n.normals, target, sphere_cfg());
  for (int v = 0; v < unit.vertex_count(); ++v) {
    REQUIRE(s.valid[v] == 1);
    CHECK(std::abs(s.points[v].norm() - 1.2) < 1e-3);
  }

  // From outside the rays run inward.
  const Mesh outer = fixtures::icosphere(2, 1.5);
  const SamplePoints o = sample_explicit(outer.positions, vertex_normals(outer).normals, target, sphere_cfg());
  for (int v = 0; v < outer.vertex_count(); ++v) {
    REQUIRE(o.valid[v] == 1);
    CHECK(std::abs(o.points[v].norm() - 1.2) < 1e-3);
  }

  SnsConfig tight = sphere_cfg();
  tight.range = 0.05;
  const SamplePoints none = sample_explicit(unit.positions, n.normals, target, tight);
  CHECK(count(none.valid) == 0);
  CHECK(none.points == unit.positions);
}

TEST_CASE("explicit sampling onto a hemisphere misses the back") {
  const Mesh unit = fixtures::icosphere(3);
  const Bvh target(fixtures::hemisphere(5, 1.2));
  const SamplePoints s = sample_explicit(unit.positions, vertex_normals(unit).normals, target, sphere_cfg());
  int front = 0, front_valid = 0;
  for (int v = 0; v < unit.vertex_count(); ++v) {
    if (unit.positions[v].z() < -0.05) CHECK(s.valid[v] == 0);
    if (unit.positions[v].z() > 0.05) {
      ++front;
      front_valid += s.valid[v];
    }
  }
  // The dome is open, so near its rim the parity probes can escape and the
  // inside test falls back to "outside"; those rays then point away.
  CHECK(front_valid >= 0.98 * front);
}

TEST_CASE("implicit sampling") {
  const PlaneSdf plane(Vec3(0, 0, 1), 0.3);
  SnsConfig c;
  c.range = 1.0;
  const std::vector<Vec3> v = {Vec3::Zero()};
  const std::vector<Vec3> n = {Vec3(0, 0, 1)};
  const SamplePoints s = sample_implicit(v, n, plane, c);
  REQUIRE(s.valid[0] == 1);
  CHECK((s.points[0] - Vec3(0, 0, 0.3)).norm() <= 1e-6 * c.range);
  CHECK(std::abs(plane.query(s.points[0])) <= 1e-6 * c.range);

  const SphereSdf sphere(Vec3::Zero(), 1.2);
  const Mesh unit = fixtures::icosphere(3);
  SnsConfig cs;
  cs.range = 0.5;
  const SamplePoints ss = sample_implicit(unit.positions, vertex_normals(unit).normals, sphere, cs);
  for (int i = 0; i < unit.vertex_count(); ++i) {
    REQUIRE(ss.valid[i] == 1);
    CHECK(std::abs(ss.points[i].norm() - 1.2) <= 1e-6);
    CHECK(std::abs(sphere.query(ss.points[i])) <= 1e-6 * cs.range);
  }

  // Positive along the whole ray: no crossing.
  const PlaneSdf far(Vec3(0, 0, 1), -5.0);
  const SamplePoints miss = sample_implicit(v, n, far, c);
  CHECK(miss.valid[0] == 0);
}

TEST_CASE("SDF grid sampling and file round trip") {
  const SphereSdf sphere(Vec3::Zero(), 1.2);
  const GridSdf grid = GridSdf::sample(sphere, 41, 41, 41, Vec3::Constant(-2.0), Vec3::Constant(0.1));
  auto g = rng(2);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(uniform(g, -1.9, 1.9), uniform(g, -1.9, 1.9), uniform(g, -1.9, 1.9));
    CHECK(std::abs(grid.query(p) - sphere.query(p)) < 0.01);
  }
  CHECK(grid.query(Vec3(5, 0, 0)) > 3.0);
  const auto dir = temp_dir("sdf");
  write_sdf_grid(dir / "s.sdf", grid);
  const GridSdf back = read_sdf_grid(dir / "s.sdf");
  CHECK(back.values() == grid.values());
  CHECK(back.origin() == grid.origin());
  CHECK(back.spacing() == grid.spacing());
  std::ofstream(dir / "bad.sdf") << "nope";
  CHECK_THROWS_AS(read_sdf_grid(dir / "bad.sdf"), Error);
}

TEST_CASE("culling indicators") {
  const Mesh ref = fixtures::icosphere(2);
  SnsConfig c;
  CHECK(cull_faces(ref, ref, c).culled_count == 0);

  // Push one vertex through the origin: its faces flip.
  Mesh flipped = ref;
  flipped.positions[0] = -1.5 * ref.positions[0];
  const CullResult cf = cull_faces(flipped, ref, c);
  CHECK(cf.culled_count > 0);
  for (int f = 0; f < ref.face_count(); ++f) {
    const Face& t = ref.faces[f];
    if (t[0] != 0 && t[1] != 0 && t[2] != 0) continue;
    const Vec3 a = face_normals(ref).normals[f], b = face_normals(flipped).normals[f];
    if (std::acos(std::clamp(a.dot(b), -1.0, 1.0)) > c.angle_threshold) CHECK(cf.culled_face[f] == 1);
  }
  CHECK(cf.invalid_vertex[0] == 1);

  // Uniform scale x2: every area ratio is 4 > 3.
  Mesh big = ref;
  for (Vec3& p : big.positions) p *= 2.0;
  const CullResult cb = cull_faces(big, ref, c);
  for (int f = 0; f < ref.face_count(); ++f) {
    const double ratio = face_area(big, f) / face_area(ref, f);
    CHECK((ratio > c.area_threshold) == (cb.culled_face[f] == 1));
  }
  CHECK(cb.culled_count == ref.face_count());

  // Zero-area reference face.
  Mesh degenerate = ref;
  const Face& t0 = degenerate.faces[0];
  degenerate.positions[t0[2]] = 0.5 * (degenerate.positions[t0[0]] + degenerate.positions[t0[1]]);
  const CullResult cd = cull_faces(ref, degenerate, c);
  CHECK(cd.culled_face[0] == 1);
  CHECK(cd.degenerate_reference[0] == 1);

  Mesh other = ref;
  other.faces.pop_back();
  CHECK_THROWS_AS(cull_faces(other, ref, c), Error);
}

TEST_CASE("culled sets shrink as thresholds grow") {
  const Mesh ref = fixtures::icosphere(3);
  Mesh noisy = ref;
  auto g = rng(23);
  for (Vec3& p : noisy.positions) p += 0.04 * random_unit(g);
  Flags prev;
  for (double theta : {0.05, 0.1, 0.2, 0.4, 1.0, 2.0}) {
    SnsConfig c;
    c.angle_threshold = theta;
    c.area_threshold = 1e9;
    c.edge_threshold = 1e9;
    const Flags cur = cull_faces(noisy, ref, c).culled_face;
    if (!prev.empty()) CHECK(subset(cur, prev));
    prev = cur;
  }
  prev.clear();
  for (double s : {1.05, 1.2, 1.5, 2.0, 3.0}) {
    SnsConfig c;
    c.angle_threshold = 10.0;
    c.area_threshold = s;
    c.edge_threshold = 1e9;
    const Flags cur = cull_faces(noisy, ref, c).culled_face;
    if (!prev.empty()) CHECK(subset(cur, prev));
    prev = cur;
  }
  prev.clear();
  for (double r : {1.2, 1.5, 2.0, 3.0}) {
    SnsConfig c;
    c.angle_threshold = 10.0;
    c.area_threshold = 1e9;
    c.edge_threshold = r;
    const Flags cur = cull_faces(noisy, ref, c).culled_face;
    if (!prev.empty()) CHECK(subset(cur, prev));
    prev = cur;
  }
}

TEST_CASE("full registration on concentric spheres") {
  const SemanticTemplate t = fixtures::icosphere_template(2);
  const Bvh target(fixtures::icosphere(6, 1.2));
  const SnsResult r = sns_register(t, Pose::identity(1), target, sphere_cfg());
  CHECK(count(r.valid_vertex) == t.vertex_count());
  CHECK(r.sampled.faces == t.mesh.faces);
  CHECK(r.stats.culled_posed == 0);
  CHECK(r.stats.culled_canonical == 0);
  CHECK(count_holes(r.hole_mask) == 0);
  CHECK(r.hole_mask.covered_count() > 0);

  SnsConfig huge = sphere_cfg();
  huge.connectivity_threshold = INT_MAX;
  const SnsResult empty = sns_register(t, Pose::identity(1), target, huge);
  CHECK(empty.sampled.face_count() == 0);
  CHECK(count(empty.valid_vertex) == 0);
  CHECK(count_holes(empty.hole_mask) == empty.hole_mask.covered_count());
}

TEST_CASE("hole mask covers exactly the texels of faces with an invalid vertex") {
  const SemanticTemplate t = fixtures::icosphere_template(3);
  const Bvh target(fixtures::hemisphere(5, 1.2));
  const SnsResult r = sns_register(t, Pose::identity(1), target, sphere_cfg());
  CHECK(count(r.valid_vertex) > 0);
  CHECK(count(r.valid_vertex) < t.vertex_count());

  const UvRaster raster = reference::rasterize_uv(t.atlas, 128, 128);
  std::size_t mismatched = 0;
  for (std::size_t texel = 0; texel < raster.texel_count(); ++texel) {
    const int f = raster.face[texel];
    CHECK((f >= 0) == r.hole_mask.covered(texel));
    if (f < 0) continue;
    const Face& tri = t.mesh.faces[f];
    const bool touches_invalid = !r.valid_vertex[tri[0]] || !r.valid_vertex[tri[1]] || !r.valid_vertex[tri[2]];
    mismatched += touches_invalid != (r.hole_mask.data[texel] > 0.5);
  }
  CHECK(mismatched == 0);

  // Every kept face has three valid vertices that lie on the target along the vertex normal.
  const NormalField n = vertex_normals(t.mesh);
  for (const Face& f : r.sampled.faces)
    for (int v : f) REQUIRE(r.valid_vertex[v] == 1);
  for (int v = 0; v < t.vertex_count(); ++v) {
    if (!r.valid_vertex[v]) continue;
    const Vec3 off = r.sampled.positions[v] - t.mesh.positions[v];
    CHECK(off.cross(n.normals[v]).norm() < 1e-9);
    CHECK(off.norm() <= r.range);
    CHECK(target.closest_point(r.sampled.positions[v]).distance < 1e-9);
  }
}

TEST_CASE("registration of a posed capsule") {
  SemanticTemplate t = subdivide_midpoint(fixtures::capsule_template());
  const Pose pose = fixtures::capsule_demo_pose();
  const Bvh target(fixtures::capsule_target(3));
  SnsConfig c;
  c.connectivity_threshold = 100;
  c.mask_resolution = 256;
  const SnsResult r = sns_register(t, pose, target, c);
  CHECK(count(r.valid_vertex) > t.vertex_count() / 2);
  const std::vector<Vec3> posed = lbs_pose(t, t.mesh.positions, pose);
  for (int v = 0; v < t.vertex_count(); ++v) {
    if (r.valid_vertex[v]) {
      CHECK(target.closest_point(r.sampled.positions[v]).distance < 1e-9);
    } else {
      CHECK(r.sampled.positions[v] == posed[v]);
    }
  }
  const FaceComponents comps = connected_components(r.sampled);
  for (int size : comps.component_size) CHECK(size >= c.connectivity_threshold);

  const auto [a, b] = at_thread_counts([&] { return sns_register(t, pose, target, c); });
  CHECK(a.sampled.positions == b.sampled.positions);
  CHECK(a.sampled.faces == b.sampled.faces);
  CHECK(a.valid_vertex == b.valid_vertex);
  CHECK(a.hole_mask.data == b.hole_mask.data);
}

TEST_CASE("partial file form rebuilds the result") {
  const SemanticTemplate t = fixtures::icosphere_template(3);
  const Bvh target(fixtures::hemisphere(5, 1.2));
  const SnsResult r = sns_register(t, Pose::identity(1), target, sphere_cfg());
  const SnsResult back = sns_result_from_partial(r.sampled, r.hole_mask);
  CHECK(back.valid_vertex == r.valid_vertex);
}

TEST_CASE("config validation") {
  SnsConfig c;
  CHECK_NOTHROW(c.validate());
  c.angle_threshold = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SnsConfig{};
  c.connectivity_threshold = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SnsConfig{};
  CHECK(c.resolved_range(fixtures::icosphere(1).bounds()) == doctest::Approx(0.05 * std::sqrt(12.0)).epsilon(1e-2));
}
