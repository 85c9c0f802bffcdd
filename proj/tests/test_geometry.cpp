#include "helpers.hpp"

#include "semreg/bvh.hpp"
#include "semreg/mesh_io.hpp"
#include "semreg/reference.hpp"

#include <map>
#include <queue>
#include <set>

using namespace semreg;
using namespace testing;

namespace {

Mesh single_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  Mesh m;
  m.positions = {a, b, c};
  m.faces = {{0, 1, 2}};
  return m;
}

Mesh concat(const Mesh& a, const Mesh& b) {
  Mesh m = a;
  const int off = a.vertex_count();
  m.positions.insert(m.positions.end(), b.positions.begin(), b.positions.end());
  for (Face f : b.faces) m.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  return m;
}

// Independent flood fill over faces sharing an undirected edge.
std::vector<int> bfs_component_sizes(const Mesh& m) {
  std::map<std::pair<int, int>, std::vector<int>> edge_faces;
  for (int f = 0; f < m.face_count(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = m.faces[f][k], b = m.faces[f][(k + 1) % 3];
      edge_faces[{std::min(a, b), std::max(a, b)}].push_back(f);
    }
  }
  std::vector<int> seen(m.face_count(), 0), sizes;
  for (int s = 0; s < m.face_count(); ++s) {
    if (seen[s]) continue;
    int count = 0;
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const int f = q.front();
      q.pop();
      ++count;
      for (int k = 0; k < 3; ++k) {
        int a = m.faces[f][k], b = m.faces[f][(k + 1) % 3];
        for (int g : edge_faces[{std::min(a, b), std::max(a, b)}]) {
          if (!seen[g]) {
            seen[g] = 1;
            q.push(g);
          }
        }
      }
    }
    sizes.push_back(count);
  }
  return sizes;
}

} // namespace

TEST_CASE("face normals of simple and degenerate faces") {
  const Mesh tri = single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  const NormalField n = face_normals(tri);
  CHECK(n.normals[0].isApprox(Vec3(0, 0, 1)));
  CHECK(n.degenerate[0] == 0);

  const Mesh ico = fixtures::icosahedron_template().mesh;
  const NormalField ni = face_normals(ico);
  for (int f = 0; f < ico.face_count(); ++f) {
    const Vec3 c = (ico.positions[ico.faces[f][0]] + ico.positions[ico.faces[f][1]] + ico.positions[ico.faces[f][2]]) / 3;
    CHECK(ni.normals[f].dot(c.normalized()) == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Area 1e-14: a needle of length 1 and height 2e-14.
  const Mesh needle = single_triangle({0, 0, 0}, {1, 0, 0}, {0.5, 2e-14, 0});
  const NormalField nn = face_normals(needle);
  CHECK(nn.degenerate[0] == 1);
  CHECK(nn.normals[0] == Vec3::Zero());
}

TEST_CASE("vertex normals") {
  const Mesh sphere = fixtures::icosphere(3);
  const NormalField n = vertex_normals(sphere);
  double worst = 0.0;
  for (int v = 0; v < sphere.vertex_count(); ++v) {
    worst = std::max(worst, std::acos(std::min(1.0, n.normals[v].dot(sphere.positions[v].normalized()))));
  }
  CHECK(worst < 2.0 * M_PI / 180.0);

  const Mesh grid = fixtures::planar_grid(4);
  const NormalField g = vertex_normals(grid);
  const int interior = 2 * 5 + 2;
  CHECK(g.normals[interior].isApprox(Vec3(0, 0, 1)));

  Mesh lonely = single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  lonely.positions.push_back({5, 5, 5});
  const NormalField l = vertex_normals(lonely);
  CHECK(l.degenerate[3] == 1);
  CHECK(l.normals[3] == Vec3::Zero());
}

TEST_CASE("raycast examples") {
  const Bvh sphere(fixtures::icosphere(4));
  const auto hit = sphere.raycast({0, 0, 2}, {0, 0, -1}, 0.0, 10.0);
  REQUIRE(hit);
  CHECK(hit->t == doctest::Approx(1.0).epsilon(5e-3));
  CHECK((hit->point - Vec3(0, 0, 2 - hit->t)).norm() < 1e-12);
  CHECK(hit->bary.sum() == doctest::Approx(1.0));

  const Bvh quad(fixtures::planar_grid(1));
  CHECK_FALSE(quad.raycast({0.5, 0.5, 1.0}, {1, 0, 0}, 0.0, 10.0));
  CHECK_FALSE(sphere.raycast({0, 0, 2}, {0, 0, -1}, 0.0, 0.5));
}

TEST_CASE("bvh queries match exhaustive scans") {
  const Mesh mesh = fixtures::asymmetric_blob(3);
  const Bvh bvh(mesh);
  auto g = rng(7);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 o(uniform(g, -2, 2), uniform(g, -2, 2), uniform(g, -2, 2));
    const Vec3 d = i % 2 ? random_unit(g) : (0.3 * random_unit(g) - o).normalized();
    const auto a = bvh.raycast(o, d, 0.0, 10.0);
    const auto b = reference::raycast(mesh, o, d, 0.0, 10.0);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      ++hits;
      CHECK(a->face == b->face);
      CHECK(std::abs(a->t - b->t) < 1e-9);
    }
    const SurfacePoint cp = bvh.closest_point(o);
    const SurfacePoint cr = reference::closest_point(mesh, o);
    CHECK(cp.face == cr.face);
    CHECK(std::abs(cp.distance - cr.distance) < 1e-12);
  }
  CHECK(hits > 300);
}

TEST_CASE("inside test") {
  const Bvh sphere(fixtures::icosphere(4));
  CHECK(is_inside(sphere, {0, 0, 0}));
  CHECK_FALSE(is_inside(sphere, {2, 0, 0}));
  auto g = rng(11);
  int agree = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const Vec3 p(uniform(g, -2, 2), uniform(g, -2, 2), uniform(g, -2, 2));
    agree += is_inside(sphere, p) == (p.norm() < 1.0);
  }
  CHECK(agree >= 999);
}

TEST_CASE("connected components") {
  const Mesh one = fixtures::icosphere(2);
  CHECK(connected_components(one).component_size.size() == 1);

  Mesh shifted = one;
  for (Vec3& p : shifted.positions) p.x() += 5.0;
  const FaceComponents two = connected_components(concat(one, shifted));
  REQUIRE(two.component_size.size() == 2);
  CHECK(two.component_size[0] == two.component_size[1]);

  // Remove a ring of faces around the equator.
  std::vector<int> ring;
  for (int f = 0; f < one.face_count(); ++f) {
    const Vec3 c = (one.positions[one.faces[f][0]] + one.positions[one.faces[f][1]] + one.positions[one.faces[f][2]]) / 3;
    if (std::abs(c.z()) < 0.12) ring.push_back(f);
  }
  const Mesh cut = remove_faces(one, ring);
  std::vector<int> ours = connected_components(cut).component_size;
  std::vector<int> oracle = bfs_component_sizes(cut);
  std::sort(ours.begin(), ours.end());
  std::sort(oracle.begin(), oracle.end());
  CHECK(ours.size() >= 2);
  CHECK(ours == oracle);
}

TEST_CASE("remove_faces keeps vertices") {
  const Mesh m = fixtures::icosphere(1);
  const Mesh same = remove_faces(m, {});
  CHECK(same.positions == m.positions);
  CHECK(same.faces == m.faces);

  std::vector<int> all(m.face_count());
  std::iota(all.begin(), all.end(), 0);
  const Mesh none = remove_faces(m, all);
  CHECK(none.face_count() == 0);
  CHECK(none.vertex_count() == m.vertex_count());

  const std::vector<int> some = {0, 5};
  const Mesh r = remove_faces(m, some);
  CHECK(r.face_count() == m.face_count() - 2);
  CHECK(r.positions[3] == m.positions[3]);
  CHECK(r.positions == m.positions);

  const std::vector<int> bad = {m.face_count()};
  CHECK_THROWS_AS(remove_faces(m, bad), Error);
}

TEST_CASE("triangle quality") {
  const Mesh eq = single_triangle({0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2, 0});
  CHECK(triangle_quality(eq).quality[0] == doctest::Approx(1.0).epsilon(1e-14));

  const Mesh right = single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  CHECK(triangle_quality(right).quality[0] == doctest::Approx(4 * std::sqrt(3.0) * 0.5 / 4.0).epsilon(1e-14));
  CHECK(triangle_quality(right).quality[0] == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-14));

  const Mesh flat = single_triangle({0, 0, 0}, {1, 0, 0}, {2, 0, 0});
  const QualityField qf = triangle_quality(flat);
  CHECK(qf.quality[0] == 0.0);
  CHECK(qf.degenerate[0] == 1);

  Mesh blob = fixtures::asymmetric_blob(2);
  const QualityField q1 = triangle_quality(blob);
  for (Vec3& p : blob.positions) p *= 3.7;
  const QualityField q2 = triangle_quality(blob);
  for (std::size_t f = 0; f < q1.quality.size(); ++f) CHECK(q2.quality[f] == doctest::Approx(q1.quality[f]).epsilon(1e-12));
}

TEST_CASE("mesh validation") {
  Mesh m = single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  CHECK_NOTHROW(m.validate());
  m.faces.push_back({0, 0, 1});
  CHECK_THROWS_AS(m.validate(), Error);
  m.faces.back() = {0, 1, 3};
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("OBJ and PLY round trips") {
  const auto dir = temp_dir("meshio");
  const SemanticTemplate t = fixtures::icosahedron_template();
  write_obj(dir / "a.obj", t.mesh, &t.atlas);
  const ObjData back = read_obj(dir / "a.obj");
  CHECK(back.mesh.positions == t.mesh.positions);
  CHECK(back.mesh.faces == t.mesh.faces);
  CHECK(back.atlas.uvs == t.atlas.uvs);
  CHECK(back.atlas.faces == t.atlas.faces);
  write_obj(dir / "b.obj", back.mesh, &back.atlas);
  CHECK(read_file(dir / "a.obj") == read_file(dir / "b.obj"));

  Mesh colored = fixtures::icosphere(1);
  for (const Vec3& p : colored.positions) colored.colors.push_back((p.array() * 0.5 + 0.5).matrix());
  write_ply(dir / "c.ply", colored);
  const Mesh cp = read_ply(dir / "c.ply");
  REQUIRE(cp.vertex_count() == colored.vertex_count());
  CHECK(cp.faces == colored.faces);
  REQUIRE(cp.has_colors());
  for (int v = 0; v < cp.vertex_count(); ++v) {
    CHECK((cp.positions[v] - colored.positions[v]).norm() < 1e-6);
    CHECK((cp.colors[v] - colored.colors[v]).norm() < 1.0 / 255);
  }

  // Quads are fan-triangulated and negative indices resolve relative to the end.
  std::ofstream(dir / "q.obj") << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n";
  const ObjData q = read_obj(dir / "q.obj");
  REQUIRE(q.mesh.face_count() == 2);
  CHECK(q.mesh.faces[0] == Face{0, 1, 2});
  CHECK(q.mesh.faces[1] == Face{0, 2, 3});

  std::ofstream(dir / "bad.obj") << "v 0 0 0\nf 1 2 3\n";
  CHECK_THROWS_AS(read_obj(dir / "bad.obj"), Error);
}

TEST_CASE("deterministic reductions do not depend on the worker count") {
  std::vector<double> x(100003);
  auto g = rng(3);
  for (double& v : x) v = uniform(g, -1, 1) * std::pow(10.0, uniform(g, -8, 8));
  const auto [a, b] = at_thread_counts([&] { return deterministic_sum(x.size(), [&](std::size_t i) { return x[i]; }); });
  CHECK(a == b);
  const auto [c, d] =
      at_thread_counts([&] { return deterministic_max(x.size(), -1e300, [&](std::size_t i) { return x[i]; }); });
  CHECK(c == d);
  CHECK(c == *std::max_element(x.begin(), x.end()));
}
