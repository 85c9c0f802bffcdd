#include "semreg/fixtures.hpp"

#include <cmath>
#include <numbers>

namespace semreg::fixtures {

namespace {

/// Flips faces (and their UV faces) whose normal points toward the given interior point.
void orient_outward(Mesh& mesh, UvAtlas* atlas, const std::vector<Vec3>& interior) {
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    Face& t = mesh.faces[f];
    const Vec3& a = mesh.positions[t[0]];
    const Vec3 n = (mesh.positions[t[1]] - a).cross(mesh.positions[t[2]] - a);
    const Vec3 centroid = (a + mesh.positions[t[1]] + mesh.positions[t[2]]) / 3.0;
    if (n.dot(centroid - interior[f]) < 0.0) {
      std::swap(t[1], t[2]);
      if (atlas != nullptr) std::swap(atlas->faces[f][1], atlas->faces[f][2]);
    }
  }
}

SemanticTemplate single_joint(Mesh mesh, UvAtlas atlas) {
  SemanticTemplate t;
  t.mesh = std::move(mesh);
  t.atlas = std::move(atlas);
  t.joints = {Vec3::Zero()};
  t.parents = {-1};
  t.weights.joints = 1;
  t.weights.values.assign(t.mesh.positions.size(), 1.0);
  t.labels.assign(t.mesh.positions.size(), 0);
  t.canonical_pose = Pose::identity(1);
  return t;
}

} // namespace

SemanticTemplate icosahedron_template() {
  using std::numbers::pi;
  Mesh mesh;
  const double zr = 1.0 / std::sqrt(5.0);
  const double rr = 2.0 / std::sqrt(5.0);
  mesh.positions.emplace_back(0, 0, 1);
  for (int i = 0; i < 5; ++i) mesh.positions.emplace_back(rr * std::cos(2 * pi * i / 5), rr * std::sin(2 * pi * i / 5), zr);
  for (int i = 0; i < 5; ++i) {
    const double a = 2 * pi * i / 5 + pi / 5;
    mesh.positions.emplace_back(rr * std::cos(a), rr * std::sin(a), -zr);
  }
  mesh.positions.emplace_back(0, 0, -1);
  const auto U = [](int i) { return 1 + i % 5; };
  const auto L = [](int i) { return 6 + i % 5; };

  // Net layout: a strip of 5 top, 10 band and 5 bottom triangles.
  UvAtlas atlas;
  const double w = 0.96 / 5.5;
  const double h = w * std::sqrt(3.0) / 2.0;
  const double y0 = 0.5 + 1.5 * h;
  const auto uvN = [](int i) { return i; };
  const auto uvU = [](int i) { return 5 + i; };
  const auto uvL = [](int i) { return 11 + i; };
  const auto uvS = [](int i) { return 17 + i; };
  for (int i = 0; i < 5; ++i) atlas.uvs.emplace_back(0.02 + (i + 0.5) * w, y0);
  for (int i = 0; i < 6; ++i) atlas.uvs.emplace_back(0.02 + i * w, y0 - h);
  for (int i = 0; i < 6; ++i) atlas.uvs.emplace_back(0.02 + (i + 0.5) * w, y0 - 2 * h);
  for (int i = 0; i < 5; ++i) atlas.uvs.emplace_back(0.02 + (i + 1) * w, y0 - 3 * h);

  for (int i = 0; i < 5; ++i) {
    mesh.faces.push_back({0, U(i), U(i + 1)});
    atlas.faces.push_back({uvN(i), uvU(i), uvU(i + 1)});
  }
  for (int i = 0; i < 5; ++i) {
    mesh.faces.push_back({U(i), L(i), U(i + 1)});
    atlas.faces.push_back({uvU(i), uvL(i), uvU(i + 1)});
    mesh.faces.push_back({L(i), L(i + 1), U(i + 1)});
    atlas.faces.push_back({uvL(i), uvL(i + 1), uvU(i + 1)});
  }
  for (int i = 0; i < 5; ++i) {
    mesh.faces.push_back({11, L(i + 1), L(i)});
    atlas.faces.push_back({uvS(i), uvL(i + 1), uvL(i)});
  }
  orient_outward(mesh, &atlas, std::vector<Vec3>(mesh.faces.size(), Vec3::Zero()));
  return single_joint(std::move(mesh), std::move(atlas));
}

SemanticTemplate icosphere_template(int levels, double radius) {
  SemanticTemplate t = icosahedron_template();
  for (int k = 0; k < levels; ++k) {
    t = subdivide_midpoint(t);
    for (Vec3& p : t.mesh.positions) p.normalize();
  }
  for (Vec3& p : t.mesh.positions) p *= radius;
  return t;
}

Mesh icosphere(int levels, double radius) { return icosphere_template(levels, radius).mesh; }

Mesh hemisphere(int levels, double radius) {
  const Mesh sphere = icosphere(levels, radius);
  const double eps = 1e-9 * radius;
  std::vector<int> remap(sphere.positions.size(), -1);
  Mesh out;
  for (const Face& t : sphere.faces) {
    if (sphere.positions[t[0]].z() < -eps || sphere.positions[t[1]].z() < -eps || sphere.positions[t[2]].z() < -eps) {
      continue;
    }
    Face nt;
    for (int k = 0; k < 3; ++k) {
      if (remap[t[k]] < 0) {
        remap[t[k]] = out.vertex_count();
        out.positions.push_back(sphere.positions[t[k]]);
      }
      nt[k] = remap[t[k]];
    }
    out.faces.push_back(nt);
  }
  return out;
}

SemanticTemplate capsule_template() {
  using std::numbers::pi;
  constexpr int kAround = 24;
  constexpr int kCapRings = 5;
  constexpr int kCylinderRings = 15;
  constexpr int kRings = 2 * kCapRings + kCylinderRings;  // 25
  constexpr double kRadius = 0.15;
  constexpr double kBottom = kRadius;         // lower cap center height
  constexpr double kTop = 1.7 - kRadius;      // upper cap center height

  // Profile (ring radius, height, arc-length fraction) from bottom to top.
  struct Ring {
    double rho, y;
  };
  std::vector<Ring> rings;
  for (int i = 1; i <= kCapRings; ++i) {
    const double phi = 0.5 * pi * i / kCapRings;
    rings.push_back({kRadius * std::sin(phi), kBottom - kRadius * std::cos(phi)});
  }
  for (int i = 1; i <= kCylinderRings; ++i) {
    rings.push_back({kRadius, kBottom + (kTop - kBottom) * i / (kCylinderRings + 1)});
  }
  for (int i = kCapRings; i >= 1; --i) {
    const double phi = 0.5 * pi * i / kCapRings;
    rings.push_back({kRadius * std::sin(phi), kTop + kRadius * std::cos(phi)});
  }
  const double cap_arc = 0.5 * pi * kRadius;
  const double total_arc = 2 * cap_arc + (kTop - kBottom);
  auto arc_fraction = [&](double y, int ring_index) {
    if (ring_index < kCapRings) {
      const double phi = 0.5 * pi * (ring_index + 1) / kCapRings;
      return kRadius * phi / total_arc;
    }
    if (ring_index >= kCapRings + kCylinderRings) {
      const int i = kRings - ring_index;  // 5 .. 1
      const double phi = 0.5 * pi * i / kCapRings;
      return 1.0 - kRadius * phi / total_arc;
    }
    return (cap_arc + (y - kBottom)) / total_arc;
  };

  Mesh mesh;
  const int bottom_pole = 0;
  mesh.positions.emplace_back(0.0, 0.0, 0.0);
  for (int k = 0; k < kRings; ++k) {
    for (int a = 0; a < kAround; ++a) {
      const double theta = 2 * pi * a / kAround;
      mesh.positions.emplace_back(rings[k].rho * std::sin(theta), rings[k].y, rings[k].rho * std::cos(theta));
    }
  }
  const int top_pole = mesh.vertex_count();
  mesh.positions.emplace_back(0.0, 1.7, 0.0);
  auto vid = [&](int k, int a) { return 1 + k * kAround + ((a % kAround) + kAround) % kAround; };

  // Two charts: front (theta in [-pi/2, pi/2]) and back. Each has 13 columns
  // per ring plus one UV per pole.
  constexpr int kCols = kAround / 2 + 1;
  constexpr int kChartUvs = kCols * kRings + 2;
  UvAtlas atlas;
  for (int ch = 0; ch < 2; ++ch) {
    const double u0 = ch == 0 ? 0.02 : 0.52;
    for (int k = 0; k < kRings; ++k) {
      const double v = 0.02 + 0.96 * arc_fraction(rings[k].y, k);
      for (int c = 0; c < kCols; ++c) atlas.uvs.emplace_back(u0 + 0.46 * c / (kCols - 1), v);
    }
    atlas.uvs.emplace_back(u0 + 0.23, 0.02);
    atlas.uvs.emplace_back(u0 + 0.23, 0.98);
  }
  auto chart_of = [](int a) { return (a >= 6 && a < 18) ? 1 : 0; };
  auto column_of = [](int chart, int a) { return chart == 1 ? a - 6 : (a + 6) % kAround; };
  auto uid = [&](int chart, int k, int c) { return chart * kChartUvs + k * kCols + c; };

  std::vector<Vec3> interior;
  auto add = [&](Face f, Face uv, const Vec3& inside) {
    mesh.faces.push_back(f);
    atlas.faces.push_back(uv);
    interior.push_back(inside);
  };
  for (int a = 0; a < kAround; ++a) {
    const int ch = chart_of(a);
    const int c = column_of(ch, a);
    add({bottom_pole, vid(0, a + 1), vid(0, a)}, {ch * kChartUvs + kCols * kRings, uid(ch, 0, c + 1), uid(ch, 0, c)},
        Vec3(0, kBottom, 0));
    for (int k = 0; k + 1 < kRings; ++k) {
      const Vec3 axis(0.0, 0.5 * (rings[k].y + rings[k + 1].y), 0.0);
      add({vid(k, a), vid(k, a + 1), vid(k + 1, a + 1)}, {uid(ch, k, c), uid(ch, k, c + 1), uid(ch, k + 1, c + 1)},
          axis);
      add({vid(k, a), vid(k + 1, a + 1), vid(k + 1, a)}, {uid(ch, k, c), uid(ch, k + 1, c + 1), uid(ch, k + 1, c)},
          axis);
    }
    add({top_pole, vid(kRings - 1, a), vid(kRings - 1, a + 1)},
        {ch * kChartUvs + kCols * kRings + 1, uid(ch, kRings - 1, c), uid(ch, kRings - 1, c + 1)},
        Vec3(0, kTop, 0));
  }
  orient_outward(mesh, &atlas, interior);

  SemanticTemplate t;
  t.mesh = std::move(mesh);
  t.atlas = std::move(atlas);
  t.joints = {Vec3(0, 0.45, 0), Vec3(0, 0.8, 0), Vec3(0, 1.15, 0), Vec3(0, 1.45, 0)};
  t.parents = {-1, 0, 1, 2};
  const int nv = t.mesh.vertex_count();
  const int nj = 4;
  t.weights.joints = nj;
  t.weights.values.resize(static_cast<std::size_t>(nv) * nj);
  t.labels.resize(nv);
  for (int v = 0; v < nv; ++v) {
    const Vec3& p = t.mesh.positions[v];
    double sum = 0.0;
    for (int j = 0; j < nj; ++j) {
      const double d = (p.y() - t.joints[j].y()) / 0.18;
      t.weights.values[v * nj + j] = std::exp(-d * d);
      sum += t.weights.values[v * nj + j];
    }
    for (int j = 0; j < nj; ++j) t.weights.values[v * nj + j] /= sum;

    std::string label = "body";
    if (p.y() < 0.12) {
      label = p.x() >= 0.0 ? "left-foot" : "right-foot";
    } else if (p.y() > 1.45 && p.z() > 0.05) {
      label = "face";
    } else if (std::abs(p.y() - 1.0) < 0.12 && p.x() > 0.12) {
      label = "left-hand";
    } else if (std::abs(p.y() - 1.0) < 0.12 && p.x() < -0.12) {
      label = "right-hand";
    }
    t.labels[v] = static_cast<std::uint8_t>(t.label_id(label));
  }
  std::vector<Vec3> canonical(nj, Vec3::Zero());
  canonical[2] = Vec3(0.0, 0.0, 0.1);
  t.canonical_pose = Pose::from_axis_angle(canonical);
  return t;
}

Pose capsule_demo_pose() {
  std::vector<Vec3> aa(4, Vec3::Zero());
  aa[1] = Vec3(0.15, 0.0, 0.0);
  aa[2] = Vec3(0.0, 0.0, -0.12);
  aa[3] = Vec3(0.0, 0.35, 0.0);
  return Pose::from_axis_angle(aa, Vec3(0.05, 0.0, -0.03));
}

Mesh inflate(const Mesh& mesh, double offset) {
  const NormalField n = vertex_normals(mesh);
  Mesh out = mesh;
  for (std::size_t v = 0; v < out.positions.size(); ++v) out.positions[v] += offset * n.normals[v];
  return out;
}

Mesh capsule_target(int levels, double offset) {
  SemanticTemplate t = capsule_template();
  for (int k = 0; k < levels; ++k) t = subdivide_midpoint(t);
  Mesh posed;
  posed.positions = lbs_pose(t, t.mesh.positions, capsule_demo_pose());
  posed.faces = t.mesh.faces;
  return inflate(posed, offset);
}

Mesh asymmetric_blob(int levels) {
  Mesh m = icosphere(levels, 1.0);
  for (Vec3& p : m.positions) {
    const double r = 1.0 + 0.25 * p.x() * p.y() + 0.2 * p.z() * p.z() + 0.15 * p.x() * p.x() * p.x() +
                     0.1 * std::sin(3.0 * p.y() + 1.0);
    p = Vec3(1.0 * p.x(), 0.7 * p.y(), 0.5 * p.z()) * r;
  }
  return m;
}

Mesh planar_grid(int n, double size) {
  Mesh m;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) m.positions.emplace_back(size * j / n, size * i / n, 0.0);
  auto id = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m.faces.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
  }
  return m;
}

} // namespace semreg::fixtures
