#include "semreg/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace semreg {

namespace {

constexpr double kEdgeTolerance = 1e-12;
constexpr int kLeafSize = 4;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool slab_test(const Aabb& box, const Vec3& origin, const Vec3& dir, const Vec3& inv, double t_min, double t_max,
               double& t_near) {
  double lo = t_min;
  double hi = t_max;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return false;
      continue;
    }
    double t0 = (box.lo[a] - origin[a]) * inv[a];
    double t1 = (box.hi[a] - origin[a]) * inv[a];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (lo > hi) return false;
  }
  t_near = lo;
  return true;
}

double box_distance_sq(const Aabb& box, const Vec3& p) {
  const Vec3 d = (box.lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - box.hi);
  return d.squaredNorm();
}

} // namespace

bool intersect_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& origin, const Vec3& dir,
                        double& t, double& u, double& v) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  const double scale = e1.norm() * e2.norm();
  if (!(std::abs(det) > 1e-14 * scale)) return false;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  u = s.dot(p) * inv;
  if (u < -kEdgeTolerance || u > 1.0 + kEdgeTolerance) return false;
  const Vec3 q = s.cross(e1);
  v = dir.dot(q) * inv;
  if (v < -kEdgeTolerance || u + v > 1.0 + kEdgeTolerance) return false;
  t = e2.dot(q) * inv;
  return true;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, Vec3& bary) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    bary = Vec3(1, 0, 0);
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    bary = Vec3(0, 1, 0);
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double w = d1 / (d1 - d3);
    bary = Vec3(1.0 - w, w, 0.0);
    return a + w * ab;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    bary = Vec3(0, 0, 1);
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    bary = Vec3(1.0 - w, 0.0, w);
    return a + w * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    bary = Vec3(0.0, 1.0 - w, w);
    return b + w * (c - b);
  }
  const double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0)) {
    // Degenerate triangle that slipped past the edge tests: fall back to vertex a.
    bary = Vec3(1, 0, 0);
    return a;
  }
  const double v = vb / denom;
  const double w = vc / denom;
  bary = Vec3(1.0 - v - w, v, w);
  return a + ab * v + ac * w;
}

Bvh::Bvh(Mesh mesh) : mesh_(std::move(mesh)) {
  mesh_.validate();
  const int nf = mesh_.face_count();
  bounds_ = mesh_.bounds();
  if (nf == 0) return;

  std::vector<Aabb> face_box(static_cast<std::size_t>(nf));
  std::vector<Vec3> centroid(static_cast<std::size_t>(nf));
  for (int f = 0; f < nf; ++f) {
    const Face& t = mesh_.faces[f];
    for (int k = 0; k < 3; ++k) face_box[f].extend(mesh_.positions[t[k]]);
    centroid[f] = (mesh_.positions[t[0]] + mesh_.positions[t[1]] + mesh_.positions[t[2]]) / 3.0;
  }
  order_.resize(static_cast<std::size_t>(nf));
  std::iota(order_.begin(), order_.end(), 0);

  const double pad = 1e-9 * std::max(bounds_.diagonal(), 1e-30);
  struct Task {
    int node, begin, end;
  };
  nodes_.reserve(static_cast<std::size_t>(2 * nf / kLeafSize + 2));
  nodes_.emplace_back();
  std::vector<Task> stack{{0, 0, nf}};
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    Aabb box;
    Aabb cbox;
    for (int i = task.begin; i < task.end; ++i) {
      box.extend(face_box[order_[i]]);
      cbox.extend(centroid[order_[i]]);
    }
    box.lo.array() -= pad;
    box.hi.array() += pad;
    nodes_[task.node].box = box;
    const int count = task.end - task.begin;
    if (count <= kLeafSize) {
      nodes_[task.node].first = task.begin;
      nodes_[task.node].count = count;
      continue;
    }
    int axis = 0;
    const Vec3 ext = cbox.extent();
    if (ext[1] > ext[axis]) axis = 1;
    if (ext[2] > ext[axis]) axis = 2;
    const int mid = task.begin + count / 2;
    std::nth_element(order_.begin() + task.begin, order_.begin() + mid, order_.begin() + task.end,
                     [&](int x, int y) {
                       if (centroid[x][axis] != centroid[y][axis]) return centroid[x][axis] < centroid[y][axis];
                       return x < y;
                     });
    const int left = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[task.node].left = left;
    nodes_[task.node].right = left + 1;
    stack.push_back({left + 1, mid, task.end});
    stack.push_back({left, task.begin, mid});
  }
}

std::optional<RayHit> Bvh::raycast(const Vec3& origin, const Vec3& direction, double t_min, double t_max) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv = direction.cwiseInverse();
  double best_t = t_max;
  int best_face = -1;
  double best_u = 0.0;
  double best_v = 0.0;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double t_near;
    if (!slab_test(node.box, origin, direction, inv, t_min, best_t, t_near)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = order_[i];
        const Face& tri = mesh_.faces[f];
        double t, u, v;
        if (!intersect_triangle(mesh_.positions[tri[0]], mesh_.positions[tri[1]], mesh_.positions[tri[2]], origin,
                                direction, t, u, v)) {
          continue;
        }
        if (t < t_min || t > t_max) continue;
        if (best_face < 0 || t < best_t || (t == best_t && f < best_face)) {
          best_t = t;
          best_face = f;
          best_u = u;
          best_v = v;
        }
      }
      continue;
    }
    double tl = kInf;
    double tr = kInf;
    const bool hl = slab_test(nodes_[node.left].box, origin, direction, inv, t_min, best_t, tl);
    const bool hr = slab_test(nodes_[node.right].box, origin, direction, inv, t_min, best_t, tr);
    // Push the farther child first so the nearer one is processed next.
    if (hl && hr) {
      if (tl <= tr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    } else if (hl) {
      stack[top++] = node.left;
    } else if (hr) {
      stack[top++] = node.right;
    }
  }
  if (best_face < 0) return std::nullopt;
  RayHit hit;
  hit.t = best_t;
  hit.point = origin + best_t * direction;
  hit.face = best_face;
  hit.bary = Vec3(1.0 - best_u - best_v, best_u, best_v);
  return hit;
}

void Bvh::all_hits(const Vec3& origin, const Vec3& direction, double t_min, double t_max,
                   std::vector<RayHit>& hits) const {
  hits.clear();
  if (nodes_.empty()) return;
  const Vec3 inv = direction.cwiseInverse();
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double t_near;
    if (!slab_test(node.box, origin, direction, inv, t_min, t_max, t_near)) continue;
    if (node.left >= 0) {
      stack[top++] = node.right;
      stack[top++] = node.left;
      continue;
    }
    for (int i = node.first; i < node.first + node.count; ++i) {
      const int f = order_[i];
      const Face& tri = mesh_.faces[f];
      double t, u, v;
      if (!intersect_triangle(mesh_.positions[tri[0]], mesh_.positions[tri[1]], mesh_.positions[tri[2]], origin,
                              direction, t, u, v)) {
        continue;
      }
      if (t < t_min || t > t_max) continue;
      hits.push_back({t, origin + t * direction, f, Vec3(1.0 - u - v, u, v)});
    }
  }
}

SurfacePoint Bvh::closest_point(const Vec3& p) const {
  if (nodes_.empty()) throw Error("closest_point on an empty mesh");
  SurfacePoint best;
  double best_sq = kInf;
  struct Entry {
    int node;
    double dist_sq;
  };
  Entry stack[128];
  int top = 0;
  stack[top++] = {0, box_distance_sq(nodes_[0].box, p)};
  while (top > 0) {
    const Entry e = stack[--top];
    if (e.dist_sq > best_sq) continue;
    const Node& node = nodes_[e.node];
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = order_[i];
        const Face& tri = mesh_.faces[f];
        Vec3 bary;
        const Vec3 q = closest_point_on_triangle(p, mesh_.positions[tri[0]], mesh_.positions[tri[1]],
                                                 mesh_.positions[tri[2]], bary);
        const double d = (q - p).squaredNorm();
        if (d < best_sq || (d == best_sq && f < best.face)) {
          best_sq = d;
          best.point = q;
          best.face = f;
          best.bary = bary;
        }
      }
      continue;
    }
    const double dl = box_distance_sq(nodes_[node.left].box, p);
    const double dr = box_distance_sq(nodes_[node.right].box, p);
    if (dl <= dr) {
      if (dr <= best_sq) stack[top++] = {node.right, dr};
      if (dl <= best_sq) stack[top++] = {node.left, dl};
    } else {
      if (dl <= best_sq) stack[top++] = {node.left, dl};
      if (dr <= best_sq) stack[top++] = {node.right, dr};
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

Bvh::Parity Bvh::crossing_parity(const Vec3& p, const Vec3& dir, double t_min) const {
  thread_local std::vector<RayHit> hits;
  all_hits(p, dir, t_min, kInf, hits);
  Parity out;
  out.crossings = static_cast<int>(hits.size());
  for (const RayHit& h : hits) {
    if (h.bary.minCoeff() < 1e-9) {
      out.ambiguous = true;
      break;
    }
  }
  return out;
}

bool Bvh::is_inside(const Vec3& p) const {
  if (nodes_.empty()) return false;
  static const Vec3 kProbe[] = {
      Vec3(1, 0, 0),
      Vec3(1.0, 0.3183098861837907, 0.2017).normalized(),
      Vec3(0.2210, 1.0, 0.4151).normalized(),
      Vec3(-0.3037, 0.1729, 1.0).normalized(),
  };
  const double t_min = 1e-6 * bounds_.diagonal();
  for (const Vec3& dir : kProbe) {
    const Parity fwd = crossing_parity(p, dir, t_min);
    if (fwd.ambiguous) continue;
    const Parity bwd = crossing_parity(p, -dir, t_min);
    if (bwd.ambiguous) continue;
    if ((fwd.crossings & 1) != (bwd.crossings & 1)) continue;
    return (fwd.crossings & 1) == 1;
  }
  return false;
}

std::optional<RayHit> raycast(const Bvh& bvh, const Vec3& origin, const Vec3& direction, double t_min,
                              double t_max) {
  return bvh.raycast(origin, direction, t_min, t_max);
}

bool is_inside(const Bvh& bvh, const Vec3& point) { return bvh.is_inside(point); }

} // namespace semreg
