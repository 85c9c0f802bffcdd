// Serial reference kernels against the accelerated, parallel ones.

#include "semreg/completion.hpp"
#include "semreg/fixtures.hpp"
#include "semreg/metrics.hpp"
#include "semreg/parallel.hpp"
#include "semreg/reference.hpp"
#include "semreg/sns.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace semreg;

namespace {

struct Rays {
  std::vector<Vec3> origin, direction;
};

Rays outward_rays(const Mesh& m) {
  Rays r;
  for (const Vec3& p : m.positions) {
    r.origin.push_back(0.9 * p);
    r.direction.push_back(p.normalized());
  }
  return r;
}

void BM_RaycastReference(benchmark::State& state) {
  const Mesh target = fixtures::icosphere(static_cast<int>(state.range(0)), 1.2);
  const Rays rays = outward_rays(fixtures::icosphere(3));
  for (auto _ : state) {
    for (std::size_t i = 0; i < rays.origin.size(); ++i)
      benchmark::DoNotOptimize(reference::raycast(target, rays.origin[i], rays.direction[i], 0.0, 1.0));
  }
}

void BM_RaycastBvh(benchmark::State& state) {
  const Bvh target(fixtures::icosphere(static_cast<int>(state.range(0)), 1.2));
  const Rays rays = outward_rays(fixtures::icosphere(3));
  for (auto _ : state) {
    for (std::size_t i = 0; i < rays.origin.size(); ++i)
      benchmark::DoNotOptimize(target.raycast(rays.origin[i], rays.direction[i], 0.0, 1.0));
  }
}

void BM_SampleExplicit(benchmark::State& state) {
  ScopedThreadCount threads(static_cast<int>(state.range(0)));
  const Bvh target(fixtures::icosphere(6, 1.2));
  const Mesh unit = fixtures::icosphere(5);
  const std::vector<Vec3> normals = vertex_normals(unit).normals;
  SnsConfig cfg;
  cfg.range = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(sample_explicit(unit.positions, normals, target, cfg));
}

void BM_RasterizeReference(benchmark::State& state) {
  const SemanticTemplate t = subdivide_midpoint(fixtures::capsule_template());
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::rasterize_uv(t.atlas, res, res));
}

void BM_Rasterize(benchmark::State& state) {
  const SemanticTemplate t = subdivide_midpoint(fixtures::capsule_template());
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rasterize_uv(t.atlas, res, res));
}

struct Problem {
  UvMap field;
  HoleMask hole;
};

Problem inpaint_problem(int n) {
  Problem p{UvMap(n, n, 1), HoleMask(n, n, 1)};
  std::fill(p.field.coverage.begin(), p.field.coverage.end(), 1);
  p.hole.coverage = p.field.coverage;
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t t = static_cast<std::size_t>(i) * n + j;
      p.field.data[t] = u(g);
      const double di = i - 0.5 * n, dj = j - 0.5 * n;
      if (di * di + dj * dj < 0.1 * n * n) p.hole.data[t] = 1.0;
    }
  }
  return p;
}

void BM_InpaintGaussSeidel(benchmark::State& state) {
  const Problem p = inpaint_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::gauss_seidel_inpaint(p.field, p.hole, 1e-9, 1000000));
}

void BM_InpaintCg(benchmark::State& state) {
  const Problem p = inpaint_problem(static_cast<int>(state.range(0)));
  InpaintOptions o;
  o.tolerance = 1e-9;
  for (auto _ : state) benchmark::DoNotOptimize(harmonic_inpaint(p.field, p.hole, o));
}

void BM_RenderNormalsReference(benchmark::State& state) {
  const Mesh blob = fixtures::asymmetric_blob(4);
  const Camera cam = default_views(blob, blob, static_cast<int>(state.range(0)))[0];
  for (auto _ : state) benchmark::DoNotOptimize(reference::raycast_normals(blob, cam));
}

void BM_RenderNormals(benchmark::State& state) {
  const Mesh blob = fixtures::asymmetric_blob(4);
  const Camera cam = default_views(blob, blob, static_cast<int>(state.range(0)))[0];
  for (auto _ : state) benchmark::DoNotOptimize(render_normals(blob, cam));
}

} // namespace

BENCHMARK(BM_RaycastReference)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RaycastBvh)->Arg(3)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleExplicit)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RasterizeReference)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rasterize)->Arg(128)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InpaintGaussSeidel)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InpaintCg)->Arg(64)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderNormalsReference)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderNormals)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
