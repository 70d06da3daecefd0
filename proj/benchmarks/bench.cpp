#include <benchmark/benchmark.h>

#include "treenet/builders.hpp"
#include "treenet/geometry.hpp"
#include "treenet/lemma_lab.hpp"
#include "treenet/network.hpp"
#include "treenet/rng.hpp"

namespace {

using namespace treenet;

PointSet bench_points(double side, std::uint64_t seed) {
  return sample_poisson(1.0, Window{0.0, 0.0, side, 0.0}, seed);
}

void bm_in_disc(benchmark::State& state) {
  const PointSet ps = bench_points(double(state.range(0)), 11);
  Rng rng(7);
  for (auto _ : state) {
    const Vec2 c{rng.next_double() * double(state.range(0)),
                 rng.next_double() * double(state.range(0))};
    const std::vector<int> hits = ps.in_disc(c, 3.0);
    benchmark::DoNotOptimize(hits.size());
  }
}
BENCHMARK(bm_in_disc)->Arg(64)->Arg(256);

void bm_mst_build(benchmark::State& state) {
  const PointSet ps = bench_points(double(state.range(0)), 13);
  for (auto _ : state) {
    TreeNetwork t = build_mst(ps);
    benchmark::DoNotOptimize(t.edge_count());
  }
}
BENCHMARK(bm_mst_build)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void bm_lca_queries(benchmark::State& state) {
  const PointSet ps = bench_points(128.0, 17);
  const TreeNetwork t = build_mst(ps);
  Rng rng(5);
  for (auto _ : state) {
    const int u = int(rng.below(std::uint64_t(t.vertex_count())));
    const int v = int(rng.below(std::uint64_t(t.vertex_count())));
    benchmark::DoNotOptimize(t.lca(u, v));
  }
}
BENCHMARK(bm_lca_queries);

void bm_route_length(benchmark::State& state) {
  const PointSet ps = bench_points(128.0, 17);
  const TreeNetwork t = build_mst(ps);
  Rng rng(5);
  for (auto _ : state) {
    const int u = int(rng.below(std::uint64_t(t.vertex_count())));
    const int v = int(rng.below(std::uint64_t(t.vertex_count())));
    benchmark::DoNotOptimize(t.route_length(u, v));
  }
}
BENCHMARK(bm_route_length);

void bm_contour_extraction(benchmark::State& state) {
  Rng rng(23);
  const GridColoring gc = random_coloring(int(state.range(0)), 0.5, rng);
  for (auto _ : state) {
    ContourSet cs = extract_dual_contours(gc);
    benchmark::DoNotOptimize(cs.contours.size());
  }
}
BENCHMARK(bm_contour_extraction)->Arg(16)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
