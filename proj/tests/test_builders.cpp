#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "treenet/builders.hpp"
#include "treenet/rng.hpp"

using namespace treenet;

namespace {

PointSet poisson_points(double side, std::uint64_t seed) {
  return sample_poisson(1.0, Window{0.0, 0.0, side, 0.0}, seed);
}

struct DSU {
  std::vector<int> parent;
  explicit DSU(int n) : parent(std::size_t(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[std::size_t(x)] != x) {
      parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
      x = parent[std::size_t(x)];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::size_t(a)] = b;
    return true;
  }
};

// Reference spanning tree straight from the definition: sort all n(n-1)/2
// edges and run Kruskal.
double complete_kruskal_weight(const PointSet& ps) {
  const int n = int(ps.size());
  struct E {
    double d;
    int a, b;
  };
  std::vector<E> edges;
  edges.reserve(std::size_t(n) * std::size_t(n - 1) / 2);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      edges.push_back({dist(ps[a], ps[b]), a, b});
  std::sort(edges.begin(), edges.end(), [](const E& x, const E& y) {
    if (x.d != y.d) return x.d < y.d;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  DSU dsu(n);
  double total = 0.0;
  int joined = 0;
  for (const E& e : edges) {
    if (dsu.unite(e.a, e.b)) {
      total += e.d;
      if (++joined == n - 1) break;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("minimum spanning tree matches complete graph kruskal") {
  const PointSet ps = poisson_points(38.7, 71);  // about 1500 points
  REQUIRE(ps.size() > 1000);
  const TreeNetwork t = build_mst(ps);
  REQUIRE(t.edge_count() == ps.size() - 1);
  double banded = 0.0;
  for (const NetEdge& e : t.graph().edges) banded += e.length;
  const double reference = complete_kruskal_weight(ps);
  CHECK(banded == doctest::Approx(reference).epsilon(1e-12));
}

TEST_CASE("gabriel graph matches the disc definition") {
  const PointSet ps = poisson_points(28.3, 72);  // about 800 points
  const Network g = build_gabriel(ps);
  const int n = int(ps.size());

  std::set<std::pair<int, int>> expect;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const Vec2 mid{(ps[a].x + ps[b].x) / 2.0, (ps[a].y + ps[b].y) / 2.0};
      const double rad = dist(ps[a], ps[b]) / 2.0;
      bool blocked = false;
      for (int c = 0; c < n && !blocked; ++c) {
        if (c == a || c == b) continue;
        blocked = dist(ps[c], mid) <= rad;
      }
      if (!blocked) expect.insert({a, b});
    }
  }
  std::set<std::pair<int, int>> got;
  for (const NetEdge& e : g.edges)
    got.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  CHECK(got == expect);
}

TEST_CASE("gabriel graph on a right triangle keeps only the legs") {
  // The hypotenuse disc of a right triangle passes through the right-angle
  // vertex, and the closed-disc rule discards it.
  std::vector<Vec2> pts{{0.0, 0.0}, {4.0, 0.0}, {0.0, 3.0}};
  const PointSet ps(std::move(pts), Window{0.0, 0.0, 5.0, 0.0});
  const Network g = build_gabriel(ps);
  std::set<std::pair<int, int>> got;
  for (const NetEdge& e : g.edges)
    got.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  CHECK(got == std::set<std::pair<int, int>>{{0, 1}, {0, 2}});
}

TEST_CASE("gabriel graph contains the minimum spanning tree") {
  const PointSet ps = poisson_points(20.0, 73);
  const Network g = build_gabriel(ps);
  const TreeNetwork t = build_mst(ps);
  std::set<std::pair<int, int>> gset;
  for (const NetEdge& e : g.edges)
    gset.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  for (const NetEdge& e : t.graph().edges)
    CHECK(gset.count({std::min(e.u, e.v), std::max(e.u, e.v)}) == 1);
}

TEST_CASE("geometric graph components match a flood fill") {
  const PointSet ps = poisson_points(22.0, 74);
  const double r0 = 1.1;
  const RggComponents rc = rgg_components(ps, r0);
  const int n = int(ps.size());

  std::vector<int> label(std::size_t(n), -1);
  int comps = 0;
  for (int s = 0; s < n; ++s) {
    if (label[std::size_t(s)] >= 0) continue;
    std::vector<int> stack{s};
    label[std::size_t(s)] = comps;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u = 0; u < n; ++u) {
        if (label[std::size_t(u)] < 0 && dist(ps[v], ps[u]) <= r0) {
          label[std::size_t(u)] = comps;
          stack.push_back(u);
        }
      }
    }
    ++comps;
  }
  CHECK(rc.component_count == comps);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      CHECK((rc.component[std::size_t(a)] == rc.component[std::size_t(b)]) ==
            (label[std::size_t(a)] == label[std::size_t(b)]));

  std::vector<int> size_of(std::size_t(comps), 0);
  for (int v = 0; v < n; ++v) ++size_of[std::size_t(label[std::size_t(v)])];
  std::uint64_t hist_points = 0;
  for (const auto& [size, freq] : rc.size_histogram)
    hist_points += std::uint64_t(size) * freq;
  CHECK(hist_points == std::uint64_t(n));
  double m1 = 0.0;
  for (int v = 0; v < n; ++v) {
    CHECK(rc.size_of_point[std::size_t(v)] ==
          size_of[std::size_t(label[std::size_t(v)])]);
    m1 += double(size_of[std::size_t(label[std::size_t(v)])]);
  }
  REQUIRE(rc.moments.size() == 4);
  CHECK(rc.moments[0] == doctest::Approx(m1 / n).epsilon(1e-12));
}

TEST_CASE("rain tree attaches every arrival to its nearest predecessor") {
  const RainTree rt = build_poisson_rain(1.0, Window{0.0, 0.0, 20.0, 0.0}, 75);
  const int n = int(rt.points.size());
  REQUIRE(n > 100);
  REQUIRE(rt.arrival.size() == std::size_t(n));
  REQUIRE(rt.parent.size() == std::size_t(n));

  int roots = 0;
  for (int v = 0; v < n; ++v) {
    if (rt.parent[std::size_t(v)] < 0) {
      ++roots;
      // Only the first arrival lacks a parent.
      for (int u = 0; u < n; ++u)
        if (u != v)
          CHECK(rt.arrival[std::size_t(u)] > rt.arrival[std::size_t(v)]);
      continue;
    }
    const int p = rt.parent[std::size_t(v)];
    CHECK(rt.arrival[std::size_t(p)] < rt.arrival[std::size_t(v)]);
    const double got = dist(rt.points[p], rt.points[v]);
    for (int u = 0; u < n; ++u) {
      if (rt.arrival[std::size_t(u)] < rt.arrival[std::size_t(v)])
        CHECK(got <= dist(rt.points[u], rt.points[v]) + 1e-9);
    }
  }
  CHECK(roots == 1);
  // Parent edges are exactly the tree edges.
  CHECK(rt.tree.edge_count() == std::size_t(n - 1));
  std::set<std::pair<int, int>> tedges;
  for (const NetEdge& e : rt.tree.graph().edges)
    tedges.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  for (int v = 0; v < n; ++v) {
    const int p = rt.parent[std::size_t(v)];
    if (p >= 0) CHECK(tedges.count({std::min(p, v), std::max(p, v)}) == 1);
  }
}

TEST_CASE("grid comb is a spanning tree of unit cells") {
  const TreeNetwork t = build_grid_comb(Window{0.0, 0.0, 2.0, 0.0}, 1.0);
  CHECK(t.vertex_count() == 9);  // 3 x 3 sites
  CHECK(t.edge_count() == 8);
  for (const NetEdge& e : t.graph().edges)
    CHECK(e.length == doctest::Approx(1.0).epsilon(1e-12));
  // Teeth run horizontally: every vertex off the spine keeps y constant
  // along its tooth, so each row is connected on its own.
  for (int v = 0; v < int(t.vertex_count()); ++v)
    CHECK(t.is_terminal(v));
}

TEST_CASE("model builder wires the right network form") {
  const Window w{0.0, 0.0, 12.0, 0.0};
  const BuiltNetwork mst = build_model(Model::mst, w, 1.0, 81);
  CHECK(mst.tree.has_value());
  CHECK_FALSE(mst.graph.has_value());
  const BuiltNetwork gab = build_model(Model::gabriel, w, 1.0, 81);
  CHECK(gab.graph.has_value());
  CHECK_FALSE(gab.tree.has_value());
  const BuiltNetwork comb_a = build_model(Model::comb, w, 1.0, 5, 1.0);
  const BuiltNetwork comb_b = build_model(Model::comb, w, 1.0, 99, 1.0);
  CHECK(comb_a.points.size() == comb_b.points.size());  // seed is ignored
  CHECK(parse_model("rain") == Model::rain);
  CHECK(parse_model("bogus") == std::nullopt);
  CHECK(std::string(model_name(Model::gabriel)) == "gabriel");
}

TEST_CASE("router finds shortest paths through a known grid") {
  // 2 x 2 square lattice with unit edges: opposite corners are 2 apart.
  Network net;
  net.add_vertex({0.0, 0.0});
  net.add_vertex({1.0, 0.0});
  net.add_vertex({0.0, 1.0});
  net.add_vertex({1.0, 1.0});
  net.add_edge(0, 1);
  net.add_edge(0, 2);
  net.add_edge(1, 3);
  net.add_edge(2, 3);
  AStarRouter router(net);
  CHECK(router.route(0, 3) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(router.route(0, 0) == 0.0);
  CHECK(router.route(1, 2) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("router agrees with tree routes on a tree") {
  const PointSet ps = poisson_points(12.0, 76);
  const TreeNetwork t = build_mst(ps);
  AStarRouter router(t.graph());
  Rng rng(77);
  for (int q = 0; q < 300; ++q) {
    const int u = int(rng.below(std::uint64_t(t.vertex_count())));
    const int v = int(rng.below(std::uint64_t(t.vertex_count())));
    CHECK(router.route(u, v) ==
          doctest::Approx(t.route_length(u, v)).epsilon(1e-9));
  }
}
