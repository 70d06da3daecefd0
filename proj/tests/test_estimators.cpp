#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "treenet/builders.hpp"
#include "treenet/estimators.hpp"
#include "treenet/network.hpp"
#include "treenet/rng.hpp"

using namespace treenet;

namespace {

// Chain of points on a horizontal line: routes equal coordinate gaps, so
// every estimate has a closed form.
struct Chain {
  PointSet ps;
  TreeNetwork tree;
};

Chain make_chain(int n, double spacing, double side) {
  std::vector<Vec2> pts;
  Network net;
  for (int i = 0; i < n; ++i) {
    const Vec2 p{spacing * double(i), side / 2.0};
    pts.push_back(p);
    net.add_vertex(p);
    if (i > 0) net.add_edge(i - 1, i);
  }
  Chain c{PointSet(std::move(pts), Window{0.0, 0.0, side, 0.0}),
          validate_tree(std::move(net))};
  return c;
}

}  // namespace

TEST_CASE("tree route source answers with tree metric") {
  const PointSet ps = sample_poisson(1.0, Window{0.0, 0.0, 12.0, 0.0}, 91);
  const TreeNetwork t = build_mst(ps);
  TreeRouteSource src(t);
  Rng rng(92);
  for (int q = 0; q < 200; ++q) {
    const int u = int(rng.below(std::uint64_t(t.vertex_count())));
    const int v = int(rng.below(std::uint64_t(t.vertex_count())));
    CHECK(src.route(u, v) == t.route_length(u, v));
  }
  auto clone = src.clone();
  CHECK(clone->route(0, int(t.vertex_count()) - 1) ==
        src.route(0, int(t.vertex_count()) - 1));
}

TEST_CASE("separation means on a chain sit inside their bins") {
  const Chain c = make_chain(120, 0.8, 96.0);
  TreeRouteSource src(c.tree);
  const RhoCurve curve = estimate_rho(c.ps, src, 4.5, 5, 100000, 0.0, 7);
  REQUIRE(curve.bins.size() == 5);
  for (const RhoBin& b : curve.bins) {
    if (b.used_pairs == 0) continue;
    // Routes equal separations here, so the bin mean lands in the bin.
    CHECK(b.mean_route >= b.r_lo - 1e-9);
    CHECK(b.mean_route <= b.r_hi + 1e-9);
    CHECK(b.used_pairs == b.total_pairs);
  }
  // Spacing 0.8 with bin width 0.9: separations 0.8, 1.6, 2.4, 3.2, 4.0
  // sit strictly inside bins 0..4, one gap size per bin.
  CHECK(curve.bins[0].total_pairs == 119);  // gap 0.8
  CHECK(curve.bins[1].total_pairs == 118);  // gap 1.6
  CHECK(curve.bins[2].total_pairs == 117);  // gap 2.4
  CHECK(curve.bins[3].total_pairs == 116);  // gap 3.2
  CHECK(curve.bins[4].total_pairs == 115);  // gap 4.0
}

TEST_CASE("margin removes boundary pairs from the count") {
  const Chain c = make_chain(120, 0.8, 96.0);
  TreeRouteSource src(c.tree);
  const double margin = 10.0;
  const RhoCurve curve = estimate_rho(c.ps, src, 1.0, 1, 100000, margin, 7);
  // Eligible points are those with x in [10, 86]: ids 13..107, so 95
  // points and 94 adjacent pairs.
  CHECK(curve.bins[0].total_pairs == 94);
}

TEST_CASE("separation estimates are invariant to worker threads") {
  const PointSet ps = sample_poisson(1.0, Window{0.0, 0.0, 30.0, 0.0}, 93);
  const TreeNetwork t = build_mst(ps);
  TreeRouteSource src(t);
  const RhoCurve a = estimate_rho(ps, src, 3.0, 6, 500, 1.0, 17, 1);
  const RhoCurve b = estimate_rho(ps, src, 3.0, 6, 500, 1.0, 17, 3);
  REQUIRE(a.bins.size() == b.bins.size());
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    CHECK(a.bins[i].total_pairs == b.bins[i].total_pairs);
    CHECK(a.bins[i].used_pairs == b.bins[i].used_pairs);
    CHECK(a.bins[i].mean_route == b.bins[i].mean_route);
    CHECK(a.bins[i].se == b.bins[i].se);
  }
}

TEST_CASE("raising the cap keeps totals and fills usage") {
  const PointSet ps = sample_poisson(1.0, Window{0.0, 0.0, 30.0, 0.0}, 94);
  const TreeNetwork t = build_mst(ps);
  TreeRouteSource src(t);
  const RhoCurve small = estimate_rho(ps, src, 3.0, 3, 50, 0.0, 5);
  const RhoCurve big = estimate_rho(ps, src, 3.0, 3, 100000, 0.0, 5);
  for (std::size_t i = 0; i < small.bins.size(); ++i) {
    CHECK(small.bins[i].total_pairs == big.bins[i].total_pairs);
    CHECK(small.bins[i].used_pairs ==
          std::min<std::uint64_t>(small.bins[i].total_pairs, 50));
    CHECK(big.bins[i].used_pairs == big.bins[i].total_pairs);
  }
}

TEST_CASE("tail curve is monotone and thread invariant") {
  const PointSet ps = sample_poisson(1.0, Window{0.0, 0.0, 60.0, 0.0}, 95);
  const TreeNetwork t = build_mst(ps);
  TreeRouteSource src(t);
  const std::vector<double> grid = geometric_d_grid(4.0, 15.0);
  const TailEstimate a = estimate_tail(ps, src, 2.0, grid, 100000, 6.0, 3, 1);
  const TailEstimate b = estimate_tail(ps, src, 2.0, grid, 100000, 6.0, 3, 4);
  REQUIRE(a.d.size() == grid.size());
  for (std::size_t i = 0; i < a.d.size(); ++i) {
    CHECK(a.chi[i] == b.chi[i]);
    if (i > 0) CHECK(a.chi[i] <= a.chi[i - 1]);  // survival is nonincreasing
    CHECK(a.chi[i] >= a.lo[i]);
    CHECK(a.chi[i] <= a.hi[i]);
  }
  CHECK(a.pairs_used == b.pairs_used);
  CHECK_FALSE(a.insufficient_pairs);
}

TEST_CASE("geometric grid steps by the fourth root of two") {
  const std::vector<double> g = geometric_d_grid(10.0, 100.0);
  REQUIRE(g.size() >= 4);
  CHECK(g.front() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(g.back() <= 100.0 + 1e-9);
  const double ratio = std::pow(2.0, 0.25);
  for (std::size_t i = 1; i + 1 < g.size(); ++i)
    CHECK(g[i] / g[i - 1] == doctest::Approx(ratio).epsilon(1e-9));
}

TEST_CASE("tail fit recovers a planted power law exactly") {
  TailEstimate te;
  te.r = 1.0;
  const double a0 = 3.7, slope = -1.25;
  for (const double d : {10.0, 20.0, 40.0, 80.0, 160.0}) {
    te.d.push_back(d);
    te.chi.push_back(a0 * std::pow(d, slope));
    te.lo.push_back(0.0);
    te.hi.push_back(1.0);
  }
  const TailFit fit = fit_tail_exponent(te, 10.0, 160.0);
  CHECK(fit.points_used == 5);
  CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-9));
  CHECK(fit.intercept == doctest::Approx(std::log(a0)).epsilon(1e-9));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-9));

  TailFit part = fit_tail_exponent(te, 15.0, 200.0);
  CHECK(part.points_used == 4);  // 20, 40, 80, 160 fall in range
  CHECK(part.slope == doctest::Approx(slope).epsilon(1e-9));
}

TEST_CASE("tail fit refuses fewer than four points") {
  TailEstimate te;
  for (const double d : {10.0, 20.0, 40.0}) {
    te.d.push_back(d);
    te.chi.push_back(1.0 / d);
  }
  CHECK_THROWS(fit_tail_exponent(te, 5.0, 50.0));
}

TEST_CASE("window scaling study is deterministic and well shaped") {
  const std::vector<double> sides{8.0, 12.0};
  const ScalingStudy a =
      window_scaling_study(Model::mst, 1.5, sides, 2, 101, 0.1, 4000);
  const ScalingStudy b =
      window_scaling_study(Model::mst, 1.5, sides, 2, 101, 0.1, 4000, 2);
  REQUIRE(a.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.rows[i].side == sides[i]);
    CHECK(a.rows[i].replicate_means.size() == 2);
    CHECK(a.rows[i].mean_route == b.rows[i].mean_route);
    CHECK(a.rows[i].ci_lo <= a.rows[i].mean_route);
    CHECK(a.rows[i].ci_hi >= a.rows[i].mean_route);
    CHECK(a.rows[i].pairs_used > 0);
  }
}

TEST_CASE("comb replicates coincide because the model is deterministic") {
  const ScalingStudy st =
      window_scaling_study(Model::comb, 2.0, {10.0}, 3, 5, 0.1, 100000);
  REQUIRE(st.rows.size() == 1);
  const auto& means = st.rows[0].replicate_means;
  REQUIRE(means.size() == 3);
  CHECK(means[0] == means[1]);
  CHECK(means[1] == means[2]);
}

TEST_CASE("csv writers emit their headers and one row per entry") {
  const Chain c = make_chain(40, 1.0, 40.0);
  TreeRouteSource src(c.tree);
  const RhoCurve curve = estimate_rho(c.ps, src, 3.0, 3, 1000, 0.0, 1);
  const std::string rho = rho_csv(curve);
  CHECK(rho.rfind("r_bin,mean_route,pairs,se\n", 0) == 0);
  CHECK(std::count(rho.begin(), rho.end(), '\n') == 4);

  const TailEstimate te =
      estimate_tail(c.ps, src, 2.0, geometric_d_grid(3.0, 9.0), 1000, 0.0, 1);
  const std::string tail = tail_csv(te);
  CHECK(tail.rfind("d,chi,lo,hi,pairs\n", 0) == 0);
  CHECK(std::size_t(std::count(tail.begin(), tail.end(), '\n')) ==
        te.d.size() + 1);

  const ScalingStudy st =
      window_scaling_study(Model::comb, 2.0, {8.0}, 2, 5, 0.1, 1000);
  const std::string sc = scaling_csv(st);
  CHECK(sc.rfind("side,mean_route,ci_lo,ci_hi,replicates,pairs\n", 0) == 0);
  CHECK(std::count(sc.begin(), sc.end(), '\n') == 2);
}

TEST_CASE("graph route source clones run independently") {
  const PointSet ps = sample_poisson(1.0, Window{0.0, 0.0, 15.0, 0.0}, 96);
  const BuiltNetwork bn = build_model(Model::gabriel, Window{0.0, 0.0, 15.0, 0.0},
                                      1.0, 96);
  auto src = make_route_source(bn);
  auto c1 = src->clone();
  auto c2 = src->clone();
  const int n = int(bn.points.size());
  CHECK(c1->route(0, n - 1) == doctest::Approx(c2->route(0, n - 1)));
  CHECK(src->route(0, n - 1) == doctest::Approx(c1->route(0, n - 1)));
}
