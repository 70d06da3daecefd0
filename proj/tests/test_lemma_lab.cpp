#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "treenet/builders.hpp"
#include "treenet/geometry.hpp"
#include "treenet/lemma_lab.hpp"
#include "treenet/network.hpp"
#include "treenet/rng.hpp"
#include "treenet/stats.hpp"

using namespace treenet;

namespace {

// Rows are listed bottom to top: rows[y][x] gives the cell color.
GridColoring coloring_from_rows(const std::vector<std::string>& rows) {
  GridColoring gc(int(rows.size()));
  for (int y = 0; y < gc.k; ++y) {
    REQUIRE(rows[std::size_t(y)].size() == std::size_t(gc.k));
    for (int x = 0; x < gc.k; ++x)
      gc.set_green(x, y, rows[std::size_t(y)][std::size_t(x)] == '1');
  }
  return gc;
}

// Five single-cell notches on the bottom edge plus one two-by-two island.
// Decomposition is clear by inspection: each notch sheds a length-3 path,
// the island a length-8 circuit, and nothing contains anything else.
std::vector<std::string> notch_island_rows() {
  return {
      "101010101011",
      "111111111111",
      "111111111111",
      "111111111111",
      "111111111111",
      "111110011111",
      "111110011111",
      "111111111111",
      "111111111111",
      "111111111111",
      "111111111111",
      "111111111111",
  };
}

// A dense 12 x 12 coloring with nested contours and a pinch where two
// paths cross the same corner. The full decomposition was worked out by
// hand and is frozen below.
std::vector<std::string> dense_rows() {
  return {
      "001111000111",
      "011100000111",
      "110100000001",
      "110011110001",
      "110011111110",
      "000111000110",
      "000011011110",
      "000011111110",
      "110011100000",
      "111000000001",
      "110000001011",
      "110000111011",
  };
}

DualEdge de(int x, int y, char dir) {
  DualEdge e;
  e.x = x;
  e.y = y;
  e.dir = dir;
  return e;
}

std::uint64_t total_length(const ContourSet& cs) {
  std::uint64_t n = 0;
  for (const Contour& c : cs.contours) n += std::uint64_t(c.length());
  return n;
}

std::vector<int> touched_of(const Contour& c, int k) {
  std::vector<int> out;
  for (const DualEdge& e : c.edges) {
    out.push_back(e.y * k + e.x);
    out.push_back(e.dir == 'E' ? e.y * k + e.x + 1 : (e.y + 1) * k + e.x);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool subset_of(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  return both.empty();
}

}  // namespace

TEST_CASE("grid coloring addressing and counts") {
  GridColoring gc(3);
  CHECK(gc.k == 3);
  CHECK(gc.green.size() == 9);
  CHECK(gc.removed.size() == 9);
  CHECK(gc.green_count() == 0);
  CHECK(gc.removed_count() == 0);

  gc.set_green(2, 1, true);
  CHECK(gc.is_green(2, 1));
  CHECK(gc.green[std::size_t(1 * 3 + 2)] == 1);
  CHECK(gc.green_count() == 1);

  gc.set_removed(0, 2, true);
  CHECK(gc.is_removed(0, 2));
  CHECK(gc.removed[std::size_t(2 * 3 + 0)] == 1);
  CHECK(gc.removed_count() == 1);

  gc.set_green(2, 1, false);
  CHECK(!gc.is_green(2, 1));
  CHECK(gc.green_count() == 0);
}

TEST_CASE("random coloring and removal follow their coin") {
  Rng rng(2026);
  GridColoring all = random_coloring(6, 1.0, rng);
  CHECK(all.green_count() == 36);
  GridColoring none = random_coloring(6, 0.0, rng);
  CHECK(none.green_count() == 0);

  GridColoring half = random_coloring(20, 0.5, rng);
  CHECK(half.green_count() >= 120);
  CHECK(half.green_count() <= 280);

  sample_removed(half, 0.0, rng);
  CHECK(half.removed_count() == 0);
  sample_removed(half, 1.0, rng);
  CHECK(half.removed_count() == 400);

  Rng a(77), b(77);
  GridColoring ga = random_coloring(10, 0.4, a);
  GridColoring gb = random_coloring(10, 0.4, b);
  CHECK(ga.green == gb.green);
}

TEST_CASE("unlike pair counts on hand colorings") {
  // Checkerboard: every one of the 12 adjacent pairs is unlike.
  GridColoring cb(3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) cb.set_green(x, y, (x + y) % 2 == 0);
  CHECK(unlike_adjacent_pairs(cb) == 12);
  CHECK(unlike_adjacent_pairs_avoiding(cb) == 12);

  // Removing the center kills its four pairs.
  cb.set_removed(1, 1, true);
  CHECK(unlike_adjacent_pairs(cb) == 12);
  CHECK(unlike_adjacent_pairs_avoiding(cb) == 8);

  // Two vertical halves meet along four pairs.
  GridColoring halves(4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) halves.set_green(x, y, x < 2);
  CHECK(unlike_adjacent_pairs(halves) == 4);

  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    GridColoring gc = random_coloring(8, 0.5, rng);
    CHECK(unlike_adjacent_pairs(gc) == unlike_adjacent_pairs_avoiding(gc));
  }
}

TEST_CASE("contour extraction on the notch and island coloring") {
  const GridColoring gc = coloring_from_rows(notch_island_rows());
  CHECK(unlike_adjacent_pairs(gc) == 23);

  const ContourSet cs = extract_dual_contours(gc);
  REQUIRE(cs.contours.size() == 6);
  CHECK(cs.k == 12);
  CHECK(total_length(cs) == 23);

  // Paths drain first, left to right along the bottom edge.
  for (int i = 0; i < 5; ++i) {
    const Contour& c = cs.contours[std::size_t(i)];
    CHECK(!c.is_circuit);
    CHECK(c.length() == 3);
    CHECK(c.corners.size() == 4);
  }
  const Contour& first = cs.contours[0];
  const std::vector<DualEdge> want_first = {de(0, 0, 'E'), de(1, 0, 'N'),
                                            de(1, 0, 'E')};
  REQUIRE(first.edges.size() == want_first.size());
  for (std::size_t i = 0; i < want_first.size(); ++i)
    CHECK(first.edges[i] == want_first[i]);
  const std::vector<std::pair<int, int>> want_corners = {
      {1, 0}, {1, 1}, {2, 1}, {2, 0}};
  CHECK(first.corners == want_corners);

  // The island closes into one clockwise-traced circuit of length 8.
  const Contour& ring = cs.contours[5];
  CHECK(ring.is_circuit);
  CHECK(ring.length() == 8);
  const std::vector<DualEdge> want_ring = {
      de(5, 4, 'N'), de(6, 4, 'N'), de(6, 5, 'E'), de(6, 6, 'E'),
      de(6, 6, 'N'), de(5, 6, 'N'), de(4, 6, 'E'), de(4, 5, 'E')};
  REQUIRE(ring.edges.size() == want_ring.size());
  for (std::size_t i = 0; i < want_ring.size(); ++i)
    CHECK(ring.edges[i] == want_ring[i]);
  const std::vector<std::pair<int, int>> ring_corners = {
      {5, 5}, {6, 5}, {7, 5}, {7, 6}, {7, 7}, {6, 7}, {5, 7}, {5, 6}};
  CHECK(ring.corners == ring_corners);

  const Decomposition dec = maximal_decomposition(cs, gc);
  REQUIRE(dec.items.size() == 6);
  int max_paths = 0, max_circuits = 0;
  for (const ContourInfo& it : dec.items) {
    CHECK(it.maximal);
    CHECK(it.parent == -1);
    CHECK(!it.ambiguous_interior);
    CHECK(it.inner_uniform);
    CHECK(it.outer_uniform);
    CHECK(it.inner_connected);
    if (cs.contours[std::size_t(it.index)].is_circuit)
      ++max_circuits;
    else
      ++max_paths;
  }
  CHECK(max_paths == 5);
  CHECK(max_circuits == 1);

  // Notch interiors are the notch cells; the circuit holds the island.
  for (int i = 0; i < 5; ++i) {
    const std::vector<int> want = {2 * i + 1};
    CHECK(dec.items[std::size_t(i)].interior == want);
  }
  const std::vector<int> island = {5 * 12 + 5, 5 * 12 + 6, 6 * 12 + 5,
                                   6 * 12 + 6};
  CHECK(dec.items[5].interior == island);
}

TEST_CASE("decomposition of the dense reference coloring") {
  const GridColoring gc = coloring_from_rows(dense_rows());
  const ContourSet cs = extract_dual_contours(gc);
  const Decomposition dec = maximal_decomposition(cs, gc);
  REQUIRE(cs.contours.size() == 7);
  REQUIRE(dec.items.size() == 7);

  CHECK(unlike_adjacent_pairs(gc) == 82);
  CHECK(total_length(cs) == 82);

  struct Row {
    bool circuit;
    int length;
    std::size_t interior;
    int parent;
    bool maximal;
  };
  const std::vector<Row> want = {
      {false, 4, 3, -1, true},  {false, 19, 18, -1, true},
      {false, 29, 65, -1, true}, {false, 8, 9, 2, false},
      {false, 5, 5, 2, false},  {false, 7, 4, 2, false},
      {true, 10, 4, -1, true},
  };
  for (std::size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(cs.contours[i].is_circuit == want[i].circuit);
    CHECK(cs.contours[i].length() == want[i].length);
    CHECK(dec.items[i].interior.size() == want[i].interior);
    CHECK(dec.items[i].parent == want[i].parent);
    CHECK(dec.items[i].maximal == want[i].maximal);
    CHECK(!dec.items[i].ambiguous_interior);
  }

  // Containment means the child walk never leaves the parent interior.
  for (const ContourInfo& it : dec.items) {
    if (it.parent < 0) continue;
    const std::vector<int> touched =
        touched_of(cs.contours[std::size_t(it.index)], cs.k);
    CHECK(subset_of(touched, dec.items[std::size_t(it.parent)].interior));
  }

  // Maximal interiors cannot overlap.
  std::vector<const std::vector<int>*> tops;
  for (const ContourInfo& it : dec.items)
    if (it.maximal) tops.push_back(&it.interior);
  for (std::size_t i = 0; i < tops.size(); ++i)
    for (std::size_t j = i + 1; j < tops.size(); ++j)
      CHECK(disjoint(*tops[i], *tops[j]));
}

TEST_CASE("length conservation and disjoint maximal interiors hold on random colorings") {
  Rng rng(99);
  for (const int k : {4, 8, 16}) {
    for (int trial = 0; trial < 30; ++trial) {
      const double p = trial % 3 == 0 ? 0.2 : trial % 3 == 1 ? 0.5 : 0.8;
      const GridColoring gc = random_coloring(k, p, rng);
      const ContourSet cs = extract_dual_contours(gc);
      CAPTURE(k);
      CAPTURE(trial);
      REQUIRE(total_length(cs) == unlike_adjacent_pairs(gc));

      const Decomposition dec = maximal_decomposition(cs, gc);
      REQUIRE(dec.items.size() == cs.contours.size());
      std::vector<const std::vector<int>*> tops;
      for (const ContourInfo& it : dec.items) {
        CHECK((it.parent == -1) == it.maximal);
        if (it.parent >= 0) CHECK(it.parent < int(cs.contours.size()));
        if (!it.ambiguous_interior) CHECK(!it.interior.empty());
        if (it.maximal && !it.ambiguous_interior) tops.push_back(&it.interior);
      }
      for (std::size_t i = 0; i < tops.size(); ++i)
        for (std::size_t j = i + 1; j < tops.size(); ++j)
          CHECK(disjoint(*tops[i], *tops[j]));
    }
  }
}

TEST_CASE("contour cost respects removals") {
  GridColoring gc = coloring_from_rows(notch_island_rows());
  const ContourSet cs = extract_dual_contours(gc);

  for (const Contour& c : cs.contours) CHECK(contour_cost(c, gc) == c.length());

  // One removed island cell silences the two edges that touch it.
  gc.set_removed(5, 5, true);
  CHECK(contour_cost(cs.contours[5], gc) == 6);
  CHECK(contour_cost(cs.contours[0], gc) == 3);

  for (int y = 0; y < gc.k; ++y)
    for (int x = 0; x < gc.k; ++x) gc.set_removed(x, y, true);
  for (const Contour& c : cs.contours) CHECK(contour_cost(c, gc) == 0);

  // Each unlike pair sits on exactly one contour, so costs add up to the
  // avoiding count whatever the removal pattern.
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    GridColoring g = random_coloring(8, 0.5, rng);
    sample_removed(g, 0.3, rng);
    const ContourSet c2 = extract_dual_contours(g);
    std::uint64_t sum = 0;
    for (const Contour& c : c2.contours)
      sum += std::uint64_t(contour_cost(c, g));
    CHECK(sum == unlike_adjacent_pairs_avoiding(g));
  }
}

TEST_CASE("exhaustive minimum boundary cost") {
  // Side 2: one admissible cell of each color at least, and any lone cell
  // pays its two neighbors.
  GridColoring empty2(2);
  const CExact e2 = c_exact(empty2);
  CHECK(e2.min_cost == 2);
  CHECK(e2.witness.green_count() >= 1);
  CHECK(e2.witness.green_count() <= 3);
  CHECK(unlike_adjacent_pairs_avoiding(e2.witness) == 2);

  GridColoring gone2(2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) gone2.set_removed(x, y, true);
  CHECK(c_exact(gone2).min_cost == 0);

  // Side 3: a one-row stripe of three cells pays three pairs and nothing
  // admissible does better.
  GridColoring empty3(3);
  const CExact e3 = c_exact(empty3);
  CHECK(e3.min_cost == 3);
  CHECK(c_exact_via_contours(empty3).min_cost == 3);

  // Side 4: four each way, met by a one-row stripe.
  GridColoring empty4(4);
  const CExact e4 = c_exact(empty4);
  CHECK(e4.min_cost == 4);
  CHECK(e4.min_cost >= 2);
  CHECK(e4.witness.green_count() >= 4);
  CHECK(16 - e4.witness.green_count() >= 4);
  CHECK(unlike_adjacent_pairs_avoiding(e4.witness) == 4);

  // The contour formulation reproduces the exhaustive answer with holes.
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    GridColoring xi(3);
    sample_removed(xi, 0.3, rng);
    const CExact a = c_exact(xi);
    const CExact b = c_exact_via_contours(xi);
    CAPTURE(trial);
    CHECK(a.min_cost == b.min_cost);
    CHECK(a.min_cost <= 3);
    CHECK(unlike_adjacent_pairs_avoiding(a.witness) == std::uint64_t(a.min_cost));
    const int green = a.witness.green_count();
    CHECK(green >= 3);
    CHECK(9 - green >= 3);
  }

  // Removals never raise the minimum.
  GridColoring holes4(4);
  holes4.set_removed(1, 1, true);
  holes4.set_removed(2, 3, true);
  CHECK(c_exact(holes4).min_cost <= e4.min_cost);

  CHECK_THROWS_AS(c_exact(GridColoring(5)), std::invalid_argument);
  CHECK_THROWS_AS(c_exact(GridColoring(6), true), std::invalid_argument);
  CHECK_THROWS_AS(c_exact(GridColoring(1)), std::invalid_argument);
}

TEST_CASE("portfolio cost bounds the exhaustive minimum") {
  GridColoring empty4(4);
  const int p4 = portfolio_cost(empty4);
  CHECK(p4 >= c_exact(empty4).min_cost);
  CHECK(p4 <= 4);

  GridColoring empty8(8);
  const int p8 = portfolio_cost(empty8);
  CHECK(p8 > 0);
  CHECK(p8 <= 8);

  Rng rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    GridColoring xi(8);
    sample_removed(xi, 0.2, rng);
    CHECK(portfolio_cost(xi) <= p8);
  }

  GridColoring gone8(8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) gone8.set_removed(x, y, true);
  CHECK(portfolio_cost(gone8) == 0);
}

TEST_CASE("monte carlo cheap-cut probability") {
  const GreenEstimate clean = mc_lemma_green(0.0, 4, 50, 4242);
  CHECK(clean.exact);
  CHECK(clean.failures == 0);
  CHECK(clean.p_hat == 0.0);
  CHECK(clean.threshold == doctest::Approx(0.01));
  CHECK(clean.trials == 50);

  const GreenEstimate g8 = mc_lemma_green(0.3, 8, 100, 4243);
  CHECK(!g8.exact);
  CHECK(g8.k == 8);
  CHECK(g8.q == doctest::Approx(0.3));
  CHECK(g8.threshold == doctest::Approx(0.02));
  CHECK(g8.p_hat >= g8.lo);
  CHECK(g8.p_hat <= g8.hi);
  CHECK(g8.p_hat == doctest::Approx(double(g8.failures) / 100.0));

  const GreenEstimate again = mc_lemma_green(0.3, 8, 100, 4243);
  CHECK(again.failures == g8.failures);

  const GreenEstimate boxed = mc_lemma_green(0.3, 8, 50, 4244, true);
  CHECK(boxed.exclude_box);
  CHECK(boxed.p_hat >= 0.0);
  CHECK(boxed.p_hat <= 1.0);
}

TEST_CASE("zero cost circuits get rarer as removals thin out") {
  const ZeroCostEstimate dense = zero_cost_circuit_mc(0.4, 12, 1500, 99);
  const ZeroCostEstimate sparse = zero_cost_circuit_mc(0.05, 12, 1500, 99);
  CHECK(dense.p_hat == doctest::Approx(double(dense.hits) / 1500.0));
  CHECK(dense.lo <= dense.p_hat);
  CHECK(dense.p_hat <= dense.hi);
  CHECK(sparse.lo <= sparse.p_hat);
  CHECK(sparse.p_hat <= sparse.hi);
  CHECK(dense.q == doctest::Approx(0.4));
  CHECK(dense.max_len == 12);
  CHECK(dense.trials == 1500);

  // A removed center cell alone yields a four-edge circuit, so the rate
  // tracks q closely and the two intervals sit far apart.
  CHECK(dense.lo > sparse.hi);

  const ZeroCostEstimate redo = zero_cost_circuit_mc(0.4, 12, 1500, 99);
  CHECK(redo.hits == dense.hits);
}

TEST_CASE("balance report bands and strip assignment") {
  // Nine points per fifth-by-fifth cell: every strip holds exactly 45.
  std::vector<Vec2> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int dx = 0; dx < 3; ++dx)
        for (int dy = 0; dy < 3; ++dy)
          pts.push_back({3.0 * i + 0.5 + dx, 3.0 * j + 0.5 + dy});
  BalanceReport br = is_balanced(pts, {0.0, 0.0}, 15.0);
  CHECK(br.total == 225);
  CHECK(br.size_ok);
  CHECK(br.balanced);
  CHECK(br.strip_lo == doctest::Approx(44.1));
  CHECK(br.strip_hi == doctest::Approx(45.9));
  for (int s = 0; s < 5; ++s) {
    CHECK(br.vertical[std::size_t(s)] == 45);
    CHECK(br.horizontal[std::size_t(s)] == 45);
  }

  // The same picture shifted keeps the verdict.
  std::vector<Vec2> moved;
  for (const Vec2& p : pts) moved.push_back({p.x + 100.0, p.y + 200.0});
  CHECK(is_balanced(moved, {100.0, 200.0}, 15.0).balanced);

  // One point nudged across a strip boundary breaks the band.
  pts[0].x += 3.0;
  br = is_balanced(pts, {0.0, 0.0}, 15.0);
  CHECK(br.total == 225);
  CHECK(!br.balanced);
  CHECK(br.vertical[0] == 44);
  CHECK(br.vertical[1] == 46);
  for (int s = 0; s < 5; ++s) CHECK(br.horizontal[std::size_t(s)] == 45);

  // Strip edges are half open and the square itself is half open.
  const std::vector<Vec2> edges = {
      {0.0, 0.0}, {1.0, 4.999}, {5.0, 1.0}, {-0.001, 2.0}};
  const BalanceReport er = is_balanced(edges, {0.0, 0.0}, 5.0);
  CHECK(er.total == 2);
  CHECK(er.vertical[0] == 1);
  CHECK(er.vertical[1] == 1);
  CHECK(er.horizontal[0] == 1);
  CHECK(er.horizontal[4] == 1);
  CHECK(!er.balanced);

  CHECK_THROWS_AS(is_balanced(edges, {0.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("bichromatic pair count uses a closed threshold") {
  const std::vector<Vec2> pts = {{0, 0}, {1, 0}, {2, 0}, {0, 1}};
  const std::vector<char> blue = {1, 0, 1, 0};
  CHECK(count_bichromatic_pairs(pts, blue, 1.5) == 3);
  CHECK(count_bichromatic_pairs(pts, blue, 1.0) == 3);
  CHECK(count_bichromatic_pairs(pts, blue, 0.999) == 0);
  CHECK(count_bichromatic_pairs(pts, blue, 10.0) == 4);

  const std::vector<Vec2> two = {{0, 0}, {1, 0}};
  CHECK(count_bichromatic_pairs(two, {1, 0}, 1.0) == 1);
  CHECK(count_bichromatic_pairs(two, {1, 1}, 1.0) == 0);
  CHECK_THROWS_AS(count_bichromatic_pairs(two, {1}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("sliding square witness finds the first window in band") {
  // Three blue points at x = 6.5 appear once the window slides by two
  // fifths; the band at side 5 is [2.5, 22].
  std::vector<Vec2> pts = {{6.5, 1.0}, {6.5, 2.0}, {6.5, 3.0}, {0.5, 0.5}};
  std::vector<char> blue = {1, 1, 1, 0};
  auto w = sliding_square_witness(pts, blue, {0.0, 0.0}, 5.0);
  REQUIRE(w.has_value());
  CHECK(w->i == 2);
  CHECK(w->blue_count == 3);

  // No blue points anywhere: every window sits below the band.
  std::vector<char> none(pts.size(), 0);
  CHECK(!sliding_square_witness(pts, none, {0.0, 0.0}, 5.0).has_value());

  // Fifty blue points fill every window past the upper cutoff.
  std::vector<Vec2> dense;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 5; ++j) dense.push_back({i + 0.5, j + 0.5});
  std::vector<char> all(dense.size(), 1);
  CHECK(!sliding_square_witness(dense, all, {0.0, 0.0}, 5.0).has_value());

  // An in-band count in the unshifted window wins immediately.
  std::vector<Vec2> three = {{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
  auto w0 = sliding_square_witness(three, {1, 1, 1}, {0.0, 0.0}, 5.0);
  REQUIRE(w0.has_value());
  CHECK(w0->i == 0);
  CHECK(w0->blue_count == 3);
}

TEST_CASE("balanced square sampler lands in the band") {
  Rng rng(314);
  for (int draw = 0; draw < 20; ++draw) {
    const std::vector<Vec2> pts = sample_balanced_square(15.0, rng);
    CHECK(pts.size() == 225);
    for (const Vec2& p : pts) {
      CHECK(p.x >= 0.0);
      CHECK(p.x < 15.0);
      CHECK(p.y >= 0.0);
      CHECK(p.y < 15.0);
    }
    CHECK(is_balanced(pts, {0.0, 0.0}, 15.0).balanced);
  }

  for (int draw = 0; draw < 10; ++draw) {
    const std::vector<Vec2> pts = sample_balanced_square(25.0, rng);
    const BalanceReport br = is_balanced(pts, {0.0, 0.0}, 25.0);
    CHECK(br.balanced);
    for (int s = 0; s < 5; ++s) {
      CHECK(br.vertical[std::size_t(s)] >= 123);
      CHECK(br.vertical[std::size_t(s)] <= 127);
    }
  }

  Rng r1(5150), r2(5150);
  const std::vector<Vec2> a = sample_balanced_square(15.0, r1);
  const std::vector<Vec2> b = sample_balanced_square(15.0, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }

  CHECK_THROWS_AS(sample_balanced_square(-1.0, rng), std::invalid_argument);
}

TEST_CASE("red trials dodge the excluded regimes and clear the bound") {
  const RedTrial once = red_trial(15.0, 7);
  const RedTrial twice = red_trial(15.0, 7);
  CHECK(once.strategy == twice.strategy);
  CHECK(once.n1 == twice.n1);
  CHECK(once.blue1 == twice.blue1);
  CHECK(once.pairs == twice.pairs);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RedTrial rt = red_trial(15.0, seed);
    CAPTURE(seed);
    CHECK(rt.m == doctest::Approx(15.0));
    CHECK(rt.threshold == doctest::Approx(0.088 * 15.0 * 15.0 * 15.0 * 15.0));
    CHECK(rt.n1 >= 221);
    CHECK(rt.n1 <= 229);
    CHECK(rt.n2 >= 221);
    CHECK(rt.n2 <= 229);
    CHECK(rt.blue1 <= rt.n1);
    CHECK(rt.blue2 <= rt.n2);

    const double low = 0.1 * 15.0 * 15.0, high = 0.88 * 15.0 * 15.0;
    const bool both_low =
        double(rt.blue1) < low && double(rt.blue2) < low;
    const bool both_high =
        double(rt.blue1) > high && double(rt.blue2) > high;
    CHECK(!both_low);
    CHECK(!both_high);

    CHECK(rt.ok == (double(rt.pairs) >= rt.threshold));
    CHECK(rt.ok);
  }
}

TEST_CASE("imbalance probability falls as the square grows") {
  // Strip counts of a unit intensity square decompose into twenty-five
  // independent cell counts, which makes the rate cheap to simulate.
  auto miss_rate = [](double m, int reps, Rng& rng) {
    const double lam = m * m / 25.0;
    const double lo = 0.98 * m * m / 5.0, hi = 1.02 * m * m / 5.0;
    int missed = 0;
    for (int r = 0; r < reps; ++r) {
      std::array<std::int64_t, 5> col{}, row{};
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
          const std::int64_t c = std::int64_t(rng.poisson(lam));
          col[std::size_t(j)] += c;
          row[std::size_t(i)] += c;
        }
      bool ok = true;
      for (int s = 0; s < 5; ++s) {
        if (double(col[std::size_t(s)]) < lo || double(col[std::size_t(s)]) > hi)
          ok = false;
        if (double(row[std::size_t(s)]) < lo || double(row[std::size_t(s)]) > hi)
          ok = false;
      }
      if (!ok) ++missed;
    }
    return missed;
  };

  const int reps = 800;
  Rng rng(2718);
  const int bad_small = miss_rate(150.0, reps, rng);
  const int bad_large = miss_rate(300.0, reps, rng);
  const double q_small = double(bad_small) / reps;
  const double q_large = double(bad_large) / reps;
  CHECK(q_small > q_large + 0.3);
  CHECK(two_proportion_pvalue_greater(std::uint64_t(bad_small), reps,
                                      std::uint64_t(bad_large), reps) < 0.01);
}

TEST_CASE("walk census and length scale") {
  // On a side-2 grid all four interior segments meet at the center.
  CHECK(count_dual_saw(2, 1) == 4);
  CHECK(count_dual_saw(2, 2) == 6);

  for (const int k : {3, 4, 5}) {
    for (const int len : {4, 5, 6}) {
      const std::uint64_t n = count_dual_saw(k, len);
      const double cap = 2.0 * double((k + 1) * (k + 1)) *
                         std::pow(3.0, double(len - 1));
      CAPTURE(k);
      CAPTURE(len);
      CHECK(double(n) <= cap);
      if (k > 3) CHECK(n >= count_dual_saw(k - 1, len));
    }
  }

  CHECK(ell_of_k(1) == 1);
  CHECK(ell_of_k(2) == 1);
  CHECK(ell_of_k(3) == 2);
  CHECK(ell_of_k(7) == 2);
  CHECK(ell_of_k(8) == 3);
  CHECK(ell_of_k(20) == 3);
  CHECK(ell_of_k(21) == 4);
  CHECK(ell_of_k(100) == 5);
}

TEST_CASE("route census on a concrete tree") {
  const Window w{0.0, 0.0, 12.0, 0.0};
  const PointSet ps = sample_poisson(1.0, w, 20260822);
  REQUIRE(ps.size() >= 60);
  const TreeNetwork t = build_mst(ps);

  const Lemma7Report rep = lemma7_pipeline(t, {2.0, 2.0}, 2.0, 4);
  CHECK(rep.k == 4);
  CHECK(rep.m == doctest::Approx(2.0));

  std::size_t inside = 0;
  for (int v = 0; v < int(t.vertex_count()); ++v) {
    const Vec2& p = t.position(v);
    if (p.x >= 2.0 && p.x < 10.0 && p.y >= 2.0 && p.y < 10.0) ++inside;
  }
  CHECK(rep.n_terminals == inside);
  CHECK(rep.n_blue + rep.n_rest == rep.n_terminals);
  CHECK(rep.n_blue >= 1);
  CHECK(rep.n_rest >= 1);

  CHECK(rep.census_mid + rep.census_low + rep.census_high +
            rep.census_unbalanced ==
        16);
  CHECK(rep.near_threshold == doctest::Approx(std::sqrt(2.0) * 2.0));
  CHECK(rep.route_threshold == doctest::Approx(0.008));
  CHECK(rep.qualifying_pairs <= rep.close_cross_pairs);
  CHECK(rep.v_star >= 0);
  CHECK(rep.v_star_source >= 0);
  CHECK(rep.v_star_source < int(t.vertex_count()));
  CHECK(rep.census_mid_small == (double(rep.census_mid) <= 0.005 * 16.0));
  CHECK(rep.split_large ==
        (std::min(rep.census_low, rep.census_high) >= 4));

  const Lemma7Report again = lemma7_pipeline(t, {2.0, 2.0}, 2.0, 4);
  CHECK(again.v_star == rep.v_star);
  CHECK(again.close_cross_pairs == rep.close_cross_pairs);
  CHECK(again.qualifying_pairs == rep.qualifying_pairs);

  CHECK_THROWS(lemma7_pipeline(t, {-50.0, 0.0}, 2.0, 4));
  CHECK_THROWS_AS(lemma7_pipeline(t, {2.0, 2.0}, -1.0, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS(lemma7_pipeline(t, {2.0, 2.0}, 2.0, 0),
                  std::invalid_argument);
}

TEST_CASE("contour json lists every edge") {
  const GridColoring gc = coloring_from_rows(notch_island_rows());
  const ContourSet cs = extract_dual_contours(gc);
  const nlohmann::json j = nlohmann::json::parse(contours_json(cs));
  CHECK(j.at("k").get<int>() == 12);
  REQUIRE(j.at("paths").size() == 5);
  REQUIRE(j.at("circuits").size() == 1);
  CHECK(j.at("circuits")[0].size() == 8);
  const nlohmann::json& e0 = j.at("paths")[0][0];
  CHECK(e0.at("x").get<int>() == 0);
  CHECK(e0.at("y").get<int>() == 0);
  CHECK(e0.at("dir").get<std::string>() == "E");
}
