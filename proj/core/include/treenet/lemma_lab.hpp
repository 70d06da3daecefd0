#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treenet/geometry.hpp"
#include "treenet/network.hpp"
#include "treenet/stats.hpp"

namespace treenet {

class Rng;

// k x k cell grid with a two-way cell coloring and a removed-cell set.
// Cells are addressed (x, y) with x, y in [0, k), stored row-major.
struct GridColoring {
  int k = 0;
  std::vector<unsigned char> green;    // 1 = green (blue in point contexts)
  std::vector<unsigned char> removed;  // 1 = removed

  GridColoring() = default;
  explicit GridColoring(int side);

  int idx(int x, int y) const { return y * k + x; }
  bool is_green(int x, int y) const { return green[std::size_t(idx(x, y))] != 0; }
  bool is_removed(int x, int y) const {
    return removed[std::size_t(idx(x, y))] != 0;
  }
  void set_green(int x, int y, bool v) {
    green[std::size_t(idx(x, y))] = v ? 1 : 0;
  }
  void set_removed(int x, int y, bool v) {
    removed[std::size_t(idx(x, y))] = v ? 1 : 0;
  }
  int green_count() const;
  int removed_count() const;
};

// Independent coin per cell.
GridColoring random_coloring(int k, double p_green, Rng& rng);
void sample_removed(GridColoring& gc, double q, Rng& rng);

// Adjacent cell pairs with different colors; the avoiding variant skips
// pairs touching a removed cell. The latter is the quantity every
// boundary-cost computation must reproduce.
std::uint64_t unlike_adjacent_pairs(const GridColoring& gc);
std::uint64_t unlike_adjacent_pairs_avoiding(const GridColoring& gc);

// Ten fifth-strip counts of a square configuration, plus the band they
// must hit for the square to count as balanced.
struct BalanceReport {
  double m = 0.0;
  std::array<std::uint64_t, 5> vertical{};    // x bands
  std::array<std::uint64_t, 5> horizontal{};  // y bands
  std::uint64_t total = 0;
  double strip_lo = 0.0;  // 0.98 m^2 / 5
  double strip_hi = 0.0;  // 1.02 m^2 / 5
  bool balanced = false;
  bool size_ok = false;   // total within [0.98 m^2, 1.02 m^2]
};

// Classifies the points falling in [origin, origin + m)^2.
BalanceReport is_balanced(const std::vector<Vec2>& pts, Vec2 origin, double m);

// All two-colored pairs within the threshold, counted by a double loop.
// is_blue runs parallel to pts.
std::uint64_t count_bichromatic_pairs(const std::vector<Vec2>& pts,
                                      const std::vector<char>& is_blue,
                                      double threshold);

struct SlideWitness {
  int i = 0;                   // translate by i*m/5 along x
  std::uint64_t blue_count = 0;
};

// Scans the six translated squares [ox + i*m/5, ox + m + i*m/5) x [oy, oy+m)
// for one whose blue count lies in [0.1 m^2, 0.88 m^2]. First hit wins.
std::optional<SlideWitness> sliding_square_witness(
    const std::vector<Vec2>& pts, const std::vector<char>& is_blue,
    Vec2 origin, double m);

// Point configuration on [0, m)^2 distributed as a unit Poisson process
// conditioned on all ten strip counts sitting in the balance band.
std::vector<Vec2> sample_balanced_square(double m, Rng& rng);

struct RedTrial {
  double m = 0.0;
  int strategy = 0;
  std::uint64_t n1 = 0, n2 = 0;      // points per square
  std::uint64_t blue1 = 0, blue2 = 0;
  std::uint64_t pairs = 0;           // blue-red pairs within sqrt(2) m
  double threshold = 0.0;            // 0.088 m^4
  bool ok = false;                   // pairs >= threshold
};

// One randomized stress trial of the cross-pair bound: two adjacent
// balanced squares, an adversarial coloring that dodges the two excluded
// regimes (both squares < 0.1 m^2 blue, or both > 0.88 m^2 blue), then a
// full bichromatic pair count against 0.088 m^4.
RedTrial red_trial(double m, std::uint64_t seed);

// Dual grid edge, recorded by the cell it touches from below/left:
// {x, y, N} separates cells (x, y) and (x, y+1); {x, y, E} separates
// (x, y) and (x+1, y).
struct DualEdge {
  int x = 0;
  int y = 0;
  char dir = 'N';

  friend bool operator==(const DualEdge& a, const DualEdge& b) {
    return a.x == b.x && a.y == b.y && a.dir == b.dir;
  }
};

struct Contour {
  bool is_circuit = false;
  std::vector<DualEdge> edges;                 // walk order
  std::vector<std::pair<int, int>> corners;    // dual lattice points visited
  int length() const { return int(edges.size()); }
};

struct ContourSet {
  int k = 0;
  std::vector<Contour> contours;
};

// Splits the unlike-color boundary into boundary-to-boundary paths and
// closed circuits. Paths are traced first, sweeping boundary corners in
// row-major order; remaining segments close into circuits. At 4-valent
// dual corners the walk prefers the right turn, then straight, then left,
// which keeps one color on its left and is deterministic.
ContourSet extract_dual_contours(const GridColoring& gc);

struct ContourInfo {
  int index = -1;              // position in ContourSet::contours
  bool maximal = false;
  int parent = -1;             // tightest containing contour, -1 if none
  std::vector<int> interior;   // cell indices y*k + x, ascending
  bool ambiguous_interior = false;  // the two path sides nearly tied
  bool inner_uniform = false;  // ring of cells just inside is one color
  bool outer_uniform = false;  // ring just outside is the other color
  bool inner_connected = false;  // inner ring connected, diagonals allowed
};

struct Decomposition {
  int k = 0;
  std::vector<ContourInfo> items;  // parallel to the contour list
};

// Interiors, containment forest and maximality flags. Circuit interiors
// come from crossing parity; path interiors are the smaller side of the
// cut, with a flag raised when the two sides are within 1% of the grid.
Decomposition maximal_decomposition(const ContourSet& cs,
                                    const GridColoring& gc);

// Edges of the contour whose two separated cells are both unremoved.
int contour_cost(const Contour& c, const GridColoring& gc);

// JSON document listing circuits and paths as {x, y, dir} edge arrays.
std::string contours_json(const ContourSet& cs);

struct CExact {
  int min_cost = 0;
  GridColoring witness;  // colors achieving the minimum, removed copied in
};

// Exact minimum, over colorings with at least ceil(k^2/4) cells of each
// color, of the unlike-adjacent pair count avoiding removed cells.
// Exhaustive over 2^(k^2) colorings: k <= 4 is instant, k == 5 sits
// behind allow_slow, larger k is refused.
CExact c_exact(const GridColoring& xi, bool allow_slow = false);

// Same minimum evaluated through contour extraction and per-contour
// costs. Slow; exists to cross-check c_exact.
CExact c_exact_via_contours(const GridColoring& xi, bool allow_slow = false);

// Cheapest admissible coloring among a fixed portfolio (half-planes,
// stripes, corner and center blocks). An upper bound on the exact
// minimum at any k.
int portfolio_cost(const GridColoring& xi);

struct GreenEstimate {
  double q = 0.0;
  int k = 0;
  int trials = 0;
  std::uint64_t failures = 0;  // trials with bound < k/400
  double threshold = 0.0;      // k/400
  double p_hat = 0.0;
  double lo = 0.0, hi = 0.0;   // Wilson interval
  bool exact = false;          // exhaustive minimum used (k <= 4)
  bool exclude_box = false;
};

// Empirical Pr(min boundary cost < k/400) under i.i.d. cell removal with
// probability q. Uses the exhaustive minimum for k <= 4 and the coloring
// portfolio above it. exclude_box additionally discards, per trial, a
// random box of side max(1, round(0.001 k)) cells from the count.
GreenEstimate mc_lemma_green(double q, int k, int trials, std::uint64_t seed,
                             bool exclude_box = false);

struct ZeroCostEstimate {
  double q = 0.0;
  int max_len = 0;
  int trials = 0;
  std::uint64_t hits = 0;
  double p_hat = 0.0;
  double lo = 0.0, hi = 0.0;
};

// Probability that a dual circuit of length <= max_len encloses the
// center cell of a (max_len x max_len) Bernoulli(q) removal field using
// only zero-cost edges. Each trial runs a parity-layered breadth-first
// search from the edges crossing an eastward ray out of the center.
ZeroCostEstimate zero_cost_circuit_mc(double q, int max_len, int trials,
                                      std::uint64_t seed);

struct Lemma7Report {
  int k = 0;
  double m = 0.0;
  std::size_t n_terminals = 0;   // terminals inside the study square
  int v_star = -1;               // centroid, id in the spanned subtree
  int v_star_source = -1;        // same vertex, id in the input tree
  std::uint64_t n_blue = 0;      // |B|
  std::uint64_t n_rest = 0;      // |B^c|
  int census_mid = 0;            // balanced, 0.09 m^2 <= b <= 0.89 m^2
  int census_low = 0;            // balanced, b < 0.09 m^2
  int census_high = 0;           // balanced, b > 0.89 m^2
  int census_unbalanced = 0;
  double near_threshold = 0.0;   // sqrt(2) m
  double route_threshold = 0.0;  // 0.001 m k
  std::uint64_t close_cross_pairs = 0;  // B-to-B^c pairs within sqrt(2) m
  std::uint64_t qualifying_pairs = 0;   // of those, route >= 0.001 m k
  bool census_mid_small = false;        // census_mid <= 0.005 k^2
  bool split_large = false;             // min(low, high) >= k^2 / 4
};

// Runs the route-length argument on a concrete tree: spanned subtree over
// the study square's terminals, centroid split into B and B^c, blue
// counts per subsquare, the balanced-count census, and the count of
// cross pairs within sqrt(2) m whose tree route is at least 0.001 m k.
// The study square has side m*k and must sit inside the tree's extent.
Lemma7Report lemma7_pipeline(const TreeNetwork& t, Vec2 study_origin,
                             double m, int k);

// Directed self-avoiding walks of exactly len dual edges on the corner
// lattice of a k x k grid, halved for orientation. Exhaustive DFS, only
// meant for small len.
std::uint64_t count_dual_saw(int k, int len);

// Contour length scale used by the asymptotic argument.
inline int ell_of_k(int k) {
  int l = 1;
  while (std::exp(double(l)) < double(k)) ++l;
  return l;
}

}  // namespace treenet
