#include "treenet/lemma_lab.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "treenet/rng.hpp"

namespace treenet {

GridColoring::GridColoring(int side) : k(side) {
  if (side < 2)
    throw std::invalid_argument("GridColoring: grid side must be at least 2");
  green.assign(std::size_t(side) * side, 0);
  removed.assign(std::size_t(side) * side, 0);
}

int GridColoring::green_count() const {
  int n = 0;
  for (unsigned char g : green) n += g != 0;
  return n;
}

int GridColoring::removed_count() const {
  int n = 0;
  for (unsigned char r : removed) n += r != 0;
  return n;
}

GridColoring random_coloring(int k, double p_green, Rng& rng) {
  GridColoring gc(k);
  for (auto& g : gc.green) g = rng.next_double() < p_green ? 1 : 0;
  return gc;
}

void sample_removed(GridColoring& gc, double q, Rng& rng) {
  for (auto& r : gc.removed) r = rng.next_double() < q ? 1 : 0;
}

std::uint64_t unlike_adjacent_pairs(const GridColoring& gc) {
  std::uint64_t n = 0;
  for (int y = 0; y < gc.k; ++y) {
    for (int x = 0; x < gc.k; ++x) {
      if (x + 1 < gc.k && gc.is_green(x, y) != gc.is_green(x + 1, y)) ++n;
      if (y + 1 < gc.k && gc.is_green(x, y) != gc.is_green(x, y + 1)) ++n;
    }
  }
  return n;
}

std::uint64_t unlike_adjacent_pairs_avoiding(const GridColoring& gc) {
  std::uint64_t n = 0;
  for (int y = 0; y < gc.k; ++y) {
    for (int x = 0; x < gc.k; ++x) {
      if (gc.is_removed(x, y)) continue;
      if (x + 1 < gc.k && !gc.is_removed(x + 1, y) &&
          gc.is_green(x, y) != gc.is_green(x + 1, y))
        ++n;
      if (y + 1 < gc.k && !gc.is_removed(x, y + 1) &&
          gc.is_green(x, y) != gc.is_green(x, y + 1))
        ++n;
    }
  }
  return n;
}

BalanceReport is_balanced(const std::vector<Vec2>& pts, Vec2 origin, double m) {
  if (m <= 0.0) throw std::invalid_argument("is_balanced: square side must be positive");
  BalanceReport br;
  br.m = m;
  br.strip_lo = 0.98 * m * m / 5.0;
  br.strip_hi = 1.02 * m * m / 5.0;
  const double strip = m / 5.0;
  for (const Vec2& p : pts) {
    const double lx = p.x - origin.x, ly = p.y - origin.y;
    if (lx < 0.0 || lx >= m || ly < 0.0 || ly >= m) continue;
    int sx = int(lx / strip);
    int sy = int(ly / strip);
    if (sx > 4) sx = 4;
    if (sy > 4) sy = 4;
    ++br.vertical[std::size_t(sx)];
    ++br.horizontal[std::size_t(sy)];
    ++br.total;
  }
  br.balanced = true;
  for (int s = 0; s < 5; ++s) {
    const double v = double(br.vertical[std::size_t(s)]);
    const double h = double(br.horizontal[std::size_t(s)]);
    if (v < br.strip_lo || v > br.strip_hi || h < br.strip_lo ||
        h > br.strip_hi)
      br.balanced = false;
  }
  const double tot = double(br.total);
  br.size_ok = tot >= 0.98 * m * m && tot <= 1.02 * m * m;
  return br;
}

std::uint64_t count_bichromatic_pairs(const std::vector<Vec2>& pts,
                                      const std::vector<char>& is_blue,
                                      double threshold) {
  if (pts.size() != is_blue.size())
    throw std::invalid_argument("count_bichromatic_pairs: flag size mismatch");
  const double t2 = threshold * threshold;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (is_blue[i] == is_blue[j]) continue;
      if (dist2(pts[i], pts[j]) <= t2) ++n;
    }
  }
  return n;
}

std::optional<SlideWitness> sliding_square_witness(
    const std::vector<Vec2>& pts, const std::vector<char>& is_blue,
    Vec2 origin, double m) {
  if (pts.size() != is_blue.size())
    throw std::invalid_argument("sliding_square_witness: flag size mismatch");
  const double lo = 0.1 * m * m, hi = 0.88 * m * m;
  for (int i = 0; i <= 5; ++i) {
    const double x0 = origin.x + double(i) * m / 5.0;
    const double x1 = x0 + m;
    std::uint64_t blue = 0;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      if (!is_blue[p]) continue;
      const Vec2& q = pts[p];
      if (q.x >= x0 && q.x < x1 && q.y >= origin.y && q.y < origin.y + m)
        ++blue;
    }
    if (double(blue) >= lo && double(blue) <= hi)
      return SlideWitness{i, blue};
  }
  return std::nullopt;
}

std::vector<Vec2> sample_balanced_square(double m, Rng& rng) {
  if (m <= 0.0)
    throw std::invalid_argument("sample_balanced_square: side must be positive");
  const double lam = m * m / 5.0;
  const std::int64_t lo = std::int64_t(std::ceil(0.98 * lam));
  const std::int64_t hi = std::int64_t(std::floor(1.02 * lam));
  if (lo > hi)
    throw std::runtime_error(
        "sample_balanced_square: no integer strip count fits the band at this side");

  // Column counts are independent Poissons, so each can be conditioned on
  // the band by itself.
  std::array<std::int64_t, 5> vc{};
  for (auto& v : vc) {
    do {
      v = rng.poisson(lam);
    } while (v < lo || v > hi);
  }
  const std::int64_t total = std::accumulate(vc.begin(), vc.end(), std::int64_t(0));

  // Row counts: multinomial split of the same points, conditioned on the
  // band. When the band pins a single value the split is forced.
  std::array<std::int64_t, 5> hc{};
  if (lo == hi) {
    hc.fill(lo);
  } else {
    bool ok = false;
    for (int attempt = 0; attempt < 2000000 && !ok; ++attempt) {
      hc.fill(0);
      for (std::int64_t t = 0; t < total; ++t) ++hc[rng.below(5)];
      ok = true;
      for (const std::int64_t h : hc)
        if (h < lo || h > hi) ok = false;
    }
    if (!ok)
      throw std::runtime_error(
          "sample_balanced_square: row-count rejection failed to terminate");
  }

  // Pairing by a shuffled row-label list reproduces the conditional joint
  // of per-cell counts given the margins; positions are then uniform
  // within their strip intersection.
  std::vector<int> xs, ys;
  xs.reserve(std::size_t(total));
  ys.reserve(std::size_t(total));
  for (int i = 0; i < 5; ++i) {
    for (std::int64_t t = 0; t < vc[std::size_t(i)]; ++t) xs.push_back(i);
    for (std::int64_t t = 0; t < hc[std::size_t(i)]; ++t) ys.push_back(i);
  }
  for (std::size_t i = ys.size(); i > 1; --i)
    std::swap(ys[i - 1], ys[rng.below(i)]);

  const double strip = m / 5.0;
  std::vector<Vec2> pts;
  pts.reserve(std::size_t(total));
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const double x = (double(xs[t]) + rng.next_double()) * strip;
    const double y = (double(ys[t]) + rng.next_double()) * strip;
    pts.push_back({x, y});
  }
  return pts;
}

namespace {

// Blue assignment order inside one square: a handful of clustering
// patterns so the stress trials cover adversarial placements.
void assign_blue(const std::vector<Vec2>& pts, Vec2 corner,
                 std::uint64_t n_blue, Rng& rng, std::vector<char>& flag) {
  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  const int mode = int(rng.below(5));
  auto by = [&](auto key) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto ka = key(pts[std::size_t(a)]);
      const auto kb = key(pts[std::size_t(b)]);
      if (ka != kb) return ka < kb;
      return a < b;
    });
  };
  switch (mode) {
    case 0:
      by([](const Vec2& p) { return p.x; });
      break;
    case 1:
      by([](const Vec2& p) { return -p.x; });
      break;
    case 2:
      by([](const Vec2& p) { return p.y; });
      break;
    case 3:
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
      break;
    default:
      by([&](const Vec2& p) { return dist2(p, corner); });
  }
  flag.assign(pts.size(), 0);
  for (std::uint64_t i = 0; i < n_blue && i < order.size(); ++i)
    flag[std::size_t(order[i])] = 1;
}

}  // namespace

RedTrial red_trial(double m, std::uint64_t seed) {
  RedTrial rt;
  rt.m = m;
  rt.threshold = 0.088 * m * m * m * m;
  Rng rng(mix64(seed ^ 0x9d3f5c2b71e84a6dull));

  std::vector<Vec2> p1 = sample_balanced_square(m, rng);
  std::vector<Vec2> p2 = sample_balanced_square(m, rng);
  for (Vec2& p : p2) p.x += m;
  rt.n1 = p1.size();
  rt.n2 = p2.size();

  const double a_thr = 0.1 * m * m;   // both below: excluded regime (a)
  const double b_thr = 0.88 * m * m;  // both above: excluded regime (b)
  const std::uint64_t minb = std::uint64_t(std::ceil(a_thr));
  const std::uint64_t maxb = std::uint64_t(std::floor(b_thr));

  rt.strategy = int(rng.below(7));
  std::uint64_t b1 = 0, b2 = 0;
  switch (rt.strategy) {
    case 0: b1 = 0; b2 = rt.n2; break;
    case 1: b1 = rt.n1; b2 = 0; break;
    case 2: b1 = std::min(minb, rt.n1); b2 = 0; break;
    case 3: b1 = 0; b2 = std::min(minb, rt.n2); break;
    case 4: b1 = std::min(maxb, rt.n1); b2 = rt.n2; break;
    case 5: b1 = rt.n1; b2 = std::min(maxb, rt.n2); break;
    default:
      for (;;) {
        b1 = rng.below(rt.n1 + 1);
        b2 = rng.below(rt.n2 + 1);
        const bool both_low = double(b1) < a_thr && double(b2) < a_thr;
        const bool both_high = double(b1) > b_thr && double(b2) > b_thr;
        if (!both_low && !both_high) break;
      }
  }
  if ((double(b1) < a_thr && double(b2) < a_thr) ||
      (double(b1) > b_thr && double(b2) > b_thr))
    throw std::logic_error("red_trial: picked an excluded coloring regime");
  rt.blue1 = b1;
  rt.blue2 = b2;

  std::vector<char> f1, f2;
  assign_blue(p1, {0.0, 0.0}, b1, rng, f1);
  assign_blue(p2, {2.0 * m, 0.0}, b2, rng, f2);

  std::vector<Vec2> all = p1;
  all.insert(all.end(), p2.begin(), p2.end());
  std::vector<char> flag = f1;
  flag.insert(flag.end(), f2.begin(), f2.end());

  rt.pairs = count_bichromatic_pairs(all, flag, std::sqrt(2.0) * m);
  rt.ok = double(rt.pairs) >= rt.threshold;
  return rt;
}

namespace {

// Dual segments live on the corner lattice (0..k) x (0..k). V(a, b) runs
// from corner (a, b) up to (a, b+1) and separates cells (a-1, b), (a, b);
// H(a, b) runs from (a, b) right to (a+1, b) and separates cells
// (a, b-1), (a, b). Only segments between two in-grid cells exist.
struct SegGrids {
  int k = 0;
  std::vector<unsigned char> v_open, h_open;
  std::vector<unsigned char> v_used, h_used;

  int at(int a, int b) const { return b * (k + 1) + a; }
  bool v_in(int a, int b) const {
    return a >= 1 && a <= k - 1 && b >= 0 && b <= k - 1;
  }
  bool h_in(int a, int b) const {
    return a >= 0 && a <= k - 1 && b >= 1 && b <= k - 1;
  }
};

struct Step {
  bool ok = false;
  bool vertical = false;
  int sa = 0, sb = 0;  // segment
  int na = 0, nb = 0;  // corner after the move
};

// Directions: 0 = E, 1 = N, 2 = W, 3 = S.
Step step_from(const SegGrids& sg, int a, int b, int d) {
  Step s;
  switch (d) {
    case 0: s.vertical = false; s.sa = a;     s.sb = b;     s.na = a + 1; s.nb = b;     break;
    case 1: s.vertical = true;  s.sa = a;     s.sb = b;     s.na = a;     s.nb = b + 1; break;
    case 2: s.vertical = false; s.sa = a - 1; s.sb = b;     s.na = a - 1; s.nb = b;     break;
    default: s.vertical = true; s.sa = a;     s.sb = b - 1; s.na = a;     s.nb = b - 1; break;
  }
  s.ok = s.vertical ? sg.v_in(s.sa, s.sb) : sg.h_in(s.sa, s.sb);
  return s;
}

bool open_unused(const SegGrids& sg, const Step& s) {
  if (!s.ok) return false;
  const int i = sg.at(s.sa, s.sb);
  return s.vertical ? (sg.v_open[std::size_t(i)] && !sg.v_used[std::size_t(i)])
                    : (sg.h_open[std::size_t(i)] && !sg.h_used[std::size_t(i)]);
}

// Consumes segments from (a, b) heading d until the walk closes (circuit)
// or reaches the outer boundary (path). At crossings the right turn wins,
// then straight, then left; the reverse move is never taken. Both turns
// keep the walk's left-hand color, so the choice only fixes which way
// contours pass through a crossing, identically on every run.
Contour trace(SegGrids& sg, int a, int b, int d, bool circuit) {
  Contour c;
  c.is_circuit = circuit;
  const int a0 = a, b0 = b;
  c.corners.push_back({a, b});
  for (;;) {
    const Step s = step_from(sg, a, b, d);
    const int i = sg.at(s.sa, s.sb);
    (s.vertical ? sg.v_used : sg.h_used)[std::size_t(i)] = 1;
    c.edges.push_back(s.vertical ? DualEdge{s.sa - 1, s.sb, 'E'}
                                 : DualEdge{s.sa, s.sb - 1, 'N'});
    a = s.na;
    b = s.nb;
    c.corners.push_back({a, b});
    if (!circuit && (a == 0 || a == sg.k || b == 0 || b == sg.k)) break;
    bool found = false;
    for (const int nd : {(d + 3) % 4, d, (d + 1) % 4}) {
      if (open_unused(sg, step_from(sg, a, b, nd))) {
        d = nd;
        found = true;
        break;
      }
    }
    if (found) continue;
    if (!circuit || a != a0 || b != b0)
      throw std::logic_error("contour trace stranded away from its start");
    c.corners.pop_back();  // closing corner repeats the first
    break;
  }
  return c;
}

}  // namespace

ContourSet extract_dual_contours(const GridColoring& gc) {
  const int k = gc.k;
  if (k < 2)
    throw std::invalid_argument("extract_dual_contours: grid side must be at least 2");
  SegGrids sg;
  sg.k = k;
  const std::size_t nn = std::size_t(k + 1) * std::size_t(k + 1);
  sg.v_open.assign(nn, 0);
  sg.h_open.assign(nn, 0);
  sg.v_used.assign(nn, 0);
  sg.h_used.assign(nn, 0);
  for (int b = 0; b <= k - 1; ++b)
    for (int a = 1; a <= k - 1; ++a)
      sg.v_open[std::size_t(sg.at(a, b))] =
          gc.is_green(a - 1, b) != gc.is_green(a, b);
  for (int b = 1; b <= k - 1; ++b)
    for (int a = 0; a <= k - 1; ++a)
      sg.h_open[std::size_t(sg.at(a, b))] =
          gc.is_green(a, b - 1) != gc.is_green(a, b);

  ContourSet cs;
  cs.k = k;

  // Boundary corners touch at most one segment, so each starts at most
  // one path. Paths drain before circuits close over what remains.
  for (int b = 0; b <= k; ++b) {
    for (int a = 0; a <= k; ++a) {
      int d = -1;
      if (b == 0 && a >= 1 && a <= k - 1) d = 1;
      else if (b == k && a >= 1 && a <= k - 1) d = 3;
      else if (a == 0 && b >= 1 && b <= k - 1) d = 0;
      else if (a == k && b >= 1 && b <= k - 1) d = 2;
      if (d < 0) continue;
      if (!open_unused(sg, step_from(sg, a, b, d))) continue;
      cs.contours.push_back(trace(sg, a, b, d, false));
    }
  }
  // Each leftover segment is collected at its lower-left corner; by the
  // sweep order only the east and north spokes can still be unused there.
  for (int b = 0; b <= k; ++b) {
    for (int a = 0; a <= k; ++a) {
      for (const int d : {0, 1}) {
        if (!open_unused(sg, step_from(sg, a, b, d))) continue;
        cs.contours.push_back(trace(sg, a, b, d, true));
      }
    }
  }
  return cs;
}

namespace {

// Cells the contour touches, both sides of every edge.
std::vector<int> touched_cells(const Contour& c, int k) {
  std::vector<int> out;
  out.reserve(c.edges.size() * 2);
  for (const DualEdge& e : c.edges) {
    out.push_back(e.y * k + e.x);
    out.push_back(e.dir == 'E' ? e.y * k + e.x + 1 : (e.y + 1) * k + e.x);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> circuit_interior(const Contour& c, int k) {
  // Crossing parity along each cell row; only the vertical segments of
  // the contour toggle it.
  std::vector<unsigned char> tog(std::size_t(k) * std::size_t(k + 1), 0);
  for (const DualEdge& e : c.edges)
    if (e.dir == 'E')
      tog[std::size_t(e.y) * std::size_t(k + 1) + std::size_t(e.x + 1)] ^= 1;
  std::vector<int> cells;
  for (int y = 0; y < k; ++y) {
    unsigned char parity = 0;
    for (int x = 0; x < k; ++x) {
      parity ^= tog[std::size_t(y) * std::size_t(k + 1) + std::size_t(x)];
      if (parity) cells.push_back(y * k + x);
    }
  }
  return cells;
}

std::vector<int> path_interior(const Contour& c, int k, bool& ambiguous) {
  std::vector<unsigned char> wall_e(std::size_t(k) * k, 0);
  std::vector<unsigned char> wall_n(std::size_t(k) * k, 0);
  for (const DualEdge& e : c.edges)
    (e.dir == 'E' ? wall_e : wall_n)[std::size_t(e.y) * k + e.x] = 1;

  const int n = k * k;
  std::vector<int> comp(std::size_t(n), -1);
  std::vector<int> comp_size;
  std::vector<int> queue;
  for (int start = 0; start < n; ++start) {
    if (comp[std::size_t(start)] >= 0) continue;
    const int id = int(comp_size.size());
    comp_size.push_back(0);
    comp[std::size_t(start)] = id;
    queue.assign(1, start);
    while (!queue.empty()) {
      const int cell = queue.back();
      queue.pop_back();
      ++comp_size[std::size_t(id)];
      const int x = cell % k, y = cell / k;
      auto visit = [&](int nx, int ny) {
        const int nc = ny * k + nx;
        if (comp[std::size_t(nc)] < 0) {
          comp[std::size_t(nc)] = id;
          queue.push_back(nc);
        }
      };
      if (x + 1 < k && !wall_e[std::size_t(cell)]) visit(x + 1, y);
      if (x > 0 && !wall_e[std::size_t(cell - 1)]) visit(x - 1, y);
      if (y + 1 < k && !wall_n[std::size_t(cell)]) visit(x, y + 1);
      if (y > 0 && !wall_n[std::size_t(cell - k)]) visit(x, y - 1);
    }
  }

  // The larger side is the exterior; the interior is everything else.
  // Near-ties get flagged because "smaller" is then barely meaningful.
  int ext = 0;
  for (int id = 1; id < int(comp_size.size()); ++id)
    if (comp_size[std::size_t(id)] > comp_size[std::size_t(ext)]) ext = id;
  int second = -1;
  for (int id = 0; id < int(comp_size.size()); ++id) {
    if (id == ext) continue;
    if (second < 0 || comp_size[std::size_t(id)] > comp_size[std::size_t(second)])
      second = id;
  }
  ambiguous = second >= 0 &&
              comp_size[std::size_t(ext)] - comp_size[std::size_t(second)] <=
                  int(0.01 * double(n));
  std::vector<int> cells;
  for (int cell = 0; cell < n; ++cell)
    if (comp[std::size_t(cell)] != ext) cells.push_back(cell);
  return cells;
}

}  // namespace

Decomposition maximal_decomposition(const ContourSet& cs,
                                    const GridColoring& gc) {
  const int k = cs.k;
  if (k != gc.k)
    throw std::invalid_argument("maximal_decomposition: grid sides disagree");
  const int n = int(cs.contours.size());
  Decomposition dec;
  dec.k = k;
  dec.items.resize(std::size_t(n));

  std::vector<std::vector<char>> inmask(std::size_t(n),
                                        std::vector<char>(std::size_t(k) * k, 0));
  std::vector<std::vector<int>> touched;
  touched.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    ContourInfo& info = dec.items[std::size_t(i)];
    info.index = i;
    const Contour& c = cs.contours[std::size_t(i)];
    info.interior = c.is_circuit
                        ? circuit_interior(c, k)
                        : path_interior(c, k, info.ambiguous_interior);
    for (const int cell : info.interior) inmask[std::size_t(i)][std::size_t(cell)] = 1;
    touched[std::size_t(i)] = touched_cells(c, k);
  }

  for (int i = 0; i < n; ++i) {
    ContourInfo& info = dec.items[std::size_t(i)];
    const bool i_circuit = cs.contours[std::size_t(i)].is_circuit;
    int parent = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      // A path can only sit inside another path; a circuit inside either.
      if (!i_circuit && cs.contours[std::size_t(j)].is_circuit) continue;
      bool inside = true;
      for (const int cell : touched[std::size_t(i)]) {
        if (!inmask[std::size_t(j)][std::size_t(cell)]) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      if (parent < 0 ||
          dec.items[std::size_t(j)].interior.size() <
              dec.items[std::size_t(parent)].interior.size())
        parent = j;
    }
    info.parent = parent;
    info.maximal = parent < 0;
  }

  // Ring checks: the cells hugging the contour from inside should be one
  // color, the ones outside the other, and the inner ring should hang
  // together once diagonal steps are allowed.
  for (int i = 0; i < n; ++i) {
    ContourInfo& info = dec.items[std::size_t(i)];
    std::vector<int> inner, outer;
    for (const int cell : touched[std::size_t(i)])
      (inmask[std::size_t(i)][std::size_t(cell)] ? inner : outer).push_back(cell);

    auto uniform = [&](const std::vector<int>& cells, bool& color) {
      if (cells.empty()) return false;
      color = gc.green[std::size_t(cells.front())] != 0;
      for (const int cell : cells)
        if ((gc.green[std::size_t(cell)] != 0) != color) return false;
      return true;
    };
    bool ic = false, oc = false;
    info.inner_uniform = uniform(inner, ic);
    info.outer_uniform = uniform(outer, oc) && (!info.inner_uniform || ic != oc);

    if (!inner.empty()) {
      std::vector<char> member(std::size_t(k) * k, 0);
      for (const int cell : inner) member[std::size_t(cell)] = 1;
      std::vector<int> stack{inner.front()};
      std::vector<char> seen(std::size_t(k) * k, 0);
      seen[std::size_t(inner.front())] = 1;
      std::size_t reached = 0;
      while (!stack.empty()) {
        const int cell = stack.back();
        stack.pop_back();
        ++reached;
        const int x = cell % k, y = cell / k;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= k || ny < 0 || ny >= k) continue;
            const int nc = ny * k + nx;
            if (member[std::size_t(nc)] && !seen[std::size_t(nc)]) {
              seen[std::size_t(nc)] = 1;
              stack.push_back(nc);
            }
          }
        }
      }
      info.inner_connected = reached == inner.size();
    }
  }
  return dec;
}

int contour_cost(const Contour& c, const GridColoring& gc) {
  int cost = 0;
  for (const DualEdge& e : c.edges) {
    const bool r1 = gc.is_removed(e.x, e.y);
    const bool r2 = e.dir == 'E' ? gc.is_removed(e.x + 1, e.y)
                                 : gc.is_removed(e.x, e.y + 1);
    if (!r1 && !r2) ++cost;
  }
  return cost;
}

std::string contours_json(const ContourSet& cs) {
  nlohmann::json j;
  j["k"] = cs.k;
  nlohmann::json circuits = nlohmann::json::array();
  nlohmann::json paths = nlohmann::json::array();
  for (const Contour& c : cs.contours) {
    nlohmann::json edges = nlohmann::json::array();
    for (const DualEdge& e : c.edges)
      edges.push_back({{"x", e.x}, {"y", e.y}, {"dir", std::string(1, e.dir)}});
    (c.is_circuit ? circuits : paths).push_back(std::move(edges));
  }
  j["circuits"] = std::move(circuits);
  j["paths"] = std::move(paths);
  return j.dump(2);
}

namespace {

void check_exhaustive_size(int k, bool allow_slow, const char* who) {
  if (k < 2)
    throw std::invalid_argument(std::string(who) + ": grid side must be at least 2");
  if (k > 5)
    throw std::invalid_argument(std::string(who) +
                                ": exhaustive search stops at grid side 5");
  if (k == 5 && !allow_slow)
    throw std::invalid_argument(
        std::string(who) +
        ": grid side 5 walks 2^25 colorings; pass allow_slow to confirm");
}

template <class CostFn>
CExact exhaustive_min(const GridColoring& xi, CostFn cost_of) {
  const int k = xi.k;
  const int n = k * k;
  const std::uint32_t full =
      n >= 32 ? 0xffffffffu : ((std::uint32_t(1) << n) - 1);
  const int need = (n + 3) / 4;
  int best = INT_MAX;
  std::uint32_t best_bits = 0;
  for (std::uint32_t c = 0;; ++c) {
    const int g = std::popcount(c);
    if (g >= need && n - g >= need) {
      const int cost = cost_of(c);
      if (cost < best) {
        best = cost;
        best_bits = c;
      }
    }
    if (c == full) break;
  }
  CExact out;
  out.min_cost = best;
  out.witness = GridColoring(k);
  out.witness.removed = xi.removed;
  for (int i = 0; i < n; ++i)
    out.witness.green[std::size_t(i)] = (best_bits >> i) & 1u;
  return out;
}

}  // namespace

CExact c_exact(const GridColoring& xi, bool allow_slow) {
  check_exhaustive_size(xi.k, allow_slow, "c_exact");
  const int k = xi.k;
  const int n = k * k;
  std::uint32_t hmask = 0, vmask = 0;
  for (int y = 0; y < k; ++y) {
    for (int x = 0; x < k; ++x) {
      const int i = y * k + x;
      if (x + 1 < k && !xi.is_removed(x, y) && !xi.is_removed(x + 1, y))
        hmask |= std::uint32_t(1) << i;
      if (y + 1 < k && !xi.is_removed(x, y) && !xi.is_removed(x, y + 1))
        vmask |= std::uint32_t(1) << i;
    }
  }
  (void)n;
  return exhaustive_min(xi, [&](std::uint32_t c) {
    return std::popcount((c ^ (c >> 1)) & hmask) +
           std::popcount((c ^ (c >> k)) & vmask);
  });
}

CExact c_exact_via_contours(const GridColoring& xi, bool allow_slow) {
  check_exhaustive_size(xi.k, allow_slow, "c_exact_via_contours");
  const int k = xi.k;
  GridColoring g(k);
  g.removed = xi.removed;
  return exhaustive_min(xi, [&](std::uint32_t c) {
    for (int i = 0; i < k * k; ++i) g.green[std::size_t(i)] = (c >> i) & 1u;
    const ContourSet cs = extract_dual_contours(g);
    int cost = 0;
    for (const Contour& ct : cs.contours) cost += contour_cost(ct, g);
    return cost;
  });
}

int portfolio_cost(const GridColoring& xi) {
  const int k = xi.k;
  if (k < 2)
    throw std::invalid_argument("portfolio_cost: grid side must be at least 2");
  const int n = k * k;
  const int need = (n + 3) / 4;
  GridColoring g(k);
  g.removed = xi.removed;
  int best = INT_MAX;
  auto consider = [&](auto&& fill) {
    for (int y = 0; y < k; ++y)
      for (int x = 0; x < k; ++x)
        g.green[std::size_t(y * k + x)] = fill(x, y) ? 1 : 0;
    const int gcount = g.green_count();
    if (gcount < need || n - gcount < need) return;
    best = std::min(best, int(unlike_adjacent_pairs_avoiding(g)));
  };

  const int t_min = (k + 3) / 4;
  const int t_max = k - t_min;
  for (int t = t_min; t <= t_max; ++t) {
    consider([&](int, int y) { return y < t; });
    consider([&](int x, int) { return x < t; });
  }
  for (const int w : {1, 2, 4}) {
    if (2 * w > k) continue;
    consider([&](int, int y) { return (y / w) % 2 == 0; });
    consider([&](int x, int) { return (x / w) % 2 == 0; });
  }
  const int s = (k + 1) / 2;
  consider([&](int x, int y) { return x < s && y < s; });
  consider([&](int x, int y) { return x >= k - s && y < s; });
  consider([&](int x, int y) { return x < s && y >= k - s; });
  consider([&](int x, int y) { return x >= k - s && y >= k - s; });
  const int c0 = (k - s) / 2;
  consider([&](int x, int y) {
    return x >= c0 && x < c0 + s && y >= c0 && y < c0 + s;
  });
  return best;
}

GreenEstimate mc_lemma_green(double q, int k, int trials, std::uint64_t seed,
                             bool exclude_box) {
  if (q < 0.0 || q > 1.0)
    throw std::invalid_argument("mc_lemma_green: removal probability outside [0, 1]");
  if (k < 2) throw std::invalid_argument("mc_lemma_green: grid side must be at least 2");
  if (trials < 1) throw std::invalid_argument("mc_lemma_green: need at least one trial");
  GreenEstimate ge;
  ge.q = q;
  ge.k = k;
  ge.trials = trials;
  ge.threshold = double(k) / 400.0;
  ge.exact = k <= 4;
  ge.exclude_box = exclude_box;
  const int box = std::max(1, int(std::llround(0.001 * double(k))));
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, "green-trial", std::uint64_t(t)));
    GridColoring xi(k);
    sample_removed(xi, q, rng);
    if (exclude_box) {
      const int bx = int(rng.below(std::uint64_t(k - box + 1)));
      const int by = int(rng.below(std::uint64_t(k - box + 1)));
      for (int y = by; y < by + box; ++y)
        for (int x = bx; x < bx + box; ++x) xi.set_removed(x, y, true);
    }
    const double bound =
        ge.exact ? double(c_exact(xi).min_cost) : double(portfolio_cost(xi));
    if (bound < ge.threshold) ++ge.failures;
  }
  const WilsonInterval wi = wilson(ge.failures, std::uint64_t(trials));
  ge.p_hat = wi.point;
  ge.lo = wi.lo;
  ge.hi = wi.hi;
  return ge;
}

ZeroCostEstimate zero_cost_circuit_mc(double q, int max_len, int trials,
                                      std::uint64_t seed) {
  if (q < 0.0 || q > 1.0)
    throw std::invalid_argument("zero_cost_circuit_mc: removal probability outside [0, 1]");
  if (max_len < 4)
    throw std::invalid_argument("zero_cost_circuit_mc: circuits need length at least 4");
  if (trials < 1)
    throw std::invalid_argument("zero_cost_circuit_mc: need at least one trial");

  ZeroCostEstimate ze;
  ze.q = q;
  ze.max_len = max_len;
  ze.trials = trials;

  const int L = max_len;
  const int cn = (L + 1) * (L + 1);
  const int ox = L / 2, oy = L / 2;
  std::vector<char> rem(std::size_t(L) * L);
  const std::size_t corner_n = std::size_t(cn);
  std::vector<unsigned char> v_zero(corner_n), h_zero(corner_n);
  std::vector<int> dist(std::size_t(2 * cn));
  std::vector<int> queue;
  const auto at = [L](int a, int b) { return b * (L + 1) + a; };

  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, "zero-cost-trial", std::uint64_t(t)));
    for (auto& r : rem) r = rng.next_double() < q;
    const auto cell = [&](int x, int y) { return rem[std::size_t(y) * L + x]; };
    std::fill(v_zero.begin(), v_zero.end(), 0);
    std::fill(h_zero.begin(), h_zero.end(), 0);
    for (int b = 0; b <= L - 1; ++b)
      for (int a = 1; a <= L - 1; ++a)
        v_zero[std::size_t(at(a, b))] = cell(a - 1, b) || cell(a, b);
    for (int b = 1; b <= L - 1; ++b)
      for (int a = 0; a <= L - 1; ++a)
        h_zero[std::size_t(at(a, b))] = cell(a, b - 1) || cell(a, b);

    // A circuit encloses the center cell iff it crosses the eastward ray
    // out of that cell an odd number of times; only the vertical
    // segments at the center row, east of the center, can cross it.
    const auto crossing = [&](bool vertical, int sa, int sb) {
      return vertical && sb == oy && sa >= ox + 1;
    };
    bool hit = false;
    for (int a = ox + 1; a <= L - 1 && !hit; ++a) {
      if (!v_zero[std::size_t(at(a, oy))]) continue;
      // Close the loop: from the segment's top corner back to its bottom
      // corner with an even number of further crossings, then the
      // segment itself makes the count odd.
      std::fill(dist.begin(), dist.end(), -1);
      const int start = at(a, oy + 1), goal = at(a, oy);
      dist[std::size_t(start)] = 0;
      queue.assign(1, start);  // node = corner + parity * cn
      for (std::size_t head = 0; head < queue.size() && !hit; ++head) {
        const int node = queue[std::size_t(head)];
        const int par = node >= cn ? 1 : 0;
        const int corner = node - par * cn;
        const int d0 = dist[std::size_t(node)];
        if (d0 >= max_len - 1) continue;
        const int ca = corner % (L + 1), cb = corner / (L + 1);
        for (int dir = 0; dir < 4; ++dir) {
          bool vertical;
          int sa, sb, na, nb;
          switch (dir) {
            case 0: vertical = false; sa = ca;     sb = cb;     na = ca + 1; nb = cb;     break;
            case 1: vertical = true;  sa = ca;     sb = cb;     na = ca;     nb = cb + 1; break;
            case 2: vertical = false; sa = ca - 1; sb = cb;     na = ca - 1; nb = cb;     break;
            default: vertical = true; sa = ca;     sb = cb - 1; na = ca;     nb = cb - 1; break;
          }
          if (vertical) {
            if (sa < 1 || sa > L - 1 || sb < 0 || sb > L - 1) continue;
            if (!v_zero[std::size_t(at(sa, sb))]) continue;
          } else {
            if (sa < 0 || sa > L - 1 || sb < 1 || sb > L - 1) continue;
            if (!h_zero[std::size_t(at(sa, sb))]) continue;
          }
          const int npar = par ^ (crossing(vertical, sa, sb) ? 1 : 0);
          const int nnode = at(na, nb) + npar * cn;
          if (dist[std::size_t(nnode)] >= 0) continue;
          dist[std::size_t(nnode)] = d0 + 1;
          if (nnode == goal) {
            hit = true;
            break;
          }
          queue.push_back(nnode);
        }
      }
    }
    if (hit) ++ze.hits;
  }
  const WilsonInterval wi = wilson(ze.hits, std::uint64_t(trials));
  ze.p_hat = wi.point;
  ze.lo = wi.lo;
  ze.hi = wi.hi;
  return ze;
}

Lemma7Report lemma7_pipeline(const TreeNetwork& t, Vec2 study_origin,
                             double m, int k) {
  if (m <= 0.0 || k < 1)
    throw std::invalid_argument("lemma7_pipeline: need positive cell side and grid count");
  const double side = m * double(k);
  Lemma7Report rep;
  rep.k = k;
  rep.m = m;
  rep.near_threshold = std::sqrt(2.0) * m;
  rep.route_threshold = 0.001 * m * double(k);

  std::vector<int> terms;
  std::vector<Vec2> pos;
  for (const int v : t.terminals()) {
    const Vec2& p = t.position(v);
    if (p.x >= study_origin.x && p.x < study_origin.x + side &&
        p.y >= study_origin.y && p.y < study_origin.y + side) {
      terms.push_back(v);
      pos.push_back(p);
    }
  }
  rep.n_terminals = terms.size();
  if (terms.size() < 2)
    throw std::runtime_error(
        "lemma7_pipeline: study square holds fewer than two terminals");

  const SpannedSubtree sub = spanned_subtree(t, terms);
  const int vs = centroid(sub.tree);
  const Bipartition bp = bipartition(sub.tree, vs);
  rep.v_star = vs;
  rep.v_star_source = sub.source_vertex[std::size_t(vs)];
  rep.n_blue = bp.side_b.size();
  rep.n_rest = bp.side_bc.size();

  // Blue flags on the local ids of the study point set.
  std::vector<int> local_of(t.vertex_count(), -1);
  for (std::size_t i = 0; i < terms.size(); ++i)
    local_of[std::size_t(terms[i])] = int(i);
  std::vector<char> blue(terms.size(), 0);
  for (const int sid : bp.side_b) {
    const int src = sub.source_vertex[std::size_t(sid)];
    const int loc = local_of[std::size_t(src)];
    if (loc < 0)
      throw std::logic_error("lemma7_pipeline: blue terminal fell outside the study square");
    blue[std::size_t(loc)] = 1;
  }

  // Census of the k x k subsquares: balance from the strip tallies, then
  // the blue-count bands on the balanced ones.
  const Window sw{study_origin.x, study_origin.y, side, 0.0};
  const PointSet psq(pos, sw);
  const GridPartition gp{study_origin.x, study_origin.y, m, k};
  const CellCounts cc = cell_counts(psq, gp);
  std::vector<std::uint64_t> blue_in(std::size_t(k) * k, 0);
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (blue[i]) ++blue_in[std::size_t(gp.cell_index(pos[i]))];

  const double strip_lo = 0.98 * m * m / 5.0;
  const double strip_hi = 1.02 * m * m / 5.0;
  const double blue_lo = 0.09 * m * m;
  const double blue_hi = 0.89 * m * m;
  for (int ci = 0; ci < k * k; ++ci) {
    const StripCounts& sc = cc.strips[std::size_t(ci)];
    bool balanced = true;
    for (int s = 0; s < 5; ++s) {
      const double v = double(sc.vertical[std::size_t(s)]);
      const double h = double(sc.horizontal[std::size_t(s)]);
      if (v < strip_lo || v > strip_hi || h < strip_lo || h > strip_hi)
        balanced = false;
    }
    if (!balanced) {
      ++rep.census_unbalanced;
      continue;
    }
    const double b = double(blue_in[std::size_t(ci)]);
    if (b < blue_lo)
      ++rep.census_low;
    else if (b > blue_hi)
      ++rep.census_high;
    else
      ++rep.census_mid;
  }
  rep.census_mid_small = double(rep.census_mid) <= 0.005 * double(k) * double(k);
  rep.split_large = double(std::min(rep.census_low, rep.census_high)) >=
                    double(k) * double(k) / 4.0;

  for_each_pair_within(psq, rep.near_threshold, [&](int a, int b, double) {
    if (blue[std::size_t(a)] == blue[std::size_t(b)]) return;
    ++rep.close_cross_pairs;
    const double route =
        t.route_length(terms[std::size_t(a)], terms[std::size_t(b)]);
    if (route >= rep.route_threshold) ++rep.qualifying_pairs;
  });
  return rep;
}

std::uint64_t count_dual_saw(int k, int len) {
  if (k < 2) throw std::invalid_argument("count_dual_saw: grid side must be at least 2");
  if (len < 1) throw std::invalid_argument("count_dual_saw: length must be positive");
  SegGrids sg;
  sg.k = k;
  std::vector<char> visited(std::size_t(k + 1) * (k + 1), 0);
  std::uint64_t directed = 0;

  const auto walk = [&](auto&& self, int a, int b, int remaining) -> void {
    if (remaining == 0) {
      ++directed;
      return;
    }
    for (int d = 0; d < 4; ++d) {
      const Step s = step_from(sg, a, b, d);
      if (!s.ok) continue;
      const int nc = s.nb * (k + 1) + s.na;
      if (visited[std::size_t(nc)]) continue;
      visited[std::size_t(nc)] = 1;
      self(self, s.na, s.nb, remaining - 1);
      visited[std::size_t(nc)] = 0;
    }
  };
  for (int b = 0; b <= k; ++b) {
    for (int a = 0; a <= k; ++a) {
      const int c = b * (k + 1) + a;
      visited[std::size_t(c)] = 1;
      walk(walk, a, b, len);
      visited[std::size_t(c)] = 0;
    }
  }
  return directed / 2;
}

}  // namespace treenet
