#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

namespace treenet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dist2(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double dist(const Vec2& a, const Vec2& b) {
  return std::sqrt(dist2(a, b));
}

// Axis-aligned square observation window. margin is the width of the
// boundary band excluded by estimators; a degenerate side of 0 is legal
// and simply has no interior.
struct Window {
  double x0 = 0.0;
  double y0 = 0.0;
  double side = 0.0;
  double margin = 0.0;

  bool valid() const {
    return side >= 0.0 && margin >= 0.0 && margin <= side / 2.0;
  }
  double area() const { return side * side; }
  double diagonal() const { return side * std::sqrt(2.0); }
  bool contains(const Vec2& p) const {
    return p.x >= x0 && p.x <= x0 + side && p.y >= y0 && p.y <= y0 + side;
  }
  // True when p keeps at least `extra` distance from the boundary on top
  // of the window's own margin.
  bool inner_contains(const Vec2& p, double extra = 0.0) const {
    const double m = margin + extra;
    return p.x >= x0 + m && p.x <= x0 + side - m && p.y >= y0 + m &&
           p.y <= y0 + side - m;
  }
};

// Uniform-bucket spatial index in CSR layout. Bucket side is chosen near
// the typical query radius (about one mean interpoint spacing) so disc
// queries touch O(area) points.
class GridIndex {
 public:
  GridIndex() = default;
  GridIndex(const std::vector<Vec2>* pts, const Window& w, double cell_hint);

  double cell_size() const { return cell_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  // Calls f(id) for every point in the closed disc of radius r around c.
  template <class F>
  void for_each_in_disc(const Vec2& c, double r, F&& f) const {
    if (ids_.empty() || r < 0.0) return;
    const double r2 = r * r;
    const auto [ix0, iy0] = clamp_cell(c.x - r, c.y - r);
    const auto [ix1, iy1] = clamp_cell(c.x + r, c.y + r);
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        if (cell_min_dist2(ix, iy, c) > r2) continue;
        const int ci = iy * nx_ + ix;
        for (int k = cell_start_[ci]; k < cell_start_[ci + 1]; ++k) {
          const int id = ids_[k];
          if (dist2((*pts_)[id], c) <= r2) f(id);
        }
      }
    }
  }

  // True if the closed disc contains a point whose id is neither skip_a
  // nor skip_b. The center cell is probed first because in dense data a
  // witness usually sits right there.
  bool any_in_disc_except(const Vec2& c, double r, int skip_a,
                          int skip_b) const;

  // Nearest point to q, with exclude skipped; ties broken toward the
  // smaller id. Returns -1 when the index is empty (or holds only the
  // excluded point).
  int nearest(const Vec2& q, int exclude = -1) const;

  std::pair<int, int> cell_of(double x, double y) const {
    return clamp_cell(x, y);
  }

 private:
  std::pair<int, int> clamp_cell(double x, double y) const {
    int ix = int(std::floor((x - x0_) / cell_));
    int iy = int(std::floor((y - y0_) / cell_));
    if (ix < 0) ix = 0;
    if (ix >= nx_) ix = nx_ - 1;
    if (iy < 0) iy = 0;
    if (iy >= ny_) iy = ny_ - 1;
    return {ix, iy};
  }

  // Squared distance from c to the closed rectangle of cell (ix, iy).
  double cell_min_dist2(int ix, int iy, const Vec2& c) const {
    const double cx0 = x0_ + ix * cell_, cx1 = cx0 + cell_;
    const double cy0 = y0_ + iy * cell_, cy1 = cy0 + cell_;
    double dx = 0.0, dy = 0.0;
    if (c.x < cx0)
      dx = cx0 - c.x;
    else if (c.x > cx1)
      dx = c.x - cx1;
    if (c.y < cy0)
      dy = cy0 - c.y;
    else if (c.y > cy1)
      dy = c.y - cy1;
    return dx * dx + dy * dy;
  }

  friend class PointSet;
  template <class F>
  friend void for_each_pair_within_impl(const GridIndex& gi,
                                        const std::vector<Vec2>& pts, double r,
                                        F&& f);

  const std::vector<Vec2>* pts_ = nullptr;
  double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<int> cell_start_;
  std::vector<int> ids_;
};

// Finite point configuration in a window, with the spatial index built on
// construction. Point ids are positions in the input order.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::vector<Vec2> pts, Window w, double cell_hint = -1.0);

  // The index stores a pointer to the point vector, so copies and moves
  // must re-aim it at their own storage.
  PointSet(const PointSet& o) : pts_(o.pts_), window_(o.window_), index_(o.index_) {
    index_.pts_ = &pts_;
  }
  PointSet(PointSet&& o) noexcept
      : pts_(std::move(o.pts_)), window_(o.window_), index_(std::move(o.index_)) {
    index_.pts_ = &pts_;
  }
  PointSet& operator=(const PointSet& o) {
    if (this != &o) {
      pts_ = o.pts_;
      window_ = o.window_;
      index_ = o.index_;
      index_.pts_ = &pts_;
    }
    return *this;
  }
  PointSet& operator=(PointSet&& o) noexcept {
    if (this != &o) {
      pts_ = std::move(o.pts_);
      window_ = o.window_;
      index_ = std::move(o.index_);
      index_.pts_ = &pts_;
    }
    return *this;
  }

  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  const Vec2& operator[](std::size_t i) const { return pts_[i]; }
  const std::vector<Vec2>& points() const { return pts_; }
  const Window& window() const { return window_; }
  const GridIndex& index() const { return index_; }

  // Ids in the closed disc, ascending.
  std::vector<int> in_disc(const Vec2& c, double r) const;
  int nearest(const Vec2& q, int exclude = -1) const {
    return index_.nearest(q, exclude);
  }

 private:
  std::vector<Vec2> pts_;
  Window window_;
  GridIndex index_;
};

// Homogeneous Poisson sample on the window: Poisson count for the area
// times intensity, then i.i.d. uniform positions.
PointSet sample_poisson(double intensity, const Window& w, std::uint64_t seed);

// Partition of an axis-aligned square region into k x k cells of side m.
// Points on the outer right/top edge are assigned to the last cell.
struct GridPartition {
  double x0 = 0.0;
  double y0 = 0.0;
  double m = 1.0;
  int k = 1;

  static GridPartition over(const Window& w, int k);

  bool valid() const { return k >= 1 && m > 0.0; }
  double side() const { return m * double(k); }

  std::pair<int, int> cell_of(const Vec2& p) const {
    int ix = int(std::floor((p.x - x0) / m));
    int iy = int(std::floor((p.y - y0) / m));
    if (ix < 0) ix = 0;
    if (ix >= k) ix = k - 1;
    if (iy < 0) iy = 0;
    if (iy >= k) iy = k - 1;
    return {ix, iy};
  }
  int cell_index(const Vec2& p) const {
    const auto [ix, iy] = cell_of(p);
    return iy * k + ix;
  }
};

struct PairHit {
  int a = 0;
  int b = 0;
  double d = 0.0;
};

struct PairSample {
  std::vector<PairHit> pairs;  // canonical a < b, enumeration order
  std::uint64_t total = 0;     // qualifying pairs before any cap
  bool capped = false;
};

// Streams every unordered pair at Euclidean distance <= r exactly once,
// in a fixed order (ascending first id). f(a, b, d).
template <class F>
void for_each_pair_within_impl(const GridIndex& gi,
                               const std::vector<Vec2>& pts, double r, F&& f) {
  if (pts.size() < 2 || r < 0.0) return;
  const double r2 = r * r;
  for (int a = 0; a < int(pts.size()); ++a) {
    const Vec2& pa = pts[a];
    const auto [ix0, iy0] = gi.clamp_cell(pa.x - r, pa.y - r);
    const auto [ix1, iy1] = gi.clamp_cell(pa.x + r, pa.y + r);
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        if (gi.cell_min_dist2(ix, iy, pa) > r2) continue;
        const int ci = iy * gi.nx_ + ix;
        for (int k = gi.cell_start_[ci]; k < gi.cell_start_[ci + 1]; ++k) {
          const int b = gi.ids_[k];
          if (b <= a) continue;
          const double d2v = dist2(pa, pts[b]);
          if (d2v <= r2) f(a, b, std::sqrt(d2v));
        }
      }
    }
  }
}

template <class F>
void for_each_pair_within(const PointSet& ps, double r, F&& f) {
  for_each_pair_within_impl(ps.index(), ps.points(), r, std::forward<F>(f));
}

// All pairs within r, uniformly subsampled to at most cap entries. The
// subsample is chosen by global pair position, so it is independent of
// any worker-thread configuration.
PairSample pairs_within(const PointSet& ps, double r,
                        std::uint64_t cap = UINT64_MAX,
                        std::uint64_t seed = 0);

class Rng;

// `take` distinct positions drawn uniformly from [0, total), sorted
// ascending. Floyd's algorithm, so cost is O(take) regardless of total.
std::vector<std::uint64_t> sample_positions(std::uint64_t total,
                                            std::uint64_t take, Rng& rng);

struct StripCounts {
  std::array<std::uint64_t, 5> vertical{};    // indexed by x band
  std::array<std::uint64_t, 5> horizontal{};  // indexed by y band
  std::uint64_t total = 0;
};

struct CellCounts {
  int k = 0;
  std::vector<std::uint64_t> count;   // k*k, row-major by (iy, ix)
  std::vector<StripCounts> strips;    // same layout
  std::uint64_t assigned = 0;
};

// Per-cell totals and per-cell fifth-strip tallies for points of ps that
// fall inside the partition's region.
CellCounts cell_counts(const PointSet& ps, const GridPartition& gp);

// CSV with header id,x,y; coordinates at full precision.
void write_points_csv(const PointSet& ps, std::ostream& out);

}  // namespace treenet
