#include "treenet/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "treenet/io.hpp"
#include "treenet/rng.hpp"

namespace treenet {

GridIndex::GridIndex(const std::vector<Vec2>* pts, const Window& w,
                     double cell_hint) {
  pts_ = pts;
  x0_ = w.x0;
  y0_ = w.y0;
  double side = w.side;
  if (side <= 0.0) side = 1.0;
  double cell = cell_hint;
  if (cell <= 0.0) {
    // Aim for about one point per bucket.
    const double n = double(pts->size());
    cell = n > 1.0 ? side / std::sqrt(n) : side;
  }
  // Keep the table from exploding on tiny hints or collapsing to one cell.
  const double min_cell = side / 4096.0;
  if (cell < min_cell) cell = min_cell;
  if (cell > side) cell = side;
  cell_ = cell;
  nx_ = std::max(1, int(std::ceil(side / cell_)));
  ny_ = nx_;

  const int ncells = nx_ * ny_;
  std::vector<int> counts(ncells, 0);
  std::vector<int> cell_of_pt(pts->size());
  for (std::size_t i = 0; i < pts->size(); ++i) {
    const auto [ix, iy] = clamp_cell((*pts)[i].x, (*pts)[i].y);
    cell_of_pt[i] = iy * nx_ + ix;
    ++counts[cell_of_pt[i]];
  }
  cell_start_.assign(ncells + 1, 0);
  for (int c = 0; c < ncells; ++c) cell_start_[c + 1] = cell_start_[c] + counts[c];
  ids_.resize(pts->size());
  std::vector<int> cursor(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < pts->size(); ++i)
    ids_[cursor[cell_of_pt[i]]++] = int(i);
}

bool GridIndex::any_in_disc_except(const Vec2& c, double r, int skip_a,
                                   int skip_b) const {
  if (ids_.empty() || r < 0.0) return false;
  const double r2 = r * r;
  const auto [cx, cy] = clamp_cell(c.x, c.y);
  const int centre = cy * nx_ + cx;
  for (int k = cell_start_[centre]; k < cell_start_[centre + 1]; ++k) {
    const int id = ids_[k];
    if (id == skip_a || id == skip_b) continue;
    if (dist2((*pts_)[id], c) <= r2) return true;
  }
  const auto [ix0, iy0] = clamp_cell(c.x - r, c.y - r);
  const auto [ix1, iy1] = clamp_cell(c.x + r, c.y + r);
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      if (ix == cx && iy == cy) continue;
      if (cell_min_dist2(ix, iy, c) > r2) continue;
      const int ci = iy * nx_ + ix;
      for (int k = cell_start_[ci]; k < cell_start_[ci + 1]; ++k) {
        const int id = ids_[k];
        if (id == skip_a || id == skip_b) continue;
        if (dist2((*pts_)[id], c) <= r2) return true;
      }
    }
  }
  return false;
}

int GridIndex::nearest(const Vec2& q, int exclude) const {
  if (ids_.empty()) return -1;
  const auto [cx, cy] = clamp_cell(q.x, q.y);
  int best = -1;
  double best_d2 = 0.0;
  const int max_ring = nx_ + ny_;
  for (int ring = 0; ring <= max_ring; ++ring) {
    // Any cell at Chebyshev ring distance R is at least (R-1) cells away.
    if (best >= 0) {
      const double lb = double(ring - 1) * cell_;
      if (lb > 0.0 && lb * lb > best_d2) break;
    }
    const int ix0 = cx - ring, ix1 = cx + ring;
    const int iy0 = cy - ring, iy1 = cy + ring;
    auto scan_cell = [&](int ix, int iy) {
      if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_) return;
      const int ci = iy * nx_ + ix;
      for (int k = cell_start_[ci]; k < cell_start_[ci + 1]; ++k) {
        const int id = ids_[k];
        if (id == exclude) continue;
        const double d2v = dist2((*pts_)[id], q);
        if (best < 0 || d2v < best_d2 || (d2v == best_d2 && id < best)) {
          best = id;
          best_d2 = d2v;
        }
      }
    };
    if (ring == 0) {
      scan_cell(cx, cy);
      continue;
    }
    for (int ix = ix0; ix <= ix1; ++ix) {
      scan_cell(ix, iy0);
      scan_cell(ix, iy1);
    }
    for (int iy = iy0 + 1; iy <= iy1 - 1; ++iy) {
      scan_cell(ix0, iy);
      scan_cell(ix1, iy);
    }
  }
  return best;
}

PointSet::PointSet(std::vector<Vec2> pts, Window w, double cell_hint)
    : pts_(std::move(pts)), window_(w) {
  if (!window_.valid()) throw std::invalid_argument("PointSet: invalid window");
  index_ = GridIndex(&pts_, window_, cell_hint);
}

std::vector<int> PointSet::in_disc(const Vec2& c, double r) const {
  std::vector<int> out;
  index_.for_each_in_disc(c, r, [&](int id) { out.push_back(id); });
  std::sort(out.begin(), out.end());
  return out;
}

PointSet sample_poisson(double intensity, const Window& w,
                        std::uint64_t seed) {
  if (!w.valid()) throw std::invalid_argument("sample_poisson: invalid window");
  if (intensity < 0.0)
    throw std::invalid_argument("sample_poisson: negative intensity");
  Rng rng(seed);
  const double lambda = intensity * w.area();
  const std::int64_t n = rng.poisson(lambda);
  std::vector<Vec2> pts;
  pts.reserve(std::size_t(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = w.x0 + w.side * rng.next_double();
    const double y = w.y0 + w.side * rng.next_double();
    pts.push_back({x, y});
  }
  const double cell_hint = intensity > 0.0 ? 1.0 / std::sqrt(intensity) : -1.0;
  return PointSet(std::move(pts), w, cell_hint);
}

std::vector<std::uint64_t> sample_positions(std::uint64_t total,
                                            std::uint64_t take, Rng& rng) {
  if (take >= total) {
    std::vector<std::uint64_t> all;
    all.resize(std::size_t(total));
    for (std::uint64_t i = 0; i < total; ++i) all[std::size_t(i)] = i;
    return all;
  }
  // Floyd's algorithm: `take` distinct draws without building [0, total).
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(std::size_t(take) * 2);
  for (std::uint64_t j = total - take; j < total; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> order(chosen.begin(), chosen.end());
  std::sort(order.begin(), order.end());
  return order;
}

GridPartition GridPartition::over(const Window& w, int k) {
  if (k < 1) throw std::invalid_argument("GridPartition: k must be >= 1");
  if (w.side <= 0.0) throw std::invalid_argument("GridPartition: empty window");
  return GridPartition{w.x0, w.y0, w.side / double(k), k};
}

PairSample pairs_within(const PointSet& ps, double r, std::uint64_t cap,
                        std::uint64_t seed) {
  PairSample out;
  if (cap == 0) {
    for_each_pair_within(ps, r, [&](int, int, double) { ++out.total; });
    out.capped = out.total > 0;
    return out;
  }
  // Pass 1: count. If everything fits under the cap we collect directly
  // on pass 2; otherwise we pick global pair positions first, which keeps
  // the draw independent of traversal details.
  std::uint64_t total = 0;
  for_each_pair_within(ps, r, [&](int, int, double) { ++total; });
  out.total = total;
  if (total <= cap) {
    out.pairs.reserve(std::size_t(total));
    for_each_pair_within(ps, r, [&](int a, int b, double d) {
      out.pairs.push_back({a, b, d});
    });
    return out;
  }
  out.capped = true;
  Rng rng(mix64(seed ^ 0x70a1b5c3d2e4f687ull));
  const std::vector<std::uint64_t> order = sample_positions(total, cap, rng);
  out.pairs.reserve(order.size());
  std::uint64_t pos = 0;
  std::size_t want = 0;
  for_each_pair_within(ps, r, [&](int a, int b, double d) {
    if (want < order.size() && pos == order[want]) {
      out.pairs.push_back({a, b, d});
      ++want;
    }
    ++pos;
  });
  return out;
}

CellCounts cell_counts(const PointSet& ps, const GridPartition& gp) {
  if (!gp.valid()) throw std::invalid_argument("cell_counts: bad partition");
  CellCounts cc;
  cc.k = gp.k;
  cc.count.assign(std::size_t(gp.k) * gp.k, 0);
  cc.strips.assign(std::size_t(gp.k) * gp.k, StripCounts{});
  const double side = gp.side();
  const double strip = gp.m / 5.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Vec2& p = ps[i];
    const double lx = p.x - gp.x0, ly = p.y - gp.y0;
    if (lx < 0.0 || lx > side || ly < 0.0 || ly > side) continue;
    const auto [ix, iy] = gp.cell_of(p);
    const std::size_t ci = std::size_t(iy) * gp.k + ix;
    ++cc.count[ci];
    ++cc.assigned;
    auto band = [&](double local) {
      int s = int(std::floor(local / strip));
      if (s < 0) s = 0;
      if (s > 4) s = 4;
      return s;
    };
    StripCounts& sc = cc.strips[ci];
    ++sc.vertical[band(lx - double(ix) * gp.m)];
    ++sc.horizontal[band(ly - double(iy) * gp.m)];
    ++sc.total;
  }
  return cc;
}

void write_points_csv(const PointSet& ps, std::ostream& out) {
  out << "id,x,y\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out << i << ',' << fmt_double17(ps[i].x) << ',' << fmt_double17(ps[i].y)
        << '\n';
  }
}

}  // namespace treenet
