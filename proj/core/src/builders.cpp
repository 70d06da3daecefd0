#include "treenet/builders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "treenet/rng.hpp"

namespace treenet {

namespace {

struct Dsu {
  std::vector<int> parent, rank_;
  explicit Dsu(std::size_t n) : parent(n), rank_(n, 0) {
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
    if (rank_[std::size_t(a)] < rank_[std::size_t(b)]) std::swap(a, b);
    parent[std::size_t(b)] = a;
    if (rank_[std::size_t(a)] == rank_[std::size_t(b)]) ++rank_[std::size_t(a)];
    return true;
  }
};

struct CandidateEdge {
  double d2;
  int u, v;
  bool operator<(const CandidateEdge& o) const {
    if (d2 != o.d2) return d2 < o.d2;
    if (u != o.u) return u < o.u;
    return v < o.v;
  }
};

}  // namespace

const char* model_name(Model m) {
  switch (m) {
    case Model::mst: return "mst";
    case Model::rain: return "rain";
    case Model::comb: return "comb";
    case Model::gabriel: return "gabriel";
  }
  return "?";
}

std::optional<Model> parse_model(std::string_view name) {
  if (name == "mst") return Model::mst;
  if (name == "rain") return Model::rain;
  if (name == "comb") return Model::comb;
  if (name == "gabriel") return Model::gabriel;
  return std::nullopt;
}

BuiltNetwork build_model(Model m, const Window& w, double intensity,
                         std::uint64_t seed, double comb_spacing) {
  switch (m) {
    case Model::mst: {
      PointSet ps = sample_poisson(intensity, w, seed);
      TreeNetwork t = build_mst(ps);
      return BuiltNetwork{std::move(ps), std::move(t), std::nullopt};
    }
    case Model::rain: {
      RainTree rt = build_poisson_rain(intensity, w, seed);
      return BuiltNetwork{std::move(rt.points), std::move(rt.tree),
                          std::nullopt};
    }
    case Model::comb: {
      TreeNetwork t = build_grid_comb(w, comb_spacing);
      std::vector<Vec2> pos;
      pos.reserve(t.vertex_count());
      for (int i = 0; i < int(t.vertex_count()); ++i)
        pos.push_back(t.position(i));
      PointSet ps(std::move(pos), w);
      return BuiltNetwork{std::move(ps), std::move(t), std::nullopt};
    }
    case Model::gabriel: {
      PointSet ps = sample_poisson(intensity, w, seed);
      Network g = build_gabriel(ps);
      return BuiltNetwork{std::move(ps), std::nullopt, std::move(g)};
    }
  }
  throw std::invalid_argument("build_model: unknown model");
}

TreeNetwork build_mst(const PointSet& ps) {
  const std::size_t n = ps.size();
  if (n == 0) throw std::invalid_argument("build_mst: empty point set");
  Network net;
  net.vertices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) net.add_vertex(ps[i]);
  if (n == 1) return validate_tree(std::move(net));

  const Window& w = ps.window();
  const double diag = std::max(w.diagonal(), 1e-12);
  const double density = w.area() > 0.0 ? double(n) / w.area() : 0.0;
  // Twice the expected nearest-neighbour distance (0.5 / sqrt(density)).
  double radius = density > 0.0 ? 1.0 / std::sqrt(density) : diag;
  if (radius > diag) radius = diag;

  Dsu dsu(n);
  std::size_t components = n;
  std::vector<NetEdge> chosen;
  chosen.reserve(n - 1);
  std::vector<CandidateEdge> band;
  double r_prev = 0.0;

  auto kruskal_band = [&](double lo, double hi) {
    // Edges with length in (lo, hi]. Pairs already connected can never be
    // picked later, so they are dropped during collection.
    band.clear();
    const double lo2 = lo * lo, hi2 = hi * hi;
    for_each_pair_within(ps, hi, [&](int a, int b, double d) {
      const double d2v = d * d;
      if (d2v <= lo2) return;
      (void)d;
      if (dsu.find(a) != dsu.find(b)) band.push_back({d2v, a, b});
    });
    std::sort(band.begin(), band.end());
    for (const auto& e : band) {
      if (components == 1) break;
      if (dsu.unite(e.u, e.v)) {
        chosen.push_back({e.u, e.v, std::sqrt(e.d2)});
        --components;
      }
    }
  };

  while (components > 1) {
    // Split wide annuli so the transient candidate list stays bounded.
    const double est = density * 3.15 * (radius * radius - r_prev * r_prev) *
                       double(n) / 2.0;
    const int slices = std::max(1, int(std::ceil(est / 8e6)));
    for (int s = 0; s < slices && components > 1; ++s) {
      const double a2 =
          r_prev * r_prev +
          (radius * radius - r_prev * r_prev) * double(s) / double(slices);
      const double b2 =
          r_prev * r_prev +
          (radius * radius - r_prev * r_prev) * double(s + 1) / double(slices);
      kruskal_band(std::sqrt(a2), std::sqrt(b2));
    }
    if (components == 1) break;
    if (radius >= diag) {
      // All pairwise distances fit under the diagonal; reaching this point
      // means duplicate coordinates produced zero-length ties.
      throw std::runtime_error("build_mst: escalation exhausted the window");
    }
    r_prev = radius;
    radius = std::min(radius * 2.0, diag);
  }

  net.edges.assign(chosen.begin(), chosen.end());
  return validate_tree(std::move(net));
}

RainTree build_poisson_rain(double intensity, const Window& w,
                            std::uint64_t seed) {
  if (!w.valid())
    throw std::invalid_argument("build_poisson_rain: invalid window");
  if (intensity <= 0.0)
    throw std::invalid_argument("build_poisson_rain: intensity must be > 0");
  Rng rng(seed);
  const std::int64_t n = rng.poisson(intensity * w.area());
  if (n == 0)
    throw std::runtime_error(
        "build_poisson_rain: empty sample (enlarge the window)");
  const std::size_t count = std::size_t(n);
  std::vector<Vec2> pts(count);
  std::vector<double> arrival(count);
  for (std::size_t i = 0; i < count; ++i) {
    pts[i].x = w.x0 + w.side * rng.next_double();
    pts[i].y = w.y0 + w.side * rng.next_double();
    arrival[i] = rng.next_double_open();
  }
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (arrival[std::size_t(a)] != arrival[std::size_t(b)])
      return arrival[std::size_t(a)] < arrival[std::size_t(b)];
    return a < b;
  });

  // Incremental bucket grid over the arrived points; nearest predecessor
  // by expanding ring search.
  const double cell = std::max(w.side / 4096.0,
                               0.7 / std::sqrt(std::max(intensity, 1e-12)));
  const int nx = std::max(1, int(std::ceil(std::max(w.side, cell) / cell)));
  std::vector<std::vector<int>> bucket(std::size_t(nx) * std::size_t(nx));
  auto cell_of = [&](const Vec2& p) {
    int ix = int((p.x - w.x0) / cell);
    int iy = int((p.y - w.y0) / cell);
    ix = std::clamp(ix, 0, nx - 1);
    iy = std::clamp(iy, 0, nx - 1);
    return std::pair<int, int>{ix, iy};
  };
  auto nearest_arrived = [&](const Vec2& q) {
    const auto [cx, cy] = cell_of(q);
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring < 2 * nx; ++ring) {
      if (best >= 0) {
        const double lb = double(ring - 1) * cell;
        if (lb > 0.0 && lb * lb > best_d2) break;
      }
      auto scan = [&](int ix, int iy) {
        if (ix < 0 || ix >= nx || iy < 0 || iy >= nx) return;
        for (int id : bucket[std::size_t(iy) * std::size_t(nx) + std::size_t(ix)]) {
          const double d2v = dist2(pts[std::size_t(id)], q);
          if (d2v < best_d2 || (d2v == best_d2 && id < best)) {
            best = id;
            best_d2 = d2v;
          }
        }
      };
      if (ring == 0) {
        scan(cx, cy);
        continue;
      }
      for (int ix = cx - ring; ix <= cx + ring; ++ix) {
        scan(ix, cy - ring);
        scan(ix, cy + ring);
      }
      for (int iy = cy - ring + 1; iy <= cy + ring - 1; ++iy) {
        scan(cx - ring, iy);
        scan(cx + ring, iy);
      }
    }
    return best;
  };

  std::vector<int> parent(std::size_t(n), -1);
  Network net;
  net.vertices.reserve(std::size_t(n));
  for (std::size_t i = 0; i < std::size_t(n); ++i) net.add_vertex(pts[i]);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int id = order[k];
    if (k > 0) {
      const int p = nearest_arrived(pts[std::size_t(id)]);
      parent[std::size_t(id)] = p;
      net.add_edge(p, id);
    }
    const auto [ix, iy] = cell_of(pts[std::size_t(id)]);
    bucket[std::size_t(iy) * std::size_t(nx) + std::size_t(ix)].push_back(id);
  }

  RainTree out;
  out.tree = validate_tree(std::move(net));
  out.points = PointSet(std::move(pts), w,
                        1.0 / std::sqrt(std::max(intensity, 1e-12)));
  out.arrival = std::move(arrival);
  out.parent = std::move(parent);
  return out;
}

TreeNetwork build_grid_comb(const Window& w, double spacing) {
  if (!w.valid()) throw std::invalid_argument("build_grid_comb: invalid window");
  if (spacing <= 0.0)
    throw std::invalid_argument("build_grid_comb: spacing must be > 0");
  const int per_axis = int(std::floor(w.side / spacing + 1e-9)) + 1;
  Network net;
  net.vertices.reserve(std::size_t(per_axis) * std::size_t(per_axis));
  auto vid = [&](int i, int j) { return j * per_axis + i; };
  for (int j = 0; j < per_axis; ++j)
    for (int i = 0; i < per_axis; ++i)
      net.add_vertex({w.x0 + double(i) * spacing, w.y0 + double(j) * spacing});
  const int spine = (per_axis - 1) / 2;
  // Horizontal teeth are row chains; only the central spine column links
  // the rows vertically.
  for (int j = 0; j < per_axis; ++j)
    for (int i = 0; i < per_axis - 1; ++i)
      net.add_edge(vid(i, j), vid(i + 1, j));
  for (int j = 0; j < per_axis - 1; ++j)
    net.add_edge(vid(spine, j), vid(spine, j + 1));
  return validate_tree(std::move(net));
}

Network build_gabriel(const PointSet& ps) {
  const std::size_t n = ps.size();
  Network net;
  net.vertices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) net.add_vertex(ps[i]);
  if (n < 2) return net;

  const Window& w = ps.window();
  const double diag = std::max(w.diagonal(), 1e-12);

  // A Gabriel edge of length L certifies an empty disc of radius L/2 and
  // any disc of radius >= c*sqrt(2) fully contains some cell of an
  // aligned c-grid. So if every cell of a c-grid holds a point, edges are
  // shorter than 2*sqrt(2)*c. Coarsen c until the grid is fully occupied.
  double radius_cap = diag;
  const double density = w.area() > 0.0 ? double(n) / w.area() : 0.0;
  if (density > 0.0 && w.side > 0.0) {
    double c = 2.0 / std::sqrt(density);
    while (c < w.side) {
      const int k = std::max(1, int(std::floor(w.side / c)));
      const double cs = w.side / double(k);  // cells tile the window exactly
      std::vector<char> occupied(std::size_t(k) * std::size_t(k), 0);
      for (std::size_t i = 0; i < n; ++i) {
        int ix = int((ps[i].x - w.x0) / cs);
        int iy = int((ps[i].y - w.y0) / cs);
        ix = std::clamp(ix, 0, k - 1);
        iy = std::clamp(iy, 0, k - 1);
        occupied[std::size_t(iy) * std::size_t(k) + std::size_t(ix)] = 1;
      }
      if (std::find(occupied.begin(), occupied.end(), char(0)) ==
          occupied.end()) {
        radius_cap = std::min(diag, 2.0 * std::sqrt(2.0) * cs);
        break;
      }
      c *= 2.0;
    }
  }

  const GridIndex& gi = ps.index();
  for_each_pair_within(ps, radius_cap, [&](int a, int b, double d) {
    const Vec2 mid{(ps[std::size_t(a)].x + ps[std::size_t(b)].x) / 2.0,
                   (ps[std::size_t(a)].y + ps[std::size_t(b)].y) / 2.0};
    if (!gi.any_in_disc_except(mid, d / 2.0, a, b)) net.add_edge(a, b);
  });
  return net;
}

RggComponents rgg_components(const PointSet& ps, double r0) {
  if (r0 < 0.0) throw std::invalid_argument("rgg_components: negative radius");
  const std::size_t n = ps.size();
  RggComponents out;
  out.r0 = r0;
  out.component.assign(n, 0);
  out.size_of_point.assign(n, 0);
  if (n == 0) return out;
  Dsu dsu(n);
  for_each_pair_within(ps, r0,
                       [&](int a, int b, double) { dsu.unite(a, b); });
  // Compact component labels in order of first appearance.
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = dsu.find(int(i));
    if (label[std::size_t(r)] < 0) label[std::size_t(r)] = next++;
    out.component[i] = label[std::size_t(r)];
  }
  out.component_count = next;
  std::vector<int> size(std::size_t(next), 0);
  for (std::size_t i = 0; i < n; ++i) ++size[std::size_t(out.component[i])];
  for (std::size_t i = 0; i < n; ++i)
    out.size_of_point[i] = size[std::size_t(out.component[i])];
  std::vector<std::pair<int, std::uint64_t>> hist;
  {
    std::vector<int> sizes_sorted(size);
    std::sort(sizes_sorted.begin(), sizes_sorted.end());
    for (std::size_t i = 0; i < sizes_sorted.size();) {
      std::size_t j = i;
      while (j < sizes_sorted.size() && sizes_sorted[j] == sizes_sorted[i]) ++j;
      hist.push_back({sizes_sorted[i], j - i});
      i = j;
    }
  }
  out.size_histogram = std::move(hist);
  out.moments.assign(4, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < 4; ++j) {
      p *= double(out.size_of_point[i]);
      out.moments[std::size_t(j)] += p;
    }
  }
  for (auto& mo : out.moments) mo /= double(n);
  return out;
}

AStarRouter::AStarRouter(const Network& net) {
  auto g = std::make_shared<Shared>();
  const std::size_t n = net.vertices.size();
  g->pos.resize(n);
  for (std::size_t v = 0; v < n; ++v) g->pos[v] = net.vertices[v].pos;
  g->start.assign(n + 1, 0);
  for (const auto& e : net.edges) {
    ++g->start[std::size_t(e.u) + 1];
    ++g->start[std::size_t(e.v) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g->start[i + 1] += g->start[i];
  g->to.resize(net.edges.size() * 2);
  g->len.resize(net.edges.size() * 2);
  std::vector<int> cursor(g->start.begin(), g->start.end() - 1);
  for (const auto& e : net.edges) {
    g->to[std::size_t(cursor[std::size_t(e.u)])] = e.v;
    g->len[std::size_t(cursor[std::size_t(e.u)]++)] = e.length;
    g->to[std::size_t(cursor[std::size_t(e.v)])] = e.u;
    g->len[std::size_t(cursor[std::size_t(e.v)]++)] = e.length;
  }
  g_ = std::move(g);
  dist_.assign(n, 0.0);
  stamp_.assign(n, 0);
}

AStarRouter::AStarRouter(const AStarRouter& o)
    : g_(o.g_), dist_(o.g_->pos.size(), 0.0), stamp_(o.g_->pos.size(), 0) {}

double AStarRouter::route(int s, int t) {
  const auto& g = *g_;
  const std::size_t n = g.pos.size();
  if (s < 0 || t < 0 || std::size_t(s) >= n || std::size_t(t) >= n)
    throw std::out_of_range("AStarRouter: vertex id out of range");
  if (s == t) return 0.0;
  ++epoch_;
  const Vec2 target = g.pos[std::size_t(t)];
  using Item = std::pair<double, int>;  // (g + h, vertex)
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
  dist_[std::size_t(s)] = 0.0;
  stamp_[std::size_t(s)] = epoch_;
  open.push({dist(g.pos[std::size_t(s)], target), s});
  while (!open.empty()) {
    const auto [f, v] = open.top();
    open.pop();
    const double gv = dist_[std::size_t(v)];
    if (v == t) return gv;
    if (f > gv + dist(g.pos[std::size_t(v)], target) + 1e-12) continue;
    for (int k = g.start[std::size_t(v)]; k < g.start[std::size_t(v) + 1]; ++k) {
      const int wv = g.to[std::size_t(k)];
      const double cand = gv + g.len[std::size_t(k)];
      if (stamp_[std::size_t(wv)] != epoch_ || cand < dist_[std::size_t(wv)]) {
        dist_[std::size_t(wv)] = cand;
        stamp_[std::size_t(wv)] = epoch_;
        open.push({cand + dist(g.pos[std::size_t(wv)], target), wv});
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace treenet
