#include "treenet/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "treenet/io.hpp"
#include "treenet/parallel.hpp"
#include "treenet/rng.hpp"
#include "treenet/stats.hpp"

namespace treenet {

namespace {

// Qualifying pairs for an estimate: both endpoints at least `margin` from
// the window boundary, separation <= r. Ids refer to the original point
// set. Enumeration order is fixed, so the capped subsample depends only
// on (points, r, margin, cap, seed).
struct Collected {
  std::vector<PairHit> pairs;
  std::uint64_t total = 0;
  bool capped = false;
};

std::vector<int> eligible_ids(const PointSet& ps, double margin) {
  std::vector<int> keep;
  keep.reserve(ps.size());
  const Window& w = ps.window();
  for (int i = 0; i < int(ps.size()); ++i)
    if (w.inner_contains(ps[i], margin)) keep.push_back(i);
  return keep;
}

PointSet eligible_subset(const PointSet& ps, const std::vector<int>& keep) {
  std::vector<Vec2> sub;
  sub.reserve(keep.size());
  for (int id : keep) sub.push_back(ps[id]);
  return PointSet(std::move(sub), ps.window());
}

Collected collect_pairs(const PointSet& ps, double r, double margin,
                        std::uint64_t cap, std::uint64_t seed) {
  if (r <= 0.0) throw std::invalid_argument("pair collection: r must be > 0");
  if (cap == 0) throw std::invalid_argument("pair collection: cap must be > 0");
  if (margin <= 0.0) {
    PairSample s = pairs_within(ps, r, cap, seed);
    return Collected{std::move(s.pairs), s.total, s.capped};
  }
  const std::vector<int> keep = eligible_ids(ps, margin);
  if (keep.size() < 2) return Collected{};
  const PointSet inner = eligible_subset(ps, keep);
  PairSample s = pairs_within(inner, r, cap, seed);
  Collected out{std::move(s.pairs), s.total, s.capped};
  for (PairHit& p : out.pairs) {
    p.a = keep[std::size_t(p.a)];
    p.b = keep[std::size_t(p.b)];
  }
  return out;
}

std::vector<double> routes_for_pairs(const std::vector<PairHit>& pairs,
                                     RouteSource& src, unsigned threads) {
  std::vector<double> out(pairs.size());
  constexpr std::size_t kChunk = 8192;
  if (threads <= 1 || pairs.size() < 2 * kChunk) {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      out[i] = src.route(pairs[i].a, pairs[i].b);
    return out;
  }
  const std::size_t nchunks = (pairs.size() + kChunk - 1) / kChunk;
  std::vector<std::unique_ptr<RouteSource>> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) workers.push_back(src.clone());
  parallel_chunks(nchunks, threads, [&](std::size_t c, std::size_t w) {
    RouteSource& s = *workers[w];
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(pairs.size(), lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i)
      out[i] = s.route(pairs[i].a, pairs[i].b);
  });
  return out;
}

}  // namespace

std::unique_ptr<RouteSource> make_route_source(const BuiltNetwork& bn) {
  if (bn.tree) return std::make_unique<TreeRouteSource>(*bn.tree);
  if (bn.graph) return std::make_unique<GraphRouteSource>(*bn.graph);
  throw std::invalid_argument("make_route_source: empty model");
}

RhoCurve estimate_rho(const PointSet& ps, RouteSource& src, double r_max,
                      int n_bins, std::uint64_t cap, double margin,
                      std::uint64_t seed, unsigned threads) {
  if (r_max <= 0.0) throw std::invalid_argument("estimate_rho: r_max <= 0");
  if (n_bins <= 0) throw std::invalid_argument("estimate_rho: n_bins <= 0");
  if (cap == 0) throw std::invalid_argument("estimate_rho: cap must be > 0");
  if (margin < 0.0) throw std::invalid_argument("estimate_rho: margin < 0");

  RhoCurve curve;
  curve.r_max = r_max;
  curve.margin = margin;
  curve.cap = cap;
  curve.seed = seed;
  curve.bins.resize(std::size_t(n_bins));
  const double width = r_max / double(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    RhoBin& bin = curve.bins[std::size_t(b)];
    bin.r_lo = width * double(b);
    bin.r_hi = width * double(b + 1);
    bin.r_mid = width * (double(b) + 0.5);
  }
  auto bin_of = [&](double d) {
    int b = int(d / width);
    if (b >= n_bins) b = n_bins - 1;
    return b;
  };

  const std::vector<int> keep =
      margin > 0.0 ? eligible_ids(ps, margin) : std::vector<int>{};
  if (margin > 0.0 && keep.size() < 2) return curve;
  const PointSet inner_store =
      margin > 0.0 ? eligible_subset(ps, keep) : PointSet{};
  const PointSet& inner = margin > 0.0 ? inner_store : ps;

  // Pass 1: per-bin totals.
  std::vector<std::uint64_t> count(std::size_t(n_bins), 0);
  for_each_pair_within(inner, r_max,
                       [&](int, int, double d) { ++count[bin_of(d)]; });
  for (int b = 0; b < n_bins; ++b)
    curve.bins[std::size_t(b)].total_pairs = count[std::size_t(b)];

  // Per-bin subsample positions for bins over the cap.
  const std::size_t nb = std::size_t(n_bins);
  std::vector<std::vector<std::uint64_t>> picked(nb);
  for (int b = 0; b < n_bins; ++b) {
    if (count[std::size_t(b)] > cap) {
      Rng rng(derive_seed(seed, "rho-bin", std::uint64_t(b)));
      picked[std::size_t(b)] =
          sample_positions(count[std::size_t(b)], cap, rng);
    }
  }

  // Pass 2: gather the selected pairs in enumeration order.
  std::vector<PairHit> pairs;
  std::vector<int> pair_bin;
  std::vector<std::uint64_t> seen(std::size_t(n_bins), 0);
  std::vector<std::size_t> cursor(std::size_t(n_bins), 0);
  for_each_pair_within(inner, r_max, [&](int a, int b, double d) {
    const int bi = bin_of(d);
    bool take;
    if (count[std::size_t(bi)] <= cap) {
      take = true;
    } else {
      const auto& sel = picked[std::size_t(bi)];
      take = cursor[std::size_t(bi)] < sel.size() &&
             sel[cursor[std::size_t(bi)]] == seen[std::size_t(bi)];
      if (take) ++cursor[std::size_t(bi)];
    }
    if (take) {
      PairHit h{a, b, d};
      if (margin > 0.0) {
        h.a = keep[std::size_t(a)];
        h.b = keep[std::size_t(b)];
      }
      pairs.push_back(h);
      pair_bin.push_back(bi);
    }
    ++seen[std::size_t(bi)];
  });

  const std::vector<double> routes = routes_for_pairs(pairs, src, threads);

  std::vector<std::vector<double>> per_bin(nb);
  for (std::size_t i = 0; i < routes.size(); ++i)
    per_bin[std::size_t(pair_bin[i])].push_back(routes[i]);
  for (int b = 0; b < n_bins; ++b) {
    RhoBin& bin = curve.bins[std::size_t(b)];
    const auto& xs = per_bin[std::size_t(b)];
    bin.used_pairs = xs.size();
    if (!xs.empty()) {
      const MeanSe ms = mean_se(xs);
      bin.mean_route = ms.mean;
      bin.se = ms.se;
    }
  }
  return curve;
}

std::string rho_csv(const RhoCurve& c) {
  std::string out = "r_bin,mean_route,pairs,se\n";
  for (const RhoBin& b : c.bins) {
    out += fmt_double17(b.r_mid);
    out += ',';
    if (b.used_pairs > 0) out += fmt_double17(b.mean_route);
    out += ',';
    out += std::to_string(b.used_pairs);
    out += ',';
    if (b.used_pairs > 0) out += fmt_double17(b.se);
    out += '\n';
  }
  return out;
}

TailEstimate estimate_tail(const PointSet& ps, RouteSource& src, double r,
                           const std::vector<double>& d_grid,
                           std::uint64_t cap, double margin,
                           std::uint64_t seed, unsigned threads,
                           std::string model) {
  if (r <= 0.0) throw std::invalid_argument("estimate_tail: r <= 0");
  for (std::size_t i = 1; i < d_grid.size(); ++i)
    if (!(d_grid[i] > d_grid[i - 1]))
      throw std::invalid_argument("estimate_tail: d grid must increase");

  TailEstimate te;
  te.r = r;
  te.d = d_grid;
  te.margin = margin;
  te.window_side = ps.window().side;
  te.seed = seed;
  te.model = std::move(model);

  Collected col = collect_pairs(ps, r, margin, cap, seed);
  te.pairs_total = col.total;
  te.capped = col.capped;
  te.pairs_used = col.pairs.size();
  te.insufficient_pairs = te.pairs_used < 100;

  std::vector<double> routes = routes_for_pairs(col.pairs, src, threads);
  std::sort(routes.begin(), routes.end());
  const std::uint64_t n = routes.size();
  te.chi.reserve(d_grid.size());
  te.lo.reserve(d_grid.size());
  te.hi.reserve(d_grid.size());
  for (double d : d_grid) {
    std::uint64_t hits = 0;
    if (n > 0) {
      const auto it = std::lower_bound(routes.begin(), routes.end(), d);
      hits = std::uint64_t(routes.end() - it);
    }
    const WilsonInterval wi = wilson(hits, n);
    te.chi.push_back(n > 0 ? double(hits) / double(n) : 0.0);
    te.lo.push_back(wi.lo);
    te.hi.push_back(wi.hi);
  }
  return te;
}

std::string tail_csv(const TailEstimate& te) {
  std::string out = "d,chi,lo,hi,pairs\n";
  for (std::size_t i = 0; i < te.d.size(); ++i) {
    out += fmt_double17(te.d[i]);
    out += ',';
    out += fmt_double17(te.chi[i]);
    out += ',';
    out += fmt_double17(te.lo[i]);
    out += ',';
    out += fmt_double17(te.hi[i]);
    out += ',';
    out += std::to_string(te.pairs_used);
    out += '\n';
  }
  return out;
}

std::vector<double> geometric_d_grid(double d_lo, double d_hi) {
  if (d_lo <= 0.0 || d_hi < d_lo)
    throw std::invalid_argument("geometric_d_grid: need 0 < d_lo <= d_hi");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = d_lo * std::exp2(0.25 * double(i));
    if (v > d_hi * (1.0 + 1e-12)) break;
    out.push_back(v);
  }
  return out;
}

TailFit fit_tail_exponent(const TailEstimate& te, double d_lo, double d_hi) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < te.d.size(); ++i) {
    const double d = te.d[i], chi = te.chi[i];
    if (d < d_lo * (1.0 - 1e-12) || d > d_hi * (1.0 + 1e-12)) continue;
    if (!(chi > 0.0) || !(chi < 1.0)) continue;
    xs.push_back(std::log(d));
    ys.push_back(std::log(chi));
  }
  if (xs.size() < 4)
    throw std::runtime_error(
        "fit_tail_exponent: need at least 4 grid points with chi in (0,1) "
        "inside the fit range");
  const OlsFit f = ols(xs, ys);
  return TailFit{f.slope, f.intercept, f.slope_se, f.r2, f.n};
}

ScalingStudy window_scaling_study(Model model, double r,
                                  const std::vector<double>& sides,
                                  int replicates, std::uint64_t seed,
                                  double margin_frac, std::uint64_t cap,
                                  unsigned threads, double comb_spacing) {
  if (sides.empty())
    throw std::invalid_argument("window_scaling_study: no window sides");
  for (std::size_t i = 0; i < sides.size(); ++i) {
    if (sides[i] <= 0.0)
      throw std::invalid_argument("window_scaling_study: side <= 0");
    if (i > 0 && !(sides[i] > sides[i - 1]))
      throw std::invalid_argument("window_scaling_study: sides must increase");
  }
  if (replicates < 1)
    throw std::invalid_argument("window_scaling_study: replicates < 1");
  if (r <= 0.0) throw std::invalid_argument("window_scaling_study: r <= 0");
  if (margin_frac < 0.0 || margin_frac >= 0.5)
    throw std::invalid_argument(
        "window_scaling_study: margin fraction outside [0, 0.5)");

  ScalingStudy st;
  st.model = model;
  st.r = r;
  st.margin_frac = margin_frac;
  st.cap = cap;
  st.seed = seed;

  for (std::size_t si = 0; si < sides.size(); ++si) {
    const double side = sides[si];
    const double margin = margin_frac * side;
    // Margin is applied through collect_pairs; the window itself carries none,
    // otherwise eligibility would shrink by the margin twice.
    const Window w{0.0, 0.0, side, 0.0};
    ScalingRow row;
    row.side = side;
    row.replicates = replicates;
    for (int rep = 0; rep < replicates; ++rep) {
      const std::uint64_t side_seed = derive_seed(seed, "scaling-side", si);
      const std::uint64_t rep_seed =
          derive_seed(side_seed, model_name(model), std::uint64_t(rep));
      const BuiltNetwork bn =
          build_model(model, w, 1.0, rep_seed, comb_spacing);
      const std::unique_ptr<RouteSource> src = make_route_source(bn);
      const Collected col = collect_pairs(bn.points, r, margin, cap,
                                          derive_seed(rep_seed, "pairs", 0));
      if (col.pairs.empty())
        throw std::runtime_error(
            "window_scaling_study: a replicate produced no qualifying pairs");
      const std::vector<double> routes =
          routes_for_pairs(col.pairs, *src, threads);
      const MeanSe ms = mean_se(routes);
      row.replicate_means.push_back(ms.mean);
      row.pairs_used += routes.size();
    }
    const MeanSe over_reps = mean_se(row.replicate_means);
    row.mean_route = over_reps.mean;
    const double half =
        replicates > 1 ? t_critical_975(replicates - 1) * over_reps.se : 0.0;
    row.ci_lo = row.mean_route - half;
    row.ci_hi = row.mean_route + half;
    st.rows.push_back(std::move(row));
  }
  return st;
}

std::string scaling_csv(const ScalingStudy& st) {
  std::string out = "side,mean_route,ci_lo,ci_hi,replicates,pairs\n";
  for (const ScalingRow& row : st.rows) {
    out += fmt_double17(row.side);
    out += ',';
    out += fmt_double17(row.mean_route);
    out += ',';
    out += fmt_double17(row.ci_lo);
    out += ',';
    out += fmt_double17(row.ci_hi);
    out += ',';
    out += std::to_string(row.replicates);
    out += ',';
    out += std::to_string(row.pairs_used);
    out += '\n';
  }
  return out;
}

}  // namespace treenet
