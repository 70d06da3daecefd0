#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "treenet/builders.hpp"
#include "treenet/geometry.hpp"
#include "treenet/network.hpp"

namespace treenet {

// Uniform route-length query interface over point ids. Tree networks
// answer in O(1) from the lca tables; general graphs run a shortest-path
// search. clone() hands out an instance another thread may use (shared
// immutable structure, private scratch).
class RouteSource {
 public:
  virtual ~RouteSource() = default;
  virtual double route(int u, int v) = 0;
  virtual std::unique_ptr<RouteSource> clone() const = 0;
};

class TreeRouteSource final : public RouteSource {
 public:
  explicit TreeRouteSource(const TreeNetwork& t) : t_(&t) {}
  double route(int u, int v) override { return t_->route_length(u, v); }
  std::unique_ptr<RouteSource> clone() const override {
    return std::make_unique<TreeRouteSource>(*t_);
  }

 private:
  const TreeNetwork* t_;
};

class GraphRouteSource final : public RouteSource {
 public:
  explicit GraphRouteSource(const Network& net) : router_(net) {}
  explicit GraphRouteSource(const AStarRouter& r) : router_(r) {}
  double route(int u, int v) override { return router_.route(u, v); }
  std::unique_ptr<RouteSource> clone() const override {
    return std::make_unique<GraphRouteSource>(router_);
  }

 private:
  AStarRouter router_;
};

// View of a built model as (points, route source). The source references
// bn, so bn must outlive it.
std::unique_ptr<RouteSource> make_route_source(const BuiltNetwork& bn);

// Mean route length binned by pair separation.
struct RhoBin {
  double r_lo = 0.0, r_hi = 0.0, r_mid = 0.0;
  std::uint64_t total_pairs = 0;  // qualifying pairs before capping
  std::uint64_t used_pairs = 0;
  double mean_route = 0.0;
  double se = 0.0;
};

struct RhoCurve {
  std::vector<RhoBin> bins;
  double r_max = 0.0;
  double margin = 0.0;
  std::uint64_t cap = 0;
  std::uint64_t seed = 0;
};

// Pairs are drawn among points at least `margin` from the window boundary
// and subsampled independently per bin up to `cap`. Results are a fixed
// function of (points, source, parameters, seed) for any thread count.
RhoCurve estimate_rho(const PointSet& ps, RouteSource& src, double r_max,
                      int n_bins, std::uint64_t cap, double margin,
                      std::uint64_t seed, unsigned threads = 1);

// CSV r_bin,mean_route,pairs,se; bins with no pairs keep empty value
// fields.
std::string rho_csv(const RhoCurve& c);

// Empirical survival curve of route length over pairs at separation <= r.
struct TailEstimate {
  double r = 0.0;
  std::vector<double> d;
  std::vector<double> chi;  // fraction of sampled pairs with route >= d
  std::vector<double> lo, hi;  // Wilson 95% bounds per grid point
  std::uint64_t pairs_used = 0;
  std::uint64_t pairs_total = 0;
  bool capped = false;
  bool insufficient_pairs = false;  // fewer than 100 qualifying pairs
  double margin = 0.0;
  double window_side = 0.0;
  std::uint64_t seed = 0;
  std::string model;
};

TailEstimate estimate_tail(const PointSet& ps, RouteSource& src, double r,
                           const std::vector<double>& d_grid,
                           std::uint64_t cap, double margin,
                           std::uint64_t seed, unsigned threads = 1,
                           std::string model = "");

// CSV d,chi,lo,hi,pairs.
std::string tail_csv(const TailEstimate& te);

// Geometric grid from d_lo to d_hi with ratio 2^(1/4), endpoints included
// when they land on the grid.
std::vector<double> geometric_d_grid(double d_lo, double d_hi);

struct TailFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
  int points_used = 0;
};

// Least squares of log chi against log d over grid points inside
// [d_lo, d_hi] with chi strictly between 0 and 1. Throws when fewer than
// 4 such points exist.
TailFit fit_tail_exponent(const TailEstimate& te, double d_lo, double d_hi);

// Mean route length between pairs at separation <= r, per window side,
// aggregated over independent replicates with a Student-t interval.
struct ScalingRow {
  double side = 0.0;
  int replicates = 0;
  double mean_route = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  std::uint64_t pairs_used = 0;  // summed over replicates
  std::vector<double> replicate_means;
};

struct ScalingStudy {
  Model model = Model::mst;
  double r = 0.0;
  double margin_frac = 0.0;
  std::uint64_t cap = 0;
  std::uint64_t seed = 0;
  std::vector<ScalingRow> rows;
};

ScalingStudy window_scaling_study(Model model, double r,
                                  const std::vector<double>& sides,
                                  int replicates, std::uint64_t seed,
                                  double margin_frac, std::uint64_t cap,
                                  unsigned threads = 1,
                                  double comb_spacing = 1.0);

// CSV side,mean_route,ci_lo,ci_hi,replicates,pairs.
std::string scaling_csv(const ScalingStudy& st);

}  // namespace treenet
