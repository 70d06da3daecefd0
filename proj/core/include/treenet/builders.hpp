#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treenet/geometry.hpp"
#include "treenet/network.hpp"

namespace treenet {

// Network families exposed by the experiment driver. The first three are
// trees; gabriel is the connected non-tree contrast.
enum class Model { mst, rain, comb, gabriel };

const char* model_name(Model m);
std::optional<Model> parse_model(std::string_view name);

// Euclidean minimum spanning tree over the point set. Candidate edges are
// drawn from discs of growing radius (starting at twice the expected
// nearest-neighbour spacing, doubling until the graph spans); the cut
// property makes the result independent of the escalation schedule.
TreeNetwork build_mst(const PointSet& ps);

// Genealogical tree of a Poisson rain: points carry i.i.d. uniform(0,1]
// arrival marks and each arrival attaches to the nearest point that
// arrived before it.
struct RainTree {
  TreeNetwork tree;
  PointSet points;              // ids align with tree vertices
  std::vector<double> arrival;  // arrival mark per point
  std::vector<int> parent;      // attachment target, -1 for the first point
};
RainTree build_poisson_rain(double intensity, const Window& w,
                            std::uint64_t seed);

// Deterministic baseline: lattice sites of the window joined by a central
// vertical spine with horizontal teeth. Every edge has length `spacing`.
TreeNetwork build_grid_comb(const Window& w, double spacing);

// Gabriel graph: u~v iff the closed disc with diameter uv contains no
// other point. Exact at any scale; the candidate radius comes from an
// occupied-coarse-grid certificate bounding the longest possible edge.
Network build_gabriel(const PointSet& ps);

// Connected components of the radius-r0 unit-disc graph.
struct RggComponents {
  double r0 = 0.0;
  int component_count = 0;
  std::vector<int> component;        // per point
  std::vector<int> size_of_point;    // N(v, r0): |component of v|
  std::vector<std::pair<int, std::uint64_t>> size_histogram;  // (size, freq)
  std::vector<double> moments;       // point-averaged E N^j, j = 1..4
};
RggComponents rgg_components(const PointSet& ps, double r0);

// A model instance: the underlying points plus whichever network form the
// model produces. Point ids and network vertex ids coincide.
struct BuiltNetwork {
  PointSet points;
  std::optional<TreeNetwork> tree;  // mst, rain, comb
  std::optional<Network> graph;     // gabriel
};

// Builds one replicate of the chosen model. comb ignores the seed (it is
// deterministic) and uses `comb_spacing` for its lattice pitch.
BuiltNetwork build_model(Model m, const Window& w, double intensity,
                         std::uint64_t seed, double comb_spacing = 1.0);

// Exact point-to-point shortest-path lengths in a geometric network via
// A* with the straight-line lower bound. One router holds reusable
// scratch, so give each worker thread its own copy.
class AStarRouter {
 public:
  explicit AStarRouter(const Network& net);
  AStarRouter(const AStarRouter& o);
  AStarRouter& operator=(const AStarRouter&) = delete;

  // Length of the shortest path, or +inf when disconnected.
  double route(int s, int t);

 private:
  struct Shared {
    std::vector<int> start, to;
    std::vector<double> len;
    std::vector<Vec2> pos;
  };
  std::shared_ptr<const Shared> g_;
  std::vector<double> dist_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

}  // namespace treenet
