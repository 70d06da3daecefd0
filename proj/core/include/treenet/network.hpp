#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "treenet/geometry.hpp"

namespace treenet {

enum class VertexKind : std::uint8_t { terminal, steiner };

struct NetVertex {
  Vec2 pos;
  VertexKind kind = VertexKind::terminal;
};

struct NetEdge {
  int u = 0;
  int v = 0;
  double length = 0.0;
};

// Undirected geometric graph. Edge lengths are stored explicitly; they
// must agree with the straight-line distance of the endpoints.
struct Network {
  std::vector<NetVertex> vertices;
  std::vector<NetEdge> edges;

  int add_vertex(Vec2 p, VertexKind kind = VertexKind::terminal) {
    vertices.push_back({p, kind});
    return int(vertices.size()) - 1;
  }
  void add_edge(int u, int v) {
    edges.push_back({u, v, dist(vertices[u].pos, vertices[v].pos)});
  }
  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t edge_count() const { return edges.size(); }
};

struct TreeDiagnosis {
  enum class Kind { ok, cycle, disconnected } kind = Kind::ok;
  std::vector<NetEdge> cycle_edges;  // one offending cycle when kind==cycle
  int components = 1;
};

class TreeValidationError : public std::runtime_error {
 public:
  TreeValidationError(std::string msg, TreeDiagnosis d)
      : std::runtime_error(std::move(msg)), diagnosis(std::move(d)) {}
  TreeDiagnosis diagnosis;
};

// Non-throwing structural check.
TreeDiagnosis diagnose_tree(const Network& net);

// Rooted, query-accelerated form of a validated tree. Route queries are
// answered with an Euler tour plus block-decomposed range minima, so a
// single lookup costs O(1) with O(V) tables.
class TreeNetwork {
 public:
  TreeNetwork() = default;

  const Network& graph() const { return net_; }
  std::size_t vertex_count() const { return net_.vertices.size(); }
  std::size_t edge_count() const { return net_.edges.size(); }
  const std::vector<int>& terminals() const { return terminals_; }
  bool is_terminal(int v) const {
    return net_.vertices[std::size_t(v)].kind == VertexKind::terminal;
  }
  const Vec2& position(int v) const { return net_.vertices[std::size_t(v)].pos; }

  int root() const { return root_; }
  int parent(int v) const { return parent_[std::size_t(v)]; }
  double parent_edge_length(int v) const { return up_len_[std::size_t(v)]; }
  double depth_length(int v) const { return depth_len_[std::size_t(v)]; }
  int depth_hops(int v) const { return depth_hops_[std::size_t(v)]; }

  int lca(int u, int v) const;
  double route_length(int u, int v) const;
  int route_hops(int u, int v) const;
  // True when w lies on the tree path from u to v (hop arithmetic, exact).
  bool on_path(int w, int u, int v) const {
    return route_hops(u, w) + route_hops(w, v) == route_hops(u, v);
  }

  // Neighbours of v in a fixed order.
  const std::vector<int>& adjacency_offsets() const { return adj_start_; }
  const std::vector<int>& adjacency() const { return adj_; }
  const std::vector<double>& adjacency_lengths() const { return adj_len_; }
  template <class F>
  void for_each_neighbor(int v, F&& f) const {
    for (int k = adj_start_[std::size_t(v)]; k < adj_start_[std::size_t(v) + 1];
         ++k)
      f(adj_[std::size_t(k)], adj_len_[std::size_t(k)]);
  }

 private:
  friend TreeNetwork validate_tree(Network net);
  void build_from(Network net);
  void check_ids(int u, int v) const {
    if (u < 0 || v < 0 || std::size_t(u) >= vertex_count() ||
        std::size_t(v) >= vertex_count())
      throw std::out_of_range("TreeNetwork: vertex id out of range");
  }
  int euler_argmin(int lo, int hi) const;  // inclusive range -> euler pos

  Network net_;
  std::vector<int> terminals_;
  int root_ = 0;
  std::vector<int> parent_;
  std::vector<double> up_len_;
  std::vector<double> depth_len_;
  std::vector<int> depth_hops_;
  std::vector<int> adj_start_, adj_;
  std::vector<double> adj_len_;
  // Euler tour arrays and two-level range-minimum tables.
  std::vector<int> euler_vertex_;
  std::vector<int> euler_depth_;
  std::vector<int> first_visit_;
  int block_ = 1;
  std::vector<int> block_min_pos_;           // per block, euler pos of min
  std::vector<std::vector<int>> sparse_;     // over blocks
};

// Checks that net is a single connected acyclic component and returns the
// accelerated form; throws TreeValidationError otherwise. Steiner leaves
// are rejected because they cannot carry routes.
TreeNetwork validate_tree(Network net);

struct SpannedSubtree {
  TreeNetwork tree;
  std::vector<int> source_vertex;  // new id -> id in the source tree
  std::vector<int> image;          // source id -> new id, -1 if dropped
};

// Minimal subtree spanning the given terminals. Degree-2 chains between
// them are kept verbatim (their lengths carry the metric); every vertex
// outside the generating set is re-labelled Steiner.
SpannedSubtree spanned_subtree(const TreeNetwork& t,
                               const std::vector<int>& terminals);

// Terminal-weighted centroid: vertex minimizing the largest terminal
// count among the branches hanging off it; ties go to the smaller id.
int centroid(const TreeNetwork& t);

class BipartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bipartition {
  int v_star = -1;
  std::vector<int> side_b;        // terminal ids
  std::vector<int> side_bc;       // complement terminal ids
  std::vector<std::vector<int>> branches;  // terminal ids per branch at v_star
  std::vector<char> branch_in_b;  // which branches were merged into B
  std::size_t n_terminals = 0;
};

// Splits the terminals at v_star into whole branches so that
// N/3 <= |B| <= N/2. Terminals sitting at v_star itself always fall on
// the complement side. Greedy descending merge with an exhaustive
// fallback for up to 20 branches; throws BipartitionError if no split
// exists (which the centroid property should rule out).
Bipartition bipartition(const TreeNetwork& t, int v_star);

// Edge list CSV (u,v,length) and vertex CSV (id,x,y,kind).
void write_network_edges_csv(const Network& net, std::ostream& out);
void write_network_vertices_csv(const Network& net, std::ostream& out);

}  // namespace treenet
