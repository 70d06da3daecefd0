#include "treenet/network.hpp"

#include <algorithm>
#include <cmath>

#include "treenet/io.hpp"

namespace treenet {

namespace {

struct Csr {
  std::vector<int> start, to, edge_id;
};

Csr build_csr(const Network& net) {
  Csr csr;
  const std::size_t n = net.vertices.size();
  csr.start.assign(n + 1, 0);
  for (const auto& e : net.edges) {
    ++csr.start[std::size_t(e.u) + 1];
    ++csr.start[std::size_t(e.v) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) csr.start[i + 1] += csr.start[i];
  csr.to.resize(net.edges.size() * 2);
  csr.edge_id.resize(net.edges.size() * 2);
  std::vector<int> cursor(csr.start.begin(), csr.start.end() - 1);
  for (std::size_t ei = 0; ei < net.edges.size(); ++ei) {
    const auto& e = net.edges[ei];
    csr.to[std::size_t(cursor[std::size_t(e.u)])] = e.v;
    csr.edge_id[std::size_t(cursor[std::size_t(e.u)]++)] = int(ei);
    csr.to[std::size_t(cursor[std::size_t(e.v)])] = e.u;
    csr.edge_id[std::size_t(cursor[std::size_t(e.v)]++)] = int(ei);
  }
  return csr;
}

}  // namespace

TreeDiagnosis diagnose_tree(const Network& net) {
  TreeDiagnosis d;
  const std::size_t n = net.vertices.size();
  if (n == 0) {
    d.kind = TreeDiagnosis::Kind::disconnected;
    d.components = 0;
    return d;
  }
  for (const auto& e : net.edges) {
    if (e.u < 0 || e.v < 0 || std::size_t(e.u) >= n || std::size_t(e.v) >= n)
      throw std::out_of_range("diagnose_tree: edge endpoint out of range");
    if (e.u == e.v) {
      d.kind = TreeDiagnosis::Kind::cycle;
      d.cycle_edges = {e};
      return d;
    }
  }
  const Csr csr = build_csr(net);
  // BFS forest; a visited neighbour reached by a different edge than the
  // one we came through closes a cycle.
  std::vector<int> parent(n, -2), parent_edge(n, -1);
  int components = 0;
  std::vector<int> queue;
  for (std::size_t s = 0; s < n; ++s) {
    if (parent[s] != -2) continue;
    ++components;
    parent[s] = -1;
    queue.assign(1, int(s));
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int v = queue[qi];
      for (int k = csr.start[std::size_t(v)]; k < csr.start[std::size_t(v) + 1];
           ++k) {
        const int w = csr.to[std::size_t(k)];
        const int ei = csr.edge_id[std::size_t(k)];
        if (ei == parent_edge[std::size_t(v)]) continue;
        if (parent[std::size_t(w)] != -2) {
          // Reconstruct the cycle: walk both endpoints up to their meeting
          // point inside the BFS tree.
          d.kind = TreeDiagnosis::Kind::cycle;
          std::vector<int> path_v, path_w;
          for (int a = v; a != -1; a = parent[std::size_t(a)]) path_v.push_back(a);
          for (int a = w; a != -1; a = parent[std::size_t(a)]) path_w.push_back(a);
          std::vector<char> on_v(n, 0);
          for (int a : path_v) on_v[std::size_t(a)] = 1;
          int meet = -1;
          for (int a : path_w)
            if (on_v[std::size_t(a)]) {
              meet = a;
              break;
            }
          d.cycle_edges.push_back(net.edges[std::size_t(ei)]);
          for (int a = v; a != meet; a = parent[std::size_t(a)])
            d.cycle_edges.push_back(net.edges[std::size_t(parent_edge[std::size_t(a)])]);
          for (int a = w; a != meet; a = parent[std::size_t(a)])
            d.cycle_edges.push_back(net.edges[std::size_t(parent_edge[std::size_t(a)])]);
          return d;
        }
        parent[std::size_t(w)] = v;
        parent_edge[std::size_t(w)] = ei;
        queue.push_back(w);
      }
    }
  }
  if (components > 1) {
    d.kind = TreeDiagnosis::Kind::disconnected;
    d.components = components;
    return d;
  }
  d.kind = TreeDiagnosis::Kind::ok;
  return d;
}

void TreeNetwork::build_from(Network net) {
  net_ = std::move(net);
  const std::size_t n = net_.vertices.size();
  terminals_.clear();
  for (std::size_t v = 0; v < n; ++v)
    if (net_.vertices[v].kind == VertexKind::terminal) terminals_.push_back(int(v));

  const Csr csr = build_csr(net_);
  adj_start_ = csr.start;
  adj_.resize(csr.to.size());
  adj_len_.resize(csr.to.size());
  for (std::size_t k = 0; k < csr.to.size(); ++k) {
    adj_[k] = csr.to[k];
    adj_len_[k] = net_.edges[std::size_t(csr.edge_id[k])].length;
  }

  root_ = 0;
  parent_.assign(n, -1);
  up_len_.assign(n, 0.0);
  depth_len_.assign(n, 0.0);
  depth_hops_.assign(n, 0);
  first_visit_.assign(n, -1);
  euler_vertex_.clear();
  euler_depth_.clear();
  euler_vertex_.reserve(2 * n);
  euler_depth_.reserve(2 * n);

  // Iterative DFS emitting the Euler tour. Each frame remembers how far
  // through its adjacency list it has advanced.
  struct Frame {
    int v;
    int cursor;
  };
  std::vector<Frame> stack;
  stack.push_back({root_, adj_start_[std::size_t(root_)]});
  first_visit_[std::size_t(root_)] = 0;
  euler_vertex_.push_back(root_);
  euler_depth_.push_back(0);
  while (!stack.empty()) {
    Frame& f = stack.back();
    bool descended = false;
    while (f.cursor < adj_start_[std::size_t(f.v) + 1]) {
      const int k = f.cursor++;
      const int w = adj_[std::size_t(k)];
      if (w == parent_[std::size_t(f.v)]) continue;
      parent_[std::size_t(w)] = f.v;
      up_len_[std::size_t(w)] = adj_len_[std::size_t(k)];
      depth_len_[std::size_t(w)] = depth_len_[std::size_t(f.v)] + adj_len_[std::size_t(k)];
      depth_hops_[std::size_t(w)] = depth_hops_[std::size_t(f.v)] + 1;
      first_visit_[std::size_t(w)] = int(euler_vertex_.size());
      euler_vertex_.push_back(w);
      euler_depth_.push_back(depth_hops_[std::size_t(w)]);
      stack.push_back({w, adj_start_[std::size_t(w)]});
      descended = true;
      break;
    }
    if (!descended) {
      stack.pop_back();
      if (!stack.empty()) {
        euler_vertex_.push_back(stack.back().v);
        euler_depth_.push_back(depth_hops_[std::size_t(stack.back().v)]);
      }
    }
  }

  // Two-level range minimum: per-block argmin plus a sparse table over
  // block minima. In-block scans are short sequential loops.
  const int m = int(euler_depth_.size());
  block_ = 32;
  const int nblocks = (m + block_ - 1) / block_;
  block_min_pos_.assign(std::size_t(nblocks), 0);
  for (int b = 0; b < nblocks; ++b) {
    const int lo = b * block_;
    const int hi = std::min(m, lo + block_);
    int best = lo;
    for (int i = lo + 1; i < hi; ++i)
      if (euler_depth_[std::size_t(i)] < euler_depth_[std::size_t(best)]) best = i;
    block_min_pos_[std::size_t(b)] = best;
  }
  int levels = 1;
  while ((1 << levels) <= nblocks) ++levels;
  sparse_.assign(std::size_t(levels), {});
  sparse_[0] = block_min_pos_;
  for (int l = 1; l < levels; ++l) {
    const int span = 1 << l;
    const int count = nblocks - span + 1;
    if (count <= 0) break;
    sparse_[std::size_t(l)].resize(std::size_t(count));
    for (int b = 0; b < count; ++b) {
      const int left = sparse_[std::size_t(l - 1)][std::size_t(b)];
      const int right = sparse_[std::size_t(l - 1)][std::size_t(b + span / 2)];
      sparse_[std::size_t(l)][std::size_t(b)] =
          euler_depth_[std::size_t(left)] <= euler_depth_[std::size_t(right)] ? left
                                                                             : right;
    }
  }
}

int TreeNetwork::euler_argmin(int lo, int hi) const {
  const int bl = lo / block_, bh = hi / block_;
  int best = lo;
  if (bl == bh) {
    for (int i = lo + 1; i <= hi; ++i)
      if (euler_depth_[std::size_t(i)] < euler_depth_[std::size_t(best)]) best = i;
    return best;
  }
  for (int i = lo; i < (bl + 1) * block_; ++i)
    if (euler_depth_[std::size_t(i)] < euler_depth_[std::size_t(best)]) best = i;
  for (int i = bh * block_; i <= hi; ++i)
    if (euler_depth_[std::size_t(i)] < euler_depth_[std::size_t(best)]) best = i;
  if (bl + 1 <= bh - 1) {
    const int lo_b = bl + 1, hi_b = bh - 1;
    int level = 0;
    while ((2 << level) <= hi_b - lo_b + 1) ++level;
    const int left = sparse_[std::size_t(level)][std::size_t(lo_b)];
    const int right =
        sparse_[std::size_t(level)][std::size_t(hi_b - (1 << level) + 1)];
    const int mid =
        euler_depth_[std::size_t(left)] <= euler_depth_[std::size_t(right)] ? left
                                                                            : right;
    if (euler_depth_[std::size_t(mid)] < euler_depth_[std::size_t(best)]) best = mid;
  }
  return best;
}

int TreeNetwork::lca(int u, int v) const {
  check_ids(u, v);
  if (u == v) return u;
  int a = first_visit_[std::size_t(u)], b = first_visit_[std::size_t(v)];
  if (a > b) std::swap(a, b);
  return euler_vertex_[std::size_t(euler_argmin(a, b))];
}

double TreeNetwork::route_length(int u, int v) const {
  check_ids(u, v);
  if (u == v) return 0.0;
  const int l = lca(u, v);
  return depth_len_[std::size_t(u)] + depth_len_[std::size_t(v)] -
         2.0 * depth_len_[std::size_t(l)];
}

int TreeNetwork::route_hops(int u, int v) const {
  check_ids(u, v);
  if (u == v) return 0;
  const int l = lca(u, v);
  return depth_hops_[std::size_t(u)] + depth_hops_[std::size_t(v)] -
         2 * depth_hops_[std::size_t(l)];
}

TreeNetwork validate_tree(Network net) {
  const std::size_t n = net.vertices.size();
  if (n == 0)
    throw TreeValidationError("validate_tree: empty vertex set",
                              {TreeDiagnosis::Kind::disconnected, {}, 0});
  TreeDiagnosis d = diagnose_tree(net);
  if (d.kind == TreeDiagnosis::Kind::cycle)
    throw TreeValidationError("validate_tree: cycle found", std::move(d));
  if (d.kind == TreeDiagnosis::Kind::disconnected)
    throw TreeValidationError("validate_tree: disconnected", std::move(d));
  // Edge lengths must match the embedding.
  for (const auto& e : net.edges) {
    const double expect = dist(net.vertices[std::size_t(e.u)].pos,
                               net.vertices[std::size_t(e.v)].pos);
    const double tol = 1e-9 * std::max(1.0, expect);
    if (std::abs(e.length - expect) > tol)
      throw TreeValidationError(
          "validate_tree: edge length disagrees with endpoint distance",
          {TreeDiagnosis::Kind::ok, {e}, 1});
  }
  // A Steiner leaf serves no route and indicates an unpruned artifact.
  if (n >= 2) {
    std::vector<int> degree(n, 0);
    for (const auto& e : net.edges) {
      ++degree[std::size_t(e.u)];
      ++degree[std::size_t(e.v)];
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (degree[v] == 1 && net.vertices[v].kind == VertexKind::steiner)
        throw TreeValidationError("validate_tree: Steiner leaf " +
                                      std::to_string(v),
                                  {TreeDiagnosis::Kind::ok, {}, 1});
    }
  }
  TreeNetwork t;
  t.build_from(std::move(net));
  return t;
}

SpannedSubtree spanned_subtree(const TreeNetwork& t,
                               const std::vector<int>& terminals) {
  const std::size_t n = t.vertex_count();
  if (terminals.empty())
    throw std::invalid_argument("spanned_subtree: empty generating set");
  std::vector<char> is_gen(n, 0);
  for (int v : terminals) {
    if (v < 0 || std::size_t(v) >= n)
      throw std::out_of_range("spanned_subtree: terminal id out of range");
    is_gen[std::size_t(v)] = 1;
  }
  // BFS rooted at one generator; a vertex is kept iff its subtree holds a
  // generator, because every generator's path to the root is then kept.
  const int root = terminals.front();
  std::vector<int> order, parent(n, -1);
  std::vector<double> plen(n, 0.0);
  order.reserve(n);
  std::vector<char> seen(n, 0);
  seen[std::size_t(root)] = 1;
  order.push_back(root);
  for (std::size_t qi = 0; qi < order.size(); ++qi) {
    const int v = order[qi];
    t.for_each_neighbor(v, [&](int w, double len) {
      if (!seen[std::size_t(w)]) {
        seen[std::size_t(w)] = 1;
        parent[std::size_t(w)] = v;
        plen[std::size_t(w)] = len;
        order.push_back(w);
      }
    });
  }
  std::vector<std::uint32_t> cnt(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    if (is_gen[v]) cnt[v] = 1;
  for (std::size_t i = order.size(); i-- > 1;) {
    const int v = order[i];
    cnt[std::size_t(parent[std::size_t(v)])] += cnt[std::size_t(v)];
  }
  std::vector<char> keep(n, 0);
  for (std::size_t v = 0; v < n; ++v) keep[v] = cnt[v] > 0;

  SpannedSubtree out;
  out.image.assign(n, -1);
  Network sub;
  for (int v : order) {
    if (!keep[std::size_t(v)]) continue;
    const int nid = sub.add_vertex(
        t.position(v), is_gen[std::size_t(v)] ? VertexKind::terminal
                                              : VertexKind::steiner);
    out.image[std::size_t(v)] = nid;
    out.source_vertex.push_back(v);
  }
  for (int v : order) {
    if (!keep[std::size_t(v)]) continue;
    const int p = parent[std::size_t(v)];
    if (p < 0 || !keep[std::size_t(p)]) continue;
    sub.edges.push_back({out.image[std::size_t(p)], out.image[std::size_t(v)],
                         plen[std::size_t(v)]});
  }
  out.tree = validate_tree(std::move(sub));
  return out;
}

namespace {

struct RootedCounts {
  std::vector<int> order, parent;
  std::vector<std::uint32_t> sub_terminals;
  std::uint32_t total = 0;
};

RootedCounts rooted_terminal_counts(const TreeNetwork& t) {
  const std::size_t n = t.vertex_count();
  RootedCounts rc;
  rc.parent.assign(n, -1);
  rc.order.reserve(n);
  std::vector<char> seen(n, 0);
  seen[0] = 1;
  rc.order.push_back(0);
  for (std::size_t qi = 0; qi < rc.order.size(); ++qi) {
    const int v = rc.order[qi];
    t.for_each_neighbor(v, [&](int w, double) {
      if (!seen[std::size_t(w)]) {
        seen[std::size_t(w)] = 1;
        rc.parent[std::size_t(w)] = v;
        rc.order.push_back(w);
      }
    });
  }
  rc.sub_terminals.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    if (t.is_terminal(int(v))) rc.sub_terminals[v] = 1;
  for (std::size_t i = rc.order.size(); i-- > 1;) {
    const int v = rc.order[i];
    rc.sub_terminals[std::size_t(rc.parent[std::size_t(v)])] +=
        rc.sub_terminals[std::size_t(v)];
  }
  rc.total = rc.sub_terminals[0];
  return rc;
}

}  // namespace

int centroid(const TreeNetwork& t) {
  const std::size_t n = t.vertex_count();
  if (n == 0) throw std::invalid_argument("centroid: empty tree");
  const RootedCounts rc = rooted_terminal_counts(t);
  if (rc.total == 0) throw std::invalid_argument("centroid: no terminals");
  int best = -1;
  std::uint32_t best_load = 0;
  for (std::size_t v = 0; v < n; ++v) {
    // Heaviest branch hanging off v: children subtrees or the rest of the
    // tree through the parent.
    std::uint32_t load = rc.total - rc.sub_terminals[v];
    t.for_each_neighbor(int(v), [&](int w, double) {
      if (rc.parent[std::size_t(w)] == int(v)) {
        load = std::max(load, rc.sub_terminals[std::size_t(w)]);
      }
    });
    if (best < 0 || load < best_load) {
      best = int(v);
      best_load = load;
    }
  }
  return best;
}

Bipartition bipartition(const TreeNetwork& t, int v_star) {
  const std::size_t n = t.vertex_count();
  if (v_star < 0 || std::size_t(v_star) >= n)
    throw std::out_of_range("bipartition: v_star out of range");
  Bipartition out;
  out.v_star = v_star;

  // Terminal sets of the branches hanging off v_star, by BFS into each
  // neighbour with v_star removed.
  std::vector<char> seen(n, 0);
  seen[std::size_t(v_star)] = 1;
  std::vector<int> queue;
  t.for_each_neighbor(v_star, [&](int w0, double) {
    if (seen[std::size_t(w0)]) return;
    std::vector<int> members;
    seen[std::size_t(w0)] = 1;
    queue.assign(1, w0);
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int v = queue[qi];
      if (t.is_terminal(v)) members.push_back(v);
      t.for_each_neighbor(v, [&](int w, double) {
        if (!seen[std::size_t(w)]) {
          seen[std::size_t(w)] = 1;
          queue.push_back(w);
        }
      });
    }
    out.branches.push_back(std::move(members));
  });

  std::uint64_t total = 0;
  for (const auto& br : out.branches) total += br.size();
  if (t.is_terminal(v_star)) ++total;
  out.n_terminals = std::size_t(total);
  if (total < 2)
    throw BipartitionError("bipartition: need at least two terminals");

  // Pick whole branches for B, largest first, while staying at or below
  // N/2; the centroid guarantee (every branch <= N/2) makes N/3
  // reachable. An exhaustive scan backs up the greedy pass for small
  // branch counts.
  std::vector<int> idx(out.branches.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (out.branches[std::size_t(a)].size() != out.branches[std::size_t(b)].size())
      return out.branches[std::size_t(a)].size() >
             out.branches[std::size_t(b)].size();
    return a < b;
  });
  out.branch_in_b.assign(out.branches.size(), 0);
  std::uint64_t in_b = 0;
  for (int i : idx) {
    const std::uint64_t s = out.branches[std::size_t(i)].size();
    if (2 * (in_b + s) <= total) {
      out.branch_in_b[std::size_t(i)] = 1;
      in_b += s;
    }
  }
  if (3 * in_b < total && out.branches.size() <= 20) {
    std::uint64_t best_size = 0;
    std::uint32_t best_mask = 0;
    const std::uint32_t limit = 1u << out.branches.size();
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      std::uint64_t s = 0;
      for (std::size_t i = 0; i < out.branches.size(); ++i)
        if (mask & (1u << i)) s += out.branches[i].size();
      if (3 * s >= total && 2 * s <= total && s > best_size) {
        best_size = s;
        best_mask = mask;
      }
    }
    if (best_size > 0) {
      in_b = best_size;
      for (std::size_t i = 0; i < out.branches.size(); ++i)
        out.branch_in_b[i] = (best_mask & (1u << i)) ? 1 : 0;
    }
  }
  if (3 * in_b < total || 2 * in_b > total)
    throw BipartitionError(
        "bipartition: no branch subset reaches [N/3, N/2]; N=" +
        std::to_string(total) + " best=" + std::to_string(in_b));

  for (std::size_t i = 0; i < out.branches.size(); ++i) {
    auto& dst = out.branch_in_b[i] ? out.side_b : out.side_bc;
    dst.insert(dst.end(), out.branches[i].begin(), out.branches[i].end());
  }
  if (t.is_terminal(v_star)) out.side_bc.push_back(v_star);
  std::sort(out.side_b.begin(), out.side_b.end());
  std::sort(out.side_bc.begin(), out.side_bc.end());
  return out;
}

void write_network_edges_csv(const Network& net, std::ostream& out) {
  out << "u,v,length\n";
  for (const auto& e : net.edges)
    out << e.u << ',' << e.v << ',' << fmt_double17(e.length) << '\n';
}

void write_network_vertices_csv(const Network& net, std::ostream& out) {
  out << "id,x,y,kind\n";
  for (std::size_t v = 0; v < net.vertices.size(); ++v) {
    out << v << ',' << fmt_double17(net.vertices[v].pos.x) << ','
        << fmt_double17(net.vertices[v].pos.y) << ','
        << (net.vertices[v].kind == VertexKind::terminal ? "terminal"
                                                         : "steiner")
        << '\n';
  }
}

}  // namespace treenet
