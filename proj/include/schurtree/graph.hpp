#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "schurtree/dense_laplacian.hpp"
#include "schurtree/error.hpp"

namespace schurtree {

// Original edges use their 0-based input position; edges created by
// elimination or sparsification live in the upper half of the range.
struct EdgeId {
  static constexpr std::uint64_t kSchurBit = std::uint64_t{1} << 63;

  std::uint64_t value = 0;

  constexpr bool is_original() const noexcept { return value < kSchurBit; }

  friend constexpr auto operator<=>(EdgeId, EdgeId) = default;
};

struct Edge {
  EdgeId id;
  Vertex u = 0;
  Vertex v = 0;
  double weight = 0.0;

  bool is_original() const noexcept { return id.is_original(); }
  Vertex other(Vertex x) const noexcept { return x == u ? v : u; }
};

struct InputEdge {
  std::uint64_t u = 0;
  std::uint64_t v = 0;
  double weight = 0.0;
};

struct VertexPartition {
  std::vector<Vertex> left;
  std::vector<Vertex> right;
};

// Weighted undirected multigraph with stable edge ids and a contraction map.
//
// Vertices are labelled 0..n0-1 once, at construction. Contracting an edge
// merges the two classes into the smaller label, so every live vertex is the
// minimum original label of its class and `find` maps any original label to
// the live vertex holding it.
class Multigraph {
 public:
  Multigraph() = default;

  explicit Multigraph(std::size_t n) : parent_(n), vertices_(n) {
    std::iota(parent_.begin(), parent_.end(), Vertex{0});
    std::iota(vertices_.begin(), vertices_.end(), Vertex{0});
  }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t original_order() const noexcept { return parent_.size(); }

  std::span<const Vertex> vertices() const noexcept { return vertices_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  bool is_live(Vertex v) const {
    return std::binary_search(vertices_.begin(), vertices_.end(), v);
  }

  Vertex find(Vertex v) const {
    if (v >= parent_.size()) {
      throw Error(ErrorCode::invalid_argument, "vertex " + std::to_string(v) + " out of range");
    }
    Vertex root = v;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[v] != root) {
      const Vertex next = parent_[v];
      parent_[v] = root;
      v = next;
    }
    return root;
  }

  bool has_edge(EdgeId id) const { return locate(id) != edges_.end(); }

  const Edge& edge(EdgeId id) const {
    auto it = locate(id);
    if (it == edges_.end()) {
      throw Error(ErrorCode::unknown_edge, "edge " + describe(id) + " not present");
    }
    return *it;
  }

  // Appends an original edge with a caller-chosen id (ids must arrive in
  // increasing order).
  void add_original_edge(EdgeId id, Vertex u, Vertex v, double w) {
    if (!id.is_original()) {
      throw Error(ErrorCode::invalid_argument, "original edge id out of range");
    }
    insert_edge(Edge{id, find(u), find(v), w});
  }

  // Adds an elimination-created edge and returns its fresh id.
  EdgeId add_edge(Vertex u, Vertex v, double w) {
    const EdgeId id{EdgeId::kSchurBit | next_schur_++};
    insert_edge(Edge{id, find(u), find(v), w});
    return id;
  }

  // Re-inserts an edge keeping its id (used when copying between graphs that
  // share a vertex labelling).
  void insert_edge(const Edge& e) {
    check_weight(e.weight);
    if (e.u == e.v) {
      throw Error(ErrorCode::self_loop_input, "self-loop at vertex " + std::to_string(e.u));
    }
    if (!is_live(e.u) || !is_live(e.v)) {
      throw Error(ErrorCode::invalid_argument, "edge endpoint is not a live vertex");
    }
    if (!e.id.is_original()) {
      next_schur_ = std::max(next_schur_, (e.id.value & ~EdgeId::kSchurBit) + 1);
    }
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e.id,
                               [](const Edge& a, EdgeId b) { return a.id < b; });
    if (it != edges_.end() && it->id == e.id) {
      throw Error(ErrorCode::invalid_argument, "duplicate edge id " + describe(e.id));
    }
    edges_.insert(it, e);
  }

  void remove_edge(EdgeId id) {
    auto it = locate(id);
    if (it == edges_.end()) {
      throw Error(ErrorCode::unknown_edge, "edge " + describe(id) + " not present");
    }
    edges_.erase(it);
  }

  template <class Pred>
  std::size_t remove_edges_if(Pred pred) {
    return static_cast<std::size_t>(std::erase_if(edges_, pred));
  }

  // Merges the endpoints of `id`; edges that become self-loops disappear.
  // Returns the surviving vertex.
  Vertex contract(EdgeId id) {
    const Edge& e = edge(id);
    return merge(e.u, e.v);
  }

  Vertex merge(Vertex a, Vertex b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    const Vertex keep = std::min(a, b);
    const Vertex gone = std::max(a, b);
    parent_[gone] = keep;
    vertices_.erase(std::lower_bound(vertices_.begin(), vertices_.end(), gone));
    std::erase_if(edges_, [&](Edge& e) {
      if (e.u == gone) e.u = keep;
      if (e.v == gone) e.v = keep;
      return e.u == e.v;
    });
    return keep;
  }

  // Induced subgraph on the live vertices in `keep`; the contraction map
  // and id counter carry over, other vertices are dropped from the live set.
  Multigraph restricted_to(std::span<const Vertex> keep) const {
    Multigraph out;
    out.parent_ = parent_;
    out.next_schur_ = next_schur_;
    out.labels_ = labels_;
    out.vertices_.reserve(keep.size());
    for (Vertex v : keep) out.vertices_.push_back(find(v));
    std::sort(out.vertices_.begin(), out.vertices_.end());
    out.vertices_.erase(std::unique(out.vertices_.begin(), out.vertices_.end()),
                        out.vertices_.end());
    for (const Edge& e : edges_) {
      if (out.is_live(e.u) && out.is_live(e.v)) out.edges_.push_back(e);
    }
    return out;
  }

  // Same vertices and contraction map, no edges.
  Multigraph empty_copy() const {
    Multigraph out;
    out.parent_ = parent_;
    out.vertices_ = vertices_;
    out.next_schur_ = next_schur_;
    out.labels_ = labels_;
    return out;
  }

  double total_weight_between(Vertex a, Vertex b) const {
    a = find(a);
    b = find(b);
    double total = 0.0;
    for (const Edge& e : edges_) {
      if ((e.u == a && e.v == b) || (e.u == b && e.v == a)) total += e.weight;
    }
    return total;
  }

  std::uint64_t next_schur_counter() const noexcept { return next_schur_; }
  void reserve_schur_ids(std::uint64_t counter) { next_schur_ = std::max(next_schur_, counter); }

  // Input label of a compacted vertex (identity if the graph was not built
  // from an edge list).
  std::uint64_t label(Vertex v) const {
    return labels_ ? (*labels_)[v] : static_cast<std::uint64_t>(v);
  }
  void set_labels(std::shared_ptr<const std::vector<std::uint64_t>> labels) {
    labels_ = std::move(labels);
  }
  const std::shared_ptr<const std::vector<std::uint64_t>>& labels() const { return labels_; }

  static std::string describe(EdgeId id) {
    return id.is_original() ? std::to_string(id.value)
                            : "s" + std::to_string(id.value & ~EdgeId::kSchurBit);
  }

 private:
  static void check_weight(double w) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::non_positive_weight, "edge weight must be positive and finite");
    }
  }

  std::vector<Edge>::const_iterator locate(EdgeId id) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), id,
                               [](const Edge& a, EdgeId b) { return a.id < b; });
    return (it != edges_.end() && it->id == id) ? it : edges_.end();
  }

  mutable std::vector<Vertex> parent_;
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::uint64_t next_schur_ = 0;
  std::shared_ptr<const std::vector<std::uint64_t>> labels_;
};

// Builds a graph from (u, v, w) triples. Vertex labels are compacted to
// 0..n-1 in order of first appearance; edge i gets id i.
inline Multigraph build_graph(std::span<const InputEdge> input) {
  if (input.empty()) throw Error(ErrorCode::empty_input, "edge list is empty");
  std::unordered_map<std::uint64_t, Vertex> index;
  auto labels = std::make_shared<std::vector<std::uint64_t>>();
  auto compact = [&](std::uint64_t x) {
    auto [it, inserted] = index.try_emplace(x, static_cast<Vertex>(labels->size()));
    if (inserted) labels->push_back(x);
    return it->second;
  };
  std::vector<std::tuple<Vertex, Vertex, double>> mapped;
  mapped.reserve(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const InputEdge& e = input[i];
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::non_positive_weight,
                  "edge " + std::to_string(i) + " has non-positive weight");
    }
    if (e.u == e.v) {
      throw Error(ErrorCode::self_loop_input, "edge " + std::to_string(i) + " is a self-loop");
    }
    const Vertex a = compact(e.u);
    const Vertex b = compact(e.v);
    mapped.emplace_back(a, b, e.weight);
  }
  if (labels->size() > std::numeric_limits<Vertex>::max()) {
    throw Error(ErrorCode::too_large, "too many vertices");
  }
  Multigraph g(labels->size());
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    auto [a, b, w] = mapped[i];
    g.add_original_edge(EdgeId{i}, a, b, w);
  }
  g.set_labels(std::move(labels));
  return g;
}

inline Multigraph build_graph(std::initializer_list<InputEdge> input) {
  return build_graph(std::span<const InputEdge>(input.begin(), input.size()));
}

inline Multigraph contract_edge(Multigraph g, EdgeId e) {
  g.contract(e);
  return g;
}

inline Multigraph delete_edges(Multigraph g, std::span<const EdgeId> es) {
  for (EdgeId id : es) {
    if (!g.has_edge(id)) {
      throw Error(ErrorCode::unknown_edge, "edge " + Multigraph::describe(id) + " not present");
    }
  }
  for (EdgeId id : es) g.remove_edge(id);
  return g;
}

inline DenseLaplacian laplacian_of(const Multigraph& g) {
  DenseLaplacian lap;
  lap.vertices.assign(g.vertices().begin(), g.vertices().end());
  const auto n = static_cast<Eigen::Index>(lap.vertices.size());
  lap.matrix = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : g.edges()) {
    const auto i = static_cast<Eigen::Index>(lap.index_of(e.u));
    const auto j = static_cast<Eigen::Index>(lap.index_of(e.v));
    lap.matrix(i, i) += e.weight;
    lap.matrix(j, j) += e.weight;
    lap.matrix(i, j) -= e.weight;
    lap.matrix(j, i) -= e.weight;
  }
  return lap;
}

inline VertexPartition split_vertices(std::span<const Vertex> vertices) {
  if (vertices.size() < 2) {
    throw Error(ErrorCode::too_few_vertices, "cannot split fewer than two vertices");
  }
  const std::size_t half = (vertices.size() + 1) / 2;
  return {{vertices.begin(), vertices.begin() + static_cast<std::ptrdiff_t>(half)},
          {vertices.begin() + static_cast<std::ptrdiff_t>(half), vertices.end()}};
}

inline VertexPartition split_vertices(const Multigraph& g) { return split_vertices(g.vertices()); }

// Connected components of the live vertices; component[i] belongs to
// vertices()[i].
inline std::vector<std::size_t> component_labels(const Multigraph& g, std::size_t* count = nullptr) {
  const auto verts = g.vertices();
  std::vector<std::size_t> parent(verts.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto pos = [&](Vertex v) {
    return static_cast<std::size_t>(std::lower_bound(verts.begin(), verts.end(), v) - verts.begin());
  };
  for (const Edge& e : g.edges()) {
    const std::size_t a = root(pos(e.u));
    const std::size_t b = root(pos(e.v));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> label(verts.size());
  std::unordered_map<std::size_t, std::size_t> ids;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    auto [it, _] = ids.try_emplace(root(i), ids.size());
    label[i] = it->second;
  }
  if (count) *count = ids.size();
  return label;
}

inline bool is_connected(const Multigraph& g) {
  std::size_t count = 0;
  component_labels(g, &count);
  return count <= 1;
}

inline void require_connected(const Multigraph& g) {
  if (g.num_vertices() == 0 || !is_connected(g)) {
    throw Error(ErrorCode::disconnected, "graph is not connected");
  }
}

// True iff `tree` is a spanning tree of the original vertex set of `g`
// using only edges present in `g`.
inline bool is_spanning_tree(const Multigraph& g, std::span<const EdgeId> tree) {
  if (tree.size() + 1 != g.num_vertices()) return false;
  Multigraph scratch = g.empty_copy();
  for (EdgeId id : tree) {
    if (!g.has_edge(id)) return false;
    const Edge& e = g.edge(id);
    if (scratch.find(e.u) == scratch.find(e.v)) return false;
    scratch.merge(e.u, e.v);
  }
  return scratch.num_vertices() == 1;
}

}  // namespace schurtree
