#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include "schurtree/dense_laplacian.hpp"
#include "schurtree/error.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/random.hpp"

namespace schurtree {

namespace detail {

// Components of the sparsity pattern of a Laplacian matrix.
inline std::vector<Eigen::Index> matrix_components(const Eigen::MatrixXd& m, Eigen::Index* count) {
  const Eigen::Index n = m.rows();
  std::vector<Eigen::Index> comp(static_cast<std::size_t>(n), -1);
  Eigen::Index next = 0;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Eigen::Index x = stack.back();
      stack.pop_back();
      for (Eigen::Index y = 0; y < n; ++y) {
        if (y != x && comp[y] < 0 && m(x, y) != 0.0) {
          comp[y] = next;
          stack.push_back(y);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

}  // namespace detail

// Pseudoinverse of a Laplacian realised by grounding one vertex per
// connected component and factorising the remaining block once.
class LaplacianPinv {
 public:
  explicit LaplacianPinv(const Eigen::MatrixXd& lap) : n_(lap.rows()) {
    comp_ = detail::matrix_components(lap, &num_components_);
    std::vector<bool> grounded(static_cast<std::size_t>(n_), false);
    std::vector<bool> seen(static_cast<std::size_t>(num_components_), false);
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (!seen[comp_[i]]) {
        seen[comp_[i]] = true;
        grounded[i] = true;
      }
    }
    reduced_index_.assign(static_cast<std::size_t>(n_), -1);
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (!grounded[i]) {
        reduced_index_[i] = static_cast<Eigen::Index>(kept_.size());
        kept_.push_back(i);
      }
    }
    const auto r = static_cast<Eigen::Index>(kept_.size());
    Eigen::MatrixXd reduced(r, r);
    for (Eigen::Index a = 0; a < r; ++a) {
      for (Eigen::Index b = 0; b < r; ++b) reduced(a, b) = lap(kept_[a], kept_[b]);
    }
    llt_.compute(reduced);
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorCode::disconnected, "grounded Laplacian is not positive definite");
    }
  }

  Eigen::Index order() const { return n_; }
  Eigen::Index num_components() const { return num_components_; }
  bool same_component(Eigen::Index i, Eigen::Index j) const { return comp_[i] == comp_[j]; }

  // x = L^+ b for b summing to zero on each component (column-wise).
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    const auto cols = b.cols();
    Eigen::MatrixXd rhs(static_cast<Eigen::Index>(kept_.size()), cols);
    for (std::size_t a = 0; a < kept_.size(); ++a) rhs.row(static_cast<Eigen::Index>(a)) = b.row(kept_[a]);
    const Eigen::MatrixXd y = llt_.solve(rhs);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_, cols);
    for (std::size_t a = 0; a < kept_.size(); ++a) x.row(kept_[a]) = y.row(static_cast<Eigen::Index>(a));
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(num_components_, cols);
    std::vector<double> cnt(static_cast<std::size_t>(num_components_), 0.0);
    for (Eigen::Index i = 0; i < n_; ++i) {
      sum.row(comp_[i]) += x.row(i);
      cnt[comp_[i]] += 1.0;
    }
    for (Eigen::Index i = 0; i < n_; ++i) x.row(i) -= sum.row(comp_[i]) / cnt[comp_[i]];
    return x;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    return solve(Eigen::MatrixXd(b)).col(0);
  }

  // Effective resistance between matrix indices i and j; infinite across
  // components.
  double resistance(Eigen::Index i, Eigen::Index j) const {
    if (i == j) return 0.0;
    if (!same_component(i, j)) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd& inv = inverse();
    const Eigen::Index a = reduced_index_[i];
    const Eigen::Index b = reduced_index_[j];
    const double aa = a < 0 ? 0.0 : inv(a, a);
    const double bb = b < 0 ? 0.0 : inv(b, b);
    const double ab = (a < 0 || b < 0) ? 0.0 : inv(a, b);
    return aa + bb - 2.0 * ab;
  }

  Eigen::MatrixXd pseudoinverse() const {
    Eigen::MatrixXd out(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      Eigen::VectorXd b = Eigen::VectorXd::Zero(n_);
      b[j] = 1.0;
      // Project onto the range: subtract the component mean.
      double cnt = 0.0;
      for (Eigen::Index i = 0; i < n_; ++i) cnt += comp_[i] == comp_[j] ? 1.0 : 0.0;
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (comp_[i] == comp_[j]) b[i] -= 1.0 / cnt;
      }
      out.col(j) = solve(b);
    }
    return out;
  }

 private:
  const Eigen::MatrixXd& inverse() const {
    if (!inverse_) {
      inverse_ = llt_.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(kept_.size()),
                                                      static_cast<Eigen::Index>(kept_.size())));
    }
    return *inverse_;
  }

  Eigen::Index n_;
  Eigen::Index num_components_ = 0;
  std::vector<Eigen::Index> comp_;
  std::vector<Eigen::Index> kept_;
  std::vector<Eigen::Index> reduced_index_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable std::optional<Eigen::MatrixXd> inverse_;
};

// Resistances and leverage scores of a fixed graph; factorises once.
class ResistanceOracle {
 public:
  explicit ResistanceOracle(const Multigraph& g) : g_(&g), lap_(laplacian_of(g)), pinv_(lap_.matrix) {}

  bool connected() const { return pinv_.num_components() <= 1; }

  double resistance(Vertex u, Vertex v) const {
    u = g_->find(u);
    v = g_->find(v);
    if (u == v) throw Error(ErrorCode::same_vertex, "resistance between a vertex and itself");
    const auto i = static_cast<Eigen::Index>(lap_.index_of(u));
    const auto j = static_cast<Eigen::Index>(lap_.index_of(v));
    return pinv_.resistance(i, j);
  }

  double leverage(const Edge& e) const {
    return std::min(1.0, e.weight * resistance(e.u, e.v));
  }

  double leverage(EdgeId id) const { return leverage(g_->edge(id)); }

  const DenseLaplacian& laplacian() const { return lap_; }
  const LaplacianPinv& pinv() const { return pinv_; }

 private:
  const Multigraph* g_;
  DenseLaplacian lap_;
  LaplacianPinv pinv_;
};

inline double effective_resistance_exact(const Multigraph& g, Vertex u, Vertex v) {
  if (g.find(u) == g.find(v)) {
    throw Error(ErrorCode::same_vertex, "resistance between a vertex and itself");
  }
  require_connected(g);
  return ResistanceOracle(g).resistance(u, v);
}

inline double effective_resistance_exact(const DenseLaplacian& lap, Vertex u, Vertex v) {
  if (u == v) throw Error(ErrorCode::same_vertex, "resistance between a vertex and itself");
  LaplacianPinv pinv(lap.matrix);
  if (pinv.num_components() > 1) throw Error(ErrorCode::disconnected, "Laplacian is not connected");
  return pinv.resistance(static_cast<Eigen::Index>(lap.index_of(u)),
                         static_cast<Eigen::Index>(lap.index_of(v)));
}

inline double leverage_score_exact(const Multigraph& g, EdgeId id) {
  const Edge& e = g.edge(id);
  require_connected(g);
  return ResistanceOracle(g).leverage(e);
}

// Leverage score of every edge, aligned with g.edges().
inline std::vector<double> leverage_scores_exact(const Multigraph& g) {
  require_connected(g);
  ResistanceOracle oracle(g);
  std::vector<double> out;
  out.reserve(g.num_edges());
  for (const Edge& e : g.edges()) out.push_back(oracle.leverage(e));
  return out;
}

// Block elimination: A - B C^{-1} B^T with C the rows/columns outside keep.
inline DenseLaplacian schur_exact(const DenseLaplacian& lap, std::span<const Vertex> keep) {
  std::vector<Vertex> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  if (kept.empty()) throw Error(ErrorCode::empty_keep, "keep set is empty");
  std::vector<Eigen::Index> ki, fi;
  for (std::size_t i = 0; i < lap.vertices.size(); ++i) {
    if (std::binary_search(kept.begin(), kept.end(), lap.vertices[i])) {
      ki.push_back(static_cast<Eigen::Index>(i));
    } else {
      fi.push_back(static_cast<Eigen::Index>(i));
    }
  }
  if (ki.size() != kept.size()) {
    throw Error(ErrorCode::invalid_argument, "keep set contains a vertex outside the support");
  }
  const auto k = static_cast<Eigen::Index>(ki.size());
  const auto f = static_cast<Eigen::Index>(fi.size());
  DenseLaplacian out;
  out.vertices = kept;
  out.matrix = lap.matrix(ki, ki);
  if (f == 0) return out;
  const Eigen::MatrixXd c = lap.matrix(fi, fi);
  const Eigen::MatrixXd b = lap.matrix(ki, fi);
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::singular_block, "eliminated block is singular");
  }
  // Guard against components of F with no boundary: LLT of a singular PSD
  // block can succeed with a tiny pivot.
  Eigen::Index comps = 0;
  const auto comp = detail::matrix_components(c, &comps);
  std::vector<bool> has_boundary(static_cast<std::size_t>(comps), false);
  for (Eigen::Index j = 0; j < f; ++j) {
    if (b.col(j).cwiseAbs().maxCoeff() > 0.0 || k == 0) has_boundary[comp[j]] = true;
  }
  if (std::find(has_boundary.begin(), has_boundary.end(), false) != has_boundary.end()) {
    throw Error(ErrorCode::singular_block, "an eliminated component has no kept neighbour");
  }
  out.matrix -= b * llt.solve(b.transpose());
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  return out;
}

inline DenseLaplacian schur_exact(const Multigraph& g, std::span<const Vertex> keep) {
  std::vector<Vertex> kept;
  kept.reserve(keep.size());
  for (Vertex v : keep) kept.push_back(g.find(v));
  return schur_exact(laplacian_of(g), kept);
}

// One pivot at a time, in the given order (rank-one updates).
inline DenseLaplacian eliminate_in_order(const DenseLaplacian& lap, std::span<const Vertex> order) {
  Eigen::MatrixXd m = lap.matrix;
  std::vector<bool> gone(lap.order(), false);
  for (Vertex v : order) {
    const auto p = static_cast<Eigen::Index>(lap.index_of(v));
    const double pivot = m(p, p);
    if (!(pivot > 0.0)) throw Error(ErrorCode::singular_block, "zero pivot during elimination");
    const Eigen::VectorXd col = m.col(p);
    m -= col * col.transpose() / pivot;
    m.row(p).setZero();
    m.col(p).setZero();
    gone[static_cast<std::size_t>(p)] = true;
  }
  DenseLaplacian out;
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < lap.order(); ++i) {
    if (!gone[i]) {
      out.vertices.push_back(lap.vertices[i]);
      idx.push_back(static_cast<Eigen::Index>(i));
    }
  }
  out.matrix = m(idx, idx);
  return out;
}

// Exact Schur complement as a multigraph on `keep`. Edges with both
// endpoints in keep are carried over unchanged (ids and origin preserved);
// the fill produced by eliminating the rest becomes fresh non-original edges,
// one per vertex pair.
inline Multigraph schur_exact_graph(const Multigraph& g, std::span<const Vertex> keep) {
  std::vector<Vertex> kept;
  for (Vertex v : keep) kept.push_back(g.find(v));
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  if (kept.empty()) throw Error(ErrorCode::empty_keep, "keep set is empty");
  Multigraph out = g.restricted_to(kept);
  if (kept.size() == g.num_vertices()) return out;

  Multigraph boundary = g.empty_copy();
  for (const Edge& e : g.edges()) {
    const bool in_u = std::binary_search(kept.begin(), kept.end(), e.u);
    const bool in_v = std::binary_search(kept.begin(), kept.end(), e.v);
    if (!(in_u && in_v)) boundary.insert_edge(e);
  }
  const DenseLaplacian s = schur_exact(laplacian_of(boundary), kept);
  const auto k = static_cast<Eigen::Index>(s.order());
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double w = -s.matrix(i, j);
      if (w > 0.0) out.add_edge(s.vertices[static_cast<std::size_t>(i)],
                                s.vertices[static_cast<std::size_t>(j)], w);
    }
  }
  return out;
}

// Natural log of the weighted spanning tree count (matrix-tree theorem).
inline double log_spanning_tree_count(const Multigraph& g) {
  require_connected(g);
  const DenseLaplacian lap = laplacian_of(g);
  const auto n = static_cast<Eigen::Index>(lap.order());
  if (n == 1) return 0.0;
  const Eigen::MatrixXd minor = lap.matrix.bottomRightCorner(n - 1, n - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(minor);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::disconnected, "singular cofactor");
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  return 2.0 * diag.array().log().sum();
}

inline double spanning_tree_count(const Multigraph& g) {
  return std::exp(log_spanning_tree_count(g));
}

using TreeKey = std::vector<EdgeId>;

namespace detail {

inline void enumerate_rec(Multigraph& g, std::vector<EdgeId>& chosen, double weight,
                          std::map<TreeKey, double>& out) {
  if (g.num_vertices() == 1) {
    TreeKey key = chosen;
    std::sort(key.begin(), key.end());
    out[key] += weight;
    return;
  }
  const Edge e = g.edges().front();
  {
    Multigraph contracted = g;
    contracted.contract(e.id);
    chosen.push_back(e.id);
    enumerate_rec(contracted, chosen, weight * e.weight, out);
    chosen.pop_back();
  }
  Multigraph deleted = g;
  deleted.remove_edge(e.id);
  if (is_connected(deleted)) enumerate_rec(deleted, chosen, weight, out);
}

}  // namespace detail

// Every spanning tree (sorted edge ids) with its weight product.
inline std::map<TreeKey, double> enumerate_trees(const Multigraph& g) {
  if (g.num_vertices() > 10 || g.num_edges() > 20) {
    throw Error(ErrorCode::too_large, "enumeration limited to n <= 10 and m <= 20");
  }
  require_connected(g);
  std::map<TreeKey, double> out;
  Multigraph work = g;
  std::vector<EdgeId> chosen;
  detail::enumerate_rec(work, chosen, 1.0, out);
  return out;
}

struct SpectralBound {
  double lo = 0.0;
  double hi = 0.0;
  bool valid = false;
};

// Extreme generalised eigenvalues of (a, b) on the complement of the
// all-ones vector; valid iff they lie in [e^-eps, e^eps] up to 1e-9.
inline SpectralBound check_spectral_approx(const DenseLaplacian& a, const DenseLaplacian& b, double eps) {
  if (a.vertices != b.vertices) {
    throw Error(ErrorCode::null_space_mismatch, "Laplacians have different supports");
  }
  const auto n = static_cast<Eigen::Index>(a.order());
  if (n < 2) return {1.0, 1.0, true};
  Eigen::Index ca = 0, cb = 0;
  detail::matrix_components(a.matrix, &ca);
  detail::matrix_components(b.matrix, &cb);
  if (ca != 1 || cb != 1) {
    throw Error(ErrorCode::null_space_mismatch, "Laplacians are not both connected");
  }
  Eigen::HouseholderQR<Eigen::VectorXd> qr(Eigen::VectorXd::Ones(n));
  const Eigen::MatrixXd q_full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd q = q_full.rightCols(n - 1);
  Eigen::MatrixXd pa = q.transpose() * a.matrix * q;
  Eigen::MatrixXd pb = q.transpose() * b.matrix * q;
  pa = 0.5 * (pa + pa.transpose()).eval();
  pb = 0.5 * (pb + pb.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(pa, pb, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::null_space_mismatch, "generalised eigenproblem failed");
  }
  SpectralBound out;
  out.lo = solver.eigenvalues().minCoeff();
  out.hi = solver.eigenvalues().maxCoeff();
  out.valid = out.lo >= std::exp(-eps) - 1e-9 && out.hi <= std::exp(eps) + 1e-9;
  return out;
}

inline constexpr std::uint64_t kDefaultWalkBudget = 100'000'000;

// Wilson's loop-erased random walk sampler; returns sorted edge ids.
template <FullRangeRng Rng>
std::vector<EdgeId> wilson_sample(const Multigraph& g, Rng& rng,
                                  std::uint64_t step_budget = kDefaultWalkBudget) {
  require_connected(g);
  const auto verts = g.vertices();
  const std::size_t n = verts.size();
  auto pos = [&](Vertex v) {
    return static_cast<std::size_t>(std::lower_bound(verts.begin(), verts.end(), v) - verts.begin());
  };
  std::vector<std::vector<std::size_t>> adj(n);
  std::vector<std::vector<double>> cum(n);
  const auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    adj[pos(edges[i].u)].push_back(i);
    adj[pos(edges[i].v)].push_back(i);
  }
  for (std::size_t x = 0; x < n; ++x) {
    double total = 0.0;
    for (std::size_t i : adj[x]) cum[x].push_back(total += edges[i].weight);
  }
  std::vector<bool> in_tree(n, false);
  std::vector<std::size_t> next_edge(n, 0);
  in_tree[0] = true;
  std::uint64_t steps = 0;
  std::vector<EdgeId> tree;
  tree.reserve(n - 1);
  for (std::size_t start = 0; start < n; ++start) {
    std::size_t x = start;
    while (!in_tree[x]) {
      if (++steps > step_budget) {
        throw Error(ErrorCode::step_budget_exceeded, "random walk exceeded its step budget");
      }
      const double r = uniform01(rng) * cum[x].back();
      auto it = std::upper_bound(cum[x].begin(), cum[x].end(), r);
      if (it == cum[x].end()) --it;
      const std::size_t ei = adj[x][static_cast<std::size_t>(it - cum[x].begin())];
      next_edge[x] = ei;
      x = pos(edges[ei].other(verts[x]));
    }
    x = start;
    while (!in_tree[x]) {
      in_tree[x] = true;
      const Edge& e = edges[next_edge[x]];
      tree.push_back(e.id);
      x = pos(e.other(verts[x]));
    }
  }
  std::sort(tree.begin(), tree.end());
  return tree;
}

// Solves L x = b for b orthogonal to the all-ones vector; x is returned
// orthogonal to the all-ones vector too. Dense grounded factorisation up to
// 2000 vertices, conjugate gradient beyond.
inline Eigen::VectorXd laplacian_solve(const DenseLaplacian& lap, const Eigen::VectorXd& b,
                                       double tol = 1e-10) {
  const auto n = static_cast<Eigen::Index>(lap.order());
  if (b.size() != n) throw Error(ErrorCode::invalid_argument, "right-hand side has wrong length");
  if (std::abs(b.sum()) > 1e-9 * std::max(1.0, b.cwiseAbs().sum())) {
    throw Error(ErrorCode::not_orthogonal, "right-hand side is not orthogonal to the all-ones vector");
  }
  Eigen::Index comps = 0;
  detail::matrix_components(lap.matrix, &comps);
  if (comps > 1) throw Error(ErrorCode::disconnected, "Laplacian is not connected");
  if (b.isZero(0.0)) return Eigen::VectorXd::Zero(n);
  if (n <= 2000) return LaplacianPinv(lap.matrix).solve(b);

  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 1; j < n; ++j) {
      if (lap.matrix(i, j) != 0.0) trips.emplace_back(i - 1, j - 1, lap.matrix(i, j));
    }
  }
  Eigen::SparseMatrix<double> grounded(n - 1, n - 1);
  grounded.setFromTriplets(trips.begin(), trips.end());
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(20 * n);
  cg.compute(grounded);
  const Eigen::VectorXd y = cg.solve(b.tail(n - 1));
  Eigen::VectorXd x(n);
  x[0] = 0.0;
  x.tail(n - 1) = y;
  x.array() -= x.mean();
  return x;
}

struct NaiveDecision {
  EdgeId edge;
  double r = 0.0;
  double leverage = 0.0;
  bool accepted = false;
};

// Reference sequential sampler: visits original edges in `order`, draws
// r ~ U[0,1) for each one still present, accepts iff r < exact leverage in
// the graph conditioned on earlier decisions.
template <FullRangeRng Rng>
std::vector<NaiveDecision> naive_sequential_sample(const Multigraph& g, std::span<const EdgeId> order,
                                                   Rng& rng) {
  require_connected(g);
  Multigraph work = g;
  std::vector<NaiveDecision> trace;
  for (EdgeId id : order) {
    if (!work.has_edge(id)) continue;
    NaiveDecision d;
    d.edge = id;
    d.r = uniform01(rng);
    d.leverage = leverage_score_exact(work, id);
    d.accepted = d.r < d.leverage;
    if (d.accepted) {
      work.contract(id);
    } else {
      work.remove_edge(id);
    }
    trace.push_back(d);
  }
  return trace;
}

}  // namespace schurtree
