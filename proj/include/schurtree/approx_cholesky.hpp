#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "schurtree/config.hpp"
#include "schurtree/dense_oracle.hpp"
#include "schurtree/error.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/random.hpp"

namespace schurtree {

// Upper estimates of edge leverage scores, aligned with g.edges().
struct LeverageEstimates {
  std::vector<EdgeId> ids;
  std::vector<double> tau_hat;

  double sum() const {
    double s = 0.0;
    for (double t : tau_hat) s += t;
    return s;
  }

  double at(EdgeId id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) {
      throw Error(ErrorCode::unknown_edge, "no estimate for edge " + Multigraph::describe(id));
    }
    return tau_hat[static_cast<std::size_t>(it - ids.begin())];
  }
};

struct WeightedPair {
  Vertex u = 0;
  Vertex v = 0;
  double weight = 0.0;
};

namespace detail {

using PairKey = std::pair<Vertex, Vertex>;

inline PairKey pair_key(Vertex a, Vertex b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }

// Works on disconnected graphs too (resistances are per component).
template <FullRangeRng Rng>
LeverageEstimates estimate_leverage(const Multigraph& g, double delta, Rng& rng, const ApproxConfig& cfg) {
  LeverageEstimates out;
  out.ids.reserve(g.num_edges());
  for (const Edge& e : g.edges()) out.ids.push_back(e.id);
  const std::size_t n = g.num_vertices();
  if (n <= cfg.exact_leverage_max_n) {
    ResistanceOracle oracle(g);
    for (const Edge& e : g.edges()) out.tau_hat.push_back(oracle.leverage(e));
    return out;
  }

  std::map<PairKey, double> merged;
  for (const Edge& e : g.edges()) merged[pair_key(e.u, e.v)] += e.weight;
  const DenseLaplacian lap = laplacian_of(g);
  const LaplacianPinv pinv(lap.matrix);
  const auto k = static_cast<Eigen::Index>(
      std::ceil(cfg.c_jl * std::log(static_cast<double>(n) / delta)));

  std::vector<std::pair<Eigen::Index, Eigen::Index>> idx;
  std::vector<double> sqrt_w;
  for (const auto& [key, w] : merged) {
    idx.emplace_back(static_cast<Eigen::Index>(lap.index_of(key.first)),
                     static_cast<Eigen::Index>(lap.index_of(key.second)));
    sqrt_w.push_back(std::sqrt(w));
  }
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const double q = random_sign(rng) * sqrt_w[p];
      y(idx[p].first, r) += q;
      y(idx[p].second, r) -= q;
    }
  }
  const Eigen::MatrixXd z = pinv.solve(y);
  std::map<PairKey, double> r_hat;
  std::size_t p = 0;
  for (const auto& [key, w] : merged) {
    const double dist = (z.row(idx[p].first) - z.row(idx[p].second)).squaredNorm();
    r_hat[key] = dist / static_cast<double>(k);
    ++p;
  }
  for (const Edge& e : g.edges()) {
    out.tau_hat.push_back(std::min(1.0, 1.5 * e.weight * r_hat[pair_key(e.u, e.v)]));
  }
  return out;
}

// Emits, for each multi-edge e = (v, a) of the star, one sampled partner
// f = (v, b) chosen with probability w_f / W and the edge (a, b) of weight
// w_e w_f / (w_e + w_f) when a != b.
template <FullRangeRng Rng, class Emit>
void sample_clique(std::span<const Vertex> ends, std::span<const double> weights, Rng& rng, Emit&& emit) {
  const std::size_t d = ends.size();
  std::vector<double> cum(d);
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) cum[i] = total += weights[i];
  for (std::size_t i = 0; i < d; ++i) {
    const double r = uniform01(rng) * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    const std::size_t j = it == cum.end() ? d - 1 : static_cast<std::size_t>(it - cum.begin());
    if (ends[i] != ends[j]) {
      emit(ends[i], ends[j], weights[i] * weights[j] / (weights[i] + weights[j]));
    }
  }
}

}  // namespace detail

template <FullRangeRng Rng>
LeverageEstimates lev_score_est(const Multigraph& g, double delta, Rng& rng, const ApproxConfig& cfg = {}) {
  require_connected(g);
  return detail::estimate_leverage(g, delta, rng, cfg);
}

// Number of copies an edge with leverage estimate tau is split into.
inline std::uint64_t split_count(double tau, double eps, double delta, std::size_t n,
                                 double scale = 1.0) {
  const double l = std::log(3.0 * static_cast<double>(n) / delta);
  const double rho = std::ceil(scale * tau * 12.0 * std::pow(eps / 2.0, -2.0) * l * l);
  return rho < 1.0 ? 1 : static_cast<std::uint64_t>(rho);
}

struct SplitMultigraph {
  Multigraph graph;
  std::vector<EdgeId> parent;  // aligned with graph.edges()
};

inline SplitMultigraph split_edges(const Multigraph& g, const LeverageEstimates& tau, double eps,
                                   double delta, const ApproxConfig& cfg = {}) {
  SplitMultigraph out{g.empty_copy(), {}};
  std::uint64_t total = 0;
  for (const Edge& e : g.edges()) {
    const std::uint64_t rho = split_count(tau.at(e.id), eps, delta, g.num_vertices(), cfg.split_scale);
    total += rho;
    if (total > cfg.copy_budget) {
      throw Error(ErrorCode::budget_exceeded, "edge splitting exceeds the copy budget");
    }
    const double piece = e.weight / static_cast<double>(rho);
    for (std::uint64_t c = 0; c < rho; ++c) {
      const double w = c + 1 < rho ? piece : e.weight - piece * static_cast<double>(rho - 1);
      out.graph.add_edge(e.u, e.v, w);
      out.parent.push_back(e.id);
    }
  }
  return out;
}

// Sampled replacement for the elimination clique of v in g.
template <FullRangeRng Rng>
std::vector<WeightedPair> clique_sample(const Multigraph& g, Vertex v, Rng& rng) {
  v = g.find(v);
  std::vector<Vertex> ends;
  std::vector<double> weights;
  for (const Edge& e : g.edges()) {
    if (e.u == v || e.v == v) {
      ends.push_back(e.other(v));
      weights.push_back(e.weight);
    }
  }
  if (ends.empty()) throw Error(ErrorCode::isolated_vertex, "vertex has no incident edges");
  std::vector<WeightedPair> out;
  detail::sample_clique(std::span<const Vertex>(ends), std::span<const double>(weights), rng,
                        [&](Vertex a, Vertex b, double w) { out.push_back({a, b, w}); });
  return out;
}

// Exact elimination clique of v: weight w_a w_b / W for each pair of
// distinct neighbours.
inline std::vector<WeightedPair> clique_exact(const Multigraph& g, Vertex v) {
  v = g.find(v);
  std::map<Vertex, double> nbr;
  double total = 0.0;
  for (const Edge& e : g.edges()) {
    if (e.u == v || e.v == v) {
      nbr[e.other(v)] += e.weight;
      total += e.weight;
    }
  }
  if (nbr.empty()) throw Error(ErrorCode::isolated_vertex, "vertex has no incident edges");
  std::vector<WeightedPair> out;
  for (auto a = nbr.begin(); a != nbr.end(); ++a) {
    for (auto b = std::next(a); b != nbr.end(); ++b) {
      out.push_back({a->first, b->first, a->second * b->second / total});
    }
  }
  return out;
}

// L~ = sum_i alpha_i c_i c_i^T + S~.
struct PartialCholesky {
  std::vector<Vertex> vertices;        // support of the input graph, sorted
  std::vector<Vertex> elim_order;
  std::vector<double> alpha;
  std::vector<Eigen::VectorXd> cols;   // empty unless recorded
  Multigraph schur_tilde;

  Eigen::MatrixXd reconstruct() const {
    const auto n = static_cast<Eigen::Index>(vertices.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < cols.size(); ++i) out += alpha[i] * cols[i] * cols[i].transpose();
    const DenseLaplacian s = laplacian_of(schur_tilde);
    std::vector<Eigen::Index> idx;
    for (Vertex v : s.vertices) {
      idx.push_back(static_cast<Eigen::Index>(
          std::lower_bound(vertices.begin(), vertices.end(), v) - vertices.begin()));
    }
    out(idx, idx) += s.matrix;
    return out;
  }
};

struct EliminationOptions {
  bool exact_cliques = false;
  bool sparsify = true;
  bool record_factor = true;
};

namespace detail {

struct ElimEdge {
  std::uint32_t a;
  std::uint32_t b;
  double w;
  bool alive;
};

template <FullRangeRng Rng>
Multigraph sparsify_pairs(const Multigraph& base, const std::map<PairKey, double>& fill, double eps,
                          double delta, Rng& rng, const ApproxConfig& cfg, bool force);

template <FullRangeRng Rng>
PartialCholesky eliminate(const Multigraph& g, std::span<const Vertex> keep, double eps, double delta,
                          Rng& rng, const ApproxConfig& cfg, const EliminationOptions& opts) {
  if (keep.empty()) throw Error(ErrorCode::empty_keep, "keep set is empty");
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "eps must be positive");
  const auto verts = g.vertices();
  const std::size_t n = verts.size();
  auto pos = [&](Vertex v) {
    return static_cast<std::uint32_t>(std::lower_bound(verts.begin(), verts.end(), v) - verts.begin());
  };
  std::vector<bool> kept(n, false);
  std::vector<Vertex> keep_labels;
  for (Vertex v : keep) {
    const Vertex r = g.find(v);
    if (!g.is_live(r)) throw Error(ErrorCode::invalid_argument, "keep vertex is not live");
    if (!kept[pos(r)]) {
      kept[pos(r)] = true;
      keep_labels.push_back(r);
    }
  }
  std::sort(keep_labels.begin(), keep_labels.end());

  PartialCholesky pc;
  pc.vertices.assign(verts.begin(), verts.end());
  std::vector<std::uint32_t> order;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!kept[i]) order.push_back(i);
  }

  // Non-original mass inside keep, merged per pair.
  std::map<PairKey, double> fill;
  std::vector<ElimEdge> edges;
  std::vector<std::vector<std::uint32_t>> adj(n);
  auto push = [&](std::uint32_t a, std::uint32_t b, double w) {
    const auto id = static_cast<std::uint32_t>(edges.size());
    edges.push_back({a, b, w, true});
    adj[a].push_back(id);
    adj[b].push_back(id);
  };

  if (!order.empty()) {
    LeverageEstimates tau;
    if (!opts.exact_cliques) tau = estimate_leverage(g, delta / 3.0, rng, cfg);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < g.num_edges(); ++i) {
      const Edge& e = g.edges()[i];
      const std::uint32_t a = pos(e.u), b = pos(e.v);
      if (kept[a] && kept[b]) continue;
      const std::uint64_t rho =
          opts.exact_cliques ? 1 : split_count(tau.tau_hat[i], eps, delta, n, cfg.split_scale);
      total += rho;
      if (total > cfg.copy_budget) {
        throw Error(ErrorCode::budget_exceeded,
                    "edge splitting needs more than " + std::to_string(cfg.copy_budget) + " copies");
      }
      const double piece = e.weight / static_cast<double>(rho);
      for (std::uint64_t c = 0; c < rho; ++c) {
        push(a, b, c + 1 < rho ? piece : e.weight - piece * static_cast<double>(rho - 1));
      }
    }
  }
  for (const Edge& e : g.edges()) {
    if (!e.is_original() && kept[pos(e.u)] && kept[pos(e.v)]) fill[pair_key(e.u, e.v)] += e.weight;
  }

  shuffle(std::span<std::uint32_t>(order), rng);
  std::vector<Vertex> ends;
  std::vector<double> weights;
  std::vector<std::uint32_t> ends_pos;
  for (std::uint32_t v : order) {
    ends.clear();
    weights.clear();
    ends_pos.clear();
    double w_total = 0.0;
    for (std::uint32_t id : adj[v]) {
      ElimEdge& e = edges[id];
      if (!e.alive) continue;
      e.alive = false;
      const std::uint32_t other = e.a == v ? e.b : e.a;
      ends_pos.push_back(other);
      ends.push_back(other);
      weights.push_back(e.w);
      w_total += e.w;
    }
    adj[v].clear();
    adj[v].shrink_to_fit();
    pc.elim_order.push_back(verts[v]);
    pc.alpha.push_back(w_total);
    if (opts.record_factor) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      if (w_total > 0.0) {
        c[v] = 1.0;
        for (std::size_t i = 0; i < ends_pos.size(); ++i) c[ends_pos[i]] -= weights[i] / w_total;
      }
      pc.cols.push_back(std::move(c));
    }
    if (ends.empty()) continue;
    if (opts.exact_cliques) {
      std::map<std::uint32_t, double> nbr;
      for (std::size_t i = 0; i < ends.size(); ++i) nbr[ends[i]] += weights[i];
      for (auto a = nbr.begin(); a != nbr.end(); ++a) {
        for (auto b = std::next(a); b != nbr.end(); ++b) {
          push(a->first, b->first, a->second * b->second / w_total);
        }
      }
    } else {
      sample_clique(std::span<const Vertex>(ends), std::span<const double>(weights), rng,
                    [&](Vertex a, Vertex b, double w) { push(a, b, w); });
    }
    // Drop dead entries from neighbour lists once they dominate.
    std::sort(ends_pos.begin(), ends_pos.end());
    ends_pos.erase(std::unique(ends_pos.begin(), ends_pos.end()), ends_pos.end());
    for (std::uint32_t x : ends_pos) {
      auto& list = adj[x];
      if (list.size() > 64) {
        std::size_t live = 0;
        for (std::uint32_t id : list) live += edges[id].alive ? 1 : 0;
        if (2 * live < list.size()) {
          std::erase_if(list, [&](std::uint32_t id) { return !edges[id].alive; });
        }
      }
    }
  }
  for (const ElimEdge& e : edges) {
    if (e.alive) fill[pair_key(verts[e.a], verts[e.b])] += e.w;
  }

  Multigraph base = g.restricted_to(keep_labels);
  base.remove_edges_if([](const Edge& e) { return !e.is_original(); });
  if (opts.sparsify) {
    pc.schur_tilde = sparsify_pairs(base, fill, eps, delta / 3.0, rng, cfg, cfg.sparsify_small_graphs);
  } else {
    for (const auto& [key, w] : fill) base.add_edge(key.first, key.second, w);
    pc.schur_tilde = std::move(base);
  }
  return pc;
}

// Adds the merged non-original pairs in `fill` to `base`, first replacing
// them by an importance sample when there are more of them than the
// sparsifier would draw (or when forced).
template <FullRangeRng Rng>
Multigraph sparsify_pairs(const Multigraph& base, const std::map<PairKey, double>& fill, double eps,
                          double delta, Rng& rng, const ApproxConfig& cfg, bool force) {
  Multigraph out = base;
  const std::size_t n = base.num_vertices();
  const double q_real = std::ceil(cfg.c_sp * static_cast<double>(n) / (eps * eps) *
                                  std::log(static_cast<double>(n) / delta));
  const auto q = static_cast<std::uint64_t>(std::max(1.0, q_real));
  if (fill.empty() || (!force && fill.size() <= q)) {
    for (const auto& [key, w] : fill) out.add_edge(key.first, key.second, w);
    return out;
  }
  if (q > cfg.copy_budget) {
    throw Error(ErrorCode::budget_exceeded, "sparsifier sample count exceeds the budget");
  }
  // Leverage with respect to the whole graph (originals plus fill).
  Multigraph whole = base;
  std::vector<EdgeId> fill_ids;
  for (const auto& [key, w] : fill) fill_ids.push_back(whole.add_edge(key.first, key.second, w));
  const LeverageEstimates tau = estimate_leverage(whole, delta, rng, cfg);
  std::vector<double> cum, mass;
  std::vector<std::pair<PairKey, double>> items(fill.begin(), fill.end());
  double total = 0.0;
  for (EdgeId id : fill_ids) {
    mass.push_back(std::max(tau.at(id), 1e-300));
    cum.push_back(total += mass.back());
  }
  std::vector<double> acc(items.size(), 0.0);
  for (std::uint64_t s = 0; s < q; ++s) {
    const double r = uniform01(rng) * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    const std::size_t j = it == cum.end() ? items.size() - 1 : static_cast<std::size_t>(it - cum.begin());
    acc[j] += 1.0;
  }
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (acc[j] == 0.0) continue;
    const double p = mass[j] / total;
    out.add_edge(items[j].first.first, items[j].first.second,
                 items[j].second * acc[j] / (static_cast<double>(q) * p));
  }
  return out;
}

}  // namespace detail

template <FullRangeRng Rng>
PartialCholesky apx_partial_cholesky(const Multigraph& g, std::span<const Vertex> keep, double eps,
                                     double delta, Rng& rng, const ApproxConfig& cfg = {},
                                     const EliminationOptions& opts = {}) {
  require_connected(g);
  return detail::eliminate(g, keep, eps, delta, rng, cfg, opts);
}

// Sparse approximate Schur complement of g onto keep. Original edges with
// both ends in keep are carried over unchanged; everything else is
// non-original.
template <FullRangeRng Rng>
Multigraph approx_schur(const Multigraph& g, std::span<const Vertex> keep, double eps, double delta,
                        Rng& rng, const ApproxConfig& cfg = {}) {
  require_connected(g);
  EliminationOptions opts;
  opts.record_factor = false;
  return detail::eliminate(g, keep, eps, delta, rng, cfg, opts).schur_tilde;
}

// Importance-sampled spectral sparsifier; all output edges are fresh
// non-original edges, parallel samples merged.
template <FullRangeRng Rng>
Multigraph graph_sparsify(const Multigraph& g, double eps, double delta, Rng& rng,
                          const ApproxConfig& cfg = {}) {
  require_connected(g);
  Multigraph out = g.empty_copy();
  const std::size_t n = g.num_vertices();
  const double q_real = std::ceil(cfg.c_sp * static_cast<double>(n) / (eps * eps) *
                                  std::log(static_cast<double>(n) / delta));
  const auto q = static_cast<std::uint64_t>(std::max(1.0, q_real));
  if (q > cfg.copy_budget) {
    throw Error(ErrorCode::budget_exceeded, "sparsifier sample count exceeds the budget");
  }
  const LeverageEstimates tau = detail::estimate_leverage(g, delta, rng, cfg);
  std::vector<double> cum, mass;
  double total = 0.0;
  for (double t : tau.tau_hat) {
    mass.push_back(std::max(t, 1e-300));
    cum.push_back(total += mass.back());
  }
  const auto edges = g.edges();
  std::vector<double> acc(edges.size(), 0.0);
  for (std::uint64_t s = 0; s < q; ++s) {
    const double r = uniform01(rng) * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    const std::size_t j = it == cum.end() ? edges.size() - 1 : static_cast<std::size_t>(it - cum.begin());
    acc[j] += 1.0;
  }
  std::map<detail::PairKey, double> merged;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    if (acc[j] == 0.0) continue;
    const double p = mass[j] / total;
    merged[detail::pair_key(edges[j].u, edges[j].v)] += edges[j].weight * acc[j] / (static_cast<double>(q) * p);
  }
  for (const auto& [key, w] : merged) out.add_edge(key.first, key.second, w);
  return out;
}

}  // namespace schurtree
