#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "schurtree/approx_cholesky.hpp"
#include "schurtree/config.hpp"
#include "schurtree/dense_oracle.hpp"
#include "schurtree/error.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/random.hpp"

namespace schurtree {

struct VertexPair {
  Vertex u = 0;
  Vertex v = 0;
};

struct ReffConfig {
  ApproxConfig approx;
  // Exact Schur complements at every layer (eps' = 0).
  bool exact = false;
  // Measure the resistance distortion introduced by every Schur layer.
  bool instrument = false;
};

struct ReffLayer {
  int depth = 0;
  std::size_t vertices_in = 0;
  std::size_t vertices_out = 0;
  double max_abs_log_ratio = 0.0;
};

struct ReffEstimates {
  std::vector<double> values;  // aligned with the input pairs
  double epsilon = 0.0;
  double epsilon_layer = 0.0;
  // Filled when instrumenting: every Schur layer, and per pair the sum of
  // |log distortion| over the layers it passed through.
  std::vector<ReffLayer> layers;
  std::vector<double> pair_log_distortion;
};

namespace detail {

template <FullRangeRng Rng>
class ReffRecursion {
 public:
  ReffRecursion(std::size_t n, double eps_layer, const ReffConfig& cfg, Rng& rng, ReffEstimates& out)
      : eps_(eps_layer), cfg_(cfg), rng_(rng), out_(out) {
    const double dn = static_cast<double>(n);
    delta_ = 1.0 / (dn * dn * dn);
    const int log_n = static_cast<int>(std::ceil(std::log2(dn)));
    depth_limit_ = 2 * log_n + 4;
  }

  void run(const Multigraph& g, std::vector<std::size_t> pairs, std::span<const VertexPair> all) {
    all_ = all;
    depth_limit_ += static_cast<int>(pairs.size());
    help(g, std::move(pairs), 0);
  }

 private:
  Multigraph schur(const Multigraph& g, std::span<const Vertex> keep, std::span<const std::size_t> pairs,
                   int depth) {
    Multigraph h;
    if (cfg_.exact) {
      h = schur_exact_graph(g, keep);
    } else {
      EliminationOptions opts;
      opts.record_factor = false;
      h = eliminate(g, keep, std::min(eps_, 0.5), delta_, rng_, cfg_.approx, opts).schur_tilde;
    }
    if (cfg_.instrument) {
      ReffLayer layer;
      layer.depth = depth;
      layer.vertices_in = g.num_vertices();
      layer.vertices_out = h.num_vertices();
      const ResistanceOracle before(g);
      const ResistanceOracle after(h);
      for (std::size_t p : pairs) {
        const VertexPair& q = all_[p];
        if (!h.is_live(h.find(q.u)) || !h.is_live(h.find(q.v))) continue;
        const double ratio = std::abs(std::log(after.resistance(q.u, q.v) / before.resistance(q.u, q.v)));
        layer.max_abs_log_ratio = std::max(layer.max_abs_log_ratio, ratio);
        out_.pair_log_distortion[p] += ratio;
      }
      out_.layers.push_back(layer);
    }
    return h;
  }

  void help(const Multigraph& g_in, std::vector<std::size_t> pairs, int depth) {
    if (pairs.empty()) return;
    if (depth > depth_limit_) {
      throw Error(ErrorCode::internal, "resistance recursion exceeded its depth guard");
    }
    std::vector<Vertex> v0;
    for (std::size_t p : pairs) {
      v0.push_back(g_in.find(all_[p].u));
      v0.push_back(g_in.find(all_[p].v));
    }
    std::sort(v0.begin(), v0.end());
    v0.erase(std::unique(v0.begin(), v0.end()), v0.end());

    Multigraph reduced;
    const Multigraph* g = &g_in;
    if (v0.size() != g_in.num_vertices()) {
      reduced = schur(g_in, v0, pairs, depth);
      g = &reduced;
    }

    if (g->num_vertices() == 2) {
      const auto verts = g->vertices();
      const double w = g->total_weight_between(verts[0], verts[1]);
      for (std::size_t p : pairs) out_.values[p] = 1.0 / w;
      return;
    }

    const auto verts = g->vertices();
    const std::size_t half = verts.size() / 2;
    const std::vector<Vertex> v1(verts.begin(), verts.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<Vertex> v2(verts.begin() + static_cast<std::ptrdiff_t>(half), verts.end());
    auto in_v1 = [&](Vertex x) { return std::binary_search(v1.begin(), v1.end(), g->find(x)); };
    std::vector<std::size_t> s1, s2, s3;
    for (std::size_t p : pairs) {
      const bool a = in_v1(all_[p].u);
      const bool b = in_v1(all_[p].v);
      (a && b ? s1 : (!a && !b ? s2 : s3)).push_back(p);
    }
    if (s1.empty() && s2.empty()) {
      // Every pair crosses the split, so recursing on s3 alone would not
      // shrink anything: halve the pair list instead.
      const auto mid = s3.begin() + static_cast<std::ptrdiff_t>(s3.size() / 2);
      help(*g, std::vector<std::size_t>(s3.begin(), mid), depth + 1);
      help(*g, std::vector<std::size_t>(mid, s3.end()), depth + 1);
      return;
    }
    if (!s1.empty()) help(schur(*g, v1, s1, depth), std::move(s1), depth + 1);
    if (!s2.empty()) help(schur(*g, v2, s2, depth), std::move(s2), depth + 1);
    help(*g, std::move(s3), depth + 1);
  }

  double eps_;
  const ReffConfig& cfg_;
  Rng& rng_;
  ReffEstimates& out_;
  std::span<const VertexPair> all_;
  double delta_ = 0.0;
  int depth_limit_ = 0;
};

}  // namespace detail

// Effective resistances of all pairs to within e^{+-eps} (w.h.p.).
template <FullRangeRng Rng>
ReffEstimates estimate_reff(const Multigraph& g, std::span<const VertexPair> pairs, double eps, Rng& rng,
                            const ReffConfig& cfg = {}) {
  require_connected(g);
  if (!cfg.exact && !(eps > 0.0 && eps <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "eps must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const VertexPair& p = pairs[i];
    if (p.u >= g.original_order() || p.v >= g.original_order() || !g.is_live(g.find(p.u)) ||
        !g.is_live(g.find(p.v))) {
      throw Error(ErrorCode::bad_pair, "pair " + std::to_string(i) + " names a missing vertex");
    }
    if (g.find(p.u) == g.find(p.v)) {
      throw Error(ErrorCode::bad_pair, "pair " + std::to_string(i) + " joins a vertex to itself");
    }
  }
  ReffEstimates out;
  out.values.assign(pairs.size(), 0.0);
  out.epsilon = cfg.exact ? 0.0 : eps;
  const double log_n = std::ceil(std::log2(static_cast<double>(g.num_vertices())));
  out.epsilon_layer = cfg.exact ? 0.0 : eps / std::max(1.0, log_n);
  if (cfg.instrument) out.pair_log_distortion.assign(pairs.size(), 0.0);
  std::vector<std::size_t> all(pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  detail::ReffRecursion<Rng> rec(g.num_vertices(), out.epsilon_layer, cfg, rng, out);
  rec.run(g, std::move(all), pairs);
  return out;
}

// Recursion body with a caller-supplied per-layer tolerance.
template <FullRangeRng Rng>
ReffEstimates help_estimate_reff(const Multigraph& g, std::span<const VertexPair> pairs, double eps_layer,
                                 Rng& rng, const ReffConfig& cfg = {}) {
  ReffEstimates out;
  out.values.assign(pairs.size(), 0.0);
  out.epsilon_layer = eps_layer;
  if (cfg.instrument) out.pair_log_distortion.assign(pairs.size(), 0.0);
  std::vector<std::size_t> all(pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  detail::ReffRecursion<Rng> rec(g.num_vertices(), eps_layer, cfg, rng, out);
  rec.run(g, std::move(all), pairs);
  return out;
}

}  // namespace schurtree
