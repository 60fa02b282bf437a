#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schurtree/approx_cholesky.hpp"
#include "schurtree/config.hpp"
#include "schurtree/dense_oracle.hpp"
#include "schurtree/error.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/random.hpp"

namespace schurtree {

enum class EpsMode { automatic, sparse, dense, exact };

constexpr std::string_view to_string(EpsMode mode) noexcept {
  switch (mode) {
    case EpsMode::automatic: return "auto";
    case EpsMode::sparse: return "sparse";
    case EpsMode::dense: return "dense";
    case EpsMode::exact: return "exact";
  }
  return "auto";
}

inline std::optional<EpsMode> parse_eps_mode(std::string_view s) {
  if (s == "auto") return EpsMode::automatic;
  if (s == "sparse") return EpsMode::sparse;
  if (s == "dense") return EpsMode::dense;
  if (s == "exact") return EpsMode::exact;
  return std::nullopt;
}

// Per-level approximation accuracy. Level 0 is the input graph, level
// ceil(log2 n) the leaves; deeper levels tolerate larger error.
struct EpsilonSchedule {
  std::size_t n = 2;
  std::size_t m = 1;
  EpsMode mode = EpsMode::sparse;  // never automatic once built
  int t1 = 0;
  int max_level = 1;

  static EpsilonSchedule make(std::size_t n, std::size_t m, EpsMode requested = EpsMode::automatic) {
    if (n < 2) throw Error(ErrorCode::too_few_vertices, "schedule needs at least two vertices");
    if (m < 1) throw Error(ErrorCode::invalid_argument, "schedule needs at least one edge");
    EpsilonSchedule s;
    s.n = n;
    s.m = m;
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    s.mode = requested;
    if (requested == EpsMode::automatic) {
      s.mode = dm > std::pow(dn, 4.0 / 3.0) ? EpsMode::dense : EpsMode::sparse;
    }
    s.t1 = std::max(0, static_cast<int>(std::ceil(std::log2(dn * dn / dm) / 2.0)));
    s.max_level = static_cast<int>(std::ceil(std::log2(dn)));
    return s;
  }

  double log_n() const { return std::log2(static_cast<double>(n)); }

  double epsilon(int i) const {
    if (i < 0 || i > max_level) {
      throw Error(ErrorCode::level_out_of_range, "level " + std::to_string(i) + " outside 0.." +
                                                     std::to_string(max_level));
    }
    const double dn = static_cast<double>(n);
    const double inv_log2 = 1.0 / (log_n() * log_n());
    switch (mode) {
      case EpsMode::exact: return 0.0;
      case EpsMode::dense:
        return std::pow(2.0, i / 2.0) * std::pow(dn, -1.0 / 6.0) *
               std::pow(static_cast<double>(m), -0.25) * inv_log2;
      default: return std::pow(2.0, i / 2.0) * std::pow(dn, -0.5) * inv_log2;
    }
  }

  // Width of the acceptance interval for leverage scores read off level i.
  double tolerance(int i) const { return 2.0 * epsilon(i) * log_n(); }
};

inline double epsilon_at(const EpsilonSchedule& s, int i) { return s.epsilon(i); }

// True iff r lies outside [(1 - eps) l, (1 + eps) l].
inline bool is_good(double l, double eps, double r) {
  return r < (1.0 - eps) * l || r > (1.0 + eps) * l;
}

struct SamplerConfig {
  double delta = 0.01;
  EpsMode eps_mode = EpsMode::automatic;
  ApproxConfig approx;
  // Recursion nodes whose graph has at most this many vertices use exact
  // Schur complements even in the approximate modes.
  std::size_t dense_leaf_threshold = 0;
  bool record_trace = false;
  // Compare every non-root decision against the exact conditioned leverage.
  bool verify_intervals = false;
  double run_length_alarm = 40.0;
};

struct Decision {
  EdgeId edge;
  double r = 0.0;
  double leverage = 0.0;  // value the decision was based on
  int level = 0;          // chain level that decided
  int start_level = 0;    // leaf level the decision started from
  bool root_fallback = false;
  bool accepted = false;
};

struct SamplerStats {
  std::vector<std::uint64_t> climb_hist;       // decisions resolved at each level
  std::uint64_t root_fallbacks = 0;
  std::uint64_t root_refinements = 0;          // accuracy-ladder steps at the root
  std::vector<std::uint64_t> nodes_per_level;
  std::uint64_t node_bound_violations = 0;
  std::uint64_t decisions = 0;
  std::uint64_t approx_calls = 0;
  std::uint64_t exact_calls = 0;
  double max_run_length = 0.0;
  std::uint64_t run_length_alarms = 0;
  std::uint64_t interval_violations = 0;

  void merge(const SamplerStats& o) {
    auto add = [](std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
      if (a.size() < b.size()) a.resize(b.size(), 0);
      for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    };
    add(climb_hist, o.climb_hist);
    add(nodes_per_level, o.nodes_per_level);
    root_fallbacks += o.root_fallbacks;
    root_refinements += o.root_refinements;
    node_bound_violations += o.node_bound_violations;
    decisions += o.decisions;
    approx_calls += o.approx_calls;
    exact_calls += o.exact_calls;
    max_run_length = std::max(max_run_length, o.max_run_length);
    run_length_alarms += o.run_length_alarms;
    interval_violations += o.interval_violations;
  }
};

struct TreeSample {
  std::vector<EdgeId> edges;  // sorted original edge ids
  std::uint64_t seed = 0;
  EpsMode mode = EpsMode::sparse;
  SamplerStats stats;
  std::vector<Decision> trace;
};

// Largest number of recursion nodes allowed at depth i.
inline std::uint64_t node_bound(int i) {
  return (std::uint64_t{1} << (2 * (i + 1))) - (std::uint64_t{1} << i);
}

struct ChainFrame {
  int level = 0;
  Multigraph graph;
};

// Graphs G_0 (conditioned input) ... G_k (current leaf) along the active
// recursion path.
struct LevelChain {
  EpsilonSchedule schedule;
  std::vector<ChainFrame> frames;

  ChainFrame& leaf() { return frames.back(); }
  ChainFrame& root() { return frames.front(); }
};

namespace detail {

inline double leverage_in(const Multigraph& g, const Edge& e_in_g) {
  if (g.num_vertices() == 2) {
    const double total = g.total_weight_between(e_in_g.u, e_in_g.v);
    return e_in_g.weight / total;
  }
  return ResistanceOracle(g).leverage(e_in_g);
}

}  // namespace detail

// Decides whether original edge `e` (alive in the leaf) joins the tree,
// climbing the chain when the leaf estimate is too close to the draw.
// The chain itself is not modified.
template <FullRangeRng Rng>
Decision sample_edge(LevelChain& chain, EdgeId e, Rng& rng, SamplerStats* stats = nullptr) {
  ChainFrame& leaf = chain.leaf();
  if (!leaf.graph.has_edge(e)) {
    throw Error(ErrorCode::dead_edge, "edge " + Multigraph::describe(e) + " is no longer present");
  }
  const EpsilonSchedule& s = chain.schedule;
  Decision d;
  d.edge = e;
  d.start_level = leaf.level;
  d.r = uniform01(rng);
  auto resolved = [&](int level, double l) {
    d.level = level;
    d.leverage = l;
    d.accepted = d.r < l;
    if (stats) {
      if (stats->climb_hist.size() <= static_cast<std::size_t>(level)) {
        stats->climb_hist.resize(static_cast<std::size_t>(level) + 1, 0);
      }
      ++stats->climb_hist[static_cast<std::size_t>(level)];
    }
    return d;
  };

  const double l_leaf = detail::leverage_in(leaf.graph, leaf.graph.edge(e));
  if (leaf.level == 0) return resolved(0, l_leaf);
  if (is_good(l_leaf, s.tolerance(leaf.level), d.r)) return resolved(leaf.level, l_leaf);

  const int floor_level = std::max(s.t1, 1);
  for (std::size_t k = chain.frames.size() - 1; k-- > 0;) {
    const ChainFrame& f = chain.frames[k];
    if (f.level < floor_level) break;
    const double l = detail::leverage_in(f.graph, f.graph.edge(e));
    if (is_good(l, s.tolerance(f.level), d.r)) return resolved(f.level, l);
  }

  // Root: exact leverage of the conditioned input graph, with the accuracy
  // ladder rho = 1/n, 1/(2n), ... until r leaves the band.
  d.root_fallback = true;
  if (stats) ++stats->root_fallbacks;
  const ChainFrame& root = chain.root();
  const double l = detail::leverage_in(root.graph, root.graph.edge(e));
  double rho = 1.0 / static_cast<double>(s.n);
  while (rho > 1e-14 && !is_good(l, rho, d.r)) {
    rho /= 2.0;
    if (stats) ++stats->root_refinements;
  }
  return resolved(0, l);
}

// Applies a decision to every graph on the chain.
inline void apply_decision(LevelChain& chain, EdgeId e, bool accepted) {
  for (ChainFrame& f : chain.frames) {
    if (accepted) {
      f.graph.contract(e);
    } else {
      f.graph.remove_edge(e);
    }
  }
}

namespace detail {

template <FullRangeRng Rng>
class TreeSampler {
 public:
  TreeSampler(const Multigraph& g, const SamplerConfig& cfg, Rng& rng)
      : cfg_(cfg), rng_(rng), input_(g) {
    chain_.schedule = EpsilonSchedule::make(g.num_vertices(), g.num_edges(), cfg.eps_mode);
    const int levels = chain_.schedule.max_level + 1;
    stats_.climb_hist.assign(static_cast<std::size_t>(levels), 0);
    stats_.nodes_per_level.assign(static_cast<std::size_t>(levels) + 1, 0);
    const double big_l = static_cast<double>(chain_.schedule.max_level + 1);
    delta_call_ = cfg.delta / (6.0 * std::pow(4.0, big_l + 1.0) * big_l);
    for (const Edge& e : g.edges()) {
      if (!e.is_original()) continue;
      if (orig_u_.size() <= e.id.value) {
        orig_u_.resize(e.id.value + 1, 0);
        orig_v_.resize(e.id.value + 1, 0);
      }
      orig_u_[e.id.value] = e.u;
      orig_v_[e.id.value] = e.v;
    }
  }

  TreeSample run() {
    std::vector<Vertex> all(input_.vertices().begin(), input_.vertices().end());
    push(0, input_);
    recur_tree(all);
    chain_.frames.pop_back();
    TreeSample out;
    out.edges = std::move(accepted_);
    std::sort(out.edges.begin(), out.edges.end());
    out.mode = chain_.schedule.mode;
    out.stats = std::move(stats_);
    out.trace = std::move(trace_);
    if (!is_spanning_tree(input_, out.edges)) {
      throw Error(ErrorCode::internal, "sampler produced an invalid spanning tree");
    }
    return out;
  }

 private:
  ChainFrame& top() { return chain_.frames.back(); }

  void push(int level, Multigraph graph) {
    chain_.frames.push_back({level, std::move(graph)});
    auto& count = stats_.nodes_per_level;
    if (count.size() <= static_cast<std::size_t>(level)) count.resize(static_cast<std::size_t>(level) + 1, 0);
    if (++count[static_cast<std::size_t>(level)] > node_bound(level)) ++stats_.node_bound_violations;
  }

  std::vector<Vertex> reps(std::span<const Vertex> members) {
    const Multigraph& g = top().graph;
    std::vector<Vertex> out;
    out.reserve(members.size());
    for (Vertex x : members) out.push_back(g.find(x));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Members whose current representative is in `chosen`.
  std::vector<Vertex> members_in(std::span<const Vertex> members, std::span<const Vertex> chosen) {
    const Multigraph& g = top().graph;
    std::vector<Vertex> out;
    for (Vertex x : members) {
      if (std::binary_search(chosen.begin(), chosen.end(), g.find(x))) out.push_back(x);
    }
    return out;
  }

  // Alive original edges of the top frame joining `a` to `b` by their
  // input endpoints (or lying inside `a` when b is empty).
  std::vector<EdgeId> original_edges_between(std::span<const Vertex> a, std::span<const Vertex> b) {
    std::vector<std::uint8_t> side(input_.original_order(), 0);
    for (Vertex x : a) side[x] |= 1;
    for (Vertex x : b) side[x] |= 2;
    std::vector<EdgeId> out;
    for (const Edge& e : top().graph.edges()) {
      if (!e.is_original()) continue;
      const std::uint8_t su = side[orig_u_[e.id.value]];
      const std::uint8_t sv = side[orig_v_[e.id.value]];
      const bool hit = b.empty() ? ((su & 1) && (sv & 1))
                                 : (((su & 1) && (sv & 2)) || ((su & 2) && (sv & 1)));
      if (hit) out.push_back(e.id);
    }
    return out;
  }

  Multigraph child_graph(std::span<const Vertex> keep, int level) {
    const Multigraph& g = top().graph;
    if (keep.size() == g.num_vertices()) return g;
    const double eps = chain_.schedule.epsilon(level);
    if (chain_.schedule.mode == EpsMode::exact || keep.size() <= cfg_.dense_leaf_threshold) {
      ++stats_.exact_calls;
      return schur_exact_graph(g, keep);
    }
    ++stats_.approx_calls;
    EliminationOptions opts;
    opts.record_factor = false;
    return eliminate(g, keep, std::min(eps, 0.5), delta_call_, rng_, cfg_.approx, opts).schur_tilde;
  }

  void recur_tree(const std::vector<Vertex>& members) {
    const int level = top().level;
    const std::vector<Vertex> current = reps(members);
    if (current.size() <= 1) return;
    const VertexPartition part = split_vertices(current);
    const std::vector<Vertex> m1 = members_in(members, part.left);
    const std::vector<Vertex> m2 = members_in(members, part.right);
    for (const auto* side : {&m1, &m2}) {
      const std::vector<Vertex> keep = reps(*side);
      if (keep.size() < 2 || original_edges_between(*side, {}).empty()) continue;
      push(level + 1, child_graph(keep, level));
      recur_tree(*side);
      chain_.frames.pop_back();
    }
    across(m1, m2);
  }

  void across(const std::vector<Vertex>& left, const std::vector<Vertex>& right) {
    const int level = top().level;
    std::vector<EdgeId> pending = original_edges_between(left, right);
    if (pending.empty()) return;
    const std::vector<Vertex> rl = reps(left);
    const std::vector<Vertex> rr = reps(right);
    if (rl.size() == 1 && rr.size() == 1) {
      for (EdgeId e : pending) {
        if (!top().graph.has_edge(e)) continue;
        decide(e);
      }
      return;
    }
    auto halves = [&](const std::vector<Vertex>& members, const std::vector<Vertex>& r) {
      if (r.size() == 1) return std::pair{members, std::vector<Vertex>{}};
      const VertexPartition p = split_vertices(r);
      return std::pair{members_in(members, p.left), members_in(members, p.right)};
    };
    const auto [l1, l2] = halves(left, rl);
    const auto [r1, r2] = halves(right, rr);
    const std::vector<Vertex>* ls[2] = {&l1, &l2};
    const std::vector<Vertex>* rs[2] = {&r1, &r2};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const auto& li = *ls[i];
        const auto& rj = *rs[j];
        if (li.empty() || rj.empty()) continue;
        if (original_edges_between(li, rj).empty()) continue;
        std::vector<Vertex> keep = reps(li);
        const std::vector<Vertex> keep_r = reps(rj);
        keep.insert(keep.end(), keep_r.begin(), keep_r.end());
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        push(level + 1, child_graph(keep, level));
        across(li, rj);
        chain_.frames.pop_back();
      }
    }
  }

  void decide(EdgeId e) {
    Decision d = sample_edge(chain_, e, rng_, &stats_);
    ++stats_.decisions;
    if (cfg_.verify_intervals && !d.root_fallback && d.level > 0) {
      const ChainFrame& root = chain_.root();
      const double exact = ResistanceOracle(root.graph).leverage(root.graph.edge(e));
      if ((d.r < exact) != d.accepted) ++stats_.interval_violations;
    }
    if (d.accepted) {
      accepted_.push_back(e);
      run_length_ = 0.0;
    } else {
      run_length_ += d.leverage;
      stats_.max_run_length = std::max(stats_.max_run_length, run_length_);
      if (run_length_ > cfg_.run_length_alarm) ++stats_.run_length_alarms;
    }
    apply_decision(chain_, e, d.accepted);
    if (cfg_.record_trace) trace_.push_back(d);
  }

  const SamplerConfig& cfg_;
  Rng& rng_;
  const Multigraph& input_;
  LevelChain chain_;
  SamplerStats stats_;
  double delta_call_ = 0.0;
  double run_length_ = 0.0;
  std::vector<Vertex> orig_u_, orig_v_;
  std::vector<EdgeId> accepted_;
  std::vector<Decision> trace_;
};

}  // namespace detail

template <FullRangeRng Rng>
TreeSample generate_spanning_tree(const Multigraph& g, const SamplerConfig& cfg, Rng& rng) {
  if (g.num_vertices() < 2) throw Error(ErrorCode::too_few_vertices, "need at least two vertices");
  require_connected(g);
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1)");
  }
  return detail::TreeSampler<Rng>(g, cfg, rng).run();
}

inline TreeSample generate_spanning_tree(const Multigraph& g, const SamplerConfig& cfg, std::uint64_t seed) {
  Philox4x32 rng(seed);
  TreeSample t = generate_spanning_tree(g, cfg, rng);
  t.seed = seed;
  return t;
}

}  // namespace schurtree
