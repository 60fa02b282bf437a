// Samples a few spanning trees of a weighted 3x3 grid, estimates two
// effective resistances and compares everything with the dense oracle.
#include <cstdio>
#include <vector>

#include "schurtree/schurtree.hpp"

namespace st = schurtree;

int main() {
  auto edges = st::grid_edges(3, 3);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i].weight = 1.0 + 0.25 * static_cast<double>(i % 4);
  const st::Multigraph g = st::build_graph(edges);

  st::SamplerConfig cfg;
  cfg.delta = 1e-3;
  cfg.approx.split_scale = st::kSamplerSplitScale;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const st::TreeSample t = st::generate_spanning_tree(g, cfg, seed);
    std::printf("tree %llu:", static_cast<unsigned long long>(seed));
    for (st::EdgeId e : t.edges) std::printf(" %s", st::Multigraph::describe(e).c_str());
    std::printf("  (root fallbacks %llu)\n", static_cast<unsigned long long>(t.stats.root_fallbacks));
  }

  const std::vector<st::VertexPair> pairs{{0, 8}, {2, 6}};
  st::ReffConfig rc;
  rc.approx.split_scale = st::kReffSplitScale;
  st::Philox4x32 rng(st::kDefaultSeed);
  const auto est = st::estimate_reff(g, pairs, 0.25, rng, rc);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::printf("R(%u,%u) estimate %.6f exact %.6f\n", pairs[i].u, pairs[i].v, est.values[i],
                st::effective_resistance_exact(g, pairs[i].u, pairs[i].v));
  }

  const auto lev = st::leverage_scores_exact(g);
  double sum = 0.0;
  for (double l : lev) sum += l;
  std::printf("sum of leverage scores %.6f (n - 1 = %zu)\n", sum, g.num_vertices() - 1);
  std::printf("spanning trees (weighted) %.6f\n", st::spanning_tree_count(g));
  return 0;
}
