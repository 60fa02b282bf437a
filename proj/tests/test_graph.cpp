#include <gtest/gtest.h>

#include <sstream>
#include <vector>

#include "schurtree/generators.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/io.hpp"
#include "test_util.hpp"

using namespace schurtree;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

}  // namespace

TEST(BuildGraph, SingleEdge) {
  const Multigraph g = build_graph({{0, 1, 1.0}});
  EXPECT_EQ(g.num_vertices(), 2u);
  EXPECT_EQ(g.num_edges(), 1u);
}

TEST(BuildGraph, ParallelEdgesKept) {
  const Multigraph g = build_graph({{0, 1, 2.0}, {0, 1, 3.0}});
  EXPECT_EQ(g.num_vertices(), 2u);
  ASSERT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.edges()[0].weight, 2.0);
  EXPECT_EQ(g.edges()[1].weight, 3.0);
}

TEST(BuildGraph, Triangle) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  EXPECT_EQ(g.num_vertices(), 3u);
  EXPECT_EQ(g.num_edges(), 3u);
  EXPECT_TRUE(is_connected(g));
}

TEST(BuildGraph, CompactsInFirstAppearanceOrder) {
  const Multigraph g = build_graph({{10, 7, 1.0}, {7, 42, 1.0}});
  EXPECT_EQ(g.label(0), 10u);
  EXPECT_EQ(g.label(1), 7u);
  EXPECT_EQ(g.label(2), 42u);
  EXPECT_EQ(g.edges()[1].u, 1u);
  EXPECT_EQ(g.edges()[1].v, 2u);
}

TEST(BuildGraph, Errors) {
  EXPECT_EQ(code_of([] { build_graph({{0, 1, 0.0}}); }), ErrorCode::non_positive_weight);
  EXPECT_EQ(code_of([] { build_graph({{0, 1, -1.0}}); }), ErrorCode::non_positive_weight);
  EXPECT_EQ(code_of([] { build_graph({{3, 3, 1.0}}); }), ErrorCode::self_loop_input);
  EXPECT_EQ(code_of([] { build_graph(std::span<const InputEdge>{}); }), ErrorCode::empty_input);
}

TEST(EdgeIds, OriginalAndSchurNamespaces) {
  Multigraph g = build_graph({{0, 1, 1.0}, {1, 2, 1.0}});
  EXPECT_EQ(g.edges()[0].id.value, 0u);
  EXPECT_EQ(g.edges()[1].id.value, 1u);
  const EdgeId s = g.add_edge(0, 2, 0.5);
  EXPECT_FALSE(s.is_original());
  EXPECT_EQ(Multigraph::describe(s), "s0");
  EXPECT_EQ(Multigraph::describe(EdgeId{1}), "1");
}

TEST(ContractEdge, TriangleGivesTwoParallelEdges) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const Multigraph h = contract_edge(g, EdgeId{0});
  EXPECT_EQ(h.num_vertices(), 2u);
  ASSERT_EQ(h.num_edges(), 2u);
  for (const Edge& e : h.edges()) {
    EXPECT_EQ(std::min(e.u, e.v), 0u);
    EXPECT_EQ(std::max(e.u, e.v), 2u);
  }
}

TEST(ContractEdge, ParallelPairCollapses) {
  const Multigraph g = build_graph({{0, 1, 2.0}, {0, 1, 3.0}});
  const Multigraph h = contract_edge(g, EdgeId{0});
  EXPECT_EQ(h.num_vertices(), 1u);
  EXPECT_EQ(h.num_edges(), 0u);
}

TEST(ContractEdge, PathBecomesSingleEdge) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}});
  const Multigraph h = contract_edge(g, EdgeId{0});
  EXPECT_EQ(h.num_vertices(), 2u);
  EXPECT_EQ(h.num_edges(), 1u);
  EXPECT_EQ(h.find(1), h.find(0));
}

TEST(ContractEdge, UnknownEdge) {
  const Multigraph g = build_graph({{0, 1, 1}});
  EXPECT_EQ(code_of([&] { contract_edge(g, EdgeId{5}); }), ErrorCode::unknown_edge);
}

TEST(DeleteEdges, TriangleToPath) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const std::vector<EdgeId> del{EdgeId{2}};
  const Multigraph h = delete_edges(g, del);
  EXPECT_EQ(h.num_vertices(), 3u);
  EXPECT_EQ(h.num_edges(), 2u);
  EXPECT_TRUE(is_connected(h));
}

TEST(DeleteEdges, AllEdgesLeavesEdgeless) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const std::vector<EdgeId> del{EdgeId{0}, EdgeId{1}, EdgeId{2}};
  const Multigraph h = delete_edges(g, del);
  EXPECT_EQ(h.num_vertices(), 3u);
  EXPECT_EQ(h.num_edges(), 0u);
  EXPECT_FALSE(is_connected(h));
}

TEST(DeleteEdges, EmptySetIsIdentity) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const Multigraph h = delete_edges(g, std::span<const EdgeId>{});
  EXPECT_EQ(laplacian_of(h).matrix, laplacian_of(g).matrix);
}

TEST(DeleteEdges, UnknownEdge) {
  const Multigraph g = build_graph({{0, 1, 1}});
  const std::vector<EdgeId> del{EdgeId{9}};
  EXPECT_EQ(code_of([&] { delete_edges(g, del); }), ErrorCode::unknown_edge);
}

TEST(Laplacian, SingleEdge) {
  const auto l = laplacian_of(build_graph({{0, 1, 2.0}}));
  Eigen::Matrix2d expect;
  expect << 2, -2, -2, 2;
  EXPECT_EQ(l.matrix, Eigen::MatrixXd(expect));
}

TEST(Laplacian, ParallelWeightsAdd) {
  const auto l = laplacian_of(build_graph({{0, 1, 2.0}, {0, 1, 3.0}}));
  Eigen::Matrix2d expect;
  expect << 5, -5, -5, 5;
  EXPECT_EQ(l.matrix, Eigen::MatrixXd(expect));
}

TEST(Laplacian, UnitTriangle) {
  const auto l = laplacian_of(build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}}));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(l.matrix(i, j), i == j ? 2.0 : -1.0);
  }
  EXPECT_TRUE(l.is_laplacian());
}

TEST(SplitVertices, CeilConvention) {
  auto check = [](std::uint64_t n, std::vector<Vertex> left, std::vector<Vertex> right) {
    const Multigraph g = build_graph(path_edges(n));
    const auto p = split_vertices(g);
    EXPECT_EQ(p.left, left);
    EXPECT_EQ(p.right, right);
  };
  check(4, {0, 1}, {2, 3});
  check(5, {0, 1, 2}, {3, 4});
  check(2, {0}, {1});
}

TEST(SplitVertices, TooFew) {
  Multigraph g = build_graph({{0, 1, 1}});
  g.contract(EdgeId{0});
  EXPECT_EQ(code_of([&] { split_vertices(g); }), ErrorCode::too_few_vertices);
}

TEST(SpanningTreeCheck, Basic) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const std::vector<EdgeId> good{EdgeId{0}, EdgeId{1}};
  const std::vector<EdgeId> short_set{EdgeId{0}};
  const std::vector<EdgeId> repeated{EdgeId{0}, EdgeId{0}};
  EXPECT_TRUE(is_spanning_tree(g, good));
  EXPECT_FALSE(is_spanning_tree(g, short_set));
  EXPECT_FALSE(is_spanning_tree(g, repeated));
}

// Random contraction/deletion sequences: the maintained Laplacian must match
// one rebuilt from scratch, and rank(L) = n' - components throughout.
TEST(Invariants, MutationsMatchRebuiltLaplacian) {
  Philox4x32 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint64_t n = 3 + uniform_index(rng, 18);
    const std::uint64_t max_m = n * (n - 1) / 2;
    const std::uint64_t m = std::min<std::uint64_t>(max_m, n - 1 + uniform_index(rng, 2 * n));
    const auto input = random_connected_edges(n, m, rng, true);
    Multigraph g = build_graph(input);
    // Independent bookkeeping: class of every original vertex and the set
    // of surviving edge positions.
    std::vector<int> cls(n);
    std::iota(cls.begin(), cls.end(), 0);
    std::vector<bool> alive(input.size(), true);
    for (int step = 0; step < static_cast<int>(n); ++step) {
      if (g.num_edges() == 0) break;
      const Edge& pick = g.edges()[uniform_index(rng, g.num_edges())];
      const EdgeId id = pick.id;
      if (uniform01(rng) < 0.5 && g.num_vertices() > 2) {
        const int a = cls[input[id.value].u], b = cls[input[id.value].v];
        const int keep = std::min(a, b), gone = std::max(a, b);
        for (auto& c : cls) {
          if (c == gone) c = keep;
        }
        g.contract(id);
        for (std::size_t k = 0; k < input.size(); ++k) {
          if (alive[k] && cls[input[k].u] == cls[input[k].v]) alive[k] = false;
        }
      } else {
        const std::vector<EdgeId> del{id};
        g = delete_edges(g, del);
        alive[id.value] = false;
      }
      // Rebuild.
      std::vector<int> reps;
      for (int c : cls) reps.push_back(c);
      std::sort(reps.begin(), reps.end());
      reps.erase(std::unique(reps.begin(), reps.end()), reps.end());
      ASSERT_EQ(reps.size(), g.num_vertices());
      std::vector<testutil::PlainEdge> edges;
      auto pos = [&](int c) { return static_cast<int>(std::lower_bound(reps.begin(), reps.end(), c) - reps.begin()); };
      for (std::size_t k = 0; k < input.size(); ++k) {
        if (alive[k]) edges.push_back({pos(cls[input[k].u]), pos(cls[input[k].v]), input[k].weight});
      }
      const Eigen::MatrixXd expect = testutil::plain_laplacian(static_cast<int>(reps.size()), edges);
      const auto got = laplacian_of(g);
      ASSERT_LE((got.matrix - expect).cwiseAbs().maxCoeff(), 1e-12);
      for (std::size_t v = 0; v < n; ++v) {
        ASSERT_EQ(static_cast<int>(g.find(static_cast<Vertex>(v))), cls[v]);
      }
      std::size_t comps = 0;
      component_labels(g, &comps);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(got.matrix);
      lu.setThreshold(1e-10);
      ASSERT_EQ(static_cast<std::size_t>(lu.rank()), g.num_vertices() - comps);
    }
  }
}

TEST(Io, ParsesEdgeListWithCommentsAndBlanks) {
  std::istringstream in("# header\n\n0 1 1.5\n  1\t2 2\n# tail\n");
  const Multigraph g = read_graph(in);
  EXPECT_EQ(g.num_vertices(), 3u);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_DOUBLE_EQ(g.edges()[0].weight, 1.5);
}

TEST(Io, ReportsLineOfParseError) {
  std::istringstream in("0 1 1\n0 x 1\n");
  try {
    read_graph(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Io, RejectsWrongArity) {
  std::istringstream in("0 1\n");
  EXPECT_EQ(code_of([&] { read_graph(in); }), ErrorCode::parse_error);
}
