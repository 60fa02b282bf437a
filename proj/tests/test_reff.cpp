#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "schurtree/generators.hpp"
#include "schurtree/reff_estimator.hpp"
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

ReffConfig practical() {
  ReffConfig cfg;
  cfg.approx.split_scale = kReffSplitScale;
  return cfg;
}

bool within(double est, double exact, double eps) {
  return std::abs(std::log(est / exact)) <= eps;
}

}  // namespace

TEST(Reff, LongPath) {
  const Multigraph g = build_graph(path_edges(100));
  const std::vector<VertexPair> pairs{{0, 99}};
  Philox4x32 rng(1);
  const auto est = estimate_reff(g, pairs, 0.1, rng, practical());
  ASSERT_EQ(est.values.size(), 1u);
  EXPECT_TRUE(within(est.values[0], 99.0, 0.1)) << est.values[0];
}

TEST(Reff, K4AllPairs) {
  const Multigraph g = build_graph(complete_edges(4));
  std::vector<VertexPair> pairs;
  for (Vertex a = 0; a < 4; ++a)
    for (Vertex b = a + 1; b < 4; ++b) pairs.push_back({a, b});
  Philox4x32 rng(2);
  const auto est = estimate_reff(g, pairs, 0.2, rng, practical());
  for (double v : est.values) EXPECT_TRUE(within(v, 0.5, 0.2)) << v;
}

TEST(Reff, TwoVertexParallel) {
  const Multigraph g = build_graph({{0, 1, 2.0}, {1, 0, 3.0}});
  const std::vector<VertexPair> pairs{{0, 1}, {1, 0}};
  Philox4x32 rng(3);
  const auto est = estimate_reff(g, pairs, 0.1, rng, practical());
  EXPECT_NEAR(est.values[0], 0.2, 1e-12);
  EXPECT_NEAR(est.values[1], 0.2, 1e-12);
}

TEST(Reff, EmptyPairSet) {
  const Multigraph g = build_graph(cycle_edges(10));
  Philox4x32 rng(4);
  EXPECT_TRUE(estimate_reff(g, std::vector<VertexPair>{}, 0.1, rng, practical()).values.empty());
}

TEST(Reff, OrderAndDuplicatesPreserved) {
  Philox4x32 grng(5);
  const Multigraph g = build_graph(random_connected_edges(40, 120, grng, true));
  const std::vector<VertexPair> pairs{{3, 17}, {0, 39}, {17, 3}, {3, 17}, {21, 22}, {0, 39}};
  Philox4x32 rng(6);
  const auto est = estimate_reff(g, pairs, 0.25, rng, practical());
  ASSERT_EQ(est.values.size(), pairs.size());
  const Eigen::MatrixXd lp = testutil::pinv(testutil::laplacian_by_position(g));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_TRUE(within(est.values[i], testutil::reff(lp, pairs[i].u, pairs[i].v), 0.25)) << i;
  }
  EXPECT_DOUBLE_EQ(est.values[0], est.values[3]);
  EXPECT_DOUBLE_EQ(est.values[1], est.values[5]);
}

TEST(Reff, AllPairsOnOneSide) {
  const Multigraph g = build_graph(grid_edges(6, 6));
  std::vector<VertexPair> pairs;
  for (Vertex a = 0; a < 6; ++a) pairs.push_back({a, a + 1});
  Philox4x32 rng(7);
  const auto est = estimate_reff(g, pairs, 0.25, rng, practical());
  const Eigen::MatrixXd lp = testutil::pinv(testutil::laplacian_by_position(g));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_TRUE(within(est.values[i], testutil::reff(lp, pairs[i].u, pairs[i].v), 0.25)) << i;
  }
}

TEST(Reff, ExactModeMatchesPseudoinverse) {
  Philox4x32 grng(8);
  for (int t = 0; t < 5; ++t) {
    const Multigraph g = build_graph(random_connected_edges(60, 200, grng, true));
    std::vector<VertexPair> pairs;
    for (int i = 0; i < 25; ++i) {
      const Vertex a = uniform_index(grng, 60);
      Vertex b = uniform_index(grng, 59);
      if (b >= a) ++b;
      pairs.push_back({a, b});
    }
    ReffConfig cfg;
    cfg.exact = true;
    Philox4x32 rng(grng());
    const auto est = estimate_reff(g, pairs, 0.0, rng, cfg);
    const Eigen::MatrixXd lp = testutil::pinv(testutil::laplacian_by_position(g));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double exact = testutil::reff(lp, pairs[i].u, pairs[i].v);
      EXPECT_NEAR(est.values[i], exact, 1e-8 * exact);
    }
  }
}

TEST(Reff, LayerDistortionWithinBudget) {
  Philox4x32 grng(9);
  const Multigraph g = build_graph(random_connected_edges(128, 512, grng, true));
  std::vector<VertexPair> pairs;
  for (int i = 0; i < 20; ++i) {
    const Vertex a = uniform_index(grng, 128);
    Vertex b = uniform_index(grng, 127);
    if (b >= a) ++b;
    pairs.push_back({a, b});
  }
  ReffConfig cfg = practical();
  cfg.instrument = true;
  Philox4x32 rng(10);
  const auto est = estimate_reff(g, pairs, 0.25, rng, cfg);
  ASSERT_FALSE(est.layers.empty());
  for (double d : est.pair_log_distortion) EXPECT_LE(d, 0.25);
}

TEST(Reff, RandomGraphsMostlyWithinTolerance) {
  Philox4x32 grng(11);
  int good = 0;
  const int runs = 5;
  for (int t = 0; t < runs; ++t) {
    const Multigraph g = build_graph(random_connected_edges(128, 512, grng, true));
    std::vector<VertexPair> pairs;
    for (int i = 0; i < 20; ++i) {
      const Vertex a = uniform_index(grng, 128);
      Vertex b = uniform_index(grng, 127);
      if (b >= a) ++b;
      pairs.push_back({a, b});
    }
    Philox4x32 rng(grng());
    const auto est = estimate_reff(g, pairs, 0.25, rng, practical());
    const Eigen::MatrixXd lp = testutil::pinv(testutil::laplacian_by_position(g));
    bool ok = true;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      ok = ok && within(est.values[i], testutil::reff(lp, pairs[i].u, pairs[i].v), 0.25);
    }
    good += ok;
  }
  EXPECT_GE(good, runs - 1);
}

TEST(Reff, Errors) {
  const Multigraph g = build_graph(path_edges(5));
  Philox4x32 rng(12);
  EXPECT_EQ(code_of([&] { estimate_reff(g, std::vector<VertexPair>{{0, 5}}, 0.1, rng); }), ErrorCode::bad_pair);
  EXPECT_EQ(code_of([&] { estimate_reff(g, std::vector<VertexPair>{{2, 2}}, 0.1, rng); }), ErrorCode::bad_pair);
  EXPECT_EQ(code_of([&] { estimate_reff(g, std::vector<VertexPair>{{0, 1}}, 0.0, rng); }),
            ErrorCode::invalid_argument);
  const Multigraph split = build_graph({{0, 1, 1}, {2, 3, 1}});
  EXPECT_EQ(code_of([&] { estimate_reff(split, std::vector<VertexPair>{{0, 1}}, 0.1, rng); }),
            ErrorCode::disconnected);
}
