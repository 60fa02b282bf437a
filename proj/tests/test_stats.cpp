#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "schurtree/generators.hpp"
#include "schurtree/stats.hpp"
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

// Categorical sampler over brute-force enumerated trees, with weights
// optionally distorted by `bias` on the first tree.
struct ReferenceSampler {
  std::vector<std::vector<EdgeId>> trees;
  std::vector<double> cumulative;

  ReferenceSampler(const std::vector<InputEdge>& in, int n, double bias = 1.0) {
    double total = 0.0;
    bool first = true;
    for (const auto& [ids, w] : testutil::brute_force_trees(n, testutil::plain_edges(in))) {
      std::vector<EdgeId> t;
      for (std::uint64_t id : ids) t.push_back(EdgeId{id});
      trees.push_back(t);
      total += first ? w * bias : w;
      first = false;
      cumulative.push_back(total);
    }
    for (double& c : cumulative) c /= total;
  }

  std::vector<EdgeId> draw(Philox4x32& rng) const {
    const double r = uniform01(rng);
    std::size_t i = 0;
    while (i + 1 < cumulative.size() && r >= cumulative[i]) ++i;
    return trees[i];
  }
};

}  // namespace

TEST(TreeKey, SortedAndJoined) {
  const std::vector<EdgeId> t{EdgeId{5}, EdgeId{2}, EdgeId{11}};
  EXPECT_EQ(tree_key(t), "2-5-11");
  EXPECT_EQ(tree_key(std::vector<EdgeId>{}), "");
}

TEST(DistributionTest, WeightedTriangleExpectations) {
  const std::vector<InputEdge> in{{0, 1, 1}, {1, 2, 2}, {2, 0, 3}};
  const Multigraph g = build_graph(in);
  ReferenceSampler ref(in, 3);
  Philox4x32 rng(1);
  const auto rep = tree_distribution_test(g, [&](std::uint64_t) { return ref.draw(rng); }, 5000);
  EXPECT_NEAR(rep.expected.at("0-1"), 2.0 / 11.0, 1e-12);
  EXPECT_NEAR(rep.expected.at("0-2"), 3.0 / 11.0, 1e-12);
  EXPECT_NEAR(rep.expected.at("1-2"), 6.0 / 11.0, 1e-12);
  EXPECT_EQ(rep.dof, 2);
  EXPECT_EQ(rep.samples, 5000u);
}

TEST(DistributionTest, ExactSamplerPasses) {
  const std::vector<InputEdge> in = complete_edges(4);
  const Multigraph g = build_graph(in);
  ReferenceSampler ref(in, 4);
  const bool ok = with_retry(
      [&](std::uint64_t seed) {
        Philox4x32 rng(seed);
        return tree_distribution_test(g, [&](std::uint64_t) { return ref.draw(rng); }, 32000).pass;
      },
      2, 3);
  EXPECT_TRUE(ok);
}

TEST(DistributionTest, BiasedSamplerFails) {
  const std::vector<InputEdge> in = complete_edges(4);
  const Multigraph g = build_graph(in);
  ReferenceSampler ref(in, 4, 1.5);
  Philox4x32 rng(4);
  const auto rep = tree_distribution_test(g, [&](std::uint64_t) { return ref.draw(rng); }, 32000);
  EXPECT_FALSE(rep.pass);
  EXPECT_LT(rep.pvalue, 1e-6);
}

TEST(DistributionTest, NonTreeIsOutsideSupport) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  const auto rep = tree_distribution_test(
      g, [&](std::uint64_t i) { return i == 0 ? std::vector<EdgeId>{EdgeId{0}} : std::vector<EdgeId>{EdgeId{0}, EdgeId{1}}; },
      100);
  EXPECT_EQ(rep.outside_support, 1u);
  EXPECT_FALSE(rep.pass);
}

TEST(DistributionTest, Undersampled) {
  const Multigraph g = build_graph(complete_edges(4));
  EXPECT_EQ(code_of([&] {
              tree_distribution_test(g, [](std::uint64_t) { return std::vector<EdgeId>{}; }, 100);
            }),
            ErrorCode::undersampled_cell);
}

TEST(MarginalTest, K4ExactSamplerPasses) {
  const std::vector<InputEdge> in = complete_edges(4);
  const Multigraph g = build_graph(in);
  ReferenceSampler ref(in, 4);
  Philox4x32 rng(5);
  const auto rep = marginal_test(g, [&](std::uint64_t) { return ref.draw(rng); }, 4000);
  ASSERT_EQ(rep.edges.size(), 6u);
  for (const auto& e : rep.edges) EXPECT_NEAR(e.leverage, 0.5, 1e-12);
  EXPECT_TRUE(rep.pass);
}

TEST(MarginalTest, TreeEdgesHaveUnitLeverage) {
  const Multigraph g = build_graph({{0, 1, 1}, {1, 2, 4}, {1, 3, 2}});
  const std::vector<EdgeId> all{EdgeId{0}, EdgeId{1}, EdgeId{2}};
  const auto rep = marginal_test(g, [&](std::uint64_t) { return all; }, 10);
  for (const auto& e : rep.edges) {
    EXPECT_NEAR(e.leverage, 1.0, 1e-12);
    EXPECT_EQ(e.frequency, 1.0);
  }
  EXPECT_TRUE(rep.pass);
}

TEST(MarginalTest, ParallelPairBiasDetected) {
  const Multigraph g = build_graph({{0, 1, 2.0}, {0, 1, 3.0}});
  Philox4x32 rng(6);
  const auto fair = marginal_test(
      g, [&](std::uint64_t) { return std::vector<EdgeId>{EdgeId{uniform01(rng) < 0.4 ? 0u : 1u}}; }, 10000);
  EXPECT_TRUE(fair.pass);
  EXPECT_NEAR(fair.edges[0].leverage, 0.4, 1e-12);
  const auto biased = marginal_test(
      g, [&](std::uint64_t) { return std::vector<EdgeId>{EdgeId{uniform01(rng) < 0.5 ? 0u : 1u}}; }, 10000);
  EXPECT_FALSE(biased.pass);
}

TEST(ExpectationTest, ConstantDrawPasses) {
  const Eigen::MatrixXd exact = Eigen::MatrixXd::Identity(3, 3);
  const auto rep = expectation_test([&](std::uint64_t) { return exact; }, exact, 1000);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.max_excess, 0.0);
}

TEST(ExpectationTest, UnbiasedAndBiasedNoise) {
  Philox4x32 rng(7);
  const Eigen::MatrixXd exact = Eigen::MatrixXd::Constant(2, 2, 1.0);
  auto noisy = [&](double shift) {
    return [&, shift](std::uint64_t) {
      Eigen::MatrixXd x(2, 2);
      for (Eigen::Index i = 0; i < 4; ++i) x(i) = 1.0 + shift + (uniform01(rng) - 0.5);
      return x;
    };
  };
  EXPECT_TRUE(expectation_test(noisy(0.0), exact, 20000).pass);
  const auto bad = expectation_test(noisy(0.05), exact, 20000);
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(bad.max_excess, 4.0);
}

TEST(ExpectationTest, Errors) {
  const Eigen::MatrixXd exact = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_EQ(code_of([&] { expectation_test([&](std::uint64_t) { return exact; }, exact, 999); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] {
              expectation_test([](std::uint64_t) { return Eigen::MatrixXd::Identity(3, 3).eval(); }, exact, 1000);
            }),
            ErrorCode::invalid_argument);
}

TEST(WithRetry, SecondSeedRescues) {
  EXPECT_TRUE(with_retry([](std::uint64_t s) { return s == 2; }, 1, 2));
  EXPECT_FALSE(with_retry([](std::uint64_t) { return false; }, 1, 2));
}
