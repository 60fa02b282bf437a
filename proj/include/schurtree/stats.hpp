#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "schurtree/dense_oracle.hpp"
#include "schurtree/error.hpp"
#include "schurtree/graph.hpp"

namespace schurtree {

// Canonical key of a tree: sorted edge ids joined by '-'.
inline std::string tree_key(std::span<const EdgeId> tree) {
  std::vector<EdgeId> sorted(tree.begin(), tree.end());
  std::sort(sorted.begin(), sorted.end());
  std::string key;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i) key += '-';
    key += Multigraph::describe(sorted[i]);
  }
  return key;
}

struct DistributionTestReport {
  std::map<std::string, std::uint64_t> observed;
  std::map<std::string, double> expected;
  std::uint64_t samples = 0;
  std::uint64_t outside_support = 0;
  double statistic = 0.0;
  int dof = 0;
  double pvalue = 1.0;
  double tv_distance = 0.0;
  double alpha = 0.001;
  bool pass = false;
};

// Chi-square goodness of fit of sampled trees against the weights of all
// spanning trees (as produced by enumerate_trees).
inline DistributionTestReport distribution_test(const std::map<TreeKey, double>& tree_weights,
                                                std::span<const std::vector<EdgeId>> samples,
                                                double alpha = 0.001) {
  DistributionTestReport rep;
  rep.alpha = alpha;
  rep.samples = samples.size();
  double total = 0.0;
  for (const auto& [tree, w] : tree_weights) total += w;
  double min_p = 1.0;
  for (const auto& [tree, w] : tree_weights) {
    const std::string key = tree_key(tree);
    rep.expected[key] = w / total;
    rep.observed[key] = 0;
    min_p = std::min(min_p, w / total);
  }
  if (static_cast<double>(samples.size()) * min_p < 10.0) {
    throw Error(ErrorCode::undersampled_cell, "expected count below 10 in some cell");
  }
  for (const auto& s : samples) {
    const std::string key = tree_key(s);
    auto it = rep.observed.find(key);
    if (it == rep.observed.end() || rep.expected.find(key) == rep.expected.end()) {
      ++rep.outside_support;
      ++rep.observed[key];
    } else {
      ++it->second;
    }
  }
  const double n = static_cast<double>(samples.size());
  double chi = 0.0;
  double tv = 0.0;
  for (const auto& [key, count] : rep.observed) {
    auto e = rep.expected.find(key);
    const double p = e == rep.expected.end() ? 0.0 : e->second;
    const double freq = static_cast<double>(count) / n;
    tv += std::abs(freq - p);
    if (p > 0.0) {
      const double diff = static_cast<double>(count) - n * p;
      chi += diff * diff / (n * p);
    }
  }
  rep.tv_distance = 0.5 * tv;
  rep.dof = static_cast<int>(rep.expected.size()) - 1;
  if (rep.outside_support > 0) {
    rep.statistic = std::numeric_limits<double>::infinity();
    rep.pvalue = 0.0;
  } else {
    rep.statistic = chi;
    if (rep.dof == 0) {
      rep.pvalue = 1.0;
    } else {
      boost::math::chi_squared dist(static_cast<double>(rep.dof));
      rep.pvalue = boost::math::cdf(boost::math::complement(dist, chi));
    }
  }
  rep.pass = rep.pvalue >= alpha;
  return rep;
}

// Draws n_samples trees from `sampler(i)` and tests them against the
// enumerated distribution of g.
inline DistributionTestReport tree_distribution_test(
    const Multigraph& g, const std::function<std::vector<EdgeId>(std::uint64_t)>& sampler,
    std::uint64_t n_samples, double alpha = 0.001) {
  const auto trees = enumerate_trees(g);
  double total = 0.0, min_w = std::numeric_limits<double>::infinity();
  for (const auto& [t, w] : trees) {
    total += w;
    min_w = std::min(min_w, w);
  }
  if (static_cast<double>(n_samples) * min_w / total < 10.0) {
    throw Error(ErrorCode::undersampled_cell, "expected count below 10 in some cell");
  }
  std::vector<std::vector<EdgeId>> samples;
  samples.reserve(n_samples);
  for (std::uint64_t i = 0; i < n_samples; ++i) samples.push_back(sampler(i));
  return distribution_test(trees, samples, alpha);
}

struct EdgeMarginal {
  EdgeId edge;
  double frequency = 0.0;
  double leverage = 0.0;
  double sigma = 0.0;
  bool within = false;
};

struct MarginalReport {
  std::vector<EdgeMarginal> edges;
  std::uint64_t samples = 0;
  double fraction_within = 0.0;
  bool pass = false;
};

// Per-edge inclusion frequency against exact leverage; passes when at
// least 95% of edges lie within 3 standard errors.
inline MarginalReport marginal_test(const Multigraph& g, std::span<const std::vector<EdgeId>> samples) {
  require_connected(g);
  const std::vector<double> lev = leverage_scores_exact(g);
  const auto edges = g.edges();
  std::map<EdgeId, std::uint64_t> hits;
  for (const auto& s : samples) {
    for (EdgeId e : s) ++hits[e];
  }
  MarginalReport rep;
  rep.samples = samples.size();
  const double n = static_cast<double>(samples.size());
  std::size_t within = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    EdgeMarginal m;
    m.edge = edges[i].id;
    m.leverage = lev[i];
    m.frequency = n > 0 ? static_cast<double>(hits[m.edge]) / n : 0.0;
    m.sigma = std::sqrt(std::max(0.0, m.leverage * (1.0 - m.leverage)) / std::max(1.0, n));
    m.within = std::abs(m.frequency - m.leverage) <= 3.0 * m.sigma + 1e-12;
    within += m.within ? 1 : 0;
    rep.edges.push_back(m);
  }
  rep.fraction_within = edges.empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(edges.size());
  rep.pass = rep.fraction_within >= 0.95;
  return rep;
}

inline MarginalReport marginal_test(const Multigraph& g,
                                    const std::function<std::vector<EdgeId>(std::uint64_t)>& sampler,
                                    std::uint64_t n_samples) {
  std::vector<std::vector<EdgeId>> samples;
  samples.reserve(n_samples);
  for (std::uint64_t i = 0; i < n_samples; ++i) samples.push_back(sampler(i));
  return marginal_test(g, samples);
}

struct ExpectationReport {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd stddev;
  std::uint64_t draws = 0;
  double max_excess = 0.0;  // max over entries of |mean - exact| / (sd / sqrt(n))
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  bool pass = false;
};

// Entrywise Monte Carlo check that E[draw] = exact:
// |mean - exact| <= tol_sigma * sd / sqrt(n) + 1e-12 for every entry.
inline ExpectationReport expectation_test(const std::function<Eigen::MatrixXd(std::uint64_t)>& draw,
                                          const Eigen::MatrixXd& exact, std::uint64_t n_draws,
                                          double tol_sigma = 4.0) {
  if (n_draws < 1000) throw Error(ErrorCode::invalid_argument, "expectation test needs >= 1000 draws");
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(exact.rows(), exact.cols());
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(exact.rows(), exact.cols());
  for (std::uint64_t i = 0; i < n_draws; ++i) {
    const Eigen::MatrixXd x = draw(i);
    if (x.rows() != exact.rows() || x.cols() != exact.cols()) {
      throw Error(ErrorCode::invalid_argument, "draw has the wrong shape");
    }
    const Eigen::MatrixXd delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct(x - mean);
  }
  ExpectationReport rep;
  rep.draws = n_draws;
  rep.mean = mean;
  rep.stddev = (m2 / static_cast<double>(n_draws - 1)).cwiseSqrt();
  rep.pass = true;
  const double root_n = std::sqrt(static_cast<double>(n_draws));
  for (Eigen::Index i = 0; i < exact.rows(); ++i) {
    for (Eigen::Index j = 0; j < exact.cols(); ++j) {
      const double dev = std::abs(mean(i, j) - exact(i, j));
      const double se = rep.stddev(i, j) / root_n;
      if (dev > tol_sigma * se + 1e-12) rep.pass = false;
      const double excess = se > 0.0 ? dev / se : (dev > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
      if (excess > rep.max_excess) {
        rep.max_excess = excess;
        rep.worst_row = i;
        rep.worst_col = j;
      }
    }
  }
  return rep;
}

// Runs a randomized check once and, on failure, once more on an
// independent seed; passes if either run passes.
inline bool with_retry(const std::function<bool(std::uint64_t)>& check, std::uint64_t seed,
                       std::uint64_t retry_seed) {
  return check(seed) || check(retry_seed);
}

}  // namespace schurtree
