#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "schurtree/error.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/random.hpp"

namespace schurtree {

inline std::vector<InputEdge> path_edges(std::uint64_t n, double w = 1.0) {
  std::vector<InputEdge> out;
  for (std::uint64_t i = 0; i + 1 < n; ++i) out.push_back({i, i + 1, w});
  return out;
}

inline std::vector<InputEdge> cycle_edges(std::uint64_t n, double w = 1.0) {
  auto out = path_edges(n, w);
  if (n > 2) out.push_back({n - 1, 0, w});
  return out;
}

inline std::vector<InputEdge> complete_edges(std::uint64_t n, double w = 1.0) {
  std::vector<InputEdge> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = i + 1; j < n; ++j) out.push_back({i, j, w});
  }
  return out;
}

inline std::vector<InputEdge> grid_edges(std::uint64_t rows, std::uint64_t cols, double w = 1.0) {
  std::vector<InputEdge> out;
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c) {
      const std::uint64_t v = r * cols + c;
      if (c + 1 < cols) out.push_back({v, v + 1, w});
      if (r + 1 < rows) out.push_back({v, v + cols, w});
    }
  }
  return out;
}

// Random spanning tree skeleton (vertex i attaches to a random earlier
// vertex) plus distinct extra edges up to m in total. Weights are 1, or
// uniform in [0.5, 2) when `weighted`.
template <FullRangeRng Rng>
std::vector<InputEdge> random_connected_edges(std::uint64_t n, std::uint64_t m, Rng& rng,
                                              bool weighted = false) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "need at least two vertices");
  const std::uint64_t max_m = n * (n - 1) / 2;
  if (m < n - 1 || m > max_m) throw Error(ErrorCode::invalid_argument, "edge count out of range");
  auto weight = [&] { return weighted ? 0.5 + 1.5 * uniform01(rng) : 1.0; };
  std::vector<InputEdge> out;
  std::set<std::pair<std::uint64_t, std::uint64_t>> used;
  for (std::uint64_t i = 1; i < n; ++i) {
    const std::uint64_t j = uniform_index(rng, i);
    used.emplace(j, i);
    out.push_back({j, i, weight()});
  }
  while (out.size() < m) {
    std::uint64_t a = uniform_index(rng, n);
    std::uint64_t b = uniform_index(rng, n);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.emplace(a, b).second) continue;
    out.push_back({a, b, weight()});
  }
  return out;
}

// Named families for benchmarks: path, cycle, grid, complete, random
// (random has about 4n edges).
template <FullRangeRng Rng>
std::vector<InputEdge> family_edges(std::string_view family, std::uint64_t n, Rng& rng) {
  if (family == "path") return path_edges(n);
  if (family == "cycle") return cycle_edges(n);
  if (family == "complete") return complete_edges(n);
  if (family == "grid") {
    std::uint64_t side = 1;
    while ((side + 1) * (side + 1) <= n) ++side;
    return grid_edges(side, (n + side - 1) / side);
  }
  if (family == "random") {
    const std::uint64_t max_m = n * (n - 1) / 2;
    return random_connected_edges(n, std::min<std::uint64_t>(max_m, 4 * n), rng, true);
  }
  throw Error(ErrorCode::invalid_argument, "unknown graph family '" + std::string(family) + "'");
}

}  // namespace schurtree
