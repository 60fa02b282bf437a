#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "schurtree/error.hpp"

namespace schurtree {

using Vertex = std::uint32_t;

// A dense Laplacian together with the vertex label of each row.
// Rows follow the order of `vertices`, which is kept sorted.
struct DenseLaplacian {
  std::vector<Vertex> vertices;
  Eigen::MatrixXd matrix;

  std::size_t order() const { return vertices.size(); }

  std::size_t index_of(Vertex v) const {
    auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
    if (it == vertices.end() || *it != v) {
      throw Error(ErrorCode::invalid_argument, "vertex not in Laplacian support");
    }
    return static_cast<std::size_t>(it - vertices.begin());
  }

  bool contains(Vertex v) const {
    return std::binary_search(vertices.begin(), vertices.end(), v);
  }

  double max_abs_entry() const {
    return matrix.size() == 0 ? 0.0 : matrix.cwiseAbs().maxCoeff();
  }

  // Symmetric, zero row sums, non-positive off-diagonal (relative tolerance).
  bool is_laplacian(double rel_tol = 1e-9) const {
    const double scale = std::max(1.0, max_abs_entry());
    const auto n = static_cast<Eigen::Index>(order());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(matrix.row(i).sum()) > rel_tol * scale) return false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(matrix(i, j) - matrix(j, i)) > rel_tol * scale) return false;
        if (i != j && matrix(i, j) > rel_tol * scale) return false;
      }
    }
    return true;
  }
};

}  // namespace schurtree
