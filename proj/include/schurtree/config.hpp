#pragma once

#include <cstddef>
#include <cstdint>

namespace schurtree {

// Constants of the randomized Schur-complement stack.
struct ApproxConfig {
  // JL sketch length is ceil(c_jl * ln(n / delta)).
  double c_jl = 48.0;
  // Sparsifier sample count is ceil(c_sp * n * eps^-2 * ln(n / delta)).
  double c_sp = 16.0;
  // Multiplier on the edge-splitting count
  //   rho_e = ceil(tau_e * 12 * (eps/2)^-2 * ln^2(3n / delta)).
  // 1.0 is the textbook value; smaller values trade the worst-case guarantee
  // for speed.
  double split_scale = 1.0;
  // Graphs with at most this many vertices use exact leverage scores.
  std::size_t exact_leverage_max_n = 64;
  // By default the sparsifier is skipped when the Schur complement already
  // has no more distinct vertex pairs than the sparsifier would sample.
  bool sparsify_small_graphs = false;
  // Upper bound on the number of split multi-edges in one elimination.
  std::uint64_t copy_budget = 20'000'000;
};

// Practical split multipliers, calibrated so that each use meets its
// accuracy target on desk-scale inputs while staying fast. The textbook
// value 1.0 makes a single K4 tree cost seconds.
inline constexpr double kSchurSplitScale = 1e-3;
inline constexpr double kReffSplitScale = 1e-4;
inline constexpr double kSamplerSplitScale = 1e-5;

}  // namespace schurtree
