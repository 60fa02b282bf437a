#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace schurtree {

enum class ErrorCode {
  non_positive_weight,
  self_loop_input,
  empty_input,
  unknown_edge,
  too_few_vertices,
  disconnected,
  same_vertex,
  singular_block,
  too_large,
  null_space_mismatch,
  step_budget_exceeded,
  not_orthogonal,
  isolated_vertex,
  empty_keep,
  level_out_of_range,
  dead_edge,
  bad_pair,
  undersampled_cell,
  budget_exceeded,
  invalid_argument,
  parse_error,
  internal,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::non_positive_weight: return "NonPositiveWeight";
    case ErrorCode::self_loop_input: return "SelfLoopInput";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::unknown_edge: return "UnknownEdge";
    case ErrorCode::too_few_vertices: return "TooFewVertices";
    case ErrorCode::disconnected: return "Disconnected";
    case ErrorCode::same_vertex: return "SameVertex";
    case ErrorCode::singular_block: return "SingularBlock";
    case ErrorCode::too_large: return "TooLarge";
    case ErrorCode::null_space_mismatch: return "NullSpaceMismatch";
    case ErrorCode::step_budget_exceeded: return "StepBudgetExceeded";
    case ErrorCode::not_orthogonal: return "NotOrthogonal";
    case ErrorCode::isolated_vertex: return "IsolatedVertex";
    case ErrorCode::empty_keep: return "EmptyKeep";
    case ErrorCode::level_out_of_range: return "LevelOutOfRange";
    case ErrorCode::dead_edge: return "DeadEdge";
    case ErrorCode::bad_pair: return "BadPair";
    case ErrorCode::undersampled_cell: return "UndersampledCell";
    case ErrorCode::budget_exceeded: return "BudgetExceeded";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::internal: return "Internal";
  }
  return "Unknown";
}

// Every failure in the library surfaces as this exception; `code()` is the
// stable, machine-readable part, `what()` carries the human context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace schurtree
