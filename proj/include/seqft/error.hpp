#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqft {

// Machine-readable failure categories. The CLI maps these onto exit codes
// and prints them verbatim in its error object.
enum class ErrorCode {
  invalid_argument,
  empty_input,
  invalid_curve,
  non_monotone_steps,
  non_finite_value,
  below_lower_bound,
  missing_step_zero,
  missing_anchor,
  budget_out_of_range,
  degenerate_baseline,
  layout_mismatch,
  missing_synthetic_params,
  unknown_task,
  unknown_checkpoint,
  missing_probe,
  single_class,
  feature_mismatch,
  manifest_mismatch,
  depth_exceeded,
  eval_step_mismatch,
  malformed_response,
  worker_launch_failed,
  worker_timeout,
  worker_failed,
  io_error,
  schema_mismatch,
  checksum_mismatch,
  benchmark_not_found,
  backend_failure,
  dangling_reference,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::invalid_curve: return "invalid_curve";
    case ErrorCode::non_monotone_steps: return "non_monotone_steps";
    case ErrorCode::non_finite_value: return "non_finite_value";
    case ErrorCode::below_lower_bound: return "below_lower_bound";
    case ErrorCode::missing_step_zero: return "missing_step_zero";
    case ErrorCode::missing_anchor: return "missing_anchor";
    case ErrorCode::budget_out_of_range: return "budget_out_of_range";
    case ErrorCode::degenerate_baseline: return "degenerate_baseline";
    case ErrorCode::layout_mismatch: return "layout_mismatch";
    case ErrorCode::missing_synthetic_params: return "missing_synthetic_params";
    case ErrorCode::unknown_task: return "unknown_task";
    case ErrorCode::unknown_checkpoint: return "unknown_checkpoint";
    case ErrorCode::missing_probe: return "missing_probe";
    case ErrorCode::single_class: return "single_class";
    case ErrorCode::feature_mismatch: return "feature_mismatch";
    case ErrorCode::manifest_mismatch: return "manifest_mismatch";
    case ErrorCode::depth_exceeded: return "depth_exceeded";
    case ErrorCode::eval_step_mismatch: return "eval_step_mismatch";
    case ErrorCode::malformed_response: return "malformed_response";
    case ErrorCode::worker_launch_failed: return "worker_launch_failed";
    case ErrorCode::worker_timeout: return "worker_timeout";
    case ErrorCode::worker_failed: return "worker_failed";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::schema_mismatch: return "schema_mismatch";
    case ErrorCode::checksum_mismatch: return "checksum_mismatch";
    case ErrorCode::benchmark_not_found: return "benchmark_not_found";
    case ErrorCode::backend_failure: return "backend_failure";
    case ErrorCode::dangling_reference: return "dangling_reference";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seqft
