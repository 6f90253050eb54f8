#pragma once

// Newline-delimited JSON exchanged with external trainer workers.
//
// request:  {"task_id", "budget", "eval_steps", "seed",
//            "init": {"lineage": [...], "state_ref": path}}
// response: {"curve": [[step, value], ...],
//            "probe": {"loss0", "loss5", "metric0", "metric5"},
//            "state_ref": path, "best_step"?: int, "final_state_ref"?: path}
//
// Parameter states travel by file reference (see write_state/read_state).

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "seqft/backend.hpp"

namespace seqft {

struct WireRequest {
  std::string task_id;
  std::int64_t budget = 0;
  std::vector<std::int64_t> eval_steps;
  std::uint64_t seed = 0;
  std::vector<std::string> lineage;
  std::string state_ref;
};

struct WireResponse {
  LearningCurve curve;
  Probe probe;
  std::string state_ref;
  std::optional<std::int64_t> best_step;
  std::optional<std::string> final_state_ref;
};

nlohmann::json encode_request(const WireRequest& request);
WireRequest decode_request(const nlohmann::json& j);

nlohmann::json encode_response(const WireResponse& response);

/// Parses a response object. Curve problems surface as missing_step_zero,
/// non_monotone_steps or non_finite_value; schema problems as malformed_response.
WireResponse decode_response(const nlohmann::json& j);

/// Parses one protocol line. Bare NaN/Infinity tokens (as emitted by some JSON
/// writers) are read as null so that they fail curve validation rather than
/// the parser.
nlohmann::json parse_line(std::string_view line);

/// Serialises one protocol line (compact JSON plus '\n').
std::string to_line(const nlohmann::json& j);

/// Builds a TrainResult from a decoded response, loading states relative to
/// `workdir`, and validates it against the originating request.
TrainResult to_train_result(const WireResponse& response, const TrainRequest& request,
                            const std::filesystem::path& workdir);

}  // namespace seqft
