#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqft/backend.hpp"
#include "seqft/benchmark.hpp"
#include "seqft/external_backend.hpp"

namespace seqft {

struct WorldOptions {
  std::size_t families = 6;
  std::size_t tasks_per_family = 4;
  Eigen::Index group_dim = 8;
  double noise_sigma = 0.002;
  /// Probability that a same-family pair is positive / negative (rest neutral).
  double same_family_positive = 0.6;
  double same_family_negative = 0.1;
  /// Same for cross-family pairs.
  double cross_family_positive = 0.25;
  double cross_family_negative = 0.3;
};

/// A generated synthetic environment: tasks with closed-form learners and a
/// pairwise transfer-effect matrix.
struct World {
  TaskRegistry tasks;
  TransferEffectMatrix effects;
  ParameterState root;
  double noise_sigma = 0.0;
};

World generate_world(const WorldOptions& options, std::uint64_t seed);

std::unique_ptr<SyntheticBackend> make_backend(const World& world);

/// Pairwise relative PerfAUC records (percent), trial k using seed + k, so
/// trial 0 coincides with a run at `seed`. Records come back labeled.
std::vector<TransferRecord> measure_pairs(Backend& backend, std::span<const std::pair<std::string, std::string>> pairs,
                                          std::size_t trials, std::int64_t budget, std::uint64_t seed);

/// Every ordered pair of distinct tasks in the registry.
std::vector<std::pair<std::string, std::string>> all_pairs(const TaskRegistry& registry);

nlohmann::json to_json(const World& world);
World world_from_json(const nlohmann::json& j);

/// Backend configuration: a synthetic world ({"kind": "synthetic", ...}) or
/// an external worker ({"kind": "external", "command": [...], "workdir",
/// "timeout_seconds", "tasks", "root_state"}).
std::unique_ptr<Backend> load_backend(const std::filesystem::path& path);
std::unique_ptr<Backend> backend_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

}  // namespace seqft
