#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "seqft/task.hpp"

namespace seqft {

enum class TransferLabel { positive, negative, neutral, unlabeled };

std::string_view label_name(TransferLabel label);
TransferLabel parse_label(std::string_view name);

/// Relative PerfAUC of `target` initialised from `source`, one value per trial (percent).
struct TransferRecord {
  std::string source_task;
  std::string target_task;
  std::vector<double> trials;
  TransferLabel label = TransferLabel::unlabeled;
};

inline constexpr double kLabelThresholdPercent = 5.0;

/// positive iff every trial is above +threshold, negative iff every trial is
/// below -threshold, neutral otherwise.
TransferLabel label_pair(const TransferRecord& record, double threshold = kLabelThresholdPercent);

/// Labels every record in place.
void label_records(std::span<TransferRecord> records, double threshold = kLabelThresholdPercent);

struct FamilySearchResult {
  std::set<std::pair<std::string, std::string>> pairs;  // (source task, target task)
  std::size_t candidate_count = 0;
};

/// Family-level search. `scores(i, j)` is the transfer score of source family i
/// into target family j. For each target family the K best and K worst source
/// families are kept and expanded to all distinct member task pairs.
FamilySearchResult family_search(const Eigen::MatrixXd& scores, const TaskRegistry& registry, std::size_t k = 3);

/// Polarities of (A -> C, B -> C).
struct TripletConfig {
  TransferLabel a_to_c = TransferLabel::neutral;
  TransferLabel b_to_c = TransferLabel::neutral;

  std::string name() const;  // e.g. "positive/negative"
  friend auto operator<=>(const TripletConfig&, const TripletConfig&) = default;
};

/// The eight configurations, neutral/neutral excluded.
const std::array<TripletConfig, 8>& triplet_configs();
TripletConfig parse_config(std::string_view name);

struct TripletSpec {
  std::string a;
  std::string b;
  std::string c;
  TripletConfig config;
  std::vector<std::string> provenance;  // "source->target" record keys

  std::vector<std::string> sequence() const { return {a, b, c}; }
};

struct ConfigShortfall {
  TripletConfig config;
  std::size_t requested = 0;
  std::size_t built = 0;
  std::string reason;
};

struct TripletBuild {
  std::vector<TripletSpec> triplets;
  std::vector<ConfigShortfall> shortfalls;

  bool complete() const noexcept { return shortfalls.empty(); }
};

/// Seeded sampling without replacement of target tasks and (A, B) pairs per
/// configuration. Insufficient data yields a partial build with shortfalls.
TripletBuild build_triplets(std::span<const TransferRecord> records, std::size_t per_config_targets = 4,
                            std::size_t pairs_per_target = 4, std::uint64_t seed = 0);

struct Benchmark {
  std::vector<TaskSpec> tasks;
  std::vector<TripletSpec> triplets;
};

nlohmann::json to_json(const TransferRecord& record);
TransferRecord record_from_json(const nlohmann::json& j);
nlohmann::json records_to_json(std::span<const TransferRecord> records);
std::vector<TransferRecord> records_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Benchmark& benchmark);
Benchmark benchmark_from_json(const nlohmann::json& j);

/// Reads a benchmark file; a missing file raises benchmark_not_found.
Benchmark load_benchmark(const std::filesystem::path& path);
void save_benchmark(const Benchmark& benchmark, const std::filesystem::path& path);

}  // namespace seqft
