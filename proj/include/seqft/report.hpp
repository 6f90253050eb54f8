#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqft/benchmark.hpp"
#include "seqft/selector.hpp"

namespace seqft {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Result of one strategy on the final task of one triplet.
struct ReportRow {
  std::size_t triplet = 0;
  std::string config;
  std::string a;
  std::string b;
  std::string c;
  std::string strategy;
  std::vector<std::string> path;  // lineage of the checkpoint that initialised C
  double perf_auc = 0.0;
  double baseline_perf_auc = 0.0;
  double lower_bound = 0.0;
  double relative_percent = 0.0;
  double a_to_c = 0.0;  // pairwise A -> C, percent
  double b_to_c = 0.0;
  std::int64_t probe_steps = 0;
  std::string curve_ref;
};

struct RunReport {
  std::string benchmark;
  std::uint64_t seed = 0;
  std::int64_t budget = 0;
  std::vector<std::string> strategies;
  std::vector<ReportRow> rows;
  std::map<std::string, LearningCurve> curves;
  /// strategy (or "a_to_c" / "b_to_c") -> config -> median percent
  std::map<std::string, std::map<std::string, double>> medians;
};

struct RunSettings {
  std::vector<StrategyKind> strategies{StrategyKind::independent, StrategyKind::naive, StrategyKind::selective,
                                       StrategyKind::oracle};
  std::shared_ptr<Discriminator> discriminator;  // required when selective is requested
  RunOptions options;
  std::size_t jobs = 1;
};

/// Runs every requested strategy over every triplet. Rows come out in
/// (triplet, strategy) order whatever the job count.
RunReport run_benchmark(const Benchmark& benchmark, const std::string& benchmark_ref, Trainer& trainer,
                        std::uint64_t seed, const RunSettings& settings);

/// Per-config medians of each strategy and of the pairwise columns.
std::map<std::string, std::map<std::string, double>> compute_medians(const std::vector<ReportRow>& rows);

/// True when every relative PerfAUC and median recomputes exactly from the rows.
bool report_consistent(const RunReport& report);

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);
RunReport load_report(const std::filesystem::path& path);
void save_report(const RunReport& report, const std::filesystem::path& path);

/// Long-format CSV: triplet,strategy,step,perf with perf the running-minimum
/// loss. Rows whose curve reference is missing raise dangling_reference.
std::string export_curves_csv(const RunReport& report);

/// Re-import of export_curves_csv keyed by "<triplet>/<strategy>".
std::map<std::string, LearningCurve> import_curves_csv(const std::string& csv);

}  // namespace seqft
