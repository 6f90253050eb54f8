#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "seqft/engine.hpp"

namespace seqft {

/// One row of the published task metadata table.
struct TaskMetadata {
  std::string name;
  std::string family;
  std::int64_t train = 0;
  std::int64_t validation = 0;
  std::int64_t test = 0;
  std::string metric;
};

/// A printed median; `decimals` is the number of digits shown after the point.
struct PrintedMedian {
  std::string config;
  std::string column;
  double value = 0.0;
  int decimals = 0;
};

/// (table, row, leg) entries whose config tag is known to disagree with the
/// point-value labelling rule.
using LabelExceptions = std::set<std::tuple<std::string, int, std::string>>;

struct FixtureSet {
  std::vector<TripletResultRow> rows;  // tables c1..c8, 16 rows each
  std::vector<PrintedMedian> medians;  // config x column
  std::vector<TaskMetadata> tasks;
  std::vector<std::string> families;
  std::int64_t unique_pairs_evaluated = 0;
  OracleExceptions oracle_exceptions;
  LabelExceptions label_exceptions;
};

/// Loads the fixture directory. With `verify_checksums`, every file listed in
/// MANIFEST.json must hash to its recorded FNV-1a 64 digest.
FixtureSet load_fixtures(const std::filesystem::path& dir, bool verify_checksums = true);

/// FNV-1a 64 of a file's bytes, as 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

inline constexpr double kPreRoundingTolerance = 0.005;

struct MedianCheck {
  std::string config;
  std::string column;
  double recomputed = 0.0;
  double printed = 0.0;
  int decimals = 0;
  bool gated = false;  // method columns count toward the pass mark; pairwise ones are informational
  bool match = false;
};

struct MedianReport {
  std::vector<MedianCheck> cells;
  std::size_t gated_total = 0;
  std::size_t gated_matched = 0;
  std::size_t required = 23;

  std::vector<MedianCheck> discrepancies() const;
  bool ok() const noexcept { return gated_matched >= required; }
};

/// Recomputes every printed median from the per-row tables. A cell matches when
/// |recomputed - printed| <= half a unit in the last printed digit + 0.005.
MedianReport verify_medians(const FixtureSet& fixtures);

struct LabelViolation {
  std::string table;
  int row = 0;
  std::string leg;
  double value = 0.0;
  std::string expected;
  std::string tagged;
};

struct LabelReport {
  std::size_t legs_checked = 0;
  std::vector<LabelViolation> violations;
  std::vector<LabelViolation> excused;

  bool ok() const noexcept { return violations.empty(); }
};

/// Labels each pairwise column as a single-trial record and compares with the tag.
LabelReport verify_labels(const FixtureSet& fixtures);

struct FixtureVerification {
  MedianReport medians;
  OracleCheckReport oracle;
  LabelReport labels;

  bool ok() const noexcept { return medians.ok() && oracle.ok() && labels.ok(); }
};

FixtureVerification verify_fixtures(const FixtureSet& fixtures);

nlohmann::json to_json(const FixtureVerification& verification);

}  // namespace seqft
