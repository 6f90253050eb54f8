#include "seqft/fixtures.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "seqft/benchmark.hpp"
#include "seqft/error.hpp"
#include "seqft/metrics.hpp"
#include "seqft/rng.hpp"

namespace seqft {

namespace {

using nlohmann::json;

constexpr const char* kTables[] = {"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8"};
constexpr const char* kTableFiles[] = {"table_c1_pos_pos.csv", "table_c2_pos_neg.csv", "table_c3_pos_neu.csv",
                                       "table_c4_neg_pos.csv", "table_c5_neg_neg.csv", "table_c6_neg_neu.csv",
                                       "table_c7_neu_pos.csv", "table_c8_neu_neg.csv"};
constexpr const char* kColumns[] = {"a_to_c", "b_to_c", "naive", "selective", "oracle"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read fixture " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

/// Rows of a CSV file with the given header; blank lines skipped.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& header) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (!seen_header) {
      if (fields != header) throw Error(ErrorCode::schema_mismatch, path.filename().string() + ": unexpected header");
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::schema_mismatch, path.filename().string() + ": row " +
                                                  std::to_string(rows.size() + 1) + " has " +
                                                  std::to_string(fields.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  if (!seen_header) throw Error(ErrorCode::schema_mismatch, path.filename().string() + ": missing header");
  return rows;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw Error(ErrorCode::schema_mismatch, where + ": '" + text + "' is not a finite number");
  }
  return v;
}

int parse_int(const std::string& text, const std::string& where) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::schema_mismatch, where + ": '" + text + "' is not an integer");
  }
  return v;
}

int decimals_of(const std::string& text) {
  const auto dot = text.find('.');
  return dot == std::string::npos ? 0 : static_cast<int>(text.size() - dot - 1);
}

double column_value(const TripletResultRow& r, const std::string& column) {
  if (column == "a_to_c") return r.a_to_c;
  if (column == "b_to_c") return r.b_to_c;
  if (column == "naive") return r.naive;
  if (column == "selective") return r.selective;
  return r.oracle;
}

void verify_manifest(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "MANIFEST.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad fixture manifest: ") + e.what());
  }
  if (manifest.value("hash", std::string()) != "fnv1a64" || !manifest.contains("files")) {
    throw Error(ErrorCode::schema_mismatch, "fixture manifest must list fnv1a64 digests");
  }
  for (const auto& [name, digest] : manifest.at("files").items()) {
    const auto actual = file_digest(dir / name);
    if (actual != digest.get<std::string>()) {
      throw Error(ErrorCode::checksum_mismatch, name + ": digest " + actual + " != recorded " +
                                                    digest.get<std::string>());
    }
  }
}

}  // namespace

std::string file_digest(const std::filesystem::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(read_file(path))));
  return buf;
}

FixtureSet load_fixtures(const std::filesystem::path& dir, bool verify_checksums) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::io_error, "fixture directory " + dir.string() + " not found");
  }
  if (verify_checksums) verify_manifest(dir);

  FixtureSet out;
  const std::vector<std::string> table_header{"a_to_c", "b_to_c", "naive", "selective", "oracle", "config"};
  for (std::size_t t = 0; t < std::size(kTables); ++t) {
    const auto rows = read_csv(dir / kTableFiles[t], table_header);
    int index = 0;
    for (const auto& f : rows) {
      ++index;
      const std::string where = std::string(kTables[t]) + ":" + std::to_string(index);
      parse_config(f[5]);
      out.rows.push_back(TripletResultRow{kTables[t], index, parse_number(f[0], where), parse_number(f[1], where),
                                          parse_number(f[2], where), parse_number(f[3], where),
                                          parse_number(f[4], where), f[5]});
    }
  }

  const std::vector<std::string> median_header{"config", "a_to_c", "b_to_c", "naive", "selective", "oracle"};
  for (const auto& f : read_csv(dir / "table2_medians.csv", median_header)) {
    parse_config(f[0]);
    for (std::size_t c = 0; c < std::size(kColumns); ++c) {
      out.medians.push_back(PrintedMedian{f[0], kColumns[c], parse_number(f[c + 1], "table2:" + f[0]),
                                          decimals_of(f[c + 1])});
    }
  }

  for (const auto& f : read_csv(dir / "oracle_exceptions.csv", {"table", "row", "check"})) {
    out.oracle_exceptions.emplace(f[0], parse_int(f[1], "oracle_exceptions"), f[2]);
  }
  for (const auto& f : read_csv(dir / "label_exceptions.csv", {"table", "row", "leg"})) {
    out.label_exceptions.emplace(f[0], parse_int(f[1], "label_exceptions"), f[2]);
  }

  try {
    const auto meta = json::parse(read_file(dir / "tasks.json"));
    if (meta.at("version").get<int>() != 1) throw Error(ErrorCode::schema_mismatch, "unsupported tasks.json version");
    out.families = meta.at("families").get<std::vector<std::string>>();
    out.unique_pairs_evaluated = meta.at("unique_pairs_evaluated").get<std::int64_t>();
    for (const auto& t : meta.at("tasks")) {
      out.tasks.push_back(TaskMetadata{t.at("name").get<std::string>(), t.at("family").get<std::string>(),
                                       t.at("train").get<std::int64_t>(), t.at("validation").get<std::int64_t>(),
                                       t.at("test").get<std::int64_t>(), t.at("metric").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad tasks.json: ") + e.what());
  }
  return out;
}

std::vector<MedianCheck> MedianReport::discrepancies() const {
  std::vector<MedianCheck> out;
  for (const auto& c : cells) {
    if (!c.match) out.push_back(c);
  }
  return out;
}

MedianReport verify_medians(const FixtureSet& fixtures) {
  std::map<std::string, std::map<std::string, std::vector<double>>> columns;
  for (const auto& r : fixtures.rows) {
    for (const auto* col : kColumns) columns[r.config][col].push_back(column_value(r, col));
  }
  MedianReport report;
  for (const auto& p : fixtures.medians) {
    MedianCheck check{p.config, p.column, 0.0, p.value, p.decimals, false, false};
    check.gated = p.column == "naive" || p.column == "selective" || p.column == "oracle";
    const auto it = columns.find(p.config);
    if (it != columns.end()) {
      check.recomputed = median_of(it->second.at(p.column));
      const double slack = 0.5 * std::pow(10.0, -p.decimals) + kPreRoundingTolerance;
      check.match = std::abs(check.recomputed - p.value) <= slack + 1e-12;
    } else {
      check.recomputed = std::numeric_limits<double>::quiet_NaN();
    }
    if (check.gated) {
      ++report.gated_total;
      if (check.match) ++report.gated_matched;
    }
    report.cells.push_back(check);
  }
  return report;
}

LabelReport verify_labels(const FixtureSet& fixtures) {
  LabelReport report;
  for (const auto& r : fixtures.rows) {
    const auto config = parse_config(r.config);
    const std::pair<const char*, std::pair<double, TransferLabel>> legs[] = {
        {"a_to_c", {r.a_to_c, config.a_to_c}}, {"b_to_c", {r.b_to_c, config.b_to_c}}};
    for (const auto& [leg, value_tag] : legs) {
      ++report.legs_checked;
      const auto [value, tagged] = value_tag;
      const auto expected = label_pair(TransferRecord{"", "", {value}, TransferLabel::unlabeled});
      if (expected == tagged) continue;
      LabelViolation v{r.table, r.row, leg, value, std::string(label_name(expected)), std::string(label_name(tagged))};
      if (fixtures.label_exceptions.contains({r.table, r.row, leg})) {
        report.excused.push_back(std::move(v));
      } else {
        report.violations.push_back(std::move(v));
      }
    }
  }
  return report;
}

FixtureVerification verify_fixtures(const FixtureSet& fixtures) {
  return {verify_medians(fixtures), fixture_oracle_check(fixtures.rows, kPreRoundingTolerance, fixtures.oracle_exceptions),
          verify_labels(fixtures)};
}

json to_json(const FixtureVerification& v) {
  json cells = json::array();
  json discrepancies = json::array();
  for (const auto& c : v.medians.cells) {
    json cell{{"config", c.config},  {"column", c.column}, {"recomputed", c.recomputed},
              {"printed", c.printed}, {"gated", c.gated},   {"match", c.match}};
    if (!c.match) discrepancies.push_back(cell);
    cells.push_back(std::move(cell));
  }
  const auto violations = [](const std::vector<OracleViolation>& list) {
    json out = json::array();
    for (const auto& x : list) out.push_back({{"table", x.table}, {"row", x.row}, {"check", x.check}, {"detail", x.detail}});
    return out;
  };
  const auto label_list = [](const std::vector<LabelViolation>& list) {
    json out = json::array();
    for (const auto& x : list) {
      out.push_back({{"table", x.table}, {"row", x.row}, {"leg", x.leg}, {"value", x.value},
                     {"expected", x.expected}, {"tagged", x.tagged}});
    }
    return out;
  };
  return {{"ok", v.ok()},
          {"medians",
           {{"ok", v.medians.ok()},
            {"matched", v.medians.gated_matched},
            {"total", v.medians.gated_total},
            {"required", v.medians.required},
            {"cells", std::move(cells)},
            {"discrepancies", std::move(discrepancies)}}},
          {"oracle",
           {{"ok", v.oracle.ok()},
            {"rows_checked", v.oracle.rows_checked},
            {"violations", violations(v.oracle.violations)},
            {"excused", violations(v.oracle.excused)}}},
          {"labels",
           {{"ok", v.labels.ok()},
            {"legs_checked", v.labels.legs_checked},
            {"violations", label_list(v.labels.violations)},
            {"excused", label_list(v.labels.excused)}}}};
}

}  // namespace seqft
