#include <doctest.h>

#include <filesystem>

#include "scenario.hpp"
#include "seqft/report.hpp"

using namespace seqft;

namespace {

WorldOptions small_world() {
  WorldOptions o;
  o.families = 3;
  o.tasks_per_family = 3;
  o.group_dim = 4;
  return o;
}

RunReport run(const testing::Scenario& s, std::size_t jobs, std::vector<StrategyKind> kinds = {}) {
  Trainer trainer(*s.backend, 10000);
  RunSettings settings;
  if (!kinds.empty()) settings.strategies = std::move(kinds);
  settings.discriminator = std::make_shared<OracleDiscriminator>();
  settings.jobs = jobs;
  return run_benchmark(s.benchmark, "bench.json", trainer, 21, settings);
}

}  // namespace

TEST_CASE("benchmark report rows") {
  const auto s = testing::make_scenario(4, 1, 2, 10000, small_world());
  REQUIRE(!s.benchmark.triplets.empty());
  const auto report = run(s, 1);
  CHECK(report.rows.size() == s.benchmark.triplets.size() * 4);
  CHECK(report.strategies == std::vector<std::string>{"independent", "naive", "selective", "oracle"});
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    CHECK(r.triplet == i / 4);
    CHECK(r.c == s.benchmark.triplets[r.triplet].c);
    if (r.strategy == "independent") {
      CHECK(r.relative_percent == 0.0);
      CHECK(r.path.empty());
    }
    if (r.strategy == "oracle") CHECK(r.relative_percent >= 0.0);
    CHECK(report.curves.contains(r.curve_ref));
  }
  CHECK(report_consistent(report));
  CHECK(report.medians.contains("a_to_c"));
  CHECK(report.medians.contains("oracle"));
}

TEST_CASE("parallel runs are byte-identical to serial runs") {
  const auto s = testing::make_scenario(4, 1, 2, 10000, small_world());
  const auto serial = to_json(run(s, 1)).dump();
  CHECK(to_json(run(s, 4)).dump() == serial);
  CHECK(to_json(run(s, 3)).dump() == serial);
}

TEST_CASE("selective without a discriminator is refused") {
  const auto s = testing::make_scenario(4, 1, 1, 10000, small_world());
  Trainer trainer(*s.backend, 10000);
  RunSettings settings;
  CHECK_THROWS_AS(run_benchmark(s.benchmark, "b", trainer, 1, settings), Error);
}

TEST_CASE("report files round-trip and stay consistent") {
  const auto s = testing::make_scenario(4, 1, 1, 10000, small_world());
  const auto report = run(s, 2);
  const auto path = std::filesystem::temp_directory_path() / "seqft_report_test.json";
  save_report(report, path);
  const auto back = load_report(path);
  CHECK(to_json(back) == to_json(report));
  CHECK(report_consistent(back));

  auto tampered = report;
  tampered.rows[1].relative_percent += 0.5;
  CHECK_FALSE(report_consistent(tampered));
}

TEST_CASE("curve export") {
  const auto s = testing::make_scenario(4, 1, 1, 10000, small_world());
  const auto report = run(s, 1);
  const auto csv = export_curves_csv(report);
  CHECK(csv.rfind("triplet,strategy,step,perf\n", 0) == 0);

  std::size_t expected_rows = 0;
  for (const auto& r : report.rows) expected_rows += report.curves.at(r.curve_ref).size();
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == expected_rows + 1);

  const auto curves = import_curves_csv(csv);
  CHECK(curves.size() == report.rows.size());
  for (const auto& r : report.rows) {
    const auto& original = report.curves.at(r.curve_ref);
    const auto& imported = curves.at(r.curve_ref);
    CHECK(perf_auc(imported, report.budget) == doctest::Approx(r.perf_auc).epsilon(1e-12));
    CHECK(perf_auc(imported, report.budget) == doctest::Approx(perf_auc(original, report.budget)).epsilon(1e-12));
  }

  RunReport empty;
  CHECK(export_curves_csv(empty) == "triplet,strategy,step,perf\n");

  auto dangling = report;
  dangling.curves.erase(dangling.rows[0].curve_ref);
  try {
    export_curves_csv(dangling);
    FAIL("expected dangling reference");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dangling_reference);
  }
}

TEST_CASE("medians follow the even-count rule") {
  std::vector<ReportRow> rows;
  for (double v : {4.0, 1.0, 3.0, 2.0}) {
    ReportRow r;
    r.triplet = rows.size();
    r.config = "positive/positive";
    r.strategy = "naive";
    r.relative_percent = v;
    r.a_to_c = v * 2;
    r.b_to_c = -v;
    rows.push_back(r);
  }
  const auto m = compute_medians(rows);
  CHECK(m.at("naive").at("positive/positive") == 2.5);
  CHECK(m.at("a_to_c").at("positive/positive") == 5.0);
  CHECK(m.at("b_to_c").at("positive/positive") == -2.5);
}
