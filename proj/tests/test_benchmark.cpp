#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>

#include "helpers.hpp"
#include "seqft/benchmark.hpp"

using namespace seqft;

namespace {

TransferRecord record(std::string s, std::string t, std::vector<double> trials) {
  return TransferRecord{std::move(s), std::move(t), std::move(trials), TransferLabel::unlabeled};
}

/// Twelve tasks; source j into target i is positive for (j - i) mod 12 in 1..4,
/// negative in 5..8 and neutral in 9..11. Every target can fill every config.
std::vector<TransferRecord> ring_records(bool with_negatives = true) {
  std::vector<TransferRecord> out;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      if (i == j) continue;
      const int d = ((j - i) % 12 + 12) % 12;
      double v = d <= 4 ? 20.0 : d <= 8 ? -20.0 : 0.5;
      if (!with_negatives && v < 0) v = 0.5;
      out.push_back(record("t" + std::to_string(j), "t" + std::to_string(i), {v, v * 0.9, v * 1.1}));
    }
  }
  label_records(out);
  return out;
}

TaskRegistry family_registry(int families, int per_family) {
  TaskRegistry r;
  for (int f = 0; f < families; ++f) {
    for (int t = 0; t < per_family; ++t) {
      r.add(testing::synthetic_task("task_" + std::to_string(f) + "_" + std::to_string(t), "fam" + std::to_string(f)));
    }
  }
  return r;
}

/// Reference expansion: a source family is kept for a target family when fewer
/// than K families score strictly higher or fewer than K strictly lower.
std::set<std::pair<std::string, std::string>> reference_family_pairs(const Eigen::MatrixXd& scores,
                                                                     const TaskRegistry& reg, std::size_t k) {
  std::set<std::pair<std::string, std::string>> out;
  const auto fams = reg.families();
  const auto n = static_cast<Eigen::Index>(fams.size());
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index s = 0; s < n; ++s) {
      std::size_t higher = 0, lower = 0;
      for (Eigen::Index o = 0; o < n; ++o) {
        if (scores(o, t) > scores(s, t)) ++higher;
        if (scores(o, t) < scores(s, t)) ++lower;
      }
      if (higher >= k && lower >= k) continue;
      for (const auto& a : reg.members(fams[static_cast<std::size_t>(s)])) {
        for (const auto& c : reg.members(fams[static_cast<std::size_t>(t)])) {
          if (a != c) out.emplace(a, c);
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("pair labels need every trial beyond the threshold") {
  CHECK(label_pair(record("a", "b", {6.0, 7.5, 5.1})) == TransferLabel::positive);
  CHECK(label_pair(record("a", "b", {-6.0, -7.5, -5.1})) == TransferLabel::negative);
  CHECK(label_pair(record("a", "b", {6.0, 4.9, 8.0})) == TransferLabel::neutral);
  CHECK(label_pair(record("a", "b", {5.0})) == TransferLabel::neutral);
  CHECK(label_pair(record("a", "b", {-5.0})) == TransferLabel::neutral);
  CHECK(label_pair(record("a", "b", {12.0, -12.0})) == TransferLabel::neutral);
  CHECK(label_pair(record("a", "b", {0.06}), 0.05) == TransferLabel::positive);
  try {
    label_pair(record("a", "b", {}));
    FAIL("expected empty input");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_input);
  }
  for (auto l : {TransferLabel::positive, TransferLabel::negative, TransferLabel::neutral}) {
    CHECK(parse_label(label_name(l)) == l);
  }
}

TEST_CASE("family search agrees with the rank reference") {
  const auto reg = family_registry(5, 3);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  Eigen::MatrixXd scores(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) scores(i, j) = u(gen);
  for (std::size_t k = 1; k <= 5; ++k) {
    const auto result = family_search(scores, reg, k);
    CHECK(result.pairs == reference_family_pairs(scores, reg, k));
    CHECK(result.candidate_count == result.pairs.size());
  }
  CHECK(family_search(scores, reg, 5).pairs.size() == 15 * 14);
  CHECK(family_search(scores, reg, 3).pairs.size() == 15 * 14);  // top 3 and bottom 3 of 5 cover all

  CHECK_THROWS_AS(family_search(scores, reg, 0), Error);
  CHECK_THROWS_AS(family_search(scores, reg, 6), Error);
  CHECK_THROWS_AS(family_search(Eigen::MatrixXd::Zero(4, 5), reg, 1), Error);
}

TEST_CASE("family search on the identity keeps the own family") {
  const auto reg = family_registry(4, 2);
  const auto result = family_search(Eigen::MatrixXd::Identity(4, 4), reg, 1);
  // Own family is the unique best; the worst is a tie resolved to the last family.
  CHECK(result.pairs.contains({"task_0_0", "task_0_1"}));
  CHECK(result.pairs.contains({"task_3_0", "task_0_0"}));
  CHECK_FALSE(result.pairs.contains({"task_1_0", "task_0_0"}));
}

TEST_CASE("triplet builder at the default size") {
  const auto records = ring_records();
  const auto build = build_triplets(records, 4, 4, 0);
  CHECK(build.complete());
  REQUIRE(build.triplets.size() == 128);

  std::map<std::pair<std::string, std::string>, TransferLabel> labels;
  for (const auto& r : records) labels[{r.source_task, r.target_task}] = r.label;

  std::map<std::string, std::set<std::string>> targets_per_config;
  std::set<std::tuple<std::string, std::string, std::string, std::string>> seen;
  for (const auto& t : build.triplets) {
    CHECK(t.a != t.b);
    CHECK(t.a != t.c);
    CHECK(t.b != t.c);
    CHECK(labels.at({t.a, t.c}) == t.config.a_to_c);
    CHECK(labels.at({t.b, t.c}) == t.config.b_to_c);
    CHECK_FALSE((t.config.a_to_c == TransferLabel::neutral && t.config.b_to_c == TransferLabel::neutral));
    targets_per_config[t.config.name()].insert(t.c);
    auto a = t.a, b = t.b;
    if (t.config.a_to_c == t.config.b_to_c && b < a) std::swap(a, b);
    CHECK(seen.emplace(t.config.name(), a, b, t.c).second);
  }
  CHECK(targets_per_config.size() == 8);
  for (const auto& [config, targets] : targets_per_config) CHECK(targets.size() == 4);
}

TEST_CASE("triplet builder is seeded and sized") {
  const auto records = ring_records();
  const auto a = build_triplets(records, 4, 4, 5);
  const auto b = build_triplets(records, 4, 4, 5);
  const auto c = build_triplets(records, 4, 4, 6);
  CHECK(to_json(Benchmark{{}, a.triplets}) == to_json(Benchmark{{}, b.triplets}));
  CHECK(to_json(Benchmark{{}, a.triplets}) != to_json(Benchmark{{}, c.triplets}));
  CHECK(build_triplets(records, 1, 1, 0).triplets.size() == 8);
}

TEST_CASE("missing polarities produce shortfalls, not failures") {
  const auto build = build_triplets(ring_records(false), 4, 4, 0);
  CHECK_FALSE(build.complete());
  CHECK(build.shortfalls.size() == 5);
  for (const auto& s : build.shortfalls) {
    CHECK((s.config.a_to_c == TransferLabel::negative || s.config.b_to_c == TransferLabel::negative));
    CHECK(s.built == 0);
    CHECK(s.requested == 16);
  }
  CHECK(build.triplets.size() == 3 * 16);
}

TEST_CASE("benchmark and record files round-trip") {
  TaskRegistry reg;
  for (int i = 0; i < 12; ++i) reg.add(testing::synthetic_task("t" + std::to_string(i), "f"));
  const Benchmark bench{reg.tasks(), build_triplets(ring_records(), 2, 2, 3).triplets};
  const auto dir = std::filesystem::temp_directory_path() / "seqft_benchmark_test";
  std::filesystem::create_directories(dir);
  save_benchmark(bench, dir / "b.json");
  const auto back = load_benchmark(dir / "b.json");
  CHECK(to_json(back) == to_json(bench));
  CHECK(back.triplets.size() == 32);
  CHECK(back.triplets[0].sequence() == bench.triplets[0].sequence());

  const auto records = ring_records();
  const auto rback = records_from_json(nlohmann::json::parse(records_to_json(records).dump()));
  REQUIRE(rback.size() == records.size());
  CHECK(rback[5].trials == records[5].trials);
  CHECK(rback[5].label == records[5].label);

  try {
    load_benchmark(dir / "absent.json");
    FAIL("expected benchmark_not_found");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::benchmark_not_found);
  }

  auto j = to_json(bench);
  j["triplets"][0]["config"] = "neutral/neutral";
  CHECK_THROWS_AS(benchmark_from_json(j), Error);
  j = to_json(bench);
  j["triplets"][0]["b"] = j["triplets"][0]["a"];
  CHECK_THROWS_AS(benchmark_from_json(j), Error);
}

TEST_CASE("config names round-trip") {
  for (const auto& c : triplet_configs()) CHECK(parse_config(c.name()) == c);
  CHECK_THROWS_AS(parse_config("neutral/neutral"), Error);
}
