#include "seqft/benchmark.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "seqft/error.hpp"
#include "seqft/rng.hpp"

namespace seqft {

namespace {

using nlohmann::json;

std::string record_key(const std::string& source, const std::string& target) { return source + "->" + target; }

}  // namespace

std::string_view label_name(TransferLabel label) {
  switch (label) {
    case TransferLabel::positive: return "positive";
    case TransferLabel::negative: return "negative";
    case TransferLabel::neutral: return "neutral";
    case TransferLabel::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

TransferLabel parse_label(std::string_view name) {
  for (auto l : {TransferLabel::positive, TransferLabel::negative, TransferLabel::neutral,
                 TransferLabel::unlabeled}) {
    if (label_name(l) == name) return l;
  }
  throw Error(ErrorCode::invalid_argument, "unknown transfer label '" + std::string(name) + "'");
}

TransferLabel label_pair(const TransferRecord& record, double threshold) {
  if (record.trials.empty()) {
    throw Error(ErrorCode::empty_input, "record " + record_key(record.source_task, record.target_task) +
                                            " has no trials");
  }
  const auto [lo, hi] = std::minmax_element(record.trials.begin(), record.trials.end());
  if (*lo > threshold) return TransferLabel::positive;
  if (*hi < -threshold) return TransferLabel::negative;
  return TransferLabel::neutral;
}

void label_records(std::span<TransferRecord> records, double threshold) {
  for (auto& r : records) r.label = label_pair(r, threshold);
}

FamilySearchResult family_search(const Eigen::MatrixXd& scores, const TaskRegistry& registry, std::size_t k) {
  const auto families = registry.families();
  const auto f = families.size();
  if (scores.rows() != scores.cols() || static_cast<std::size_t>(scores.rows()) != f) {
    throw Error(ErrorCode::invalid_argument, "family matrix must be square over the " + std::to_string(f) +
                                                 " registry families");
  }
  if (k == 0 || k > f) {
    throw Error(ErrorCode::invalid_argument, "K = " + std::to_string(k) + " outside [1, " + std::to_string(f) + "]");
  }

  FamilySearchResult out;
  for (std::size_t target = 0; target < f; ++target) {
    std::vector<std::size_t> order(f);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(target)) >
             scores(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(target));
    });
    std::set<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    chosen.insert(order.end() - static_cast<std::ptrdiff_t>(k), order.end());

    const auto targets = registry.members(families[target]);
    for (auto source : chosen) {
      for (const auto& s : registry.members(families[source])) {
        for (const auto& t : targets) {
          if (s != t) out.pairs.emplace(s, t);
        }
      }
    }
  }
  out.candidate_count = out.pairs.size();
  return out;
}

std::string TripletConfig::name() const {
  return std::string(label_name(a_to_c)) + "/" + std::string(label_name(b_to_c));
}

const std::array<TripletConfig, 8>& triplet_configs() {
  using L = TransferLabel;
  static const std::array<TripletConfig, 8> configs{{{L::positive, L::positive},
                                                     {L::positive, L::negative},
                                                     {L::positive, L::neutral},
                                                     {L::negative, L::positive},
                                                     {L::negative, L::negative},
                                                     {L::negative, L::neutral},
                                                     {L::neutral, L::positive},
                                                     {L::neutral, L::negative}}};
  return configs;
}

TripletConfig parse_config(std::string_view name) {
  for (const auto& c : triplet_configs()) {
    if (c.name() == name) return c;
  }
  throw Error(ErrorCode::invalid_argument, "unknown triplet configuration '" + std::string(name) + "'");
}

TripletBuild build_triplets(std::span<const TransferRecord> records, std::size_t per_config_targets,
                            std::size_t pairs_per_target, std::uint64_t seed) {
  // target -> label -> sorted sources
  std::map<std::string, std::map<TransferLabel, std::vector<std::string>>> by_target;
  for (const auto& r : records) {
    if (r.source_task == r.target_task) continue;
    const auto label = r.label == TransferLabel::unlabeled ? label_pair(r) : r.label;
    by_target[r.target_task][label].push_back(r.source_task);
  }
  for (auto& [target, labels] : by_target) {
    for (auto& [label, sources] : labels) {
      std::sort(sources.begin(), sources.end());
      sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    }
  }
  const auto sources_for = [&](const std::string& target, TransferLabel label) -> std::vector<std::string> {
    const auto& labels = by_target.at(target);
    const auto it = labels.find(label);
    return it == labels.end() ? std::vector<std::string>{} : it->second;
  };

  TripletBuild out;
  for (const auto& config : triplet_configs()) {
    // Candidate (A, B) pairs per target; for equal polarities an unordered pair counts once.
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> eligible;
    for (const auto& [target, labels] : by_target) {
      const auto as = sources_for(target, config.a_to_c);
      const auto bs = sources_for(target, config.b_to_c);
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const auto& a : as) {
        for (const auto& b : bs) {
          if (a == b) continue;
          if (config.a_to_c == config.b_to_c && b < a) continue;
          pairs.emplace_back(a, b);
        }
      }
      if (pairs.size() >= pairs_per_target) eligible.emplace_back(target, std::move(pairs));
    }

    CounterRng rng(derive_seed(seed, "triplets/" + config.name()));
    shuffle(eligible, rng);
    const auto take_targets = std::min(per_config_targets, eligible.size());
    for (std::size_t i = 0; i < take_targets; ++i) {
      auto& [target, pairs] = eligible[i];
      CounterRng pair_rng(derive_seed(seed, "pairs/" + config.name() + "/" + target));
      shuffle(pairs, pair_rng);
      for (std::size_t p = 0; p < pairs_per_target; ++p) {
        const auto& [a, b] = pairs[p];
        out.triplets.push_back(
            TripletSpec{a, b, target, config, {record_key(a, target), record_key(b, target)}});
      }
    }
    if (take_targets < per_config_targets) {
      out.shortfalls.push_back(ConfigShortfall{config, per_config_targets * pairs_per_target,
                                               take_targets * pairs_per_target,
                                               std::to_string(eligible.size()) + " of " +
                                                   std::to_string(per_config_targets) +
                                                   " required target tasks have enough (A, B) pairs"});
    }
  }
  return out;
}

json to_json(const TransferRecord& record) {
  return {{"source", record.source_task},
          {"target", record.target_task},
          {"trials", record.trials},
          {"label", label_name(record.label)}};
}

TransferRecord record_from_json(const json& j) {
  try {
    TransferRecord r;
    r.source_task = j.at("source").get<std::string>();
    r.target_task = j.at("target").get<std::string>();
    r.trials = j.at("trials").get<std::vector<double>>();
    r.label = parse_label(j.value("label", std::string("unlabeled")));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad transfer record: ") + e.what());
  }
}

json records_to_json(std::span<const TransferRecord> records) {
  json list = json::array();
  for (const auto& r : records) list.push_back(to_json(r));
  return {{"version", 1}, {"records", std::move(list)}};
}

std::vector<TransferRecord> records_from_json(const json& j) {
  if (!j.is_object() || j.value("version", 0) != 1 || !j.contains("records") || !j.at("records").is_array()) {
    throw Error(ErrorCode::schema_mismatch, "not a version-1 transfer record file");
  }
  std::vector<TransferRecord> out;
  for (const auto& r : j.at("records")) out.push_back(record_from_json(r));
  return out;
}

json to_json(const Benchmark& benchmark) {
  json tasks = json::array();
  for (const auto& t : benchmark.tasks) {
    tasks.push_back({{"task_id", t.task_id}, {"family", t.family_id}, {"metric", to_json(t.metric)}});
  }
  json triplets = json::array();
  for (const auto& t : benchmark.triplets) {
    triplets.push_back({{"a", t.a},
                        {"b", t.b},
                        {"c", t.c},
                        {"config", {{"a_to_c", label_name(t.config.a_to_c)}, {"b_to_c", label_name(t.config.b_to_c)}}},
                        {"provenance", t.provenance}});
  }
  return {{"version", 1}, {"tasks", std::move(tasks)}, {"triplets", std::move(triplets)}};
}

Benchmark benchmark_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::schema_mismatch, "unsupported benchmark version");
    Benchmark b;
    for (const auto& t : j.at("tasks")) b.tasks.push_back(task_from_json(t));
    std::set<std::string> known;
    for (const auto& t : b.tasks) known.insert(t.task_id);
    for (const auto& t : j.at("triplets")) {
      TripletSpec spec;
      spec.a = t.at("a").get<std::string>();
      spec.b = t.at("b").get<std::string>();
      spec.c = t.at("c").get<std::string>();
      spec.config.a_to_c = parse_label(t.at("config").at("a_to_c").get<std::string>());
      spec.config.b_to_c = parse_label(t.at("config").at("b_to_c").get<std::string>());
      spec.provenance = t.value("provenance", std::vector<std::string>{});
      if (spec.a == spec.b || spec.a == spec.c || spec.b == spec.c) {
        throw Error(ErrorCode::schema_mismatch, "triplet tasks must be distinct");
      }
      if (spec.config.a_to_c == TransferLabel::neutral && spec.config.b_to_c == TransferLabel::neutral) {
        throw Error(ErrorCode::schema_mismatch, "neutral/neutral triplets are excluded");
      }
      for (const auto* id : {&spec.a, &spec.b, &spec.c}) {
        if (!known.contains(*id)) throw Error(ErrorCode::unknown_task, "triplet references unknown task " + *id);
      }
      b.triplets.push_back(std::move(spec));
    }
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad benchmark file: ") + e.what());
  }
}

Benchmark load_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::benchmark_not_found, "cannot open benchmark " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad benchmark file: ") + e.what());
  }
  return benchmark_from_json(j);
}

void save_benchmark(const Benchmark& benchmark, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << to_json(benchmark).dump(2) << '\n';
}

}  // namespace seqft
