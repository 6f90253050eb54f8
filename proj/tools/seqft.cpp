// Command-line front end: benchmark construction, strategy runs, selector
// training, fixture verification and curve export.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqft/benchmark.hpp"
#include "seqft/error.hpp"
#include "seqft/fixtures.hpp"
#include "seqft/report.hpp"
#include "seqft/selector.hpp"
#include "seqft/world.hpp"

namespace {

using nlohmann::json;
using namespace seqft;

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitError = 2;

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::int64_t budget = 10000;
  std::string out;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << text;
}

void require_out(const GlobalOptions& g, const char* command) {
  if (g.out.empty()) throw Error(ErrorCode::invalid_argument, std::string(command) + " needs --out");
}

int cmd_make_world(const GlobalOptions& g, const WorldOptions& options) {
  require_out(g, "make-world");
  write_text(g.out, to_json(generate_world(options, g.seed)).dump(2) + "\n");
  return kExitOk;
}

int cmd_label_pairs(const GlobalOptions& g, const std::string& backend_path, const std::string& records_path,
                    std::size_t trials, double threshold, std::size_t family_k) {
  require_out(g, "label-pairs");
  std::vector<TransferRecord> records;
  if (!records_path.empty()) {
    records = records_from_json(read_json(records_path));
  } else {
    if (backend_path.empty()) throw Error(ErrorCode::invalid_argument, "label-pairs needs --backend or --records");
    auto backend = load_backend(backend_path);
    std::vector<std::pair<std::string, std::string>> pairs;
    if (family_k > 0) {
      const auto families = backend->tasks().families();
      // Family scores: mean single-trial transfer between member tasks.
      Trainer trainer(*backend, g.budget);
      Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(families.size()),
                                                     static_cast<Eigen::Index>(families.size()));
      for (std::size_t i = 0; i < families.size(); ++i) {
        for (std::size_t j = 0; j < families.size(); ++j) {
          double sum = 0.0;
          int count = 0;
          for (const auto& s : backend->tasks().members(families[i])) {
            for (const auto& t : backend->tasks().members(families[j])) {
              if (s == t) continue;
              const std::string chain[] = {s};
              const auto init = trainer.chain_checkpoint(chain, g.seed);
              sum += trainer.relative(t, trainer.train(t, init, g.seed)->curve, g.seed);
              ++count;
            }
          }
          scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = count ? sum / count : 0.0;
        }
      }
      const auto search = family_search(scores, backend->tasks(), family_k);
      pairs.assign(search.pairs.begin(), search.pairs.end());
      std::cerr << "family search kept " << search.candidate_count << " task pairs\n";
    } else {
      pairs = all_pairs(backend->tasks());
    }
    records = measure_pairs(*backend, pairs, trials, g.budget, g.seed);
  }
  label_records(records, threshold);
  std::size_t counts[4] = {};
  for (const auto& r : records) ++counts[static_cast<int>(r.label)];
  std::cerr << "positive " << counts[0] << ", negative " << counts[1] << ", neutral " << counts[2] << "\n";
  write_text(g.out, records_to_json(records).dump(2) + "\n");
  return kExitOk;
}

int cmd_build_benchmark(const GlobalOptions& g, const std::string& records_path, const std::string& backend_path,
                        std::size_t targets, std::size_t pairs_per_target) {
  require_out(g, "build-benchmark");
  const auto records = records_from_json(read_json(records_path));
  const auto backend = load_backend(backend_path);
  const auto build = build_triplets(records, targets, pairs_per_target, g.seed);
  for (const auto& s : build.shortfalls) {
    std::cerr << "warning: " << s.config.name() << ": built " << s.built << " of " << s.requested
              << " triplets (" << s.reason << ")\n";
  }
  Benchmark benchmark;
  benchmark.tasks = backend->tasks().tasks();
  benchmark.triplets = build.triplets;
  save_benchmark(benchmark, g.out);
  return kExitOk;
}

std::shared_ptr<Discriminator> make_discriminator(const std::string& model_path, bool oracle_labeled) {
  if (oracle_labeled) return std::make_shared<OracleDiscriminator>();
  if (model_path.empty()) return nullptr;
  return std::make_shared<GbdtDiscriminator>(std::make_shared<const GbdtModel>(load_selector_model(model_path)));
}

int cmd_run(const GlobalOptions& g, const std::string& benchmark_path, const std::string& backend_path,
            const std::vector<std::string>& strategies, const std::string& model_path, bool oracle_labeled,
            bool charge_probe_cost) {
  require_out(g, "run");
  const auto started = utc_now();
  const auto benchmark = load_benchmark(benchmark_path);
  auto backend = load_backend(backend_path);
  for (const auto& t : benchmark.tasks) {
    if (!backend->tasks().contains(t.task_id)) {
      throw Error(ErrorCode::unknown_task, "benchmark task " + t.task_id + " is not provided by the backend");
    }
  }

  RunSettings settings;
  settings.strategies.clear();
  for (const auto& s : strategies) settings.strategies.push_back(parse_strategy(s));
  settings.discriminator = make_discriminator(model_path, oracle_labeled);
  settings.options.charge_probe_cost = charge_probe_cost;
  settings.jobs = g.jobs;

  Trainer trainer(*backend, g.budget);
  const auto report = run_benchmark(benchmark, benchmark_path, trainer, g.seed, settings);
  save_report(report, g.out);

  const json meta{{"report", g.out}, {"started", started}, {"finished", utc_now()}, {"jobs", g.jobs},
                  {"trainings", trainer.trainings()}};
  write_text(g.out + ".meta.json", meta.dump(2) + "\n");

  for (const auto& [column, configs] : report.medians) {
    std::cerr << column << ":";
    for (const auto& [config, median] : configs) std::cerr << " " << config << "=" << median;
    std::cerr << "\n";
  }
  return kExitOk;
}

int cmd_train_selector(const GlobalOptions& g, const std::string& records_path, const std::string& backend_path,
                       const GbdtHyperparams& hp) {
  require_out(g, "train-selector");
  const auto records = records_from_json(read_json(records_path));
  std::vector<LabeledPair> pairs;
  for (const auto& r : records) {
    const auto label = r.label == TransferLabel::unlabeled ? label_pair(r) : r.label;
    if (label == TransferLabel::positive || label == TransferLabel::negative) {
      pairs.push_back({r.source_task, r.target_task, label == TransferLabel::positive});
    }
  }
  auto backend = load_backend(backend_path);
  Trainer trainer(*backend, g.budget);
  const auto data = build_training_set(pairs, trainer, g.seed);
  std::vector<double> trace;
  const auto model = train_selector(data, hp, g.seed, &trace);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::printf("round %zu loss %.10f\n", i, trace[i]);
  }
  save_model(model, g.out);
  return kExitOk;
}

int cmd_verify_fixtures(const GlobalOptions& g, const std::string& dir, bool no_checksum) {
  const auto fixtures = load_fixtures(dir, !no_checksum);
  const auto v = verify_fixtures(fixtures);
  std::printf("medians: %zu/%zu method cells reproduced (need %zu)\n", v.medians.gated_matched,
              v.medians.gated_total, v.medians.required);
  for (const auto& d : v.medians.discrepancies()) {
    std::printf("  discrepancy %s %s: recomputed %.4f, printed %.*f%s\n", d.config.c_str(), d.column.c_str(),
                d.recomputed, d.decimals, d.printed, d.gated ? "" : " (informational)");
  }
  std::printf("oracle check: %zu rows, %zu violations, %zu excused\n", v.oracle.rows_checked,
              v.oracle.violations.size(), v.oracle.excused.size());
  for (const auto& x : v.oracle.violations) {
    std::printf("  violation %s row %d [%s]: %s\n", x.table.c_str(), x.row, x.check.c_str(), x.detail.c_str());
  }
  std::printf("label check: %zu legs, %zu violations, %zu excused\n", v.labels.legs_checked,
              v.labels.violations.size(), v.labels.excused.size());
  for (const auto& x : v.labels.violations) {
    std::printf("  violation %s row %d %s: %.2f labels %s, tagged %s\n", x.table.c_str(), x.row, x.leg.c_str(),
                x.value, x.expected.c_str(), x.tagged.c_str());
  }
  if (!g.out.empty()) write_text(g.out, to_json(v).dump(2) + "\n");
  std::printf("%s\n", v.ok() ? "OK" : "FAILED");
  return v.ok() ? kExitOk : kExitVerification;
}

int cmd_export_curves(const GlobalOptions& g, const std::string& report_path) {
  write_text(g.out, export_curves_csv(load_report(report_path)));
  return kExitOk;
}

void print_error(std::string_view code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential fine-tuning benchmark harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Root seed for all randomness")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--budget", g.budget, "Update budget B_max")->capture_default_str()->check(CLI::Range(5, 1 << 30));
  app.add_option("--out", g.out, "Output path");
  app.fallthrough();

  WorldOptions world;
  auto* make_world = app.add_subcommand("make-world", "Generate a synthetic world (backend config)");
  make_world->add_option("--families", world.families)->capture_default_str();
  make_world->add_option("--tasks-per-family", world.tasks_per_family)->capture_default_str();
  make_world->add_option("--dim", world.group_dim)->capture_default_str();
  make_world->add_option("--noise", world.noise_sigma)->capture_default_str();

  std::string backend_path, records_path, benchmark_path, model_path, report_path, fixtures_dir = "fixtures";
  std::size_t trials = 3, family_k = 0, targets = 4, pairs_per_target = 4;
  double threshold = kLabelThresholdPercent;
  auto* label = app.add_subcommand("label-pairs", "Measure and label pairwise transfer");
  label->add_option("--backend", backend_path, "Backend config");
  label->add_option("--records", records_path, "Relabel existing records instead of measuring");
  label->add_option("--trials", trials)->capture_default_str()->check(CLI::PositiveNumber);
  label->add_option("--threshold", threshold)->capture_default_str();
  label->add_option("--family-k", family_k, "Restrict to family-search pairs with this K (0: all pairs)");

  auto* build = app.add_subcommand("build-benchmark", "Sample diagnostic triplets from labeled records");
  build->add_option("--records", records_path)->required();
  build->add_option("--backend", backend_path)->required();
  build->add_option("--targets", targets, "Target tasks per configuration")->capture_default_str();
  build->add_option("--pairs-per-target", pairs_per_target)->capture_default_str();

  std::vector<std::string> strategies;
  bool oracle_labeled = false, charge = false;
  auto* run = app.add_subcommand("run", "Run strategies over a benchmark");
  run->add_option("--benchmark", benchmark_path)->required();
  run->add_option("--backend", backend_path)->required();
  run->add_option("--strategy", strategies, "Strategies to run (default: all that are configured)")->delimiter(',');
  run->add_option("--model", model_path, "Selector model for the selective strategy");
  run->add_flag("--oracle-discriminator", oracle_labeled, "Selective strategy uses hindsight labels");
  run->add_flag("--charge-probe-cost", charge, "Charge probe updates against the selected run");

  GbdtHyperparams hp;
  auto* train = app.add_subcommand("train-selector", "Fit the checkpoint selector");
  train->add_option("--records", records_path, "Labeled training-split records")->required();
  train->add_option("--backend", backend_path)->required();
  train->add_option("--trees", hp.n_trees)->capture_default_str();
  train->add_option("--depth", hp.max_depth)->capture_default_str();
  train->add_option("--learning-rate", hp.learning_rate)->capture_default_str();
  train->add_option("--min-samples-leaf", hp.min_samples_leaf)->capture_default_str();

  bool no_checksum = false;
  auto* verify = app.add_subcommand("verify-fixtures", "Recompute the published medians and invariants");
  verify->add_option("--fixtures", fixtures_dir)->capture_default_str();
  verify->add_flag("--no-checksum", no_checksum, "Skip manifest digest verification");

  auto* export_curves = app.add_subcommand("export-curves", "Write report curves as long-format CSV");
  export_curves->add_option("--report", report_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*make_world) return cmd_make_world(g, world);
    if (*label) return cmd_label_pairs(g, backend_path, records_path, trials, threshold, family_k);
    if (*build) return cmd_build_benchmark(g, records_path, backend_path, targets, pairs_per_target);
    if (*run) {
      if (strategies.empty()) {
        strategies = {"independent", "naive"};
        if (!model_path.empty() || oracle_labeled) strategies.push_back("selective");
        strategies.push_back("oracle");
      }
      return cmd_run(g, benchmark_path, backend_path, strategies, model_path, oracle_labeled, charge);
    }
    if (*train) return cmd_train_selector(g, records_path, backend_path, hp);
    if (*verify) return cmd_verify_fixtures(g, fixtures_dir, no_checksum);
    if (*export_curves) return cmd_export_curves(g, report_path);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return kExitError;
  }
  return kExitError;
}
