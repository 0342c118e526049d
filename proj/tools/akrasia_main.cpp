// akrasia CLI: build item banks, execute benchmark runs against a live
// OpenAI-compatible endpoint or a scripted mock, and render metric reports.
//
// Config precedence: CLI flags > --config JSON file > built-in defaults.
// API keys are only ever read from the environment, never from flags or
// config values.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "akrasia/common.hpp"
#include "akrasia/item_bank.hpp"
#include "akrasia/metrics.hpp"
#include "akrasia/model_client.hpp"
#include "akrasia/report.hpp"
#include "akrasia/runner.hpp"
#include "akrasia/types.hpp"

namespace fs = std::filesystem;
using akrasia::json;

namespace {

// JSON config file overlay: fills in any option the user did not pass on the
// command line. Keys mirror the long flag names with dashes as underscores.
class ConfigOverlay {
 public:
  void load(const std::string& path) {
    std::string content = akrasia::read_file(path);
    json parsed;
    try {
      parsed = json::parse(content);
    } catch (const json::parse_error& e) {
      throw akrasia::ConfigError("config file " + path + ": " + e.what());
    }
    if (!parsed.is_object()) {
      throw akrasia::ConfigError("config file " + path +
                                 ": top-level value must be an object");
    }
    cfg_ = std::move(parsed);
    path_ = path;
  }

  template <typename T>
  void apply(const CLI::Option* opt, const std::string& key, T& target) const {
    if (opt != nullptr && opt->count() > 0) return;  // CLI wins
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return;
    try {
      target = it->get<T>();
    } catch (const json::exception& e) {
      throw akrasia::ConfigError("config file " + path_ + ": key '" + key +
                                 "': " + e.what());
    }
  }

 private:
  json cfg_ = json::object();
  std::string path_;
};

struct BankBuildArgs {
  std::string facts;
  std::string misconceptions;
  std::uint64_t seed = 1;
  int arith_count = 44;
  std::string out = "bank.json";
  std::string config;
  CLI::Option *facts_opt = nullptr, *misc_opt = nullptr, *seed_opt = nullptr,
              *count_opt = nullptr, *out_opt = nullptr;
};

struct RunArgs {
  std::string model;
  std::string base_url;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string regime = "greedy";
  std::string mock;
  std::string bank;
  std::uint64_t seed = 42;
  int concurrency = 4;
  bool run_excluded = false;
  std::string out = ".";
  std::string config;
  CLI::Option *model_opt = nullptr, *base_url_opt = nullptr,
              *api_key_env_opt = nullptr, *regime_opt = nullptr,
              *mock_opt = nullptr, *bank_opt = nullptr, *seed_opt = nullptr,
              *concurrency_opt = nullptr, *run_excluded_opt = nullptr,
              *out_opt = nullptr;
};

struct ReportArgs {
  std::vector<std::string> logs;
  int replicates = akrasia::kDefaultReplicates;
  std::uint64_t seed = 0;
  std::vector<std::string> formats;
  std::string out = ".";
  std::string config;
  CLI::Option *replicates_opt = nullptr, *seed_opt = nullptr,
              *format_opt = nullptr, *out_opt = nullptr;
};

int cmd_bank_build(BankBuildArgs& a) {
  ConfigOverlay cfg;
  if (!a.config.empty()) cfg.load(a.config);
  cfg.apply(a.facts_opt, "facts", a.facts);
  cfg.apply(a.misc_opt, "misconceptions", a.misconceptions);
  cfg.apply(a.seed_opt, "seed", a.seed);
  cfg.apply(a.count_opt, "arith_count", a.arith_count);
  cfg.apply(a.out_opt, "out", a.out);

  akrasia::Bank bank =
      akrasia::build_bank(a.facts, a.misconceptions, a.seed, a.arith_count);
  akrasia::save_bank(bank, a.out);

  std::string summary;
  for (const char* kind : {"fact", "arithmetic", "misconception"}) {
    auto counts = akrasia::bank_composition(bank);
    auto it = counts.find(kind);
    if (!summary.empty()) summary += " ";
    summary += std::string(kind) + "=" +
               std::to_string(it == counts.end() ? 0 : it->second);
  }
  std::cout << summary << "\n";
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

int cmd_run(RunArgs& a) {
  ConfigOverlay cfg;
  if (!a.config.empty()) cfg.load(a.config);
  cfg.apply(a.model_opt, "model", a.model);
  cfg.apply(a.base_url_opt, "base_url", a.base_url);
  cfg.apply(a.api_key_env_opt, "api_key_env", a.api_key_env);
  cfg.apply(a.regime_opt, "regime", a.regime);
  cfg.apply(a.mock_opt, "mock", a.mock);
  cfg.apply(a.bank_opt, "bank", a.bank);
  cfg.apply(a.seed_opt, "seed", a.seed);
  cfg.apply(a.concurrency_opt, "concurrency", a.concurrency);
  cfg.apply(a.run_excluded_opt, "run_excluded", a.run_excluded);
  cfg.apply(a.out_opt, "out", a.out);

  if (a.bank.empty()) throw akrasia::ConfigError("run requires --bank <file>");
  if (a.mock.empty() && a.base_url.empty()) {
    throw akrasia::ConfigError(
        "run requires either --mock <script> or --base-url <endpoint>");
  }

  akrasia::DecodingRegime regime = akrasia::DecodingRegime::named(a.regime);
  akrasia::Bank bank = akrasia::load_bank(a.bank);

  std::unique_ptr<akrasia::Model> model;
  if (!a.mock.empty()) {
    auto mock = std::make_unique<akrasia::MockModel>(akrasia::MockModel::from_file(a.mock));
    if (a.model_opt != nullptr && a.model_opt->count() > 0) {
      mock->set_id(a.model);
    }
    model = std::move(mock);
  } else {
    if (a.model.empty()) {
      throw akrasia::ConfigError("run against a live endpoint requires --model");
    }
    akrasia::HttpConfig http;
    http.base_url = a.base_url;
    http.model_id = a.model;
    http.api_key_env = a.api_key_env;
    http.concurrency = a.concurrency;
    model = std::make_unique<akrasia::HttpModel>(http);
  }

  std::string bank_hash =
      akrasia::hex64(akrasia::fnv1a64(akrasia::serialize_bank(bank)));
  std::string run_id =
      akrasia::derive_run_id(model->id(), regime.name, a.seed, bank_hash);
  fs::path out_path = fs::path(a.out) / ("run-" + run_id + ".jsonl");

  akrasia::RunOptions options;
  options.master_seed = a.seed;
  options.run_excluded = a.run_excluded;
  options.concurrency = a.concurrency;
  options.out_path = out_path.string();
  options.bank_path_label = a.bank;
  options.progress = [](int done, int total) {
    std::cerr << "\r[" << done << "/" << total << "] items" << std::flush;
    if (done == total) std::cerr << "\n";
  };

  akrasia::RunLog log = akrasia::run_suite(*model, bank, regime, options);

  auto count_of = [&log](const char* key) {
    auto it = log.summary.counts.find(key);
    return it == log.summary.counts.end() ? 0 : it->second;
  };
  std::cout << "run " << log.header.run_id << ": completed="
            << count_of("completed")
            << " excluded_b_incorrect=" << count_of("excluded_b_incorrect")
            << " aborted=" << count_of("aborted") << "\n";
  std::cout << "wrote " << out_path.string() << "\n";
  if (count_of("aborted") > 0) {
    std::cerr << "error: " << count_of("aborted")
              << " item(s) aborted on transport failures; log is partial\n";
    return 1;
  }
  return 0;
}

int cmd_report(ReportArgs& a) {
  ConfigOverlay cfg;
  if (!a.config.empty()) cfg.load(a.config);
  cfg.apply(a.replicates_opt, "replicates", a.replicates);
  cfg.apply(a.seed_opt, "seed", a.seed);
  cfg.apply(a.format_opt, "format", a.formats);
  cfg.apply(a.out_opt, "out", a.out);

  if (a.replicates < 1) throw akrasia::ConfigError("--replicates must be >= 1");
  std::set<std::string> formats(a.formats.begin(), a.formats.end());
  if (formats.empty()) formats = {"md", "csv", "json", "svg"};
  for (const std::string& f : formats) {
    if (f != "md" && f != "csv" && f != "json" && f != "svg") {
      throw akrasia::ConfigError("unknown --format '" + f +
                                 "' (expected md|csv|json|svg)");
    }
  }

  // Compute every report before writing anything, so a bad input never
  // leaves partial output behind.
  std::vector<akrasia::MetricsReport> reports;
  std::vector<std::string> stems;
  for (const std::string& path : a.logs) {
    akrasia::RunLog log = akrasia::read_run_log(path);
    std::vector<akrasia::ItemOutcome> outcomes = akrasia::fold_outcomes(log);
    reports.push_back(akrasia::compute_report(outcomes, log.header.model_id,
                                              log.header.regime, a.replicates,
                                              a.seed));
    stems.push_back(fs::path(path).stem().string());
  }

  fs::path out_dir(a.out);
  auto emit = [&out_dir](const fs::path& name, const std::string& content) {
    fs::path full = out_dir / name;
    akrasia::write_file_atomic(full.string(), content);
    std::cout << "wrote " << full.string() << "\n";
  };

  if (formats.count("json")) {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      emit(stems[i] + ".metrics.json",
           akrasia::metrics_report_to_json(reports[i]).dump(2) + "\n");
    }
  }
  if (formats.count("md")) emit("report.md", akrasia::render_markdown(reports));
  if (formats.count("csv")) {
    emit("per_temptation.csv", akrasia::render_temptation_csv(reports));
  }
  if (formats.count("svg")) {
    emit("crc_by_temptation.svg", akrasia::render_crc_svg(reports));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Akratic slip benchmark harness"};
  app.require_subcommand(1);

  int rc = 0;
  BankBuildArgs bank_args;
  RunArgs run_args;
  ReportArgs report_args;

  CLI::App* bank = app.add_subcommand("bank", "Item bank operations");
  bank->require_subcommand(1);
  CLI::App* build = bank->add_subcommand("build", "Build and validate a bank");
  bank_args.facts_opt =
      build->add_option("--facts", bank_args.facts,
                        "Fact seed JSONL (default: bundled seeds)");
  bank_args.misc_opt = build->add_option(
      "--misconceptions", bank_args.misconceptions,
      "Misconception seed JSONL (default: bundled seeds)");
  bank_args.seed_opt =
      build->add_option("--seed", bank_args.seed, "Arithmetic generation seed");
  bank_args.count_opt = build->add_option(
      "--arith-count", bank_args.arith_count, "Number of arithmetic items");
  bank_args.out_opt =
      build->add_option("--out", bank_args.out, "Output bank file");
  build->add_option("--config", bank_args.config, "JSON config file");
  build->callback([&bank_args, &rc] { rc = cmd_bank_build(bank_args); });

  CLI::App* run = app.add_subcommand("run", "Execute a benchmark run");
  run_args.model_opt =
      run->add_option("--model", run_args.model, "Model identifier");
  run_args.base_url_opt = run->add_option("--base-url", run_args.base_url,
                                          "OpenAI-compatible endpoint URL");
  run_args.api_key_env_opt = run->add_option(
      "--api-key-env", run_args.api_key_env,
      "Environment variable holding the API key (default OPENAI_API_KEY)");
  run_args.regime_opt =
      run->add_option("--regime", run_args.regime,
                      "Decoding regime: greedy|mild|exploratory|beam-ish");
  run_args.mock_opt = run->add_option("--mock", run_args.mock,
                                      "Scripted mock-model JSON (no network)");
  run_args.bank_opt = run->add_option("--bank", run_args.bank, "Bank file");
  run_args.seed_opt = run->add_option("--seed", run_args.seed, "Master seed");
  run_args.concurrency_opt = run->add_option(
      "--concurrency", run_args.concurrency, "Concurrent items in flight");
  run_args.run_excluded_opt =
      run->add_flag("--run-excluded", run_args.run_excluded,
                    "Run all variants even when the baseline answer is wrong");
  run_args.out_opt =
      run->add_option("--out", run_args.out, "Output directory for the log");
  run->add_option("--config", run_args.config, "JSON config file");
  run->callback([&run_args, &rc] { rc = cmd_run(run_args); });

  CLI::App* report = app.add_subcommand("report", "Render metric reports");
  report->add_option("logs", report_args.logs, "Run log JSONL file(s)")
      ->required()
      ->expected(-1);
  report_args.replicates_opt =
      report->add_option("--replicates", report_args.replicates,
                         "Bootstrap replicates (default 10000)");
  report_args.seed_opt =
      report->add_option("--seed", report_args.seed, "Bootstrap seed");
  report_args.format_opt = report->add_option(
      "--format", report_args.formats,
      "Output formats: md, csv, json, svg (repeatable; default all)");
  report_args.out_opt =
      report->add_option("--out", report_args.out, "Output directory");
  report->add_option("--config", report_args.config, "JSON config file");
  report->callback([&report_args, &rc] { rc = cmd_report(report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const akrasia::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
