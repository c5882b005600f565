#include "mfgp/benchmarks.hpp"
#include "mfgp/error.hpp"
#include "mfgp/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitIo = 3;

const char* const kTopLevelKeys[] = {"problem", "a",    "dim",     "csv",
                                     "methods", "doe_sizes", "reps", "seed",
                                     "out",     "workers",   "format",
                                     "test_set_size", "normalize_metrics"};

int run_command(const std::string& config_path, const std::map<std::string, std::string>& flags,
                const std::vector<std::string>& sets) {
  mfgp::ExperimentConfig cfg = mfgp::load_config(config_path);
  for (const auto& [key, value] : flags) mfgp::apply_setting(cfg, "", key, value);
  for (const std::string& item : sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw mfgp::ConfigError("--set expects key=value, got " + item);
    std::string key = item.substr(0, eq);
    std::string section;
    if (const auto dot = key.find('.'); dot != std::string::npos) {
      section = key.substr(0, dot);
      key = key.substr(dot + 1);
    }
    mfgp::apply_setting(cfg, section, key, item.substr(eq + 1));
  }
  mfgp::validate(cfg);

  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw mfgp::IoError("cannot create output directory " + cfg.out + ": " + ec.message());

  const mfgp::ExperimentReport report = mfgp::run_experiment(cfg);
  const auto path = std::filesystem::path(cfg.out) / (report.problem + "_report." + cfg.format);
  mfgp::emit_report(report, cfg.format, path.string());

  for (const auto& row : report.rows) {
    std::printf("%-13s %4d x %-4d r2 %10.3e  rmse %10.3e  mnll %10.3e  evo %8.2f%%  failed %d\n",
                row.method.c_str(), row.n_lf, row.n_hf, row.r2_mean, row.rmse_mean,
                row.mnll_mean, row.rmse_evolution_pct, row.n_failed);
  }
  std::printf("report written to %s\n", path.string().c_str());

  const bool all_failed =
      !report.records.empty() &&
      std::all_of(report.records.begin(), report.records.end(),
                  [](const mfgp::RepetitionRecord& r) { return r.failed; });
  if (all_failed) {
    std::fprintf(stderr, "every repetition failed; first error: %s\n",
                 report.records.front().error.c_str());
    return kExitRuntime;
  }
  return 0;
}

int ingest_command(const std::string& path, int dim) {
  const mfgp::MultiFidelityDataset data = mfgp::ingest_csv(path, dim);
  std::printf("levels %d\n", data.num_levels());
  for (int l = 0; l < data.num_levels(); ++l) {
    std::printf("fidelity %d: %ld rows\n", l + 1,
                static_cast<long>(data.levels[static_cast<std::size_t>(l)].size()));
  }
  std::printf("nested %s\n", data.nested() ? "true" : "false");
  return 0;
}

int list_command() {
  for (const auto& p : mfgp::list_problems()) {
    std::printf("%-14s %-22s %s\n", p.name.c_str(), p.parameters.c_str(), p.description.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity Gaussian process benchmark runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment sweep and write a report");
  std::string config_path;
  run->add_option("--config", config_path, "INI configuration file")->required();
  std::map<std::string, std::string> flags;
  for (const char* key : kTopLevelKeys) {
    run->add_option_function<std::string>(
        std::string("--") + key, [&flags, key](const std::string& v) { flags[key] = v; },
        std::string("Override the '") + key + "' config key");
  }
  std::vector<std::string> sets;
  run->add_option("--set", sets, "Override any key: key=value or section.key=value");

  auto* ingest = app.add_subcommand("ingest", "Validate and summarize a multi-fidelity CSV file");
  std::string csv_path;
  int dim = 0;
  ingest->add_option("--csv", csv_path, "Dataset file")->required();
  ingest->add_option("--dim", dim, "Input dimension")->required()->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list-problems", "List builtin benchmark problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_command(config_path, flags, sets);
    if (*ingest) return ingest_command(csv_path, dim);
    if (*list) return list_command();
  } catch (const mfgp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const mfgp::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const mfgp::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
