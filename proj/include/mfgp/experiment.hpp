#pragma once

#include "mfgp/gp.hpp"
#include "mfgp/lmc.hpp"
#include "mfgp/mf_data.hpp"
#include "mfgp/mfdgp.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mfgp {

enum class Method { GpHf, Lmc, Ar1, Nargp, NargpNested, Mfdgp };

std::string method_name(Method method);
/// Throws ConfigError for unknown names.
Method parse_method(const std::string& name);
std::vector<Method> all_methods();

struct MethodSettings {
  OptimizerConfig optimizer;
  LmcConfig lmc;
  MfdgpConfig mfdgp;
  /// Monte-Carlo samples for the sampled predictors.
  int predict_samples = 1000;
};

/// Runner configuration. The file format is INI: top-level `key = value`
/// lines followed by optional `[method]` sections with per-method settings.
struct ExperimentConfig {
  /// bench_1d, bench_vardim or csv.
  std::string problem = "bench_1d";
  int a = 1;
  int dim = 2;
  std::string csv;
  std::vector<Method> methods = all_methods();
  std::vector<std::pair<int, int>> doe_sizes = {{30, 10}};
  int reps = 20;
  std::uint64_t seed = 0;
  std::string out = ".";
  int workers = 1;
  std::string format = "csv";
  int test_set_size = 1000;
  /// Score predictions after z-scoring with the test-set mean and std.
  bool normalize_metrics = false;
  std::map<Method, MethodSettings> settings;

  MethodSettings& method_settings(Method m);
  const MethodSettings& method_settings(Method m) const;
  /// Name used in reports and seed derivation, e.g. bench_1d_a2.
  std::string problem_label() const;
};

ExperimentConfig default_config();
/// Parses INI text; throws ConfigError on unknown keys or bad values.
ExperimentConfig parse_config(const std::string& text);
/// Throws IoError when the file cannot be read.
ExperimentConfig load_config(const std::string& path);
/// Applies one `key = value` entry; `section` is empty for top-level keys.
void apply_setting(ExperimentConfig& config, const std::string& section,
                   const std::string& key, const std::string& value);
/// Checks ranges and problem resolvability; throws ConfigError.
void validate(const ExperimentConfig& config);

struct RepetitionRecord {
  std::string method;
  int n_lf = 0;
  int n_hf = 0;
  int repetition = 0;
  bool failed = false;
  std::string error;
  double r2 = 0.0;
  double rmse = 0.0;
  double mnll = 0.0;
  /// 100 (rmse - rmse_gp_hf) / rmse_gp_hf for this repetition; NaN when the
  /// baseline failed.
  double rmse_evolution_pct = 0.0;
  int num_hyperparameters = 0;
};

struct AggregateRow {
  std::string problem;
  std::string method;
  int n_lf = 0;
  int n_hf = 0;
  double r2_mean = 0.0;
  double r2_std = 0.0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double mnll_mean = 0.0;
  double mnll_std = 0.0;
  double rmse_evolution_pct = 0.0;
  int n_failed = 0;
  int n_ok = 0;
};

struct ExperimentReport {
  std::string problem;
  std::uint64_t seed = 0;
  std::vector<AggregateRow> rows;
  std::vector<RepetitionRecord> records;
};

/// Aggregates per (method, DoE size) from the raw records. Standard deviations
/// use the n - 1 denominator (0 for a single repetition).
std::vector<AggregateRow> aggregate(const std::string& problem,
                                    const std::vector<RepetitionRecord>& records);

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Reads x1..xd, y, fidelity (1 = lowest) with a mandatory header.
MultiFidelityDataset ingest_csv(const std::string& path, int dim,
                                const std::string& fidelity_column = "fidelity");
void write_csv(const MultiFidelityDataset& data, const std::string& path);

/// format is "csv" or "json".
void emit_report(const ExperimentReport& report, const std::string& format,
                 const std::string& path);
std::string report_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);

}  // namespace mfgp
