#include "mfgp/experiment.hpp"

#include "mfgp/ar1.hpp"
#include "mfgp/benchmarks.hpp"
#include "mfgp/doe.hpp"
#include "mfgp/error.hpp"
#include "mfgp/metrics.hpp"
#include "mfgp/nargp.hpp"
#include "mfgp/random.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace mfgp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t' || c == '[' || c == ']') {
      if (!trim(cur).empty()) out.push_back(unquote(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(unquote(cur));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("invalid boolean '" + text + "' for key '" + key + "'");
}

std::pair<int, int> parse_doe(const std::string& text) {
  const auto pos = text.find_first_of("x:/");
  if (pos == std::string::npos) {
    throw ConfigError("DoE size '" + text + "' must look like N_LFxN_HF");
  }
  return {parse_number<int>("doe_sizes", text.substr(0, pos)),
          parse_number<int>("doe_sizes", text.substr(pos + 1))};
}

void apply_method_setting(MethodSettings& s, const std::string& section,
                          const std::string& key, const std::string& value) {
  const std::string full = section + "." + key;
  OptimizerConfig& o = s.optimizer;
  MfdgpConfig& m = s.mfdgp;
  if (key == "restarts") o.restarts = parse_number<int>(full, value);
  else if (key == "max_iterations") o.max_iterations = parse_number<int>(full, value);
  else if (key == "gradient_tolerance") o.gradient_tolerance = parse_number<double>(full, value);
  else if (key == "standardize") o.standardize = parse_bool(full, value);
  else if (key == "coef_bound") o.coef_bound = parse_number<double>(full, value);
  else if (key == "predict_samples") s.predict_samples = parse_number<int>(full, value);
  else if (key == "num_groups" && section == "lmc") s.lmc.num_groups = parse_number<int>(full, value);
  else if (key == "ranks" && section == "lmc") {
    s.lmc.ranks.clear();
    for (const auto& r : split_list(value)) s.lmc.ranks.push_back(parse_number<int>(full, r));
  } else if (key == "ard" && section == "lmc") s.lmc.ard = parse_bool(full, value);
  else if (section == "mfdgp" && key == "iterations") m.iterations = parse_number<int>(full, value);
  else if (section == "mfdgp" && key == "learning_rate") m.learning_rate = parse_number<double>(full, value);
  else if (section == "mfdgp" && key == "n_mc") m.n_mc = parse_number<int>(full, value);
  else if (section == "mfdgp" && key == "minibatch") m.minibatch = parse_number<int>(full, value);
  else if (section == "mfdgp" && key == "max_inducing") m.max_inducing = parse_number<int>(full, value);
  else if (section == "mfdgp" && key == "noise_floor") m.noise_floor = parse_number<double>(full, value);
  else if (section == "mfdgp" && key == "init_noise") m.init_noise = parse_number<double>(full, value);
  else throw ConfigError("unknown key '" + full + "'");
}

}  // namespace

// ---------------------------------------------------------------- config

std::string method_name(Method method) {
  switch (method) {
    case Method::GpHf: return "gp_hf";
    case Method::Lmc: return "lmc";
    case Method::Ar1: return "ar1";
    case Method::Nargp: return "nargp";
    case Method::NargpNested: return "nargp_nested";
    case Method::Mfdgp: return "mfdgp";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

std::vector<Method> all_methods() {
  return {Method::GpHf, Method::Lmc, Method::Ar1, Method::Nargp, Method::NargpNested,
          Method::Mfdgp};
}

MethodSettings& ExperimentConfig::method_settings(Method m) { return settings[m]; }

const MethodSettings& ExperimentConfig::method_settings(Method m) const {
  static const MethodSettings defaults;
  const auto it = settings.find(m);
  return it == settings.end() ? defaults : it->second;
}

std::string ExperimentConfig::problem_label() const {
  if (problem == "bench_1d") return "bench_1d_a" + std::to_string(a);
  if (problem == "bench_vardim") return "bench_vardim_d" + std::to_string(dim);
  if (problem == "csv") {
    const auto slash = csv.find_last_of('/');
    return "csv_" + (slash == std::string::npos ? csv : csv.substr(slash + 1));
  }
  return problem;
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

void apply_setting(ExperimentConfig& c, const std::string& section, const std::string& key,
                   const std::string& raw) {
  const std::string value = unquote(raw);
  if (!section.empty()) {
    apply_method_setting(c.method_settings(parse_method(section)), section, key, value);
    return;
  }
  if (key == "problem") c.problem = value;
  else if (key == "a") c.a = parse_number<int>(key, value);
  else if (key == "dim") c.dim = parse_number<int>(key, value);
  else if (key == "csv") c.csv = value;
  else if (key == "methods") {
    c.methods.clear();
    for (const auto& m : split_list(value)) c.methods.push_back(parse_method(m));
  } else if (key == "doe_sizes") {
    c.doe_sizes.clear();
    for (const auto& d : split_list(value)) c.doe_sizes.push_back(parse_doe(d));
  } else if (key == "reps") c.reps = parse_number<int>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "out") c.out = value;
  else if (key == "workers") c.workers = parse_number<int>(key, value);
  else if (key == "format") c.format = value;
  else if (key == "test_set_size") c.test_set_size = parse_number<int>(key, value);
  else if (key == "normalize_metrics") c.normalize_metrics = parse_bool(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  ExperimentConfig c = default_config();
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (item.parents.size() > 1) {
      throw ConfigError("nested sections are not supported: " + item.fullname());
    }
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) {
      value += (i > 0 ? "," : "") + item.inputs[i];
    }
    apply_setting(c, item.parents.empty() ? "" : item.parents[0], item.name, value);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read configuration file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  if (c.problem == "bench_1d") {
    if (c.a < 1 || c.a > 4) throw ConfigError("bench_1d needs a in {1, 2, 3, 4}");
  } else if (c.problem == "bench_vardim") {
    if (c.dim < 2) throw ConfigError("bench_vardim needs dim >= 2");
  } else if (c.problem == "csv") {
    if (c.csv.empty()) throw ConfigError("problem csv needs a csv path");
    if (c.dim < 1) throw ConfigError("problem csv needs dim >= 1");
  } else {
    throw ConfigError("unknown problem '" + c.problem + "'");
  }
  if (c.reps < 1) throw ConfigError("reps must be >= 1");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.format != "csv" && c.format != "json") throw ConfigError("format must be csv or json");
  if (c.test_set_size < 2) throw ConfigError("test_set_size must be >= 2");
  if (c.doe_sizes.empty()) throw ConfigError("doe_sizes is empty");
  for (const auto& [n_lf, n_hf] : c.doe_sizes) {
    if (n_lf < 1 || n_hf < 1) throw ConfigError("DoE sizes must be positive");
    const bool nests = std::find(c.methods.begin(), c.methods.end(), Method::NargpNested) !=
                       c.methods.end();
    if (nests && n_hf > n_lf) throw ConfigError("nargp_nested needs n_hf <= n_lf");
  }
  for (const auto& [m, s] : c.settings) {
    if (s.optimizer.restarts < 1 || s.optimizer.max_iterations < 1) {
      throw ConfigError(method_name(m) + ": restarts and max_iterations must be >= 1");
    }
    if (s.predict_samples < 2) throw ConfigError(method_name(m) + ": predict_samples must be >= 2");
    if (s.mfdgp.iterations < 1 || s.mfdgp.n_mc < 1 || s.mfdgp.learning_rate <= 0.0) {
      throw ConfigError(method_name(m) + ": invalid MF-DGP settings");
    }
  }
}

// ---------------------------------------------------------------- runner

namespace {

struct Prediction {
  VectorXd mean;
  VectorXd variance;  // latent + observation noise
  int num_hyperparameters = 0;
};

Prediction with_noise(const PosteriorPrediction& p, double noise, int count) {
  Prediction out;
  out.mean = p.mean;
  out.variance = p.variance.array() + noise;
  out.num_hyperparameters = count;
  return out;
}

double gp_noise(const TrainedGP& gp) {
  return gp.params.noise() * gp.output_scaler.scale * gp.output_scaler.scale;
}

double joint_noise(const JointModel& m, int level) {
  const double sc = m.output_scalers[static_cast<std::size_t>(level)].scale;
  return std::exp(std::max(m.params.log_noise(level), std::log(kNoiseFloor))) * sc * sc;
}

Prediction fit_and_predict(Method method, const MultiFidelityDataset& data,
                           const MultiFidelityDataset& nested, const MatrixXd& X_test,
                           const MethodSettings& settings, std::uint64_t seed) {
  OptimizerConfig opt = settings.optimizer;
  opt.seed = seed;
  const std::uint64_t predict_seed = derive_seed(seed, 1);
  switch (method) {
    case Method::GpHf: {
      const TrainedGP gp =
          fit_gp(KernelSpec::squared_exponential(data.dim()), data.top(), opt);
      return with_noise(predict_gp(gp, X_test), gp_noise(gp), gp.num_hyperparameters());
    }
    case Method::Lmc: {
      const LmcModel m = lmc_fit(data, settings.lmc, opt);
      return with_noise(lmc_predict(m, X_test, data.num_levels() - 1),
                        joint_noise(m.joint, data.num_levels() - 1), m.num_hyperparameters());
    }
    case Method::Ar1: {
      if (data.nested()) {
        const AR1Model m = ar1_fit_recursive(data, opt);
        return with_noise(ar1_predict(m, X_test), gp_noise(m.level_gps.back()),
                          m.num_hyperparameters());
      }
      const CoupledAR1Model m = ar1_fit_coupled(data, opt);
      return with_noise(ar1_predict_coupled(m, X_test), joint_noise(m.joint, 1),
                        m.num_hyperparameters());
    }
    case Method::Nargp:
    case Method::NargpNested: {
      const bool is_nested = method == Method::NargpNested;
      const NARGPModel m = nargp_fit(is_nested ? nested : data, opt, is_nested);
      return with_noise(nargp_predict(m, X_test, {settings.predict_samples, predict_seed}),
                        gp_noise(m.level_gps.back()), m.num_hyperparameters());
    }
    case Method::Mfdgp: {
      MfdgpConfig cfg = settings.mfdgp;
      cfg.seed = seed;
      const MFDGPModel m = mfdgp_fit(data, cfg);
      return with_noise(mfdgp_predict(m, X_test, {settings.predict_samples, predict_seed}),
                        mfdgp_noise(m), m.num_hyperparameters());
    }
  }
  throw ConfigError("unknown method");
}

std::vector<Eigen::Index> permutation(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

Dataset take_rows(const Dataset& d, const std::vector<Eigen::Index>& rows) {
  Dataset out{MatrixXd(static_cast<Eigen::Index>(rows.size()), d.X.cols()),
              VectorXd(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.X.row(static_cast<Eigen::Index>(k)) = d.X.row(rows[k]);
    out.y(static_cast<Eigen::Index>(k)) = d.y(rows[k]);
  }
  return out;
}

struct Repetition {
  MultiFidelityDataset data;
  MultiFidelityDataset nested;
  std::string nested_error;
  MatrixXd X_test;
  VectorXd y_test;
};

class ProblemSource {
 public:
  explicit ProblemSource(const ExperimentConfig& c) : config_(c) {
    const std::uint64_t root = derive_seed(c.seed, fnv1a(c.problem_label()));
    if (c.problem == "csv") {
      csv_ = ingest_csv(c.csv, c.dim);
      if (csv_.num_levels() != 2) {
        throw ConfigError("the runner needs a two-fidelity csv dataset");
      }
      for (const auto& [n_lf, n_hf] : c.doe_sizes) {
        if (n_lf > csv_.levels[0].size() || n_hf >= csv_.levels[1].size()) {
          throw ConfigError("DoE sizes exceed the rows of the csv dataset");
        }
      }
    } else {
      bench_ = c.problem == "bench_1d" ? bench_1d(c.a) : bench_vardim(c.dim);
      X_test_ = lhs_sample(c.test_set_size, bench_.dim, bench_.bounds,
                           derive_seed(root, fnv1a("test set")));
      y_test_ = bench_.eval_hf(X_test_);
    }
  }

  Repetition make(int n_lf, int n_hf, std::uint64_t seed) const {
    Repetition r;
    if (config_.problem != "csv") {
      const MatrixXd X_lf = lhs_sample(n_lf, bench_.dim, bench_.bounds, derive_seed(seed, 1));
      const MatrixXd X_hf = lhs_sample(n_hf, bench_.dim, bench_.bounds, derive_seed(seed, 2));
      const Dataset hf{X_hf, bench_.eval_hf(X_hf)};
      r.data.levels = {Dataset{X_lf, bench_.eval_lf(X_lf)}, hf};
      if (n_hf <= n_lf) {
        const MatrixXd X_nested = make_nested(X_lf, X_hf);
        r.nested.levels = {Dataset{X_nested, bench_.eval_lf(X_nested)}, hf};
      } else {
        r.nested_error = "a nested design needs n_hf <= n_lf";
      }
      r.X_test = X_test_;
      r.y_test = y_test_;
      return r;
    }
    const Dataset& lf_all = csv_.levels[0];
    const Dataset& hf_all = csv_.levels[1];
    auto lf_idx = permutation(lf_all.size(), derive_seed(seed, 1));
    auto hf_idx = permutation(hf_all.size(), derive_seed(seed, 2));
    const std::vector<Eigen::Index> test_idx(hf_idx.begin() + n_hf, hf_idx.end());
    lf_idx.resize(static_cast<std::size_t>(n_lf));
    hf_idx.resize(static_cast<std::size_t>(n_hf));
    const Dataset lf = take_rows(lf_all, lf_idx);
    const Dataset hf = take_rows(hf_all, hf_idx);
    const Dataset test = take_rows(hf_all, test_idx);
    r.data.levels = {lf, hf};
    r.X_test = test.X;
    r.y_test = test.y;
    if (n_hf > n_lf) {
      r.nested_error = "a nested design needs n_hf <= n_lf";
      return r;
    }
    // Nested design: LF values at the inserted HF points must exist in the file.
    const MatrixXd X_nested = make_nested(lf.X, hf.X);
    Dataset nested_lf{X_nested, VectorXd(X_nested.rows())};
    for (Eigen::Index i = 0; i < X_nested.rows() && r.nested_error.empty(); ++i) {
      Eigen::Index hit = -1;
      for (Eigen::Index j = 0; j < lf_all.size() && hit < 0; ++j) {
        if ((lf_all.X.row(j) - X_nested.row(i)).cwiseAbs().maxCoeff() <= 1e-12) hit = j;
      }
      if (hit < 0) {
        r.nested_error = "no low-fidelity value at a high-fidelity design point";
      } else {
        nested_lf.y(i) = lf_all.y(hit);
      }
    }
    r.nested.levels = {nested_lf, hf};
    return r;
  }

 private:
  const ExperimentConfig& config_;
  BenchmarkProblem bench_;
  MultiFidelityDataset csv_;
  MatrixXd X_test_;
  VectorXd y_test_;
};

void score(RepetitionRecord& rec, const Prediction& p, const VectorXd& y_test,
           bool normalize) {
  VectorXd y = y_test;
  VectorXd mean = p.mean;
  VectorXd sd = p.variance.cwiseMax(1e-20).cwiseSqrt();
  if (normalize) {
    const double mu = y.mean();
    const double s = std::sqrt((y.array() - mu).square().mean());
    if (!(s > 0.0)) throw UndefinedMetric("test outputs are constant");
    y = (y.array() - mu) / s;
    mean = (mean.array() - mu) / s;
    sd /= s;
  }
  rec.r2 = metric_r2(y, mean);
  rec.rmse = metric_rmse(y, mean);
  rec.mnll = metric_mnll(y, mean, sd);
}

std::vector<RepetitionRecord> run_repetition(const ExperimentConfig& c,
                                             const ProblemSource& source, int n_lf, int n_hf,
                                             int rep) {
  const std::uint64_t seed_r = repetition_seed(c.seed, c.problem_label(), static_cast<std::uint64_t>(rep));
  const std::uint64_t base =
      derive_seed(seed_r, (static_cast<std::uint64_t>(n_lf) << 32) | static_cast<std::uint64_t>(n_hf));
  const Repetition r = source.make(n_lf, n_hf, base);

  std::vector<Method> order{Method::GpHf};
  for (Method m : c.methods) {
    if (m != Method::GpHf) order.push_back(m);
  }
  const bool report_baseline =
      std::find(c.methods.begin(), c.methods.end(), Method::GpHf) != c.methods.end();

  std::vector<RepetitionRecord> out;
  double baseline_rmse = kNaN;
  for (Method m : order) {
    RepetitionRecord rec;
    rec.method = method_name(m);
    rec.n_lf = n_lf;
    rec.n_hf = n_hf;
    rec.repetition = rep;
    try {
      if (m == Method::NargpNested && !r.nested_error.empty()) {
        throw ContractViolation(r.nested_error);
      }
      const Prediction p = fit_and_predict(m, r.data, r.nested, r.X_test, c.method_settings(m),
                                           derive_seed(base, 16 + static_cast<std::uint64_t>(m)));
      rec.num_hyperparameters = p.num_hyperparameters;
      score(rec, p, r.y_test, c.normalize_metrics);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.r2 = rec.rmse = rec.mnll = kNaN;
    }
    if (m == Method::GpHf) baseline_rmse = rec.failed ? kNaN : rec.rmse;
    rec.rmse_evolution_pct = rec.failed ? kNaN : 100.0 * (rec.rmse - baseline_rmse) / baseline_rmse;
    if (m != Method::GpHf || report_baseline) out.push_back(std::move(rec));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  if (v.size() == 1) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::string& problem,
                                    const std::vector<RepetitionRecord>& records) {
  std::vector<AggregateRow> rows;
  std::vector<std::vector<const RepetitionRecord*>> groups;
  for (const auto& rec : records) {
    std::size_t g = 0;
    for (; g < rows.size(); ++g) {
      if (rows[g].method == rec.method && rows[g].n_lf == rec.n_lf && rows[g].n_hf == rec.n_hf) break;
    }
    if (g == rows.size()) {
      AggregateRow row;
      row.problem = problem;
      row.method = rec.method;
      row.n_lf = rec.n_lf;
      row.n_hf = rec.n_hf;
      rows.push_back(row);
      groups.emplace_back();
    }
    groups[g].push_back(&rec);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    std::vector<double> r2, rmse, mnll, evo;
    for (const auto* rec : groups[g]) {
      if (rec->failed) {
        ++rows[g].n_failed;
        continue;
      }
      ++rows[g].n_ok;
      r2.push_back(rec->r2);
      rmse.push_back(rec->rmse);
      mnll.push_back(rec->mnll);
      if (std::isfinite(rec->rmse_evolution_pct)) evo.push_back(rec->rmse_evolution_pct);
    }
    rows[g].r2_mean = mean_of(r2);
    rows[g].r2_std = std_of(r2);
    rows[g].rmse_mean = mean_of(rmse);
    rows[g].rmse_std = std_of(rmse);
    rows[g].mnll_mean = mean_of(mnll);
    rows[g].mnll_std = std_of(mnll);
    rows[g].rmse_evolution_pct = mean_of(evo);
  }
  return rows;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  const ProblemSource source(config);

  struct Task {
    int n_lf;
    int n_hf;
    int rep;
  };
  std::vector<Task> tasks;
  for (const auto& [n_lf, n_hf] : config.doe_sizes) {
    for (int r = 0; r < config.reps; ++r) tasks.push_back({n_lf, n_hf, r});
  }
  std::vector<std::vector<RepetitionRecord>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      results[i] = run_repetition(config, source, tasks[i].n_lf, tasks[i].n_hf, tasks[i].rep);
    }
  };
  const int n_threads = std::min<int>(config.workers, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentReport report;
  report.problem = config.problem_label();
  report.seed = config.seed;
  // Records ordered by DoE size, then method, then repetition.
  std::size_t k = 0;
  for (std::size_t d = 0; d < config.doe_sizes.size(); ++d) {
    const std::size_t first = k;
    k += static_cast<std::size_t>(config.reps);
    const std::size_t n_methods = results[first].size();
    for (std::size_t m = 0; m < n_methods; ++m) {
      for (std::size_t t = first; t < k; ++t) report.records.push_back(results[t][m]);
    }
  }
  report.rows = aggregate(report.problem, report.records);
  return report;
}

// ---------------------------------------------------------------- files

MultiFidelityDataset ingest_csv(const std::string& path, int dim,
                                const std::string& fidelity_column) {
  MFGP_REQUIRE(dim >= 1, "dim must be >= 1");
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(f, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
      header = split(trim(line));
      break;
    }
  }
  if (header.empty()) throw ParseError("missing header row", line_no);
  std::vector<std::string> expected;
  for (int k = 1; k <= dim; ++k) expected.push_back("x" + std::to_string(k));
  expected.push_back("y");
  expected.push_back(fidelity_column);
  if (header != expected) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw ParseError("header must be " + want, line_no);
  }

  std::vector<std::vector<std::pair<VectorXd, double>>> rows;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line));
    if (static_cast<int>(cells.size()) != dim + 2) {
      throw ParseError("expected " + std::to_string(dim + 2) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    VectorXd x(dim);
    double y = 0.0;
    long long fid = 0;
    for (int k = 0; k < dim + 2; ++k) {
      const std::string& s = cells[static_cast<std::size_t>(k)];
      const char* end = s.data() + s.size();
      std::from_chars_result res{};
      if (k == dim + 1) {
        res = std::from_chars(s.data(), end, fid);
      } else {
        double v = 0.0;
        res = std::from_chars(s.data(), end, v);
        if (k < dim) x(k) = v; else y = v;
        if (res.ec == std::errc() && !std::isfinite(v)) res.ec = std::errc::invalid_argument;
      }
      if (s.empty() || res.ec != std::errc() || res.ptr != end) {
        throw ParseError("non-numeric field '" + s + "'", line_no);
      }
    }
    if (fid < 1) throw ParseError("fidelity must be a positive integer", line_no);
    if (static_cast<std::size_t>(fid) > rows.size()) rows.resize(static_cast<std::size_t>(fid));
    rows[static_cast<std::size_t>(fid - 1)].emplace_back(x, y);
  }
  if (rows.empty()) throw ParseError("no data rows", line_no);
  MultiFidelityDataset data;
  for (std::size_t l = 0; l < rows.size(); ++l) {
    if (rows[l].empty()) {
      throw ParseError("fidelity level " + std::to_string(l + 1) + " has no rows (levels must be 1.." +
                           std::to_string(rows.size()) + ")",
                       line_no);
    }
    Dataset d{MatrixXd(static_cast<Eigen::Index>(rows[l].size()), dim),
              VectorXd(static_cast<Eigen::Index>(rows[l].size()))};
    for (std::size_t i = 0; i < rows[l].size(); ++i) {
      d.X.row(static_cast<Eigen::Index>(i)) = rows[l][i].first.transpose();
      d.y(static_cast<Eigen::Index>(i)) = rows[l][i].second;
    }
    data.levels.push_back(std::move(d));
  }
  return data;
}

void write_csv(const MultiFidelityDataset& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  const int d = data.dim();
  for (int k = 1; k <= d; ++k) f << "x" << k << ",";
  f << "y,fidelity\n";
  char buf[32];
  for (int l = 0; l < data.num_levels(); ++l) {
    const Dataset& lv = data.levels[static_cast<std::size_t>(l)];
    for (Eigen::Index i = 0; i < lv.size(); ++i) {
      for (int k = 0; k < d; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", lv.X(i, k));
        f << buf << ",";
      }
      std::snprintf(buf, sizeof buf, "%.17g", lv.y(i));
      f << buf << "," << (l + 1) << "\n";
    }
  }
  if (!f) throw IoError("failed writing " + path);
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "problem,method,n_lf,n_hf,r2_mean,r2_std,rmse_mean,rmse_std,mnll_mean,mnll_std,"
         "rmse_evolution_pct,n_failed\n";
  char buf[32];
  auto num = [&](double v) {
    if (std::isnan(v)) return std::string("nan");
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return std::string(buf);
  };
  for (const auto& r : report.rows) {
    out << r.problem << "," << r.method << "," << r.n_lf << "," << r.n_hf << ","
        << num(r.r2_mean) << "," << num(r.r2_std) << "," << num(r.rmse_mean) << ","
        << num(r.rmse_std) << "," << num(r.mnll_mean) << "," << num(r.mnll_std) << ","
        << num(r.rmse_evolution_pct) << "," << r.n_failed << "\n";
  }
  return out.str();
}

std::string report_json(const ExperimentReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["problem"] = report.problem;
  j["seed"] = report.seed;
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"problem", r.problem},
                    {"method", r.method},
                    {"n_lf", r.n_lf},
                    {"n_hf", r.n_hf},
                    {"r2_mean", r.r2_mean},
                    {"r2_std", r.r2_std},
                    {"rmse_mean", r.rmse_mean},
                    {"rmse_std", r.rmse_std},
                    {"mnll_mean", r.mnll_mean},
                    {"mnll_std", r.mnll_std},
                    {"rmse_evolution_pct", r.rmse_evolution_pct},
                    {"n_failed", r.n_failed},
                    {"n_ok", r.n_ok}});
  }
  j["aggregates"] = rows;
  ordered_json recs = ordered_json::array();
  for (const auto& r : report.records) {
    ordered_json o{{"method", r.method},
                   {"n_lf", r.n_lf},
                   {"n_hf", r.n_hf},
                   {"repetition", r.repetition},
                   {"failed", r.failed},
                   {"r2", r.r2},
                   {"rmse", r.rmse},
                   {"mnll", r.mnll},
                   {"rmse_evolution_pct", r.rmse_evolution_pct},
                   {"num_hyperparameters", r.num_hyperparameters}};
    if (r.failed) o["error"] = r.error;
    recs.push_back(o);
  }
  j["records"] = recs;
  return j.dump(2) + "\n";
}

void emit_report(const ExperimentReport& report, const std::string& format,
                 const std::string& path) {
  std::string text;
  if (format == "csv") {
    text = report_csv(report);
  } else if (format == "json") {
    text = report_json(report);
  } else {
    throw ConfigError("format must be csv or json");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace mfgp
