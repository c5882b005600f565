#include "mfgp/ar1.hpp"
#include "mfgp/benchmarks.hpp"
#include "mfgp/doe.hpp"
#include "mfgp/error.hpp"
#include "mfgp/experiment.hpp"
#include "mfgp/gp.hpp"
#include "mfgp/lmc.hpp"
#include "mfgp/metrics.hpp"
#include "mfgp/mfdgp.hpp"
#include "mfgp/nargp.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace py = pybind11;
using namespace mfgp;

namespace {

using Levels = std::vector<std::pair<MatrixXd, VectorXd>>;
using Prediction = std::pair<VectorXd, VectorXd>;

MultiFidelityDataset to_dataset(const Levels& levels) {
  MultiFidelityDataset data;
  for (const auto& [X, y] : levels) data.levels.push_back(Dataset{X, y});
  return data;
}

Prediction unpack(const PosteriorPrediction& p) { return {p.mean, p.variance}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-fidelity Gaussian process regression";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
  py::register_exception<TrainingFailure>(m, "TrainingFailure", PyExc_RuntimeError);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", PyExc_ValueError);

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("restarts", &OptimizerConfig::restarts)
      .def_readwrite("max_iterations", &OptimizerConfig::max_iterations)
      .def_readwrite("gradient_tolerance", &OptimizerConfig::gradient_tolerance)
      .def_readwrite("seed", &OptimizerConfig::seed)
      .def_readwrite("standardize", &OptimizerConfig::standardize)
      .def_readwrite("coef_bound", &OptimizerConfig::coef_bound);

  py::class_<MfdgpConfig>(m, "MfdgpConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &MfdgpConfig::iterations)
      .def_readwrite("learning_rate", &MfdgpConfig::learning_rate)
      .def_readwrite("n_mc", &MfdgpConfig::n_mc)
      .def_readwrite("minibatch", &MfdgpConfig::minibatch)
      .def_readwrite("max_inducing", &MfdgpConfig::max_inducing)
      .def_readwrite("noise_floor", &MfdgpConfig::noise_floor)
      .def_readwrite("init_noise", &MfdgpConfig::init_noise)
      .def_readwrite("seed", &MfdgpConfig::seed);

  // Design of experiments and benchmarks.
  m.def("unit_bounds", &unit_bounds, py::arg("d"));
  m.def("lhs_sample", &lhs_sample, py::arg("n"), py::arg("d"), py::arg("bounds"),
        py::arg("seed"));
  m.def("make_nested", &make_nested, py::arg("lf"), py::arg("hf"));

  py::class_<BenchmarkProblem>(m, "BenchmarkProblem")
      .def_readonly("name", &BenchmarkProblem::name)
      .def_readonly("dim", &BenchmarkProblem::dim)
      .def_readonly("bounds", &BenchmarkProblem::bounds)
      .def("eval_lf", &BenchmarkProblem::eval_lf, py::arg("X"))
      .def("eval_hf", &BenchmarkProblem::eval_hf, py::arg("X"));
  m.def("bench_1d", &bench_1d, py::arg("a"));
  m.def("bench_vardim", &bench_vardim, py::arg("d"));
  m.def("cantilever_lf", &cantilever_lf, py::arg("force"), py::arg("length"),
        py::arg("section"));
  m.def("cantilever_bounds", &cantilever_bounds);
  m.def("fidelity_r2", &fidelity_r2, py::arg("problem"), py::arg("X"));
  m.def("list_problems", [] {
    std::vector<std::map<std::string, std::string>> out;
    for (const auto& p : list_problems()) {
      out.push_back({{"name", p.name}, {"parameters", p.parameters},
                     {"description", p.description}});
    }
    return out;
  });

  m.def("metric_r2", &metric_r2, py::arg("y_test"), py::arg("y_pred"));
  m.def("metric_rmse", &metric_rmse, py::arg("y_test"), py::arg("y_pred"));
  m.def("metric_mnll", &metric_mnll, py::arg("y_test"), py::arg("mean"), py::arg("std"));

  // Models.
  py::class_<TrainedGP>(m, "GPModel")
      .def_readonly("nlml", &TrainedGP::nlml_value)
      .def_property_readonly("num_hyperparameters", &TrainedGP::num_hyperparameters)
      .def("predict", [](const TrainedGP& g, const MatrixXd& X) {
        return unpack(predict_gp(g, X));
      }, py::arg("X"));
  m.def(
      "fit_gp",
      [](const MatrixXd& X, const VectorXd& y, const OptimizerConfig& config, bool ard) {
        return fit_gp(KernelSpec::squared_exponential(static_cast<int>(X.cols()), ard),
                      Dataset{X, y}, config);
      },
      py::arg("X"), py::arg("y"), py::arg("config") = OptimizerConfig{},
      py::arg("ard") = true, py::call_guard<py::gil_scoped_release>());

  py::class_<AR1Model>(m, "AR1Model")
      .def_property_readonly("rhos", &AR1Model::rhos)
      .def_property_readonly("num_hyperparameters", &AR1Model::num_hyperparameters)
      .def("predict", [](const AR1Model& a, const MatrixXd& X, int level) {
        return unpack(ar1_predict(a, X, level));
      }, py::arg("X"), py::arg("level") = -1);
  m.def(
      "fit_ar1",
      [](const Levels& levels, const OptimizerConfig& config) {
        return ar1_fit_recursive(to_dataset(levels), config);
      },
      py::arg("levels"), py::arg("config") = OptimizerConfig{},
      py::call_guard<py::gil_scoped_release>());

  py::class_<CoupledAR1Model>(m, "CoupledAR1Model")
      .def_property_readonly("rho", &CoupledAR1Model::rho)
      .def_property_readonly("num_hyperparameters", &CoupledAR1Model::num_hyperparameters)
      .def("predict", [](const CoupledAR1Model& a, const MatrixXd& X, int level) {
        return unpack(ar1_predict_coupled(a, X, level));
      }, py::arg("X"), py::arg("level") = 1);
  m.def(
      "fit_ar1_coupled",
      [](const Levels& levels, const OptimizerConfig& config) {
        return ar1_fit_coupled(to_dataset(levels), config);
      },
      py::arg("levels"), py::arg("config") = OptimizerConfig{},
      py::call_guard<py::gil_scoped_release>());

  py::class_<LmcModel>(m, "LmcModel")
      .def_property_readonly("num_hyperparameters", &LmcModel::num_hyperparameters)
      .def("correlation", &LmcModel::correlation, py::arg("a"), py::arg("b"))
      .def("coregionalization", &LmcModel::coregionalization, py::arg("group"))
      .def("predict", [](const LmcModel& l, const MatrixXd& X, int level) {
        if (level < 0) level += static_cast<int>(l.joint.output_scalers.size());
        return unpack(lmc_predict(l, X, level));
      }, py::arg("X"), py::arg("level") = -1);
  m.def(
      "fit_lmc",
      [](const Levels& levels, const OptimizerConfig& config, int num_groups,
         std::vector<int> ranks) {
        LmcConfig lmc;
        lmc.num_groups = num_groups;
        lmc.ranks = ranks.empty() ? std::vector<int>(static_cast<std::size_t>(num_groups), 1)
                                  : std::move(ranks);
        return lmc_fit(to_dataset(levels), lmc, config);
      },
      py::arg("levels"), py::arg("config") = OptimizerConfig{}, py::arg("num_groups") = 2,
      py::arg("ranks") = std::vector<int>{}, py::call_guard<py::gil_scoped_release>());

  py::class_<NARGPModel>(m, "NARGPModel")
      .def_readonly("nested", &NARGPModel::nested)
      .def_property_readonly("num_hyperparameters", &NARGPModel::num_hyperparameters)
      .def("predict", [](const NARGPModel& n, const MatrixXd& X, int n_samples,
                         std::uint64_t seed, int level) {
        return unpack(nargp_predict(n, X, NargpPredictOptions{n_samples, seed, level}));
      }, py::arg("X"), py::arg("n_samples") = 1000, py::arg("seed") = 0,
         py::arg("level") = -1);
  m.def(
      "fit_nargp",
      [](const Levels& levels, const OptimizerConfig& config, bool nested) {
        return nargp_fit(to_dataset(levels), config, nested);
      },
      py::arg("levels"), py::arg("config") = OptimizerConfig{}, py::arg("nested") = false,
      py::call_guard<py::gil_scoped_release>());

  py::class_<MFDGPModel>(m, "MFDGPModel")
      .def_readonly("elbo_trace", &MFDGPModel::elbo_trace)
      .def_property_readonly("num_hyperparameters", &MFDGPModel::num_hyperparameters)
      .def("predict", [](const MFDGPModel& d, const MatrixXd& X, int n_samples,
                         std::uint64_t seed, int level) {
        return unpack(mfdgp_predict(d, X, MfdgpPredictOptions{n_samples, seed, level}));
      }, py::arg("X"), py::arg("n_samples") = 1000, py::arg("seed") = 0,
         py::arg("level") = -1);
  m.def(
      "fit_mfdgp",
      [](const Levels& levels, const MfdgpConfig& config) {
        return mfdgp_fit(to_dataset(levels), config);
      },
      py::arg("levels"), py::arg("config") = MfdgpConfig{},
      py::call_guard<py::gil_scoped_release>());

  // Runner.
  m.def(
      "run_experiment_json",
      [](const std::string& config_text, const std::map<std::string, std::string>& overrides) {
        ExperimentConfig cfg = parse_config(config_text);
        for (const auto& [key, value] : overrides) {
          const auto dot = key.find('.');
          if (dot == std::string::npos) {
            apply_setting(cfg, "", key, value);
          } else {
            apply_setting(cfg, key.substr(0, dot), key.substr(dot + 1), value);
          }
        }
        py::gil_scoped_release release;
        return report_json(run_experiment(cfg));
      },
      py::arg("config_text"), py::arg("overrides") = std::map<std::string, std::string>{});
  m.def(
      "ingest_csv",
      [](const std::string& path, int dim) {
        Levels out;
        for (const auto& level : ingest_csv(path, dim).levels) out.emplace_back(level.X, level.y);
        return out;
      },
      py::arg("path"), py::arg("dim"));
}
