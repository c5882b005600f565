"""Multi-fidelity Gaussian process regression and benchmarking."""

import json

from ._core import (
    AR1Model,
    BenchmarkProblem,
    ConfigError,
    ContractViolation,
    CoupledAR1Model,
    GPModel,
    IoError,
    LmcModel,
    MFDGPModel,
    MfdgpConfig,
    NARGPModel,
    NumericalFailure,
    OptimizerConfig,
    ParseError,
    TrainingFailure,
    UndefinedMetric,
    bench_1d,
    bench_vardim,
    cantilever_bounds,
    cantilever_lf,
    fidelity_r2,
    fit_ar1,
    fit_ar1_coupled,
    fit_gp,
    fit_lmc,
    fit_mfdgp,
    fit_nargp,
    ingest_csv,
    lhs_sample,
    list_problems,
    make_nested,
    metric_mnll,
    metric_r2,
    metric_rmse,
    unit_bounds,
)


def run_experiment(config="", **overrides):
    """Run a benchmark sweep and return the report as a dict.

    `config` is INI text; keyword overrides use the config key names, with
    `section__key` for method sections (e.g. ``ar1__restarts=3``).
    """
    flat = {k.replace("__", "."): _format(v) for k, v in overrides.items()}
    report = json.loads(_core.run_experiment_json(config, flat))
    return report


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_format(v) for v in value)
    return str(value)


from . import _core  # noqa: E402
