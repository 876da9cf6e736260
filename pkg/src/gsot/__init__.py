"""Noise-smoothed 1-Wasserstein distances: exact discrete solvers, an
entropic baseline, Monte Carlo estimation, closed-form bound calculators,
and batch experiment drivers."""

from .errors import ConfigError, ConvergenceError, GsotError, SolverError
from .measures import (DiscreteMeasure, SourceSpec, first_moment,
                       make_empirical, sample_source)
from .noise import (DensityBoundCertificate, NoiseModel, sample_noise,
                    verify_density_bound)
from .ot_exact import (DualityReport, TransportSolution, check_duality,
                       coupling_cost, solve_transport, w1_1d,
                       w1_uniform_clouds)
from .sinkhorn import EntropicSolution, kl_divergence, median_pairwise_cost, sinkhorn_solve
from .got_estimator import (BiasCalibration, Estimate, calibrate_bias_allowance,
                            estimate_got, estimate_one_sample)
from .theory_bounds import (BoundReport, bound_report, concentration_bound,
                            delta_param, rate_bound, stability_bound)
from .experiments import (AxiomsConfig, PlanConfig, ResultTable, SweepConfig,
                          config_hash, fit_loglog_slope, run_convergence_sweep,
                          run_metric_axioms, run_plan_convergence)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "GsotError", "SolverError",
    "DiscreteMeasure", "SourceSpec", "first_moment", "make_empirical",
    "sample_source",
    "DensityBoundCertificate", "NoiseModel", "sample_noise",
    "verify_density_bound",
    "DualityReport", "TransportSolution", "check_duality", "coupling_cost",
    "solve_transport", "w1_1d", "w1_uniform_clouds",
    "EntropicSolution", "kl_divergence", "median_pairwise_cost",
    "sinkhorn_solve",
    "BiasCalibration", "Estimate", "calibrate_bias_allowance", "estimate_got",
    "estimate_one_sample",
    "BoundReport", "bound_report", "concentration_bound", "delta_param",
    "rate_bound", "stability_bound",
    "AxiomsConfig", "PlanConfig", "ResultTable", "SweepConfig", "config_hash",
    "fit_loglog_slope", "run_convergence_sweep", "run_metric_axioms",
    "run_plan_convergence",
    "__version__",
]
