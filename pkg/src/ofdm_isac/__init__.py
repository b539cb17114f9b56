"""Capacity vs delay-estimation-accuracy tradeoffs for OFDM joint
sensing and communication links.

The library computes exact and asymptotic Bayesian estimation bounds for
multi-target delay/reflection-coefficient sensing on an OFDM grid, and
traces the boundary of the achievable (capacity, distortion) region by
convex power allocation. See the README for the CLI surface.
"""

from .acrb import (ConvergenceReport, acrb, acrb_gradient, acrb_zero_mean,
                   asymptotic_fim, convergence_report, expected_utv,
                   normalized_order_sum)
from .fim import (Scope, UTVSums, bcrb_given_input, expected_bcrb,
                  observation_fim, observation_fim_oracle, prior_fim,
                  utv_cross_sums, utv_sums)
from .numerics import (NotPositiveDefinite, fim_scaling, inverse_diagonal_psd,
                       inverse_psd, is_symmetric_psd, project_box_capped_simplex,
                       project_box_simplex_eq, steering_derivative,
                       steering_vector, trace_inverse_psd)
from .optimizer import (Infeasible, MaxIterationsWarning, ParetoPoint, capacity,
                        pareto_sweep, scalarized_solve,
                        sensing_optimal_closed_form, sensing_optimal_numeric,
                        solve_for_distortion, time_sharing_segment,
                        waterfill_c_optimal, waterfill_kkt_residual)
from .scenario import (PowerAllocation, ScenarioConfig, ScenarioError,
                       SeededStream, SymbolMatrix, TargetDraw, TargetPrior,
                       load_scenario, sample_symbols, sample_targets,
                       scenario_to_json)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport", "Infeasible", "MaxIterationsWarning",
    "NotPositiveDefinite", "ParetoPoint", "PowerAllocation", "ScenarioConfig",
    "ScenarioError", "Scope", "SeededStream", "SymbolMatrix", "TargetDraw",
    "TargetPrior", "UTVSums", "acrb", "acrb_gradient", "acrb_zero_mean",
    "asymptotic_fim", "bcrb_given_input", "capacity", "convergence_report",
    "expected_bcrb", "expected_utv", "fim_scaling", "inverse_diagonal_psd",
    "inverse_psd", "is_symmetric_psd", "load_scenario", "normalized_order_sum",
    "observation_fim", "observation_fim_oracle", "pareto_sweep", "prior_fim",
    "project_box_capped_simplex", "project_box_simplex_eq", "sample_symbols",
    "sample_targets", "scalarized_solve", "scenario_to_json",
    "sensing_optimal_closed_form", "sensing_optimal_numeric",
    "solve_for_distortion", "steering_derivative", "steering_vector",
    "time_sharing_segment", "trace_inverse_psd", "utv_cross_sums", "utv_sums",
    "waterfill_c_optimal", "waterfill_kkt_residual",
]
