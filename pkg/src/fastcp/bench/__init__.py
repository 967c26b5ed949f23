"""
Synthetic benchmarks: data generation, scoring and experiment runner.
"""

from .data import (
    Generator,
    add_noise,
    gen_cp_factors,
    gen_cp_tensor,
    gen_tucker_tensor,
    realized_snr,
    run_seeds,
    tucker_format_cp,
)
from .distbench import run_dist_benchmark
from .experiment import (
    Algorithm,
    ExperimentConfig,
    PointSummary,
    Report,
    RunRecord,
    compress,
    load_config,
    run_algorithm,
    run_experiment,
    run_once,
)
from .metrics import SIR_CAP_DB, FactorMatch, match_factors, mean_std, sir

__all__ = [
    "Algorithm",
    "ExperimentConfig",
    "FactorMatch",
    "Generator",
    "PointSummary",
    "Report",
    "RunRecord",
    "SIR_CAP_DB",
    "add_noise",
    "compress",
    "gen_cp_factors",
    "gen_cp_tensor",
    "gen_tucker_tensor",
    "load_config",
    "match_factors",
    "mean_std",
    "realized_snr",
    "run_algorithm",
    "run_dist_benchmark",
    "run_experiment",
    "run_once",
    "run_seeds",
    "sir",
    "tucker_format_cp",
]
