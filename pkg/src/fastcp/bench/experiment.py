"""
Monte-Carlo experiments: configuration, execution and reports.

One experiment evaluates a list of algorithms over a grid of SNR values (or
of dimensions, for timing curves). Every run draws its data, noise and
initialization from streams derived from (root seed, run index), so the
runs can execute in parallel without changing the results.
"""

import configparser
import csv
import enum
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..cp import CpModel, StopRule, cp_als, cp_hals, cp_mu, cp_reconstruct
from ..ffcp import ConstraintKind, ConstraintSpec, compressed_objective, ffcp, tucker_cp, tucker_norm_sq
from ..rand import DEFAULT_OVERSAMPLE, as_seed
from ..tensor import fit
from ..tucker import TuckerModel, hosvd, rand_tucker, rand_tucker_2i, reconstruct, tucker_als
from .data import (
    Generator,
    add_noise,
    gen_cp_factors,
    gen_cp_tensor,
    gen_tucker_tensor,
    run_seeds,
    tucker_format_cp,
)
from .metrics import match_factors, mean_std

_log = logging.getLogger(__name__)

_CONFIG_SECTION = "experiment"

# Sub-streams keeping the compression sketch apart from the CP initialization.
COMPRESSION_KEY = 0
DECOMPOSITION_KEY = 1


class Algorithm(enum.Enum):
    HOSVD = "hosvd"
    RANDTUCKER = "randtucker"
    RANDTUCKER2I = "randtucker2i"
    TUCKER_ALS = "tucker_als"
    CP_ALS = "cp_als"
    CP_MU = "cp_mu"
    CP_HALS = "cp_hals"
    FFCP = "ffcp"
    FFCP_MU = "ffcp_mu"
    FFCP_HALS = "ffcp_hals"
    FFCP_SPARSE = "ffcp_sparse"
    TUCKER_CP = "tucker_cp"

    @property
    def is_tucker(self) -> bool:
        return self in TUCKER_ALGORITHMS

    @property
    def compresses(self) -> bool:
        """Whether the algorithm runs on a Tucker compression of its input."""
        return self in (Algorithm.FFCP, Algorithm.FFCP_MU, Algorithm.FFCP_HALS,
                        Algorithm.FFCP_SPARSE, Algorithm.TUCKER_CP)


TUCKER_ALGORITHMS = (Algorithm.HOSVD, Algorithm.RANDTUCKER, Algorithm.RANDTUCKER2I, Algorithm.TUCKER_ALS)


def _parse_list(value: str, kind=float) -> Tuple:
    return tuple(kind(v.strip()) for v in value.split(",") if v.strip())


@dataclass
class ExperimentConfig:
    """
    Everything needed to reproduce an experiment.

    ``mlrank`` defaults to ``rank`` in every mode. ``constraint`` applies to
    the ``ffcp`` algorithm id; ``ffcp_mu``, ``ffcp_hals`` and ``ffcp_sparse``
    fix their own. With ``sweep_dims`` set the grid runs over cubic tensors
    of those sizes at the first SNR instead of over the SNR list. With
    ``tucker_format`` the compressing algorithms receive the exact Tucker
    representation of the CP ground truth instead of a dense tensor.
    """

    name: str = "experiment"
    generator: Generator = Generator.CP_GAUSSIAN
    dims: Tuple[int, ...] = (50, 50, 50)
    rank: int = 10
    mlrank: Optional[Tuple[int, ...]] = None
    snr_db: Tuple[float, ...] = (10.0,)
    algorithms: Tuple[Algorithm, ...] = (Algorithm.FFCP, Algorithm.CP_ALS)
    constraint: ConstraintSpec = field(default_factory=ConstraintSpec)
    oversample: int = DEFAULT_OVERSAMPLE
    compression: Algorithm = Algorithm.RANDTUCKER2I
    stop: StopRule = field(default_factory=StopRule)
    runs: int = 10
    seed: int = 0
    zero_fraction: float = 0.1
    sweep_dims: Tuple[int, ...] = ()
    tucker_format: bool = False
    workers: int = 1

    def __post_init__(self):
        self.generator = Generator(self.generator)
        self.compression = Algorithm(self.compression)
        self.algorithms = tuple(Algorithm(a) for a in self.algorithms)
        self.dims = tuple(int(d) for d in self.dims)
        self.snr_db = tuple(float(s) for s in np.atleast_1d(self.snr_db))
        if self.mlrank is None:
            self.mlrank = (self.rank,) * len(self.dims)
        self.mlrank = tuple(int(r) for r in self.mlrank)

        if self.runs < 1:
            raise ValueError(f"runs must be at least 1, got {self.runs}")
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be positive, got {self.dims}")
        if len(self.mlrank) != len(self.dims):
            raise ValueError(f"mlrank has {len(self.mlrank)} entries for {len(self.dims)} modes")
        if not self.algorithms:
            raise ValueError("No algorithms configured")
        if not self.compression.is_tucker:
            raise ValueError(f"compression must be a Tucker algorithm, got {self.compression.value}")
        if not self.snr_db:
            raise ValueError("snr_db needs at least one value")
        if any(d < 1 for d in self.sweep_dims):
            raise ValueError(f"sweep_dims must be positive, got {self.sweep_dims}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.tucker_format:
            if self.generator is Generator.TUCKER_GAUSSIAN:
                raise ValueError("tucker_format needs a CP generator")
            if any(math.isfinite(s) for s in self.snr_db):
                raise ValueError("tucker_format inputs are noise-free; use snr_db = inf")
            if not all(a.compresses for a in self.algorithms):
                raise ValueError("tucker_format only supports FFCP and Tucker+CP algorithms")

    @property
    def sweep_key(self) -> str:
        return "dim" if self.sweep_dims else "snr_db"

    def grid_points(self) -> List[Tuple[Tuple[int, ...], float]]:
        """(dims, snr) of every grid point, in report order."""
        if self.sweep_dims:
            return [((I,) * len(self.dims), self.snr_db[0]) for I in self.sweep_dims]
        return [(self.dims, snr) for snr in self.snr_db]


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read an experiment from a key-value file.

    Keys mirror :class:`ExperimentConfig`; lists are comma-separated and
    ``inf`` is a valid SNR. ``constraint`` and ``sparsity_c`` build the
    constraint, ``max_iters`` and ``fit_tol`` the stopping rule.

    Raises:
        ValueError: On unknown keys or malformed values
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string(f"[{_CONFIG_SECTION}]\n" + Path(path).read_text())
    section = dict(parser[_CONFIG_SECTION])

    kwargs: Dict[str, Any] = {}
    converters = {
        "name": str,
        "generator": Generator,
        "dims": lambda v: _parse_list(v, int),
        "rank": int,
        "mlrank": lambda v: _parse_list(v, int),
        "snr_db": _parse_list,
        "algorithms": lambda v: tuple(Algorithm(a) for a in _parse_list(v, str)),
        "oversample": int,
        "compression": Algorithm,
        "runs": int,
        "seed": int,
        "zero_fraction": float,
        "sweep_dims": lambda v: _parse_list(v, int),
        "tucker_format": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
        "workers": int,
    }
    for key, convert in converters.items():
        if key in section:
            kwargs[key] = convert(section.pop(key))

    kind = ConstraintKind(section.pop("constraint", "none"))
    kwargs["constraint"] = ConstraintSpec(kind, float(section.pop("sparsity_c", 0.0)))
    kwargs["stop"] = StopRule(int(section.pop("max_iters", 1000)), float(section.pop("fit_tol", 1e-6)))

    if section:
        raise ValueError(f"{path}: unknown keys {sorted(section)}")
    return ExperimentConfig(**kwargs)


@dataclass
class RunRecord:
    """Outcome of one algorithm on one Monte-Carlo draw."""

    algorithm: str
    run: int
    dims: Tuple[int, ...]
    snr_db: float
    fit_truth: float = float("nan")
    fit_obs: float = float("nan")
    time_s: float = float("nan")
    sweep_time_s: float = float("nan")
    iterations: int = 0
    converged: Optional[bool] = None
    sir_mean: Optional[float] = None
    sir_min: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class PointSummary:
    """Aggregate of the successful runs of one (algorithm, grid value) point."""

    algorithm: str
    key: str
    value: float
    runs_ok: int
    runs_failed: int
    fit_mean: float
    fit_std: float
    fit_obs_mean: float
    time_mean: float
    time_std: float
    sweep_time_mean: float
    sir_mean: float

    @classmethod
    def from_records(cls, algorithm: str, key: str, value: float, records: Sequence[RunRecord]) -> "PointSummary":
        ok = [r for r in records if r.ok]
        fit_mean, fit_std = mean_std(r.fit_truth for r in ok)
        time_mean, time_std = mean_std(r.time_s for r in ok)
        return cls(
            algorithm=algorithm,
            key=key,
            value=value,
            runs_ok=len(ok),
            runs_failed=len(records) - len(ok),
            fit_mean=fit_mean,
            fit_std=fit_std,
            fit_obs_mean=mean_std(r.fit_obs for r in ok)[0],
            time_mean=time_mean,
            time_std=time_std,
            sweep_time_mean=mean_std(r.sweep_time_s for r in ok)[0],
            sir_mean=mean_std(r.sir_mean for r in ok if r.sir_mean is not None)[0],
        )


@dataclass
class Report:
    config: ExperimentConfig
    records: List[RunRecord]
    summaries: List[PointSummary]

    def summary(self, algorithm: Union[str, Algorithm], value: float) -> PointSummary:
        algorithm = Algorithm(algorithm).value
        for s in self.summaries:
            if s.algorithm == algorithm and s.value == value:
                return s
        raise KeyError(f"No summary for {algorithm} at {self.config.sweep_key}={value}")

    def summary_table(self) -> str:
        """Plain-text table of the aggregates, fit values in percent."""
        key = self.config.sweep_key
        lines = [
            f"Experiment {self.config.name}: {self.config.runs} runs, seed {self.config.seed}",
            f"{'algorithm':<14}{key:>10}{'fit %':>16}{'obs fit %':>11}{'time s':>18}{'SIR dB':>9}{'ok':>5}",
        ]
        for s in self.summaries:
            lines.append(
                f"{s.algorithm:<14}{s.value:>10g}"
                f"{100 * s.fit_mean:>9.1f} ±{100 * s.fit_std:>5.1f}"
                f"{100 * s.fit_obs_mean:>11.1f}"
                f"{s.time_mean:>10.3f} ±{s.time_std:>6.3f}"
                f"{s.sir_mean:>9.1f}{s.runs_ok:>5d}"
            )
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Union[str, Path]) -> Dict[str, Path]:
        """
        Write the per-run records (JSON lines), the summary table and the
        plot data (CSV, one row per grid point).

        Returns:
            Paths of the written files by kind
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "records": out_dir / f"{self.config.name}.jsonl",
            "summary": out_dir / f"{self.config.name}_summary.txt",
            "plot": out_dir / f"{self.config.name}_plot.csv",
        }
        with open(paths["records"], "w") as fh:
            for record in self.records:
                fh.write(json.dumps(asdict(record)) + "\n")
        paths["summary"].write_text(self.summary_table())
        with open(paths["plot"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["algorithm", self.config.sweep_key, "fit_mean", "fit_std", "time_mean",
                             "time_std", "sweep_time_mean", "sir_mean", "runs_ok"])
            for s in self.summaries:
                writer.writerow([s.algorithm, s.value, s.fit_mean, s.fit_std, s.time_mean,
                                 s.time_std, s.sweep_time_mean, s.sir_mean, s.runs_ok])
        _log.info("Wrote report to %s", out_dir)
        return paths


def compress(algorithm: Algorithm, Y: np.ndarray, ranks: Sequence[int], p: int, seed) -> TuckerModel:
    """Run one of the Tucker algorithms."""
    if algorithm is Algorithm.HOSVD:
        return hosvd(Y, ranks)
    if algorithm is Algorithm.TUCKER_ALS:
        return tucker_als(Y, ranks)
    if algorithm is Algorithm.RANDTUCKER:
        return rand_tucker(Y, ranks, p, seed)
    if algorithm is Algorithm.RANDTUCKER2I:
        return rand_tucker_2i(Y, ranks, p, seed)
    raise ValueError(f"{algorithm.value} is not a Tucker algorithm")


def _constraint_for(algorithm: Algorithm, cfg: ExperimentConfig) -> ConstraintSpec:
    if algorithm is Algorithm.FFCP_MU:
        return ConstraintSpec(ConstraintKind.NONNEG_MU)
    if algorithm is Algorithm.FFCP_HALS:
        return ConstraintSpec(ConstraintKind.NONNEG_HALS)
    if algorithm is Algorithm.FFCP_SPARSE:
        return ConstraintSpec(ConstraintKind.SPARSE, cfg.constraint.c)
    return cfg.constraint


def run_algorithm(algorithm: Algorithm, data: Union[np.ndarray, TuckerModel], cfg: ExperimentConfig, seed):
    """
    Run an algorithm on a dense tensor or, for the compressing algorithms,
    on a ready Tucker model.

    Returns:
        TuckerModel for Tucker algorithms, CpResult otherwise
    """
    if algorithm.is_tucker:
        return compress(algorithm, data, cfg.mlrank, cfg.oversample, seed)
    if algorithm is Algorithm.CP_ALS:
        return cp_als(data, cfg.rank, cfg.stop, seed)
    # Noise can push observed entries below zero; the nonnegative engines
    # see the observation clipped at zero.
    if algorithm is Algorithm.CP_MU:
        return cp_mu(np.maximum(data, 0.0), cfg.rank, cfg.stop, seed)
    if algorithm is Algorithm.CP_HALS:
        return cp_hals(np.maximum(data, 0.0), cfg.rank, cfg.stop, seed)

    seed = as_seed(seed)
    if isinstance(data, TuckerModel):
        model = data
    else:
        model = compress(cfg.compression, data, cfg.mlrank, cfg.oversample, seed.spawn(COMPRESSION_KEY))
    seed = seed.spawn(DECOMPOSITION_KEY)
    if algorithm is Algorithm.TUCKER_CP:
        return tucker_cp(model, cfg.rank, cfg.stop, seed)
    return ffcp(model, cfg.rank, _constraint_for(algorithm, cfg), cfg.stop, seed)


def _compressed_fit(model: TuckerModel, factors: Sequence[np.ndarray]) -> float:
    return 1.0 - math.sqrt(2.0 * compressed_objective(model, factors) / tucker_norm_sq(model))


def run_once(cfg: ExperimentConfig, algorithm: Algorithm, dims: Tuple[int, ...], snr_db: float, run: int) -> RunRecord:
    """One Monte-Carlo run of one algorithm; failures are recorded, not raised."""
    record = RunRecord(algorithm.value, run, dims, snr_db)
    data_seed, noise_seed, algo_seed = run_seeds(cfg.seed, run)
    try:
        truth_cp: Optional[CpModel] = None
        if cfg.generator is Generator.TUCKER_GAUSSIAN:
            Y_true, _ = gen_tucker_tensor(dims, cfg.mlrank, data_seed)
        else:
            distribution = "exponential" if cfg.generator is Generator.CP_EXPONENTIAL_SPARSE else "normal"
            if cfg.tucker_format:
                truth_cp = gen_cp_factors(dims, cfg.rank, data_seed, distribution, cfg.zero_fraction)
                Y_true = None
            else:
                Y_true, truth_cp = gen_cp_tensor(dims, cfg.rank, data_seed, distribution, cfg.zero_fraction)

        if cfg.tucker_format:
            data = tucker_format_cp(truth_cp)
        else:
            data = add_noise(Y_true, snr_db, noise_seed)

        start = time.perf_counter()
        result = run_algorithm(algorithm, data, cfg, algo_seed)
        record.time_s = time.perf_counter() - start

        if isinstance(result, TuckerModel):
            estimate = reconstruct(result)
            record.fit_truth = fit(Y_true, estimate)
            record.fit_obs = fit(data, estimate)
            return record

        record.iterations = result.iterations
        record.converged = result.converged
        record.sweep_time_s = float(np.mean([sum(r.mode_times) for r in result.trace]))
        if cfg.tucker_format:
            record.fit_truth = record.fit_obs = _compressed_fit(data, result.model.factors)
        else:
            estimate = cp_reconstruct(result.model)
            record.fit_truth = fit(Y_true, estimate)
            record.fit_obs = fit(data, estimate)
        if truth_cp is not None:
            match = match_factors(truth_cp, result.model)
            record.sir_mean, record.sir_min = match.mean_sir, match.min_sir
    except Exception as exc:
        _log.exception("%s run %d at %s failed", algorithm.value, run, dims)
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None) -> Report:
    """
    Execute every (grid point, algorithm, run) combination.

    Args:
        cfg: Experiment configuration
        out_dir: Directory for the report files (nothing written if None)

    Returns:
        Report with per-run records and per-point aggregates
    """
    tasks = [(algorithm, dims, snr, run)
             for dims, snr in cfg.grid_points()
             for algorithm in cfg.algorithms
             for run in range(cfg.runs)]
    _log.info("Experiment %s: %d tasks on %d workers", cfg.name, len(tasks), cfg.workers)

    if cfg.workers == 1:
        records = [run_once(cfg, *task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers, thread_name_prefix="fastcp-run") as pool:
            records = list(pool.map(lambda task: run_once(cfg, *task), tasks))

    summaries = []
    for dims, snr in cfg.grid_points():
        value = float(dims[0]) if cfg.sweep_dims else snr
        for algorithm in cfg.algorithms:
            point = [r for r in records if r.algorithm == algorithm.value and r.dims == dims and r.snr_db == snr]
            summaries.append(PointSummary.from_records(algorithm.value, cfg.sweep_key, value, point))

    report = Report(cfg, records, summaries)
    if out_dir is not None:
        report.write(out_dir)
    return report
