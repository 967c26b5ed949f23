"""
Distributed versus single-node RandTucker comparison.
"""

import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..dist import Cluster, MsgKind, dist_rand_tucker, dist_rand_tucker_2i, partition, write_grid_file
from ..tensor import fit, principal_angles
from ..tucker import rand_tucker, rand_tucker_2i, reconstruct
from .data import Generator, add_noise, gen_cp_tensor, gen_tucker_tensor, realized_snr, run_seeds
from .experiment import Algorithm, ExperimentConfig

_log = logging.getLogger(__name__)

_ENGINES = {
    Algorithm.RANDTUCKER: (rand_tucker, dist_rand_tucker),
    Algorithm.RANDTUCKER2I: (rand_tucker_2i, dist_rand_tucker_2i),
}


def run_dist_benchmark(cfg: ExperimentConfig, splits: Sequence[Sequence[int]],
                       out_dir: Optional[Union[str, Path]] = None,
                       log_path: Optional[Union[str, Path]] = None) -> List[Dict[str, Any]]:
    """
    Compare ``cfg.compression`` on one node and on the grid ``splits``.

    Each run records the realized SNR, both fits and their difference, the
    largest principal angle between matching factors, message counts per
    kind and the largest per-worker peak allocation.

    Args:
        cfg: Experiment configuration (dims, mlrank, oversample, first SNR, runs, seed)
        splits: Segment lengths per mode
        out_dir: Directory for ``<name>_dist.jsonl`` and a copy of the grid as
            ``<name>_grid.cfg`` (nothing written if None)
        log_path: Where to export the message log of the last run

    Raises:
        ValueError: If the compression is not randomized or the grid does not fit dims
    """
    if cfg.compression not in _ENGINES:
        raise ValueError(f"dist-bench needs randtucker or randtucker2i, got {cfg.compression.value}")
    single_engine, dist_engine = _ENGINES[cfg.compression]
    snr = cfg.snr_db[0]

    records = []
    cluster = None
    for run in range(cfg.runs):
        data_seed, noise_seed, algo_seed = run_seeds(cfg.seed, run)
        if cfg.generator is Generator.TUCKER_GAUSSIAN:
            Y_true, _ = gen_tucker_tensor(cfg.dims, cfg.mlrank, data_seed)
        else:
            distribution = "exponential" if cfg.generator is Generator.CP_EXPONENTIAL_SPARSE else "normal"
            Y_true, _ = gen_cp_tensor(cfg.dims, cfg.rank, data_seed, distribution, cfg.zero_fraction)
        Y = add_noise(Y_true, snr, noise_seed)

        start = time.perf_counter()
        single = single_engine(Y, cfg.mlrank, cfg.oversample, algo_seed)
        single_time = time.perf_counter() - start

        grid = partition(Y, splits)
        cluster = Cluster(grid)
        start = time.perf_counter()
        distributed = dist_engine(grid, cfg.mlrank, cfg.oversample, algo_seed, cluster=cluster)
        dist_time = time.perf_counter() - start

        fit_single = fit(Y, reconstruct(single))
        fit_dist = fit(Y, reconstruct(distributed))
        angle = max(float(np.max(principal_angles(U, V), initial=0.0))
                    for U, V in zip(single.factors, distributed.factors))
        record = {
            "run": run,
            "algorithm": cfg.compression.value,
            "grid": list(grid.grid_shape),
            "snr_db_realized": realized_snr(Y_true, Y),
            "fit_single": fit_single,
            "fit_dist": fit_dist,
            "fit_diff": abs(fit_single - fit_dist),
            "max_angle": angle,
            "time_single_s": single_time,
            "time_dist_s": dist_time,
            "messages": {kind.value: cluster.log.count(kind) for kind in MsgKind},
            "peak_bytes": max(w.peak_bytes for w in cluster.workers.values()),
        }
        _log.info("dist-bench run %d: fit diff %.3g, max angle %.3g", run, record["fit_diff"], angle)
        records.append(record)

    if log_path is not None and cluster is not None:
        cluster.log.export(log_path)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_grid_file(out_dir / f"{cfg.name}_grid.cfg", splits)
        with open(out_dir / f"{cfg.name}_dist.jsonl", "w") as fh:
            for record in records:
                fh.write(json.dumps(record) + "\n")
    return records
