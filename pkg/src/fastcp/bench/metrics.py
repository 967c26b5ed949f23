"""
Scoring of estimated CP factors against the ground truth.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..cp import CpModel

_log = logging.getLogger(__name__)

#: SIR reported for an exact match.
SIR_CAP_DB = 300.0


def _standardize(a: np.ndarray) -> np.ndarray:
    centered = a - a.mean()
    std = centered.std()
    return centered / std if std > 0 else np.zeros_like(centered)


def sir(a: np.ndarray, a_hat: np.ndarray) -> float:
    """
    Signal-to-interference ratio of an estimated factor column, in dB.

    Both columns are standardized to zero mean and unit variance and the
    estimate's sign is aligned with the reference; the result is
    ``20 log10(||a|| / ||a - a_hat||)``, capped at 300 dB.

    Only the reference must vary. An estimated column that collapsed to a
    constant (a nonnegative component driven to zero, say) is a failed
    recovery rather than bad input: it standardizes to zeros and scores
    0 dB, so runs with dead components are still scored and averaged.

    Raises:
        ValueError: If the reference column is constant or the lengths differ
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    a_hat = np.asarray(a_hat, dtype=np.float64).ravel()
    if a.shape != a_hat.shape:
        raise ValueError(f"Length mismatch: {a.size} vs {a_hat.size}")
    if np.ptp(a) == 0:
        raise ValueError("SIR is undefined for a constant reference column")

    a = _standardize(a)
    a_hat = _standardize(a_hat)
    if a @ a_hat < 0:
        a_hat = -a_hat
    error = np.linalg.norm(a - a_hat)
    if error == 0.0:
        return SIR_CAP_DB
    return float(min(20.0 * np.log10(np.linalg.norm(a) / error), SIR_CAP_DB))


@dataclass
class FactorMatch:
    """
    Column correspondence between a ground truth and an estimate.

    ``permutation[r]`` is the estimated column matched to true column r;
    ``sir_db[n, r]`` is the SIR of that pair in mode n.
    """

    permutation: List[int]
    sir_db: np.ndarray

    @property
    def mean_sir(self) -> float:
        return float(np.mean(self.sir_db))

    @property
    def min_sir(self) -> float:
        return float(np.min(self.sir_db))


def _abs_correlation(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    Ac = A - A.mean(axis=0)
    Bc = B - B.mean(axis=0)
    norms = np.outer(np.linalg.norm(Ac, axis=0), np.linalg.norm(Bc, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.abs(Ac.T @ Bc) / norms
    return np.nan_to_num(corr, nan=0.0, posinf=0.0)


def match_factors(truth: CpModel, est: CpModel) -> FactorMatch:
    """
    Greedy column matching shared by all modes.

    Pairs are scored by the product over modes of the absolute correlation
    of the columns; the best remaining pair is taken until every column is
    matched.

    Raises:
        ValueError: If the ranks or shapes differ
    """
    if truth.rank != est.rank:
        raise ValueError(f"Rank mismatch: {truth.rank} vs {est.rank}")
    if truth.shape != est.shape:
        raise ValueError(f"Shape mismatch: {truth.shape} vs {est.shape}")

    R = truth.rank
    score = np.ones((R, R))
    for A, B in zip(truth.factors, est.factors):
        score *= _abs_correlation(A, B)

    permutation = [-1] * R
    remaining = score.copy()
    for _ in range(R):
        r, q = np.unravel_index(np.argmax(remaining), remaining.shape)
        permutation[r] = int(q)
        remaining[r, :] = -1.0
        remaining[:, q] = -1.0

    sir_db = np.array([[sir(A[:, r], B[:, permutation[r]]) for r in range(R)]
                       for A, B in zip(truth.factors, est.factors)])
    _log.debug("Matched columns %s, mean SIR %.2f dB", permutation, sir_db.mean())
    return FactorMatch(permutation, sir_db)


def mean_std(values) -> Tuple[float, float]:
    """Mean and population standard deviation, NaN for an empty input."""
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        return float("nan"), float("nan")
    return float(values.mean()), float(values.std())
