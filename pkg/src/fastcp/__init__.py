"""
fastcp

Fast CP decompositions of large tensors through randomized Tucker
compression. Includes plain and constrained CP on full tensors, HOSVD and
randomized Tucker compressors, a simulated distributed RandTucker and a
synthetic benchmark harness.
"""

__version__ = "0.1.0"

from .cp import CpModel, CpResult, StopRule, SweepRecord, cp_als, cp_hals, cp_mu, cp_reconstruct
from .ffcp import ConstraintKind, ConstraintSpec, compressed_objective, ffcp, soft_threshold, tucker_cp
from .fileformats import read_any, read_cpm, read_dten, read_tkr, write_cpm, write_dten, write_tkr
from .rand import SeedSpec, gram_orthonormalize, orthonormal_basis, range_finder, sketch_matrix
from .tensor import fit, fold, frobenius_norm, khatri_rao, kron, multi_ttm, ttm, unfold
from .tucker import TuckerModel, hosvd, rand_tucker, rand_tucker_2i, reconstruct, tucker_als

__all__ = [
    "ConstraintKind",
    "ConstraintSpec",
    "CpModel",
    "CpResult",
    "SeedSpec",
    "StopRule",
    "SweepRecord",
    "TuckerModel",
    "__version__",
    "compressed_objective",
    "cp_als",
    "cp_hals",
    "cp_mu",
    "cp_reconstruct",
    "ffcp",
    "fit",
    "fold",
    "frobenius_norm",
    "gram_orthonormalize",
    "hosvd",
    "khatri_rao",
    "kron",
    "multi_ttm",
    "orthonormal_basis",
    "rand_tucker",
    "rand_tucker_2i",
    "range_finder",
    "read_any",
    "read_cpm",
    "read_dten",
    "read_tkr",
    "reconstruct",
    "sketch_matrix",
    "soft_threshold",
    "ttm",
    "tucker_als",
    "tucker_cp",
    "unfold",
    "write_cpm",
    "write_dten",
    "write_tkr",
]
