"""
Binary file formats for tensors and decomposition models.

All three formats share one layout: a 4-byte magic, little-endian u32
header fields, then float64 little-endian payloads in column-major order.

    .dten  "DTEN" version N dims[N]                    tensor
    .tkr   "TKRM" version N core_dims[N] (rows,cols)[N] core, factors
    .cpm   "CPMD" version N R dims[N]                   factors
"""

import logging
import struct
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .tensor import as_tensor

_log = logging.getLogger(__name__)

FORMAT_VERSION = 1

DTEN_MAGIC = b"DTEN"
TKR_MAGIC = b"TKRM"
CPM_MAGIC = b"CPMD"

PathLike = Union[str, Path]


def _pack_u32(*values: int) -> bytes:
    return struct.pack(f"<{len(values)}I", *values)


def _payload(array: np.ndarray) -> bytes:
    return np.asarray(array, dtype="<f8").ravel(order="F").tobytes()


class _Reader:
    """Sequential reader over a loaded file buffer."""

    def __init__(self, buffer: bytes, path: PathLike):
        self._buffer = buffer
        self._offset = 0
        self._path = path

    def magic(self, expected: bytes) -> None:
        found = self._take(4)
        if found != expected:
            raise ValueError(f"{self._path}: bad magic {found!r}, expected {expected!r}")
        version = self.u32()
        if version != FORMAT_VERSION:
            raise ValueError(f"{self._path}: unsupported version {version}")

    def u32(self, count: int = 1) -> Tuple[int, ...]:
        values = struct.unpack(f"<{count}I", self._take(4 * count))
        return values if count > 1 else values[0]

    def array(self, shape: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(self._take(8 * count), dtype="<f8")
        return data.astype(np.float64).reshape(shape, order="F")

    def finish(self) -> None:
        if self._offset != len(self._buffer):
            raise ValueError(f"{self._path}: {len(self._buffer) - self._offset} trailing bytes")

    def _take(self, size: int) -> bytes:
        end = self._offset + size
        if end > len(self._buffer):
            raise ValueError(f"{self._path}: truncated file")
        chunk = self._buffer[self._offset:end]
        self._offset = end
        return chunk


def _dims(values) -> Tuple[int, ...]:
    return tuple(values) if isinstance(values, tuple) else (values,)


def write_dten(path: PathLike, tensor: np.ndarray) -> None:
    """Write a dense tensor to a ``.dten`` file."""
    tensor = as_tensor(tensor)
    with open(path, "wb") as fh:
        fh.write(DTEN_MAGIC)
        fh.write(_pack_u32(FORMAT_VERSION, tensor.ndim, *tensor.shape))
        fh.write(_payload(tensor))
    _log.debug("Wrote tensor %s to %s", tensor.shape, path)


def read_dten(path: PathLike) -> np.ndarray:
    """
    Read a dense tensor from a ``.dten`` file.

    Raises:
        ValueError: On wrong magic, unsupported version or a truncated payload
    """
    reader = _Reader(Path(path).read_bytes(), path)
    reader.magic(DTEN_MAGIC)
    order = reader.u32()
    shape = _dims(reader.u32(order))
    tensor = reader.array(shape)
    reader.finish()
    return tensor


def write_tkr(path: PathLike, model) -> None:
    """Write a :class:`~fastcp.tucker.TuckerModel` to a ``.tkr`` file."""
    core = np.asarray(model.core)
    with open(path, "wb") as fh:
        fh.write(TKR_MAGIC)
        fh.write(_pack_u32(FORMAT_VERSION, core.ndim, *core.shape))
        for U in model.factors:
            fh.write(_pack_u32(*U.shape))
        fh.write(_payload(core))
        for U in model.factors:
            fh.write(_payload(U))


def read_tkr(path: PathLike):
    """Read a Tucker model from a ``.tkr`` file."""
    from .tucker import TuckerModel

    reader = _Reader(Path(path).read_bytes(), path)
    reader.magic(TKR_MAGIC)
    order = reader.u32()
    core_shape = _dims(reader.u32(order))
    factor_shapes = [_dims(reader.u32(2)) for _ in range(order)]
    core = reader.array(core_shape)
    factors = [reader.array(shape) for shape in factor_shapes]
    reader.finish()
    return TuckerModel(core, factors)


def write_cpm(path: PathLike, model) -> None:
    """Write a :class:`~fastcp.cp.CpModel` to a ``.cpm`` file."""
    with open(path, "wb") as fh:
        fh.write(CPM_MAGIC)
        fh.write(_pack_u32(FORMAT_VERSION, model.order, model.rank, *model.shape))
        for A in model.factors:
            fh.write(_payload(A))


def read_cpm(path: PathLike):
    """Read a CP model from a ``.cpm`` file."""
    from .cp import CpModel

    reader = _Reader(Path(path).read_bytes(), path)
    reader.magic(CPM_MAGIC)
    order, rank = reader.u32(2)
    dims = _dims(reader.u32(order))
    factors: List[np.ndarray] = [reader.array((dim, rank)) for dim in dims]
    reader.finish()
    return CpModel(factors)


def read_any(path: PathLike):
    """Read whichever of the three formats the file holds, keyed on its magic."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    readers = {DTEN_MAGIC: read_dten, TKR_MAGIC: read_tkr, CPM_MAGIC: read_cpm}
    if magic not in readers:
        raise ValueError(f"{path}: unknown file magic {magic!r}")
    return readers[magic](path)
