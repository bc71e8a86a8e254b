"""Hot profiling kernels with selectable numba and numpy backends.

Two operations dominate profiling cost and are implemented twice:

* ``containment_matrix`` answers, for k columns at once, which column's
  distinct values are a subset of which other's.
* ``distinct_row_count`` counts distinct rows of a projected code matrix.

The active backend is chosen at import time from the ``FKDETECT_KERNELS``
environment variable (``numba`` or ``numpy``).  Unset, numba is used when it
imports cleanly, numpy otherwise.  ``use_backend`` switches at runtime for
tests and benchmarks.

Inputs are factorized int64 codes: each column's values are replaced by dense
ranks so kernels never touch Python objects.
"""

from __future__ import annotations

import os
from typing import Callable, Sequence

import numpy as np

BACKENDS = ("numba", "numpy")

_ENV_VAR = "FKDETECT_KERNELS"


class KernelError(RuntimeError):
    """Raised when a requested backend is unavailable."""


def _numba_funcs() -> tuple[Callable, Callable]:
    try:
        from fkdetect import _kernels_numba
    except ImportError as exc:
        raise KernelError(f"numba backend unavailable: {exc}") from exc
    return _kernels_numba.containment_merge, _kernels_numba.distinct_rows


def _pick_default() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested:
        if requested not in BACKENDS:
            raise KernelError(f"{_ENV_VAR} must be one of {BACKENDS}, got {requested!r}")
        if requested == "numba":
            _numba_funcs()
        return requested
    try:
        _numba_funcs()
    except KernelError:
        return "numpy"
    return "numba"


_active = _pick_default()


def active_backend() -> str:
    return _active


def use_backend(name: str) -> str:
    """Select a backend by name; returns the previously active one."""
    global _active
    if name not in BACKENDS:
        raise KernelError(f"unknown kernel backend {name!r}")
    if name == "numba":
        _numba_funcs()
    previous = _active
    _active = name
    return previous


def warm_up() -> None:
    """Force compilation of the active backend on tiny inputs."""
    containment_matrix([np.array([0], dtype=np.int64), np.array([0, 1], dtype=np.int64)])
    distinct_row_count(np.zeros((2, 2), dtype=np.int64))


def containment_matrix(column_codes: Sequence[np.ndarray]) -> np.ndarray:
    """Pairwise containment over per-column sorted distinct code arrays.

    ``column_codes[i]`` holds column i's distinct values as sorted int64
    codes drawn from one shared code space.  Returns a (k, k) boolean matrix
    where ``[i, j]`` means column i's value set is contained in column j's.
    Empty columns are vacuously contained in every column.
    """
    k = len(column_codes)
    if k == 0:
        return np.zeros((0, 0), dtype=bool)
    arrays = [np.ascontiguousarray(a, dtype=np.int64) for a in column_codes]
    offsets = np.zeros(k + 1, dtype=np.int64)
    for i, a in enumerate(arrays):
        offsets[i + 1] = offsets[i] + a.shape[0]
    values = np.concatenate(arrays) if offsets[-1] else np.zeros(0, dtype=np.int64)
    if _active == "numba":
        merge, _ = _numba_funcs()
        return np.asarray(merge(values, offsets))
    return _containment_numpy(arrays)


def _containment_numpy(arrays: list[np.ndarray]) -> np.ndarray:
    k = len(arrays)
    space = int(max((a[-1] for a in arrays if a.shape[0]), default=-1)) + 1
    member = np.zeros((space, k), dtype=np.int64)
    for i, a in enumerate(arrays):
        member[a, i] = 1
    shared = member.T @ member
    sizes = shared.diagonal()
    return shared == sizes[:, None]


def distinct_row_count(codes: np.ndarray) -> int:
    """Count distinct rows of an (n, k) matrix of dense per-column codes.

    Rows compare positionally; callers encode nulls as ordinary codes, so two
    rows that are null in the same places compare equal there.
    """
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if codes.ndim != 2:
        raise ValueError(f"expected a 2-d code matrix, got ndim={codes.ndim}")
    n, k = codes.shape
    if n == 0:
        return 0
    if k == 0:
        return 1
    if _active == "numba":
        _, distinct = _numba_funcs()
        return int(distinct(codes))
    return int(np.unique(codes, axis=0).shape[0])
