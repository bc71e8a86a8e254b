"""Numba-compiled kernels.

Kept in a dedicated module so ``@njit(cache=True)`` has a real file to anchor
its on-disk cache.  Import only happens when the numba backend is selected.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def containment_merge(values: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Pairwise set containment over sorted distinct code lists.

    ``values`` concatenates the per-column sorted distinct codes; column ``i``
    occupies ``values[offsets[i]:offsets[i + 1]]``.  Returns a boolean matrix
    ``incl`` with ``incl[i, j]`` true when column i's codes are a subset of
    column j's.  Empty columns are vacuously contained everywhere.

    One simultaneous merge pass: all cursors advance through the global code
    order, and a candidate pair (i, j) dies the first time i's current code
    is absent from j.
    """
    k = offsets.shape[0] - 1
    incl = np.ones((k, k), dtype=np.bool_)
    cursor = offsets[:k].copy()
    while True:
        current = np.int64(0)
        found = False
        for i in range(k):
            if cursor[i] < offsets[i + 1]:
                v = values[cursor[i]]
                if not found or v < current:
                    current = v
                    found = True
        if not found:
            break
        for i in range(k):
            has_i = cursor[i] < offsets[i + 1] and values[cursor[i]] == current
            if not has_i:
                continue
            for j in range(k):
                if i == j or not incl[i, j]:
                    continue
                has_j = cursor[j] < offsets[j + 1] and values[cursor[j]] == current
                if not has_j:
                    incl[i, j] = False
        for i in range(k):
            if cursor[i] < offsets[i + 1] and values[cursor[i]] == current:
                cursor[i] += 1
    return incl


@njit(cache=True)
def distinct_rows(codes: np.ndarray) -> np.int64:
    """Count distinct rows of an int64 code matrix.

    Folds columns pairwise: each column is first dense-ranked, then combined
    with the running row id, sorted, and re-ranked.  Both halves of the
    pairing key stay below n, so the combined key never overflows regardless
    of the raw code values.
    """
    n, k = codes.shape
    if n == 0:
        return np.int64(0)
    if k == 0:
        return np.int64(1)
    group = np.zeros(n, dtype=np.int64)
    group_count = np.int64(1)
    col_rank = np.empty(n, dtype=np.int64)
    combined = np.empty(n, dtype=np.int64)
    for col in range(k):
        order = np.argsort(codes[:, col])
        rank = np.int64(0)
        prev = codes[order[0], col]
        col_rank[order[0]] = 0
        for pos in range(1, n):
            idx = order[pos]
            v = codes[idx, col]
            if v != prev:
                rank += 1
                prev = v
            col_rank[idx] = rank
        width = rank + 1
        for i in range(n):
            combined[i] = group[i] * width + col_rank[i]
        order = np.argsort(combined)
        rank = np.int64(0)
        prev = combined[order[0]]
        group[order[0]] = 0
        for pos in range(1, n):
            idx = order[pos]
            if combined[idx] != prev:
                rank += 1
                prev = combined[idx]
            group[idx] = rank
        group_count = rank + 1
    return group_count
