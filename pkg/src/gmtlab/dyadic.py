"""Shared dyadic-grid utilities: cell indexing and quota branching.

The quota-branching helper drives both the random set generator and the
Frostman-style subset extraction: every parent square keeps between
floor(2^s) and ceil(2^s) children, and the fractional part of 2^s is
realized by handing the extra child to the parents whose lineage is
currently furthest below its size target (surplus diffusion).  This
keeps each subtree's leaf count within a bounded factor of its
expectation, which the covering checks rely on.
"""

from __future__ import annotations

import math

import numpy as np

MAX_LEVEL = 20


def level_of(delta: float) -> int:
    """Finest dyadic level whose squares are at least `delta` wide."""
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta {delta!r} outside (0, 1]")
    return min(MAX_LEVEL, int(math.floor(math.log2(1.0 / delta) + 1e-9)))


def is_dyadic(delta: float) -> bool:
    lg = math.log2(1.0 / delta)
    return abs(lg - round(lg)) < 1e-9


def cell_indices(points: np.ndarray, side: float) -> np.ndarray:
    """Origin-anchored grid cell of each point (integer rows)."""
    return np.floor(np.asarray(points, dtype=float) / side).astype(np.int64)


def count_cells(points: np.ndarray, side: float) -> int:
    """Number of occupied grid cells of the given side length."""
    cells = cell_indices(points, side)
    if cells.ndim == 1:
        return int(np.unique(cells).size)
    return int(np.unique(cells, axis=0).shape[0])


def quota_child_counts(
    surplus: np.ndarray,
    branch_log2: float,
    available: np.ndarray,
    hard_cap: int,
    tiebreak: np.ndarray,
    carry: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Children kept per parent under the quota rule.

    surplus: accumulated log2 excess of each parent's lineage.
    branch_log2: target log2 branching factor (s for planar squares).
    available: occupied child squares per parent (>= 1 each).
    hard_cap: per-parent ceiling, at most ceil(2^branch_log2).
    tiebreak: secondary sort key for choosing which parents get the
        extra child (random for generation, deterministic for extraction).
    carry: fractional child credit left over from previous levels; the
        updated carry is returned so small populations still realize a
        fractional branching factor on average.
    """
    p = surplus.shape[0]
    growth = 2.0 ** branch_log2
    base = int(math.floor(growth + 1e-12))
    frac = growth - base
    cap = np.minimum(available, hard_cap)
    counts = np.minimum(np.maximum(base, 1), cap)
    budget = frac * p + carry
    extra = int(math.floor(budget + 1e-9))
    new_carry = budget - extra
    if extra > 0:
        eligible = np.nonzero(counts < cap)[0]
        if eligible.size:
            order = np.lexsort((tiebreak[eligible], surplus[eligible]))
            take = eligible[order[: min(extra, eligible.size)]]
            counts = counts.copy()
            counts[take] += 1
    return counts, new_carry
