"""Collision-based uniformity testing.

``test_unif`` splits the sample into ``ceil(18 ln(2/delta))`` consecutive
blocks, accepts a block when its collision rate is below ``(1 + 2 xi^2)/n``
and takes a majority vote.  ``m_test_unif`` additionally rejects any sample
that leaves the reference support, then tests at half the distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import DomainError, Point, Sample

BINCOUNT_LIMIT = 50_000_000


class SampleTooSmallError(DomainError):
    """Some block would hold fewer than two points."""


@dataclass(frozen=True)
class TesterParams:
    __test__ = False

    xi: float
    delta: float

    def __post_init__(self):
        if not 0 < self.xi < 1 or not 0 < self.delta < 1:
            raise ValueError(f"xi and delta must lie in (0, 1), got {self.xi}, {self.delta}")

    @property
    def blocks(self) -> int:
        return math.ceil(18 * math.log(2 / self.delta))

    def threshold(self, n: int) -> float:
        return (1 + 2 * self.xi**2) / n


@dataclass
class TesterOutcome:
    accepted: int
    sub_decisions: list = field(default_factory=list)
    statistics: list = field(default_factory=list)
    threshold: float = float("nan")
    off_support: bool = False

    def __int__(self):
        return self.accepted

    def __bool__(self):
        return bool(self.accepted)


def _codes(block) -> np.ndarray:
    if isinstance(block, Sample):
        return block.codes
    if isinstance(block, np.ndarray) and block.dtype.kind in "iu":
        return block
    return Sample.from_points(block).codes


def collision_statistic(block) -> float:
    """Fraction of index pairs ``j < k`` with equal points."""
    codes = _codes(block)
    m = len(codes)
    if m < 2:
        raise SampleTooSmallError("collision statistic needs at least two points")
    return float(block_collisions(codes.reshape(1, m))[0]) / (m * (m - 1) / 2)


def block_collisions(blocks: np.ndarray) -> np.ndarray:
    """Colliding-pair counts per row, by sorting each row and summing ``c(c-1)/2`` over runs."""
    ell, mp = blocks.shape
    if mp == 0:
        return np.zeros(ell, dtype=np.int64)
    s = np.sort(blocks, axis=1)
    # run boundaries: position where the value changes, per row
    change = np.ones((ell, mp), dtype=bool)
    change[:, 1:] = s[:, 1:] != s[:, :-1]
    out = np.zeros(ell, dtype=np.int64)
    for r in range(ell):
        starts = np.flatnonzero(change[r])
        runs = np.diff(np.append(starts, mp))
        out[r] = int((runs * (runs - 1) // 2).sum())
    return out


def block_collisions_bincount(blocks: np.ndarray, k: int) -> np.ndarray:
    """Same counts as :func:`block_collisions` via one ``bincount`` over (row, code) cells."""
    ell, mp = blocks.shape
    flat = (blocks + (np.arange(ell, dtype=np.int64) * k)[:, None]).ravel()
    counts = np.bincount(flat, minlength=ell * k).reshape(ell, k).astype(np.int64)
    return (counts * (counts - 1) // 2).sum(axis=1)


def _size(Y) -> int:
    if isinstance(Y, (int, np.integer)):
        return int(Y)
    return len(Y)


def run_test_unif(Y, params: TesterParams, S: Sample) -> TesterOutcome:
    """Standard tester; the caller guarantees ``S`` lies inside ``Y``."""
    n = _size(Y)
    codes = _codes(S)
    ell = params.blocks
    mp = len(codes) // ell
    if mp < 2:
        raise SampleTooSmallError(f"{len(codes)} points cannot fill {ell} blocks of at least two")
    blocks = codes[: ell * mp].reshape(ell, mp)
    k = int(codes.max()) + 1 if len(codes) else 1
    if k * ell <= BINCOUNT_LIMIT:
        coll = block_collisions_bincount(blocks, k)
    else:
        coll = block_collisions(blocks)
    z = coll / (mp * (mp - 1) / 2)
    tr = params.threshold(n)
    acc = (z < tr).astype(int)
    return TesterOutcome(int(acc.sum() >= ell / 2), acc.tolist(), z.tolist(), tr)


def test_unif(Y, params: TesterParams, S: Sample) -> int:
    return run_test_unif(Y, params, S).accepted


test_unif.__test__ = False  # keep pytest from collecting it when imported


def run_m_test_unif(Y: Iterable[Point] | set, params: TesterParams, S: Sample) -> TesterOutcome:
    """Support-aware tester: reject outright on a point outside ``Y``."""
    Yset = Y if isinstance(Y, (set, frozenset)) else frozenset(Y)
    if not isinstance(S, Sample):
        S = Sample.from_points(S)
    if len(S) and not S.membership(Yset).all():
        return TesterOutcome(0, off_support=True)
    return run_test_unif(len(Yset), TesterParams(params.xi / 2, params.delta), S)


def m_test_unif(Y, params: TesterParams, S: Sample) -> int:
    return run_m_test_unif(Y, params, S).accepted


def m_test_sample_bound(n: int, xi: float, delta: float) -> int:
    """Sample size ``ceil(18 * 64 * sqrt(n) * ln(2/delta) / xi^2)`` for the standard tester."""
    if n < 1 or not 0 < xi < 1 or not 0 < delta < 1:
        raise ValueError("need n >= 1 and xi, delta in (0, 1)")
    return math.ceil(18 * 64 * math.sqrt(n) * math.log(2 / delta) / xi**2)
