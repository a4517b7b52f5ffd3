"""Hypotheses and the base hypothesis-class protocol.

A hypothesis is any callable ``point -> {0, 1}``; the ones defined here also
offer a vectorized ``labels(points)``.  A class answers consistency,
projection and shattering queries; the base implementations enumerate
members, structured classes override them with combinatorial oracles.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import (
    DiscreteDistribution,
    LabeledSample,
    Point,
    UndefinedPointError,
    labels_on,
    point_key,
    sort_points,
)

DEFAULT_VERTEX_CAP = 4096


class RealizabilityError(ValueError):
    """No hypothesis in the class is consistent with the labeled sample."""


class OracleUnavailableError(NotImplementedError):
    """The class cannot answer this query without a specialized oracle."""


class ProjectionTooLargeError(RuntimeError):
    """Projecting the class onto a point set exceeds the vertex cap."""


class Constant:
    """The constant predictor."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = int(value)

    def __call__(self, x) -> int:
        return self.value

    def labels(self, points: Sequence[Point]) -> np.ndarray:
        return np.full(len(points), self.value, dtype=np.int8)

    def __eq__(self, other):
        return isinstance(other, Constant) and other.value == self.value

    def __hash__(self):
        return hash(("const", self.value))

    def __repr__(self):
        return f"Constant({self.value})"


class TableHypothesis:
    """Hypothesis given by an explicit label table over a finite domain."""

    __slots__ = ("table", "name", "_key")

    def __init__(self, table: dict, name: str = ""):
        self.table = dict(table)
        self.name = name
        self._key = tuple(sorted(((point_key(p), int(v)) for p, v in self.table.items())))

    def __call__(self, x) -> int:
        try:
            return self.table[x]
        except KeyError:
            raise UndefinedPointError(f"hypothesis {self.name or '?'} undefined at {x!r}") from None

    def labels(self, points: Sequence[Point]) -> np.ndarray:
        t = self.table
        try:
            return np.fromiter((t[p] for p in points), dtype=np.int8, count=len(points))
        except KeyError as exc:
            raise UndefinedPointError(f"hypothesis undefined at {exc.args[0]!r}") from None

    def __eq__(self, other):
        return isinstance(other, TableHypothesis) and other._key == self._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        if self.name:
            return f"TableHypothesis({self.name})"
        return f"TableHypothesis({self.table})"


def restrict(h, points: Sequence[Point]) -> tuple[int, ...]:
    return tuple(int(v) for v in labels_on(h, points))


class HypothesisClass:
    """Finite-enumerable base class; subclasses override the oracles they can do faster."""

    name = "class"

    def members(self) -> Iterator:
        raise OracleUnavailableError(f"{self.name} cannot be enumerated")

    def size(self) -> int:
        return sum(1 for _ in self.members())

    # -- consistency -------------------------------------------------------

    def consistent_members(self, T: LabeledSample) -> Iterator:
        pts = T.sample.codebook
        for h in self.members():
            vals = labels_on(h, pts)[T.sample.codes]
            if np.array_equal(vals, T.labels):
                yield h

    def is_consistent(self, T: LabeledSample) -> bool:
        try:
            T.collapsed()
        except ValueError:
            return False
        return next(self.consistent_members(T), None) is not None

    def first_consistent(self, T: LabeledSample):
        """Consistent member that comes first in the class's canonical order."""
        h = next(self.consistent_members(T), None)
        if h is None:
            raise RealizabilityError("no hypothesis is consistent with the sample")
        return h

    def worst_consistent(self, T: LabeledSample, D: DiscreteDistribution, truth):
        """Consistent member with the largest loss against ``truth`` under ``D``."""
        true = labels_on(truth, D.points)
        best, best_loss = None, -1.0
        for h in self.consistent_members(T):
            loss = float(np.dot(D.masses, labels_on(h, D.points) != true))
            if loss > best_loss:
                best, best_loss = h, loss
        if best is None:
            raise RealizabilityError("no hypothesis is consistent with the sample")
        return best, best_loss

    # -- projection --------------------------------------------------------

    def behaviors(self, points: Sequence[Point], cap: int = DEFAULT_VERTEX_CAP) -> set[tuple[int, ...]]:
        """Distinct restrictions of the members to ``points`` (in the given order)."""
        out: set = set()
        for h in self.members():
            out.add(restrict(h, points))
            if len(out) > cap:
                raise ProjectionTooLargeError(f"more than {cap} behaviors on {len(points)} points")
        return out

    def shatters(self, points: Iterable[Point]) -> bool:
        pts = sort_points(set(points))
        if not pts:
            return True
        if len(pts) > 30:
            raise OracleUnavailableError("too many points to check shattering by enumeration")
        need = 1 << len(pts)
        try:
            return len(self.behaviors(pts, cap=need)) == need
        except ProjectionTooLargeError:  # pragma: no cover - cannot exceed 2^d
            return True


class FiniteClass(HypothesisClass):
    """Explicit list of hypotheses over a finite domain.

    Canonical order is lexicographic on the label vectors over the sorted domain.
    """

    def __init__(self, domain: Iterable[Point], label_rows, name: str = "finite"):
        self.domain = tuple(sort_points(domain))
        rows = np.asarray(label_rows, dtype=np.int8).reshape(-1, len(self.domain))
        if rows.size and not np.isin(rows, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        rows = np.unique(rows, axis=0)  # sorted lexicographically, deduplicated
        self.table = rows
        self.name = name
        self._col = {p: i for i, p in enumerate(self.domain)}
        self._members = [
            TableHypothesis(dict(zip(self.domain, r.tolist())), name=f"{name}[{''.join(map(str, r.tolist()))}]")
            for r in rows
        ]

    @classmethod
    def full(cls, domain: Iterable[Point], name: str = "full") -> "FiniteClass":
        domain = tuple(sort_points(domain))
        rows = list(itertools.product((0, 1), repeat=len(domain)))
        return cls(domain, rows, name)

    @classmethod
    def from_hypotheses(cls, domain: Iterable[Point], hyps: Iterable, name: str = "finite") -> "FiniteClass":
        domain = tuple(sort_points(domain))
        return cls(domain, [labels_on(h, domain) for h in hyps], name)

    def members(self):
        return iter(self._members)

    def size(self) -> int:
        return len(self._members)

    def columns(self, points: Sequence[Point]) -> np.ndarray:
        try:
            return np.array([self._col[p] for p in points], dtype=np.int64)
        except KeyError as exc:
            raise UndefinedPointError(f"point {exc.args[0]!r} outside the class domain") from None

    def consistent_mask(self, T: LabeledSample) -> np.ndarray:
        if len(T) == 0:
            return np.ones(len(self._members), dtype=bool)
        cols = self.columns(T.sample.codebook)[T.sample.codes]
        return (self.table[:, cols] == T.labels[None, :]).all(axis=1)

    def consistent_members(self, T: LabeledSample):
        mask = self.consistent_mask(T)
        return (self._members[i] for i in np.flatnonzero(mask))

    def behaviors(self, points, cap: int = DEFAULT_VERTEX_CAP):
        cols = self.columns(points)
        rows = np.unique(self.table[:, cols], axis=0) if len(cols) else np.zeros((1, 0), dtype=np.int8)
        if len(rows) > cap:
            raise ProjectionTooLargeError(f"more than {cap} behaviors on {len(points)} points")
        return {tuple(r) for r in rows.tolist()}

    def __repr__(self):
        return f"FiniteClass({self.name}, |X|={len(self.domain)}, |H|={len(self._members)})"
