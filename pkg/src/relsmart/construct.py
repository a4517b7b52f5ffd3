"""Hypothesis-class and distribution-family constructions.

* :class:`RowClass` -- hypotheses with exactly ``M`` minority labels on row ``n``
  of the row-indexed domain and label 0 everywhere else.
* :class:`SetSystem` / :class:`SetSystemClass` -- size-``n`` subsets of a
  universe with small pairwise intersections, each carrying a random labeling
  that is 1 off the set.
* :func:`tagged_family` and :func:`wellsep_family_from_setsystem` for the
  distribution-family constructions.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DiscreteDistribution,
    DomainError,
    LabeledSample,
    Point,
    RandomSource,
    Sample,
    Tagged,
    UndefinedPointError,
    as_generator,
    labels_on,
    row_point,
)
from .hypotheses import (
    DEFAULT_VERTEX_CAP,
    HypothesisClass,
    OracleUnavailableError,
    ProjectionTooLargeError,
    RealizabilityError,
)

log = logging.getLogger(__name__)

ENUMERATION_LIMIT = 200_000


# ---------------------------------------------------------------------------
# Row class


def row_points(n: int) -> list[tuple[int, int]]:
    return [(n, j) for j in range(1, n + 1)]


def row_distribution(n: int) -> DiscreteDistribution:
    """Uniform distribution on row ``n``."""
    return DiscreteDistribution.uniform(row_points(n), name=f"D({n})")


@dataclass(frozen=True)
class RowClassParams:
    n: int
    M: int

    def __post_init__(self):
        if not 1 <= self.M <= self.n:
            raise ValueError(f"need 1 <= M <= n, got n={self.n}, M={self.M}")
        if 2 * self.M > self.n:
            warnings.warn("M > n/2: majority and minority labels swap roles", stacklevel=3)

    @property
    def xi(self) -> float:
        return self.M / self.n

    @classmethod
    def schedule(cls, n: int, beta: float) -> "RowClassParams":
        return cls(n, math.ceil(n ** (1 - beta)))


class RowHypothesis:
    """Member of the row class: label ``minority_label`` on ``minority`` columns of row ``n``."""

    __slots__ = ("n", "minority_label", "minority")

    def __init__(self, n: int, minority_label: int, minority: Iterable[int]):
        self.n = int(n)
        self.minority_label = int(minority_label)
        self.minority = frozenset(int(c) for c in minority)

    def __call__(self, x) -> int:
        if not isinstance(x, tuple) or len(x) != 2:
            raise UndefinedPointError(f"{x!r} is not a row-domain point")
        if x[0] != self.n:
            return 0
        return self.minority_label if x[1] in self.minority else 1 - self.minority_label

    def labels(self, points: Sequence[Point]) -> np.ndarray:
        return np.fromiter((self(p) for p in points), dtype=np.int8, count=len(points))

    def row_vector(self) -> np.ndarray:
        """Labels on columns ``1..n`` as an array."""
        v = np.full(self.n, 1 - self.minority_label, dtype=np.int8)
        if self.minority:
            v[np.fromiter(self.minority, dtype=np.int64) - 1] = self.minority_label
        return v

    @classmethod
    def from_row_vector(cls, n: int, vec: np.ndarray, M: int) -> "RowHypothesis":
        ones = np.flatnonzero(vec == 1) + 1
        zeros = np.flatnonzero(vec == 0) + 1
        if len(ones) == M:
            return cls(n, 1, ones.tolist())
        if len(zeros) == M:
            return cls(n, 0, zeros.tolist())
        raise ValueError("vector is not a row-class member")

    def __eq__(self, other):
        return isinstance(other, RowHypothesis) and np.array_equal(self.row_vector(), other.row_vector()) and self.n == other.n

    def __hash__(self):
        return hash((self.n, self.row_vector().tobytes()))

    def __repr__(self):
        cols = sorted(self.minority)
        shown = cols[:8]
        return f"RowHypothesis(n={self.n}, b={self.minority_label}, minority={shown}{'...' if len(cols) > 8 else ''})"


class RowClass(HypothesisClass):
    """The row class ``H(n) = H^(0)(n) u H^(1)(n)`` with combinatorial oracles."""

    def __init__(self, n: int, M: int):
        self.params = RowClassParams(n, M)
        self.n, self.M = n, M
        self.name = f"row(n={n},M={M})"
        self._profiles: dict = {}

    @property
    def xi(self) -> float:
        return self.params.xi

    def canonical(self, minority_label: int = 1) -> RowHypothesis:
        """Member with minority label on the first ``M`` columns."""
        return RowHypothesis(self.n, minority_label, range(1, self.M + 1))

    def size(self) -> int:
        c = math.comb(self.n, self.M)
        return c if 2 * self.M == self.n else 2 * c

    def members(self):
        if self.size() > ENUMERATION_LIMIT:
            raise OracleUnavailableError(f"{self.name} has {self.size()} members")
        seen = set()
        for b in (0, 1):
            for cols in itertools.combinations(range(1, self.n + 1), self.M):
                h = RowHypothesis(self.n, b, cols)
                key = h.row_vector().tobytes()
                if key not in seen:
                    seen.add(key)
                    yield h

    # -- consistency -------------------------------------------------------

    def _feasible(self, ones: int, zeros: int) -> bool:
        M, n = self.M, self.n
        return (ones <= M and zeros <= n - M) or (zeros <= M and ones <= n - M)

    def _split(self, T: LabeledSample):
        """Seen row columns by label; ``None`` if T is not realizable by any row labeling."""
        try:
            fixed = T.collapsed()
        except DomainError:
            return None
        seen = {0: [], 1: []}
        for p, y in fixed.items():
            if not isinstance(p, tuple) or len(p) != 2:
                return None
            if p[0] != self.n:
                if y != 0:
                    return None
                continue
            seen[y].append(p[1])
        return seen

    def is_consistent(self, T: LabeledSample) -> bool:
        seen = self._split(T)
        return seen is not None and self._feasible(len(seen[1]), len(seen[0]))

    def consistent_members(self, T: LabeledSample):
        seen = self._split(T)
        if seen is None:
            return iter(())
        return super().consistent_members(T)

    def _options(self, seen):
        """Yield (minority label, fixed vector, number of extra minority labels, unseen columns)."""
        n, M = self.n, self.M
        base = np.full(n, -1, dtype=np.int8)
        for y in (0, 1):
            if seen[y]:
                base[np.asarray(seen[y]) - 1] = y
        unseen = np.flatnonzero(base < 0)
        for b in (0, 1):
            r = M - len(seen[b])
            if 0 <= r <= len(unseen) and len(seen[1 - b]) <= n - M:
                yield b, base, r, unseen

    def first_consistent(self, T: LabeledSample) -> RowHypothesis:
        """Lexicographically smallest row vector among consistent members."""
        seen = self._split(T)
        best = None
        if seen is not None:
            for b, base, r, unseen in self._options(seen):
                v = base.copy()
                v[unseen] = 1 - b
                # put extra minority labels where they keep the vector smallest
                if b == 1:
                    chosen = unseen[len(unseen) - r:] if r else unseen[:0]
                else:
                    chosen = unseen[:r]
                v[chosen] = b
                if best is None or _lex_less(v, best):
                    best = v
        if best is None:
            raise RealizabilityError("no row-class member is consistent with the sample")
        return RowHypothesis.from_row_vector(self.n, best, self.M)

    def worst_consistent(self, T: LabeledSample, D: DiscreteDistribution, truth):
        """Consistent member maximizing loss against ``truth`` under ``D``, chosen greedily.

        Off-row points are labeled 0 by every member, so they add the same
        constant to every candidate's loss and only row columns are optimized.
        """
        seen = self._split(T)
        if seen is None:
            raise RealizabilityError("no row-class member is consistent with the sample")
        n = self.n
        w, t_row, off_loss = self._profile(D, truth)
        best, best_loss = None, -1.0
        for b, base, r, unseen in self._options(seen):
            v = base.copy()
            v[unseen] = 1 - b
            gain_b = w[unseen] * (t_row[unseen] != b)
            gain_other = w[unseen] * (t_row[unseen] != 1 - b)
            diff = gain_b - gain_other
            if r:
                # stable sort keeps ties in column order, so results are reproducible
                pick = unseen[np.argsort(-diff, kind="stable")[:r]]
                v[pick] = b
            loss = float(np.dot(w, v != t_row)) + off_loss
            if loss > best_loss:
                best, best_loss = v, loss
        if best is None:
            raise RealizabilityError("no row-class member is consistent with the sample")
        return RowHypothesis.from_row_vector(n, best, self.M), best_loss

    def _profile(self, D: DiscreteDistribution, truth):
        """Row-column weights, truth labels on the row, and the off-row loss every member pays."""
        key = (id(D), truth)
        cached = self._profiles.get(key)
        if cached is not None and cached[0] is D:
            return cached[1]
        n = self.n
        w = np.zeros(n)
        off_loss = 0.0
        tvals = labels_on(truth, D.points)
        t_row = np.zeros(n, dtype=np.int8)
        for p, mass, t in zip(D.points, D.masses, tvals.tolist()):
            if isinstance(p, tuple) and len(p) == 2 and p[0] == n:
                w[p[1] - 1] = mass
                t_row[p[1] - 1] = t
            elif t != 0:
                off_loss += mass
        if len(self._profiles) > 64:
            self._profiles.clear()
        self._profiles[key] = (D, (w, t_row, off_loss))
        return w, t_row, off_loss

    def canonical_worst(self, truth: RowHypothesis, T: LabeledSample) -> RowHypothesis:
        """Worst consistent member against ``truth`` under the uniform row distribution."""
        return self.worst_consistent(T, row_distribution(self.n), truth)[0]

    def truth_set(self, D: DiscreteDistribution) -> list[RowHypothesis]:
        """Canonical members plus, for each label, the member whose minority set is heaviest under ``D``."""
        w = np.zeros(self.n)
        for p, mass in zip(D.points, D.masses):
            if isinstance(p, tuple) and len(p) == 2 and p[0] == self.n:
                w[p[1] - 1] = mass
        heavy = (np.argsort(-w, kind="stable")[: self.M] + 1).tolist()
        out = [self.canonical(1), self.canonical(0), RowHypothesis(self.n, 1, heavy), RowHypothesis(self.n, 0, heavy)]
        uniq = []
        for h in out:
            if h not in uniq:
                uniq.append(h)
        return uniq

    # -- projection --------------------------------------------------------

    def behaviors(self, points: Sequence[Point], cap: int = DEFAULT_VERTEX_CAP):
        pts = list(points)
        in_row = sorted({p for p in pts if isinstance(p, tuple) and len(p) == 2 and p[0] == self.n})
        d = len(in_row)
        count = sum(math.comb(d, k) for k in range(d + 1) if self._feasible(k, d - k))
        if count > cap:
            raise ProjectionTooLargeError(f"{count} behaviors exceed the cap {cap}")
        pos = {p: i for i, p in enumerate(in_row)}
        out = set()
        for bits in itertools.product((0, 1), repeat=d):
            if self._feasible(sum(bits), d - sum(bits)):
                out.add(tuple(bits[pos[p]] if p in pos else 0 for p in pts))
        return out

    def shatters(self, points: Iterable[Point]) -> bool:
        pts = set(points)
        if not pts:
            return True
        if any(not (isinstance(p, tuple) and len(p) == 2 and p[0] == self.n) for p in pts):
            return False
        d = len(pts)
        return all(self._feasible(k, d - k) for k in range(d + 1))

    def extension_shattered(self, base: Iterable[Point]):
        """Predicate ``x -> shatters(base + [x])`` for unseen ``x``, precomputed once."""
        base = set(base)
        n = self.n
        if not self.shatters(base) or not all(self._feasible(k, len(base) + 1 - k) for k in range(len(base) + 2)):
            return lambda x: False
        return lambda x: isinstance(x, tuple) and len(x) == 2 and x[0] == n and 1 <= x[1] <= n and x not in base

    def __repr__(self):
        return f"RowClass(n={self.n}, M={self.M})"


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    diff = np.flatnonzero(a != b)
    return bool(diff.size) and a[diff[0]] < b[diff[0]]


# ---------------------------------------------------------------------------
# Set systems


class SetSystemError(RuntimeError):
    """Set-system generation could not meet the requested properties."""


class SeparationError(ValueError):
    """A distribution family is not well separated."""


@dataclass(frozen=True)
class SetSystem:
    universe_size: int
    n: int
    sets: tuple  # of sorted int tuples
    seed: int | None = None
    stream: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(tuple(sorted(int(u) for u in s)) for s in self.sets))

    @property
    def k(self) -> int:
        return len(self.sets)

    def incidence(self) -> np.ndarray:
        mat = np.zeros((self.k, self.universe_size), dtype=bool)
        for i, s in enumerate(self.sets):
            mat[i, list(s)] = True
        return mat

    def intersections(self) -> np.ndarray:
        inc = self.incidence().astype(np.int64)
        return inc @ inc.T

    def max_intersection(self) -> int:
        if self.k < 2:
            return 0
        inter = self.intersections()
        iu = np.triu_indices(self.k, 1)
        return int(inter[iu].max())

    def containers(self, T: Iterable[int]) -> list[int]:
        T = list(T)
        inc = self.incidence()
        if not T:
            return list(range(self.k))
        return np.flatnonzero(inc[:, T].all(axis=1)).tolist()

    def to_json(self) -> dict:
        return {
            "universe_size": self.universe_size,
            "n": self.n,
            "sets": [list(s) for s in self.sets],
            "seed": self.seed,
            "stream": list(self.stream),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SetSystem":
        return cls(obj["universe_size"], obj["n"], tuple(tuple(s) for s in obj["sets"]), obj.get("seed"), tuple(obj.get("stream", ())))


def schedule_set_system_params(n: int, beta: float) -> dict:
    """Universe size and thresholds from the asymptotic construction."""
    return {
        "universe_size": math.ceil(n ** (1 + beta)),
        "intersection": n ** (1 - beta / 2),
        "container_size": int(2 * n ** (1 - beta)),
        "container_count": 0.5 * math.exp(n ** (1 - beta / 2) / 8),
    }


@dataclass
class SetSystemReport:
    sizes_ok: bool
    max_intersection: int
    intersection_threshold: float
    intersection_ok: bool
    violating_pair: tuple | None = None
    container_size: int | None = None
    container_threshold: float | None = None
    container_min: int | None = None
    container_checked: int = 0
    container_total: int = 0
    container_ok: bool = True
    container_violation: tuple | None = None

    @property
    def coverage(self) -> float:
        return self.container_checked / self.container_total if self.container_total else 1.0

    @property
    def ok(self) -> bool:
        return self.sizes_ok and self.intersection_ok and self.container_ok

    def describe(self) -> str:
        parts = []
        if not self.sizes_ok:
            parts.append("set sizes differ from n")
        if not self.intersection_ok:
            parts.append(
                f"pair {self.violating_pair} intersects in {self.max_intersection} > {self.intersection_threshold}"
            )
        if not self.container_ok:
            parts.append(f"subset {self.container_violation} has only {self.container_min} containers")
        return "; ".join(parts) or "ok"

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "sizes_ok": self.sizes_ok,
            "max_intersection": self.max_intersection,
            "intersection_threshold": self.intersection_threshold,
            "intersection_ok": self.intersection_ok,
            "container_size": self.container_size,
            "container_threshold": self.container_threshold,
            "container_min": self.container_min,
            "container_ok": self.container_ok,
            "container_coverage": self.coverage,
        }


def verify_set_system(
    system: SetSystem,
    intersection: float,
    container_size: int | None = None,
    container_count: float | None = None,
    samples: int = 2000,
    rng=None,
    exhaustive_limit: int = 50_000,
) -> SetSystemReport:
    """Check set sizes and pairwise intersections exactly, container counts on (sampled) small subsets."""
    sizes_ok = all(len(s) == system.n and len(set(s)) == system.n for s in system.sets)
    pair = None
    maxi = 0
    if system.k >= 2:
        inter = system.intersections()
        iu = np.triu_indices(system.k, 1)
        vals = inter[iu]
        j = int(np.argmax(vals))
        maxi = int(vals[j])
        pair = (int(iu[0][j]), int(iu[1][j]))
    report = SetSystemReport(sizes_ok, maxi, intersection, maxi <= intersection, None if maxi <= intersection else pair)
    if container_size is None or container_count is None:
        return report

    U = system.universe_size
    inc = system.incidence()
    total = sum(math.comb(U, j) for j in range(container_size + 1))
    report.container_size = container_size
    report.container_threshold = container_count
    report.container_total = total
    if total <= exhaustive_limit:
        subsets = (T for j in range(container_size + 1) for T in itertools.combinations(range(U), j))
    else:
        gen = as_generator(rng if rng is not None else 0)
        sizes = gen.integers(0, container_size + 1, size=samples)
        subsets = (tuple(sorted(gen.choice(U, size=int(s), replace=False).tolist())) for s in sizes)
    checked, worst, worst_T = 0, None, None
    seen = set()
    for T in subsets:
        if T in seen:
            continue
        seen.add(T)
        c = system.k if not T else int(inc[:, list(T)].all(axis=1).sum())
        checked += 1
        if worst is None or c < worst:
            worst, worst_T = c, T
    report.container_checked = checked
    report.container_min = worst
    report.container_ok = worst is None or worst >= container_count
    if not report.container_ok:
        report.container_violation = worst_T
    return report


def sample_set_system(
    universe_size: int,
    n: int,
    k: int,
    rng: RandomSource | int,
    intersection: float | None = None,
    container_size: int | None = None,
    container_count: float | None = None,
    retries: int = 50,
) -> SetSystem:
    """Draw ``k`` uniform size-``n`` subsets, redrawing on a fresh stream until verification passes."""
    if n > universe_size:
        raise ValueError("set size exceeds the universe")
    if k < 1:
        raise ValueError("need at least one set")
    src = rng if isinstance(rng, RandomSource) else RandomSource(int(rng))
    threshold = n if intersection is None else intersection
    last = None
    for attempt in range(retries):
        stream = src.child(attempt)
        gen = stream.generator()
        sets = tuple(tuple(sorted(gen.choice(universe_size, size=n, replace=False).tolist())) for _ in range(k))
        system = SetSystem(universe_size, n, sets, src.seed, stream.stream)
        last = verify_set_system(system, threshold, container_size, container_count, rng=stream.child(10**6))
        if last.ok:
            log.debug("set system accepted after %d attempt(s)", attempt + 1)
            return system
    raise SetSystemError(f"no valid set system in {retries} attempts: {last.describe()}")


class SetHypothesis:
    """``h_S``: a stored labeling on ``S`` and 1 elsewhere in the universe."""

    __slots__ = ("index", "row", "universe_size")

    def __init__(self, index: int, row: np.ndarray):
        self.index = index
        self.row = row
        self.universe_size = len(row)

    def __call__(self, x) -> int:
        if not isinstance(x, (int, np.integer)) or not 0 <= x < self.universe_size:
            raise UndefinedPointError(f"{x!r} outside the universe")
        return int(self.row[x])

    def labels(self, points: Sequence[Point]) -> np.ndarray:
        idx = np.asarray(points, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.universe_size):
            raise UndefinedPointError("point outside the universe")
        return self.row[idx].astype(np.int8)

    def __eq__(self, other):
        return isinstance(other, SetHypothesis) and np.array_equal(self.row, other.row)

    def __hash__(self):
        return hash(self.row.tobytes())

    def __repr__(self):
        return f"SetHypothesis(S{self.index})"


class SetSystemClass(HypothesisClass):
    """Labeled set system; canonical order follows set index."""

    def __init__(self, system: SetSystem, labelings: np.ndarray):
        self.system = system
        table = np.ones((system.k, system.universe_size), dtype=np.int8)
        labelings = np.asarray(labelings, dtype=np.int8)
        for i, s in enumerate(system.sets):
            table[i, list(s)] = labelings[i]
        self.table = table
        self.labelings = labelings
        self._members = [SetHypothesis(i, table[i]) for i in range(system.k)]
        self.name = f"setsystem(U={system.universe_size},n={system.n},k={system.k})"

    def hypothesis(self, i: int) -> SetHypothesis:
        return self._members[i]

    def distribution(self, i: int) -> DiscreteDistribution:
        return DiscreteDistribution.uniform(self.system.sets[i], name=f"D_S{i}")

    def members(self):
        return iter(self._members)

    def size(self) -> int:
        return len(self._members)

    def _cols(self, points) -> np.ndarray:
        idx = np.asarray(list(points), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.system.universe_size):
            raise UndefinedPointError("point outside the universe")
        return idx

    def consistent_mask(self, T: LabeledSample) -> np.ndarray:
        if len(T) == 0:
            return np.ones(self.system.k, dtype=bool)
        cols = self._cols(T.sample.codebook)[T.sample.codes]
        return (self.table[:, cols] == T.labels[None, :]).all(axis=1)

    def consistent_members(self, T: LabeledSample):
        return (self._members[i] for i in np.flatnonzero(self.consistent_mask(T)))

    def behaviors(self, points, cap: int = DEFAULT_VERTEX_CAP):
        cols = self._cols(points)
        rows = np.unique(self.table[:, cols], axis=0) if len(cols) else np.zeros((1, 0), dtype=np.int8)
        if len(rows) > cap:
            raise ProjectionTooLargeError(f"more than {cap} behaviors")
        return {tuple(r) for r in rows.tolist()}

    def to_json(self) -> dict:
        return {
            "system": self.system.to_json(),
            "labelings": ["".join(map(str, row.tolist())) for row in self.labelings],
        }

    def __repr__(self):
        return f"SetSystemClass({self.name})"


def sample_labelings(system: SetSystem, rng) -> SetSystemClass:
    gen = as_generator(rng)
    return SetSystemClass(system, gen.integers(0, 2, size=(system.k, system.n), dtype=np.int8))


@dataclass
class BalanceReport:
    tolerance: float
    checked: int = 0
    empty_containers: int = 0
    worst_deviation: float = 0.0
    flagged: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.flagged

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "tolerance": self.tolerance,
            "checked": self.checked,
            "empty_containers": self.empty_containers,
            "worst_deviation": self.worst_deviation,
            "flagged": [[list(T), "".join(map(str, b)), c, e] for T, b, c, e in self.flagged[:20]],
        }


def verify_balanced_containers(
    cls: SetSystemClass,
    sample_count: int,
    tolerance: float,
    max_size: int = 2,
    rng=None,
    subsets: Iterable[Sequence[int]] | None = None,
) -> BalanceReport:
    """Check that every labeling of small ``T`` is carried by about ``|S_T| / 2^|T|`` containing sets.

    Subsets are drawn from inside random member sets (so containers exist)
    unless ``subsets`` is given explicitly.
    """
    gen = as_generator(rng if rng is not None else 0)
    system = cls.system
    inc = system.incidence()
    if subsets is None:
        drawn = []
        for _ in range(sample_count):
            s = system.sets[int(gen.integers(system.k))]
            size = int(gen.integers(0, max_size + 1))
            drawn.append(tuple(sorted(gen.choice(s, size=size, replace=False).tolist())))
        subsets = drawn
    report = BalanceReport(tolerance)
    for T in subsets:
        T = tuple(T)
        cont = np.arange(system.k) if not T else np.flatnonzero(inc[:, list(T)].all(axis=1))
        report.checked += 1
        if len(cont) == 0:
            report.empty_containers += 1
            continue
        expected = len(cont) / 2 ** len(T)
        sub = cls.table[np.ix_(cont, list(T))] if T else np.zeros((len(cont), 0), dtype=np.int8)
        for b in itertools.product((0, 1), repeat=len(T)):
            c = int((sub == np.asarray(b, dtype=np.int8)).all(axis=1).sum()) if T else len(cont)
            dev = abs(c - expected) / expected
            report.worst_deviation = max(report.worst_deviation, dev)
            if dev > tolerance:
                report.flagged.append((T, b, c, expected))
    return report


# ---------------------------------------------------------------------------
# Tagged families


class TaggedHypothesis:
    __slots__ = ("base",)

    def __init__(self, base):
        self.base = base

    def __call__(self, x) -> int:
        if not isinstance(x, Tagged):
            raise UndefinedPointError(f"{x!r} is not a tagged point")
        return self.base(x.inner)

    def labels(self, points):
        return labels_on(self.base, [p.inner if isinstance(p, Tagged) else _untagged(p) for p in points])

    def __eq__(self, other):
        return isinstance(other, TaggedHypothesis) and other.base == self.base

    def __hash__(self):
        return hash(("tagged", self.base))

    def __repr__(self):
        return f"Tagged({self.base!r})"


def _untagged(p):
    raise UndefinedPointError(f"{p!r} is not a tagged point")


def _strip(T: LabeledSample) -> LabeledSample:
    inner = Sample([p.inner if isinstance(p, Tagged) else _untagged(p) for p in T.sample.codebook], T.sample.codes)
    return LabeledSample(inner, T.labels)


class TaggedClass(HypothesisClass):
    """A class lifted to tagged points; every member ignores the tag."""

    def __init__(self, base: HypothesisClass, tags: Sequence[str]):
        self.base = base
        self.tags = tuple(tags)
        self.name = f"tagged({base.name})"

    def members(self):
        return (TaggedHypothesis(h) for h in self.base.members())

    def size(self) -> int:
        return self.base.size()

    def is_consistent(self, T):
        return self.base.is_consistent(_strip(T))

    def consistent_members(self, T):
        return (TaggedHypothesis(h) for h in self.base.consistent_members(_strip(T)))

    def first_consistent(self, T):
        return TaggedHypothesis(self.base.first_consistent(_strip(T)))

    def behaviors(self, points, cap: int = DEFAULT_VERTEX_CAP):
        return self.base.behaviors([p.inner if isinstance(p, Tagged) else _untagged(p) for p in points], cap)


def tagged_family(cls: HypothesisClass, family: Sequence[DiscreteDistribution]):
    """Tag each distribution's support with its own name; hypotheses ignore tags."""
    tags = [D.name or f"D{i}" for i, D in enumerate(family)]
    if len(set(tags)) != len(tags):
        tags = [f"{t}#{i}" for i, t in enumerate(tags)]
    ported = [
        DiscreteDistribution(tuple(Tagged(t, p) for p in D.points), D.masses, name=t)
        for t, D in zip(tags, family)
    ]
    return TaggedClass(cls, tags), ported


def tag_of(sample: Iterable[Point]) -> str:
    """The single tag shared by every point in a tagged sample."""
    tags = {p.tag for p in sample}
    if len(tags) != 1:
        raise DomainError(f"sample carries tags {sorted(tags)}")
    return tags.pop()


def separation_constant(family: Sequence[DiscreteDistribution]) -> float:
    """Largest mass any member puts on another member's support."""
    worst = 0.0
    for i, D in enumerate(family):
        supp = D.support
        for j, Q in enumerate(family):
            if i != j:
                worst = max(worst, Q.mass_of(supp))
    return worst


def wellsep_family_from_setsystem(system: SetSystem) -> tuple[list[DiscreteDistribution], float]:
    """Uniform distributions on the sets, with separation ``max |S n S'| / n``."""
    c = system.max_intersection() / system.n if system.k >= 2 else 0.0
    if c >= 1:
        raise SeparationError("two sets coincide; the family is not well separated")
    family = [DiscreteDistribution.uniform(s, name=f"D_S{i}") for i, s in enumerate(system.sets)]
    return family, c
