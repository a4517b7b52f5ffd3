"""Domain points, finite distributions, samples, losses and RNG streams.

Points are plain hashable Python values:

* ``int`` for flat domains,
* ``(row, col)`` tuples of ints for the row-indexed domain,
* :class:`Tagged` pairs for tagged domains.

Samples keep a codebook of distinct points plus an integer code array so that
million-point samples stay cheap to draw, slice and count.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

MASS_TOL = 1e-12

Point = Hashable
Predictor = Callable[[Point], int]


class DomainError(ValueError):
    """A point, sample or distribution violates a domain invariant."""


class ZeroMassError(DomainError):
    """Conditioning on an event of probability zero."""


class UndefinedPointError(DomainError):
    """A predictor or hypothesis has no value at a support point."""


class Tagged(NamedTuple):
    """A point carrying the name of the distribution it belongs to."""

    tag: str
    inner: Any


def row_point(row: int, col: int) -> tuple[int, int]:
    if not 1 <= col <= row:
        raise DomainError(f"row point needs 1 <= col <= row, got ({row}, {col})")
    return (int(row), int(col))


def point_key(p: Point) -> tuple:
    """Total order over mixed point kinds (ints < row points < tagged)."""
    if isinstance(p, Tagged):
        return (2, p.tag, point_key(p.inner))
    if isinstance(p, tuple):
        return (1,) + tuple(point_key(q) if isinstance(q, tuple) else (0, q) for q in p)
    return (0, p)


def sort_points(points: Iterable[Point]) -> list:
    return sorted(points, key=point_key)


# ---------------------------------------------------------------------------
# JSON point encoding: int, [row, col] or [tag, inner]


def encode_point(p: Point):
    if isinstance(p, Tagged):
        return [p.tag, encode_point(p.inner)]
    if isinstance(p, tuple):
        return [encode_point(q) for q in p]
    if isinstance(p, (int, np.integer)):
        return int(p)
    raise DomainError(f"cannot encode point {p!r}")


def decode_point(obj) -> Point:
    if isinstance(obj, list):
        if len(obj) == 2 and isinstance(obj[0], str):
            return Tagged(obj[0], decode_point(obj[1]))
        return tuple(decode_point(q) for q in obj)
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise DomainError(f"cannot decode point {obj!r}")
    return obj


# ---------------------------------------------------------------------------
# Random streams


@dataclass(frozen=True)
class RandomSource:
    """Counter-based splittable stream: ``(seed, path)`` fixes every draw."""

    seed: int
    stream: tuple[int, ...] = ()

    def child(self, *index: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream + tuple(int(i) for i in index))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"not a random source: {rng!r}")


def as_source(rng) -> RandomSource:
    """Coerce a seed or stream into a :class:`RandomSource` (needed for per-trial splitting)."""
    if isinstance(rng, RandomSource):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RandomSource(int(rng))
    raise TypeError(f"per-trial streams need a seed or RandomSource, got {rng!r}")


# ---------------------------------------------------------------------------
# Samples


class Sample:
    """Ordered multiset of points stored as codes into a codebook.

    Iteration yields points; ``codes`` exposes the integer view.  Two samples
    compare equal when they list the same points in the same order.
    """

    __slots__ = ("codebook", "codes")

    def __init__(self, codebook: Sequence[Point], codes):
        self.codebook = tuple(codebook)
        self.codes = np.asarray(codes, dtype=np.int64)
        if self.codes.ndim != 1:
            raise DomainError("sample codes must be one-dimensional")

    @classmethod
    def from_points(cls, points: Iterable[Point]) -> "Sample":
        index: dict = {}
        codes = [index.setdefault(p, len(index)) for p in points]
        return cls(tuple(index), codes)

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self) -> Iterator[Point]:
        cb = self.codebook
        return (cb[c] for c in self.codes.tolist())

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Sample(self.codebook, self.codes[i])
        return self.codebook[int(self.codes[i])]

    def __eq__(self, other) -> bool:
        return isinstance(other, Sample) and list(self) == list(other)

    def __repr__(self) -> str:
        pts = list(self)
        head = pts[:6]
        more = "..." if len(pts) > 6 else ""
        return f"Sample({head}{more}, n={len(pts)})"

    def distinct(self) -> list:
        """Distinct points in canonical order."""
        used = np.unique(self.codes)
        return sort_points(self.codebook[c] for c in used.tolist())

    def counts(self) -> Counter:
        vals, cnt = np.unique(self.codes, return_counts=True)
        return Counter({self.codebook[v]: int(c) for v, c in zip(vals.tolist(), cnt.tolist())})

    def membership(self, allowed: Callable[[Point], bool] | set | frozenset) -> np.ndarray:
        """Boolean mask over items: whether each item lies in ``allowed``."""
        test = allowed.__contains__ if isinstance(allowed, (set, frozenset)) else allowed
        table = np.fromiter((bool(test(p)) for p in self.codebook), dtype=bool, count=len(self.codebook))
        return table[self.codes]

    def to_json(self) -> dict:
        return {"items": [encode_point(p) for p in self]}

    @classmethod
    def from_json(cls, obj: dict) -> "Sample":
        return cls.from_points(decode_point(p) for p in obj["items"])


class LabeledSample:
    """A :class:`Sample` with a parallel array of binary labels."""

    __slots__ = ("sample", "labels")

    def __init__(self, sample: Sample, labels):
        labels = np.asarray(labels, dtype=np.int8)
        if labels.shape != (len(sample),):
            raise DomainError("labels must align with the sample")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise DomainError("labels must be 0 or 1")
        self.sample = sample
        self.labels = labels

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Point, int]]) -> "LabeledSample":
        pairs = list(pairs)
        return cls(Sample.from_points(p for p, _ in pairs), [y for _, y in pairs])

    @classmethod
    def label(cls, sample: Sample, truth) -> "LabeledSample":
        return cls(sample, labels_on(truth, sample.codebook)[sample.codes])

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return zip(self.sample, self.labels.tolist())

    def __getitem__(self, i):
        if isinstance(i, slice):
            return LabeledSample(self.sample[i], self.labels[i])
        return self.sample[i], int(self.labels[i])

    def take(self, idx) -> "LabeledSample":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledSample(Sample(self.sample.codebook, self.sample.codes[idx]), self.labels[idx])

    def pairs(self) -> list[tuple[Point, int]]:
        return list(self)

    def collapsed(self) -> dict:
        """Map each distinct point to its label; raises on conflicting labels."""
        out: dict = {}
        for p, y in self:
            if out.setdefault(p, y) != y:
                raise DomainError(f"point {p!r} carries both labels")
        return out

    def __repr__(self) -> str:
        return f"LabeledSample({self.pairs()[:6]}, n={len(self)})"


def labels_on(f, points: Sequence[Point]) -> np.ndarray:
    """Evaluate a predictor or hypothesis on a list of points, vectorized if possible."""
    many = getattr(f, "labels", None)
    if many is not None:
        return np.asarray(many(points), dtype=np.int8)
    return np.fromiter((f(p) for p in points), dtype=np.int8, count=len(points))


# ---------------------------------------------------------------------------
# Distributions


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite-support probability mass function with strictly positive masses."""

    points: tuple
    masses: np.ndarray
    name: str = ""
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple(self.points)
        m = np.asarray(self.masses, dtype=float).copy()
        if len(pts) != len(m) or len(pts) == 0:
            raise DomainError("support and masses must be nonempty and aligned")
        if len(set(pts)) != len(pts):
            raise DomainError("support points must be distinct")
        if not (m > 0).all():
            raise DomainError("masses must be strictly positive")
        if abs(m.sum() - 1.0) > MASS_TOL * max(1, len(m)):
            raise DomainError(f"masses sum to {m.sum()!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    @classmethod
    def from_weights(cls, weights: dict | Iterable[tuple[Point, float]], name: str = "") -> "DiscreteDistribution":
        items = list(weights.items()) if isinstance(weights, dict) else list(weights)
        items = [(p, float(w)) for p, w in items if w > 0]
        total = math.fsum(w for _, w in items)
        if total <= 0:
            raise ZeroMassError("weights have zero total mass")
        return cls(tuple(p for p, _ in items), np.array([w / total for _, w in items]), name)

    @classmethod
    def uniform(cls, points: Iterable[Point], name: str = "") -> "DiscreteDistribution":
        pts = tuple(points)
        if len(pts) == 0:
            raise DomainError("uniform distribution needs at least one point")
        return cls(pts, np.full(len(pts), 1.0 / len(pts)), name)

    @classmethod
    def point_mass(cls, p: Point, name: str = "") -> "DiscreteDistribution":
        return cls((p,), np.ones(1), name)

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return p in self._index

    def __getitem__(self, p) -> float:
        i = self._index.get(p)
        return 0.0 if i is None else float(self.masses[i])

    def mass_of(self, points: Iterable[Point]) -> float:
        return math.fsum(self[p] for p in set(points))

    @property
    def support(self) -> frozenset:
        return frozenset(self.points)

    def renamed(self, name: str) -> "DiscreteDistribution":
        return DiscreteDistribution(self.points, self.masses, name)

    def sample(self, m: int, rng) -> Sample:
        gen = as_generator(rng)
        if m < 0:
            raise DomainError("sample size must be nonnegative")
        k = len(self.points)
        if k == 1:
            codes = np.zeros(m, dtype=np.int64)
        elif np.all(self.masses == self.masses[0]):
            codes = gen.integers(0, k, size=m)
        else:
            codes = gen.choice(k, size=m, p=self.masses)
        return Sample(self.points, codes)

    def to_json(self) -> dict:
        return {"support": [[encode_point(p), float(w)] for p, w in zip(self.points, self.masses)]}

    @classmethod
    def from_json(cls, obj: dict, name: str = "") -> "DiscreteDistribution":
        return cls.from_weights([(decode_point(p), w) for p, w in obj["support"]], name)

    def __repr__(self) -> str:
        label = f"{self.name}: " if self.name else ""
        return f"DiscreteDistribution({label}{len(self.points)} points)"


def dump_json(obj) -> str:
    if isinstance(obj, (DiscreteDistribution, Sample)):
        obj = obj.to_json()
    return json.dumps(obj, sort_keys=True)


# ---------------------------------------------------------------------------
# Operations


def loss_sample(predictor: Predictor, T: LabeledSample) -> float:
    """Fraction of labeled examples the predictor gets wrong (0 on empty input)."""
    if len(T) == 0:
        return 0.0
    preds = labels_on(predictor, T.sample.codebook)[T.sample.codes]
    return float(np.mean(preds != T.labels))


def loss_distribution(predictor: Predictor, D: DiscreteDistribution, truth) -> float:
    """Exact expected 0-1 loss of ``predictor`` on ``D`` labeled by ``truth``."""
    try:
        pred = labels_on(predictor, D.points)
        true = labels_on(truth, D.points)
    except (KeyError, IndexError) as exc:
        raise UndefinedPointError(str(exc)) from exc
    return float(np.dot(D.masses, pred != true))


def tv_distance(D: DiscreteDistribution, Q: DiscreteDistribution) -> float:
    union = set(D.points) | set(Q.points)
    return 0.5 * math.fsum(abs(D[x] - Q[x]) for x in union)


def conditional_distribution(D: DiscreteDistribution, Y: Iterable[Point]) -> DiscreteDistribution:
    Y = set(Y)
    kept = [(p, w) for p, w in zip(D.points, D.masses) if p in Y]
    if not kept:
        raise ZeroMassError("conditioning event has zero mass")
    return DiscreteDistribution.from_weights(kept, D.name)


def empirical_distribution(S: Sample | Iterable[Point]) -> DiscreteDistribution:
    if not isinstance(S, Sample):
        S = Sample.from_points(S)
    if len(S) == 0:
        raise DomainError("empirical distribution of an empty sample")
    vals, cnt = np.unique(S.codes, return_counts=True)
    order = sorted(range(len(vals)), key=lambda i: point_key(S.codebook[vals[i]]))
    pts = tuple(S.codebook[vals[i]] for i in order)
    return DiscreteDistribution(pts, np.array([cnt[i] / len(S) for i in order]))


def sample_iid(D: DiscreteDistribution, m: int, rng) -> Sample:
    return D.sample(m, rng)


def gamma_no_duplicates(m: int, M: int) -> float:
    """Probability that ``m`` uniform draws from ``M`` points are all distinct."""
    if m < 0 or M < 1:
        raise DomainError("need m >= 0 and M >= 1")
    if m > M:
        return 0.0
    return float(gamma_exact(m, M))


def gamma_exact(m: int, M: int) -> Fraction:
    """Rational value of :func:`gamma_no_duplicates`."""
    if m > M:
        return Fraction(0)
    num = math.prod(range(M - m + 1, M + 1))
    return Fraction(num, M**m)
