"""One-inclusion graphs and the OIG learner.

The graph lives on the distinct points of a dataset.  Coordinates whose point
occurs more than once carry no edges: flipping one copy of a repeated point is
not a realizable behavior, and leaving out one copy still shows the label.
"""

from __future__ import annotations

import bisect
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import DomainError, LabeledSample, Point, Sample, as_generator, point_key, sort_points
from .hypotheses import (
    DEFAULT_VERTEX_CAP,
    HypothesisClass,
    OracleUnavailableError,
    ProjectionTooLargeError,
    RealizabilityError,
)

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
EXHAUSTIVE_DENSEST_LIMIT = 20


class SolverError(RuntimeError):
    """The LP solver did not return a usable optimum."""


class NotFullCubeError(ValueError):
    """Parity orientation was requested on something other than a full hypercube."""


class InconsistentTrainingError(RealizabilityError):
    """Training labels are not realizable by the class."""


# ---------------------------------------------------------------------------
# Behaviors and graphs


@dataclass(frozen=True, eq=False)
class BehaviorSet:
    points: tuple
    weights: np.ndarray  # multiplicity of each point in the dataset
    behaviors: np.ndarray  # (V, d) int8, rows sorted lexicographically

    def __post_init__(self):
        b = np.asarray(self.behaviors, dtype=np.int8).reshape(-1, len(self.points))
        b = np.unique(b, axis=0) if len(b) else b
        object.__setattr__(self, "behaviors", b)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.int64))
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def dimension(self) -> int:
        return len(self.points)

    @property
    def size(self) -> int:
        return int(self.weights.sum())

    def __len__(self) -> int:
        return len(self.behaviors)

    def index(self) -> dict:
        return {r.tobytes(): i for i, r in enumerate(self.behaviors)}

    @classmethod
    def from_bitstrings(cls, bits: Sequence[str], points: Sequence[Point] | None = None) -> "BehaviorSet":
        bits = list(bits)
        if not bits:
            raise DomainError("behavior set must be nonempty")
        d = len(bits[0])
        if any(len(b) != d or set(b) - {"0", "1"} for b in bits):
            raise DomainError("behaviors must be equal-length bit-strings")
        pts = tuple(points) if points is not None else tuple(range(d))
        rows = np.array([[int(c) for c in b] for b in bits], dtype=np.int8).reshape(len(bits), d)
        return cls(pts, np.ones(d, dtype=np.int64), rows)

    @classmethod
    def full_cube(cls, d: int) -> "BehaviorSet":
        rows = np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int8).reshape(-1, d)
        return cls(tuple(range(d)), np.ones(d, dtype=np.int64), rows)

    def bitstrings(self) -> list[str]:
        return ["".join(map(str, r)) for r in self.behaviors.tolist()]


def project_behaviors(cls: HypothesisClass, S: Sample | Sequence[Point], cap: int = DEFAULT_VERTEX_CAP) -> BehaviorSet:
    """Distinct restrictions of ``cls`` to the collapsed support of ``S``."""
    if not isinstance(S, Sample):
        S = Sample.from_points(S)
    counts = S.counts()
    points = sort_points(counts)
    rows = sorted(cls.behaviors(points, cap))
    return BehaviorSet(tuple(points), np.array([counts[p] for p in points]), np.array(rows, dtype=np.int8))


def shatter_check(cls: HypothesisClass, points) -> bool:
    return cls.shatters(points)


@dataclass(frozen=True, eq=False)
class OneInclusionGraph:
    behaviors: BehaviorSet
    edges: np.ndarray  # (E, 2): vertex with 0 at the coordinate, vertex with 1
    coords: np.ndarray  # (E,) flipped coordinate

    @property
    def num_vertices(self) -> int:
        return len(self.behaviors)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.num_vertices) if self.num_edges else np.zeros(self.num_vertices, dtype=np.int64)

    def edge_between(self, a: int, b: int) -> int | None:
        lo, hi = self._edge_index().get((a, b)), self._edge_index().get((b, a))
        return lo if lo is not None else hi

    def _edge_index(self) -> dict:
        idx = self.__dict__.get("_eidx")
        if idx is None:
            idx = {(int(u), int(v)): e for e, (u, v) in enumerate(self.edges.tolist())}
            object.__setattr__(self, "_eidx", idx)
        return idx

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_vertices))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g


def build_one_inclusion_graph(bs: BehaviorSet) -> OneInclusionGraph:
    """Hamming-1 pairs of behaviors, skipping coordinates of repeated points."""
    index = bs.index()
    rows = bs.behaviors
    edges, coords = [], []
    for j in range(bs.dimension):
        if bs.weights[j] != 1:
            continue
        for u in np.flatnonzero(rows[:, j] == 0).tolist():
            flipped = rows[u].copy()
            flipped[j] = 1
            v = index.get(flipped.tobytes())
            if v is not None:
                edges.append((u, v))
                coords.append(j)
    return OneInclusionGraph(
        bs,
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        np.array(coords, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# Orientations


@dataclass(frozen=True, eq=False)
class FractionalOrientation:
    graph: OneInclusionGraph
    to_one: np.ndarray  # mass of each edge directed at its 1-endpoint
    value: float

    def out_degrees(self) -> np.ndarray:
        g = self.graph
        out = np.zeros(g.num_vertices)
        if g.num_edges:
            np.add.at(out, g.edges[:, 0], self.to_one)
            np.add.at(out, g.edges[:, 1], 1.0 - self.to_one)
        return out

    @property
    def max_out_degree(self) -> float:
        return float(self.out_degrees().max()) if self.graph.num_vertices else 0.0

    def is_integral(self) -> bool:
        return bool(np.all((self.to_one == 0) | (self.to_one == 1)))

    def check(self, tol: float = FEAS_TOL) -> None:
        if np.any(self.to_one < -tol) or np.any(self.to_one > 1 + tol):
            raise SolverError("edge masses outside [0, 1]")
        if self.max_out_degree > self.value + tol:
            raise SolverError(f"out-degree {self.max_out_degree} exceeds value {self.value}")


def _balance(A, b, E: int, V: int, t: float, fallback: np.ndarray) -> np.ndarray:
    """Among orientations with value ``t``, the one with masses closest to 1/2 in L1."""
    # variables: x (E), d (E) with d >= |x - 1/2|
    Ax = A[:, :E]
    ub = b + t
    eye = sparse.identity(E, format="csr")
    A2 = sparse.vstack([
        sparse.hstack([Ax, sparse.csr_matrix((V, E))]),
        sparse.hstack([eye, -eye]),
        sparse.hstack([-eye, -eye]),
    ]).tocsr()
    b2 = np.concatenate([ub, np.full(E, 0.5), np.full(E, -0.5)])
    c = np.concatenate([np.zeros(E), np.ones(E)])
    res = linprog(c, A_ub=A2, b_ub=b2, bounds=[(0, 1)] * E + [(0, None)] * E, method="highs")
    if res.status != 0:
        log.warning("balancing LP failed (%s); keeping the first optimum", res.message)
        return fallback
    return np.clip(res.x[:E], 0.0, 1.0)


def min_max_fractional_orientation(g: OneInclusionGraph, balanced: bool = True) -> FractionalOrientation:
    """LP: minimize ``t`` subject to every vertex's outgoing mass being at most ``t``.

    Optima are rarely unique.  With ``balanced`` a second LP picks, among the
    optimal orientations, the one whose edge masses are closest to 1/2, so
    symmetric graphs get symmetric orientations.
    """
    V, E = g.num_vertices, g.num_edges
    if E == 0:
        return FractionalOrientation(g, np.zeros(0), 0.0)
    # out(u0) = sum x_e, out(u1) = sum (1 - x_e); rows: out(w) - t <= 0
    rows = np.concatenate([g.edges[:, 0], g.edges[:, 1], np.arange(V)])
    cols = np.concatenate([np.arange(E), np.arange(E), np.full(V, E)])
    vals = np.concatenate([np.ones(E), -np.ones(E), -np.ones(V)])
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(V, E + 1))
    b = -np.bincount(g.edges[:, 1], minlength=V).astype(float)
    c = np.zeros(E + 1)
    c[E] = 1.0
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(0, 1)] * E + [(0, None)], method="highs")
    if res.status != 0:
        raise SolverError(f"orientation LP failed: {res.message}")
    t = float(res.x[E])
    x = np.clip(res.x[:E], 0.0, 1.0)
    orient = FractionalOrientation(g, x, t)
    # report the value actually achieved by the clipped masses
    orient = FractionalOrientation(g, x, max(orient.max_out_degree, t))
    t = orient.value
    if balanced:
        even = FractionalOrientation(g, _balance(A, b, E, V, t, x), t)
        if even.max_out_degree <= t + FEAS_TOL:
            orient = even
    orient.check()
    return orient


def parity_orientation(cube) -> FractionalOrientation:
    """Integral orientation of the full cube: edge in (1-indexed) coordinate i points at
    the endpoint whose parity is ``i mod 2``."""
    if isinstance(cube, (int, np.integer)):
        if cube < 0:
            raise ValueError("dimension must be nonnegative")
        g = build_one_inclusion_graph(BehaviorSet.full_cube(int(cube)))
    else:
        g = cube
    bs = g.behaviors
    d = bs.dimension
    if len(bs) != 2**d or g.num_edges != d * 2 ** max(d - 1, 0) * (d > 0):
        raise NotFullCubeError(f"{len(bs)} behaviors on {d} coordinates is not a full cube")
    parity = bs.behaviors.sum(axis=1) % 2
    i_e = g.coords + 1
    # the 1-endpoint has parity(u0) + 1; the edge points at it iff that parity matches i_e
    to_one = ((parity[g.edges[:, 1]] % 2) == (i_e % 2)).astype(float)
    orient = FractionalOrientation(g, to_one, 0.0)
    return FractionalOrientation(g, to_one, orient.max_out_degree)


def parity_predict(train_labels_sum: int, rank: int) -> int:
    """Label the parity orientation assigns to an unseen point at 0-based position ``rank``."""
    i_e = rank + 1
    return 0 if train_labels_sum % 2 == i_e % 2 else 1


# ---------------------------------------------------------------------------
# Densest subgraph


def densest_subgraph_density(g: OneInclusionGraph, method: str = "auto") -> float:
    """Maximum of ``|E(H)| / |V(H)|`` over nonempty vertex subsets."""
    V = g.num_vertices
    if V == 0 or g.num_edges == 0:
        return 0.0
    if method == "auto":
        method = "exhaustive" if V <= EXHAUSTIVE_DENSEST_LIMIT else "flow"
    if method == "exhaustive":
        return float(_densest_exhaustive(g))
    if method == "flow":
        return float(_densest_flow(g))
    raise ValueError(f"unknown method {method!r}")


def _densest_exhaustive(g: OneInclusionGraph) -> Fraction:
    V = g.num_vertices
    if V > EXHAUSTIVE_DENSEST_LIMIT:
        raise ValueError("too many vertices for exhaustive search")
    masks = np.arange(1, 1 << V, dtype=np.int64)
    edges = np.zeros(len(masks), dtype=np.int64)
    for u, v in g.edges.tolist():
        edges += ((masks >> u) & 1) & ((masks >> v) & 1)
    sizes = np.zeros(len(masks), dtype=np.int64)
    for u in range(V):
        sizes += (masks >> u) & 1
    # compare fractions exactly by cross-multiplying against the running best
    best = Fraction(0)
    dens = edges / sizes
    for i in np.flatnonzero(dens >= dens.max() - 1e-12).tolist():
        best = max(best, Fraction(int(edges[i]), int(sizes[i])))
    return best


def _densest_flow(g: OneInclusionGraph) -> Fraction:
    """Dinkelbach iteration with a min-cut selection step (integer capacities)."""
    V, E = g.num_vertices, g.num_edges
    density = Fraction(E, V)
    while True:
        p, q = density.numerator, density.denominator
        net = nx.DiGraph()
        for e, (u, v) in enumerate(g.edges.tolist()):
            net.add_edge("s", ("e", e), capacity=q)
            net.add_edge(("e", e), ("v", u))  # no capacity attribute: infinite
            net.add_edge(("e", e), ("v", v))
        for w in range(V):
            net.add_edge(("v", w), "t", capacity=p)
        cut, (source_side, _) = nx.minimum_cut(net, "s", "t")
        gain = q * E - cut
        if gain <= 0:
            return density
        chosen = {w for kind, w in (n for n in source_side if n != "s") if kind == "v"}
        inside = sum(1 for u, v in g.edges.tolist() if u in chosen and v in chosen)
        density = Fraction(inside, len(chosen))


# ---------------------------------------------------------------------------
# Learner


class OIGLearner:
    """One-inclusion-graph learner with an optimal fractional orientation.

    ``fast_path`` switches to the parity orientation whenever the class
    shatters the training points plus the query, which avoids projecting
    onto a huge cube.
    """

    name = "oig"

    def __init__(self, cls: HypothesisClass, fast_path: bool = True, cap: int = DEFAULT_VERTEX_CAP):
        self.cls = cls
        self.fast_path = fast_path
        self.cap = cap
        self._cache: dict = {}

    def train(self, T: LabeledSample, rng=None) -> "OIGPredictor":
        return OIGPredictor(self, T, rng)

    def _fixed(self, T: LabeledSample) -> dict:
        try:
            return T.collapsed()
        except DomainError as exc:
            raise InconsistentTrainingError(str(exc)) from None

    def orientation(self, points: tuple, weights: tuple) -> tuple[OneInclusionGraph, FractionalOrientation]:
        rows = sorted(self.cls.behaviors(list(points), self.cap))
        bs = BehaviorSet(points, np.array(weights), np.array(rows, dtype=np.int8))
        # the orientation depends only on the behavior table and the weights
        key = (bs.behaviors.shape, bs.behaviors.tobytes(), weights)
        hit = self._cache.get(key)
        if hit is None:
            g = build_one_inclusion_graph(bs)
            hit = (g, min_max_fractional_orientation(g))
            if len(self._cache) > 4096:
                self._cache.clear()
            self._cache[key] = hit
        g, orient = hit
        if g.behaviors.points != bs.points:
            g = OneInclusionGraph(bs, g.edges, g.coords)
            orient = FractionalOrientation(g, orient.to_one, orient.value)
        return g, orient

    def predict_proba(self, T: LabeledSample, x: Point, fixed: dict | None = None, allow_fast: bool | None = None) -> float:
        """Probability that the OIG predicts label 1 at ``x`` after training on ``T``."""
        fixed = self._fixed(T) if fixed is None else fixed
        if x in fixed:
            return float(fixed[x])
        with0 = _extend(T, x, 0)
        with1 = _extend(T, x, 1)
        ok0, ok1 = self.cls.is_consistent(with0), self.cls.is_consistent(with1)
        if not (ok0 or ok1):
            raise InconsistentTrainingError("no hypothesis is consistent with the training sample")
        if ok0 != ok1:
            return 1.0 if ok1 else 0.0
        fast = self.fast_path if allow_fast is None else allow_fast
        points = sort_points(list(fixed) + [x])
        if fast and _shatters(self.cls, points):
            rank = points.index(x)
            return float(parity_predict(sum(fixed.values()), rank))
        counts = T.sample.counts()
        weights = tuple(counts.get(p, 0) + (p == x) for p in points)
        g, orient = self.orientation(tuple(points), weights)
        j = points.index(x)
        base = np.array([fixed.get(p, 0) for p in points], dtype=np.int8)
        u0 = g.behaviors.index()[base.tobytes()]
        e = _edge_at(g, u0, j)
        return float(orient.to_one[e])


def _extend(T: LabeledSample, x, y: int) -> LabeledSample:
    return LabeledSample(Sample(T.sample.codebook + (x,), np.append(T.sample.codes, len(T.sample.codebook))), np.append(T.labels, y))


def _shatters(cls, points) -> bool:
    try:
        return cls.shatters(points)
    except OracleUnavailableError:
        return False


def _edge_at(g: OneInclusionGraph, u0: int, coord: int) -> int:
    hits = np.flatnonzero((g.edges[:, 0] == u0) & (g.coords == coord))
    if len(hits) != 1:
        raise RuntimeError("expected exactly one edge at the query coordinate")
    return int(hits[0])


class OIGPredictor:
    """Trained OIG; randomized predictions draw fresh on every query."""

    def __init__(self, learner: OIGLearner, T: LabeledSample, rng):
        self.learner = learner
        self.T = T
        self._gen = as_generator(rng)
        self._fixed = learner._fixed(T)
        self._ones = sum(self._fixed.values())
        self._keys = sorted(point_key(p) for p in self._fixed)
        self._ext = None
        if learner.fast_path:
            hook = getattr(learner.cls, "extension_shattered", None)
            if hook is not None:
                self._ext = hook(list(self._fixed))

    def _draw(self, p: float) -> int:
        if p <= 0.0:
            return 0
        if p >= 1.0:
            return 1
        return int(self._gen.random() < p)

    def __call__(self, x) -> int:
        return int(self.labels([x])[0])

    def labels(self, points) -> np.ndarray:
        out = np.empty(len(points), dtype=np.int8)
        for i, x in enumerate(points):
            y = self._fixed.get(x)
            if y is not None:
                out[i] = y
            elif self._ext is not None and self._ext(x):
                out[i] = parity_predict(self._ones, bisect.bisect_left(self._keys, point_key(x)))
            else:
                out[i] = self._draw(self.learner.predict_proba(self.T, x, self._fixed))
        return out


# ---------------------------------------------------------------------------
# Transductive error


def oig_transductive_error(cls: HypothesisClass, S: Sample | Sequence[Point], cap: int = DEFAULT_VERTEX_CAP) -> float:
    """Worst-case leave-one-out error of the fractional OIG: optimal value over ``|S|``."""
    if not isinstance(S, Sample):
        S = Sample.from_points(S)
    if len(S) == 0:
        return 0.0
    g = build_one_inclusion_graph(project_behaviors(cls, S, cap))
    return min_max_fractional_orientation(g, balanced=False).value / len(S)


def transductive_error(learner, cls: HypothesisClass, S: Sample | Sequence[Point], rng=None, cap: int = DEFAULT_VERTEX_CAP) -> float:
    """``max_h (1/|S|) sum_i Pr[A(S_h minus i)(x_i) != h(x_i)]`` over realizable behaviors ``h``.

    The OIG is handled through its orientation (exact expectation); learners
    with ``predict_proba`` are evaluated exactly; anything else is trained once
    per leave-one-out set, so it should be deterministic.
    """
    if not isinstance(S, Sample):
        S = Sample.from_points(S)
    N = len(S)
    if N == 0:
        return 0.0
    if isinstance(learner, OIGLearner):
        return oig_transductive_error(cls, S, cap)
    bs = project_behaviors(cls, S, cap)
    col = {p: j for j, p in enumerate(bs.points)}
    seq_cols = np.array([col[p] for p in S], dtype=np.int64)
    worst = 0.0
    for row in bs.behaviors:
        y = row[seq_cols]
        err = 0.0
        for i in range(N):
            keep = np.delete(np.arange(N), i)
            T = LabeledSample(Sample(S.codebook, S.codes[keep]), y[keep])
            x = S[i]
            if hasattr(learner, "predict_proba"):
                p1 = learner.predict_proba(T, x)
                err += p1 if y[i] == 0 else 1.0 - p1
            else:
                err += float(learner.train(T, rng)(x) != y[i])
        worst = max(worst, err / N)
    return worst


def orientation_transductive_errors(g: OneInclusionGraph, size: int, max_edges: int = 20) -> np.ndarray:
    """Transductive error of every integral orientation (each deterministic undominated learner)."""
    E = g.num_edges
    if E > max_edges:
        raise ProjectionTooLargeError(f"{E} edges: too many orientations to enumerate")
    if E == 0:
        return np.zeros(1)
    choices = ((np.arange(1 << E)[:, None] >> np.arange(E)[None, :]) & 1).astype(np.float64)
    out = np.zeros((len(choices), g.num_vertices))
    for e, (u, v) in enumerate(g.edges.tolist()):
        out[:, u] += choices[:, e]
        out[:, v] += 1.0 - choices[:, e]
    return out.max(axis=1) / size
