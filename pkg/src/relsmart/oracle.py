"""Exact ground truth on tiny instances.

The optimal distribution-fixed error ``eps*(D, m)`` is the value of a zero-sum
game: the learner picks, for every realizable labeled sequence, a (randomized)
predictor; the adversary picks the true hypothesis.  Because the payoff is a
sum over (sequence, test point) cells, randomized learners are exactly the
per-cell prediction probabilities, which gives a compact LP.  The pure-strategy
matrix game over deduplicated deterministic learners is solved as a
cross-check when it is small enough.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .core import DiscreteDistribution, Point, Sample, decode_point, encode_point, labels_on, sort_points
from .hypotheses import FiniteClass, HypothesisClass

MAX_DOMAIN = 4
MAX_CLASS = 16
MAX_M = 3
MAX_PURE_ROWS = 200_000
MAX_TRANSDUCTIVE_VERTICES = 16
NASH_TOL = 1e-6


class CapExceededError(ValueError):
    """Instance exceeds the exact-solver size caps."""


class GameSolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GameInstance:
    domain: tuple
    table: np.ndarray  # (H, |domain|) hypothesis labels
    D: DiscreteDistribution
    m: int

    def __post_init__(self):
        dom = tuple(sort_points(self.domain))
        if len(dom) > MAX_DOMAIN:
            raise CapExceededError(f"domain has {len(dom)} points; cap is {MAX_DOMAIN}")
        if not 0 <= self.m <= MAX_M:
            raise CapExceededError(f"m = {self.m} outside [0, {MAX_M}]")
        table = np.unique(np.asarray(self.table, dtype=np.int8).reshape(-1, len(dom)), axis=0)
        if len(table) == 0:
            raise ValueError("class must be nonempty")
        if len(table) > MAX_CLASS:
            raise CapExceededError(f"class has {len(table)} hypotheses; cap is {MAX_CLASS}")
        if not set(self.D.points) <= set(dom):
            raise ValueError("distribution support must lie in the domain")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_class(cls, klass: FiniteClass, D: DiscreteDistribution, m: int) -> "GameInstance":
        return cls(klass.domain, klass.table, D, m)

    @classmethod
    def from_json(cls, obj: dict) -> "GameInstance":
        domain = [decode_point(p) for p in obj["domain"]]
        order = sort_points(domain)
        pos = [domain.index(p) for p in order]
        rows = [[int(b[i]) for i in pos] for b in obj["hypotheses"]]
        D = DiscreteDistribution.from_json(obj["distribution"])
        return cls(tuple(order), np.array(rows, dtype=np.int8).reshape(len(rows), len(order)), D, int(obj["m"]))

    def to_json(self) -> dict:
        return {
            "domain": [encode_point(p) for p in self.domain],
            "hypotheses": ["".join(map(str, r)) for r in self.table.tolist()],
            "distribution": self.D.to_json(),
            "m": self.m,
        }

    # -- game structure ------------------------------------------------------

    def structure(self):
        """Realizable labeled sequences and the per-(sequence, hypothesis) probabilities.

        Returns ``(sigmas, prob, test)`` where ``prob[s, h] = Pr[sequence s | h]`` and
        ``test[h, x]`` is ``D(x)`` times the label of ``h`` at support point ``x``.
        """
        cached = self.__dict__.get("_structure")
        if cached is not None:
            return cached
        col = {p: i for i, p in enumerate(self.domain)}
        supp = [col[p] for p in self.D.points]
        masses = self.D.masses
        index: dict = {}
        entries = []
        for seq in itertools.product(range(len(supp)), repeat=self.m):
            w = float(np.prod(masses[list(seq)])) if seq else 1.0
            cols = [supp[i] for i in seq]
            for h, row in enumerate(self.table):
                key = (seq, tuple(row[cols].tolist()))
                s = index.setdefault(key, len(index))
                entries.append((s, h, w))
        prob = np.zeros((len(index), len(self.table)))
        for s, h, w in entries:
            prob[s, h] += w
        sigmas = list(index)
        out = (sigmas, prob, supp)
        object.__setattr__(self, "_structure", out)
        return out


@dataclass
class GameSolution:
    value: float
    adversary_mixture: np.ndarray
    learner_strategy: np.ndarray  # Pr[predict 1] per (sequence, support point)
    sequences: list
    learner_mixture: list | None = None  # [(weight, per-sequence predictor choices)]
    pure_value: float | None = None
    worst_column: float = math.nan
    best_row: float = math.nan
    hypotheses: list = field(default_factory=list)

    @property
    def value_fraction(self) -> Fraction:
        return Fraction(self.value).limit_denominator(10**6)

    def certified(self, tol: float = NASH_TOL) -> bool:
        return self.worst_column <= self.value + tol and self.best_row >= self.value - tol

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "value_fraction": str(self.value_fraction),
            "adversary_mixture": {h: float(q) for h, q in zip(self.hypotheses, self.adversary_mixture)},
            "pure_value": self.pure_value,
            "worst_column": self.worst_column,
            "best_row": self.best_row,
            "certified": self.certified(),
            "learner_mixture_support": None if self.learner_mixture is None else len(self.learner_mixture),
        }


def _coefficients(inst: GameInstance):
    """``loss_h(p) = const[h] + coef[h] . p`` with ``p`` flattened over (sequence, support point)."""
    sigmas, prob, supp = inst.structure()
    masses = inst.D.masses
    labels = inst.table[:, supp]  # (H, K)
    const = (labels * masses[None, :]).sum(axis=1).astype(float)
    sign = masses[None, :] * (1 - 2 * labels)  # (H, K)
    coef = prob.T[:, :, None] * sign[:, None, :]  # (H, S, K)
    return const, coef.reshape(len(inst.table), -1)


def _behavioral_lp(inst: GameInstance):
    const, coef = _coefficients(inst)
    H, P = coef.shape
    c = np.zeros(P + 1)
    c[P] = 1.0
    A = np.hstack([coef, -np.ones((H, 1))])
    res = linprog(c, A_ub=A, b_ub=-const, bounds=[(0, 1)] * P + [(None, None)], method="highs")
    if res.status != 0:
        raise GameSolverError(res.message)
    p = np.clip(res.x[:P], 0, 1)
    q = np.clip(-res.ineqlin.marginals, 0, None)
    q = q / q.sum() if q.sum() > 0 else np.full(H, 1.0 / H)
    return float(res.x[P]), p, q, const, coef


def _pure_game(inst: GameInstance, limit: int = MAX_PURE_ROWS):
    """Deduplicated payoff rows of all deterministic learners, or ``None`` if too many."""
    sigmas, prob, supp = inst.structure()
    masses = inst.D.masses
    labels = inst.table[:, supp].astype(float)
    K = len(supp)
    preds = np.array(list(itertools.product((0, 1), repeat=K)), dtype=float).reshape(-1, K)
    # error of predictor r against hypothesis h on a fresh test point
    test_err = (np.abs(preds[:, None, :] - labels[None, :, :]) * masses).sum(axis=2)  # (R, H)
    rows = np.zeros((1, len(inst.table)))
    reps: list = [()]
    for s in range(len(sigmas)):
        contrib = prob[s][None, :] * test_err  # (R, H)
        new = (rows[:, None, :] + contrib[None, :, :]).reshape(-1, rows.shape[1])
        new_reps = [r + (k,) for r in reps for k in range(len(preds))]
        keys = np.round(new, 12)
        _, first = np.unique(keys, axis=0, return_index=True)
        first.sort()
        rows = new[first]
        reps = [new_reps[i] for i in first]
        if len(rows) > limit:
            return None
    return rows, reps, preds


def enumerate_deterministic_learners(inst: GameInstance, limit: int = MAX_PURE_ROWS):
    """Deterministic learners (one predictor per realizable sequence), deduplicated by payoff.

    Returns ``(raw_count, learners)`` with learners as ``(payoff row, choices)``;
    predictions off the support of ``D`` never change a payoff and are fixed to 0.
    """
    sigmas, _, supp = inst.structure()
    raw = (2 ** len(inst.domain)) ** len(sigmas)
    out = _pure_game(inst, limit)
    if out is None:
        raise CapExceededError("too many distinct deterministic learners")
    rows, reps, preds = out
    learners = []
    for row, choice in zip(rows, reps):
        tables = []
        for k in choice:
            full = [0] * len(inst.domain)
            for j, c in enumerate(supp):
                full[c] = int(preds[k][j])
            tables.append(tuple(full))
        learners.append((row, tuple(tables)))
    return raw, learners


def _solve_matrix_game(A: np.ndarray):
    """Row player minimizes ``w . A[:, h]`` worst case over columns."""
    R, H = A.shape
    c = np.zeros(R + 1)
    c[R] = 1.0
    A_ub = np.hstack([A.T, -np.ones((H, 1))])
    A_eq = np.zeros((1, R + 1))
    A_eq[0, :R] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(H), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * R + [(None, None)], method="highs")
    if res.status != 0:
        raise GameSolverError(res.message)
    w = np.clip(res.x[:R], 0, None)
    return float(res.x[R]), w / w.sum()


def optimal_fixed_error(inst: GameInstance, cross_check: bool = True) -> GameSolution:
    value, p, q, const, coef = _behavioral_lp(inst)
    losses = const + coef @ p
    worst_column = float(losses.max())
    mix = q @ coef
    best_row = float(q @ const + np.minimum(mix, 0).sum())
    sigmas, _, _ = inst.structure()
    sol = GameSolution(
        value=value,
        adversary_mixture=q,
        learner_strategy=p.reshape(len(sigmas), -1),
        sequences=sigmas,
        worst_column=worst_column,
        best_row=best_row,
        hypotheses=["".join(map(str, r)) for r in inst.table.tolist()],
    )
    if not sol.certified():
        raise GameSolverError(f"Nash check failed: {worst_column} vs {value} vs {best_row}")
    if cross_check:
        pure = _pure_game(inst)
        if pure is not None:
            rows, reps, _ = pure
            pv, w = _solve_matrix_game(rows)
            if abs(pv - value) > NASH_TOL:
                raise GameSolverError(f"pure game value {pv} disagrees with behavioral value {value}")
            sol.pure_value = pv
            sol.learner_mixture = [(float(wi), reps[i]) for i, wi in enumerate(w) if wi > 1e-12]
    return sol


def optimal_error_value(klass: FiniteClass, D: DiscreteDistribution, m: int) -> float:
    return optimal_fixed_error(GameInstance.from_class(klass, D, m), cross_check=False).value


def expected_empirical_optimal_error(klass: FiniteClass, D: DiscreteDistribution, M: int, m: int | None = None) -> float:
    """``E_{S ~ D^M} eps*(D_S, m)`` (default ``m = M - 1``), by enumerating sample multisets."""
    m = M - 1 if m is None else m
    K = len(D.points)
    total = 0.0
    for combo in itertools.combinations_with_replacement(range(K), M):
        counts = Counter(combo)
        coeff = math.factorial(M)
        for c in counts.values():
            coeff //= math.factorial(c)
        prob = coeff * float(np.prod([D.masses[i] ** c for i, c in counts.items()]))
        DS = DiscreteDistribution.from_weights({D.points[i]: c / M for i, c in sorted(counts.items())})
        total += prob * optimal_error_value(klass, DS, m)
    return total


# ---------------------------------------------------------------------------
# Independent transductive check


def best_transductive_value(cls: HypothesisClass, S: Sample | Sequence[Point], cap: int = MAX_TRANSDUCTIVE_VERTICES) -> float:
    """Optimal worst-case leave-one-out error over fractional orientations, via cvxopt."""
    from cvxopt import matrix, solvers

    if not isinstance(S, Sample):
        S = Sample.from_points(S)
    N = len(S)
    if N == 0:
        return 0.0
    counts = S.counts()
    pts = sort_points(counts)
    verts = sorted({tuple(labels_on(h, pts).tolist()) for h in cls.members()})
    if len(verts) > cap:
        raise CapExceededError(f"{len(verts)} behaviors exceed the cap {cap}")
    V = np.array(verts, dtype=np.int64).reshape(len(verts), len(pts))
    single = np.array([counts[p] == 1 for p in pts], dtype=bool)
    edges = []
    for a in range(len(V)):
        for b in range(a + 1, len(V)):
            diff = np.flatnonzero(V[a] != V[b])
            if len(diff) == 1 and single[diff[0]]:
                edges.append((a, b))
    if not edges:
        return 0.0
    E, nv = len(edges), len(V)
    # variables: a_e (toward b), b_e (toward a), t
    nvar = 2 * E + 1
    G = np.zeros((nv + 2 * E, nvar))
    for e, (a, b) in enumerate(edges):
        G[a, e] += 1.0  # a_e leaves a
        G[b, E + e] += 1.0  # b_e leaves b
    G[:nv, -1] = -1.0
    G[nv:, : 2 * E] = -np.eye(2 * E)
    h = np.zeros(nv + 2 * E)
    A = np.zeros((E, nvar))
    for e in range(E):
        A[e, e] = A[e, E + e] = 1.0
    c = np.zeros(nvar)
    c[-1] = 1.0
    opts = {"show_progress": False}  # default tolerances converge to ~1e-8
    sol = solvers.lp(matrix(c), matrix(G), matrix(h), matrix(A), matrix(np.ones(E)), options=opts)
    if sol["status"] != "optimal":
        raise GameSolverError(f"cvxopt status {sol['status']}")
    return float(sol["primal objective"]) / N
