"""Fully-supervised learners and Monte-Carlo error-rate estimation.

Every learner object exposes ``train(T, rng) -> predictor``.  Adversarial ERM
is the exception: it is an error functional (the worst consistent hypothesis
against a known truth) and exposes ``trial_loss`` instead.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    DiscreteDistribution,
    LabeledSample,
    RandomSource,
    as_generator,
    as_source,
    labels_on,
    loss_sample,
)
from .hypotheses import Constant, HypothesisClass, OracleUnavailableError
from .stats import Estimate

WORKERS_ENV = "RELSMART_WORKERS"
LEXICOGRAPHIC = "lexicographic-first"
ADVERSARIAL = "adversarial-oracle"


@dataclass(frozen=True)
class SmartnessParams:
    alpha: float
    eta: float
    sigma: Callable[[int, float], int] = lambda m, eta: m

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")


class RandomGuess:
    """Fair-coin predictor; each query draws a fresh label from its own stream."""

    def __init__(self, rng):
        self._gen = as_generator(rng)

    def __call__(self, x) -> int:
        return int(self._gen.integers(2))

    def labels(self, points) -> np.ndarray:
        return self._gen.integers(0, 2, size=len(points)).astype(np.int8)

    def __repr__(self):
        return "RandomGuess()"


# ---------------------------------------------------------------------------
# Training rules


def majority_train(T: LabeledSample) -> Constant:
    """Predict 1 iff at least half the training labels are 1 (so ties and empty T give 1)."""
    return Constant(1 if 2 * int(T.labels.sum()) >= len(T) else 0)


def erm_train(cls: HypothesisClass, T: LabeledSample, policy: str = LEXICOGRAPHIC, D=None, truth=None):
    if policy == LEXICOGRAPHIC:
        return cls.first_consistent(T)
    if policy == ADVERSARIAL:
        if D is None or truth is None:
            raise ValueError("adversarial tie-breaking needs the evaluation distribution and truth")
        return cls.worst_consistent(T, D, truth)[0]
    raise ValueError(f"unknown tie-break policy {policy!r}")


def validation_learner_train(h_S, T: LabeledSample, rng):
    """Hold out half of T and keep ``h_S`` unless majority on the other half beats it there."""
    gen = as_generator(rng)
    order = gen.permutation(len(T))
    cut = math.ceil(len(T) / 2)
    T1, T2 = T.take(order[:cut]), T.take(order[cut:])
    maj = majority_train(T1)
    if loss_sample(h_S, T2) <= loss_sample(maj, T2):
        return h_S
    return maj


def mixture_probability(c: float, m: int) -> float:
    return min(1.0, 2.0 * c**m)


def mixture_learner_train(base, c: float, T: LabeledSample, rng):
    if not 0 <= c < 1:
        raise ValueError("c must lie in [0, 1)")
    gen = as_generator(rng)
    if gen.random() < mixture_probability(c, len(T)):
        return RandomGuess(gen)
    return base.train(T, gen) if hasattr(base, "train") else base(T)


# ---------------------------------------------------------------------------
# Learner objects


class MajorityLearner:
    name = "majority"

    def train(self, T, rng=None):
        return majority_train(T)


class ERMLearner:
    name = "erm-lex"

    def __init__(self, cls: HypothesisClass):
        self.cls = cls

    def train(self, T, rng=None):
        return erm_train(self.cls, T)


class AdversarialERM:
    """Worst-case tie-breaking ERM, evaluated after the sample is drawn."""

    name = "erm-adversarial"

    def __init__(self, cls: HypothesisClass):
        if type(cls).worst_consistent is HypothesisClass.worst_consistent:
            try:
                size = cls.size()
            except OracleUnavailableError:
                raise OracleUnavailableError(f"{cls.name} has no worst-consistent oracle") from None
            if size > 100_000:
                raise OracleUnavailableError(f"{cls.name} is too large to enumerate")
        self.cls = cls

    def trial_loss(self, T, D, truth, rng=None) -> float:
        return self.cls.worst_consistent(T, D, truth)[1]


class ValidationLearner:
    name = "validation"

    def __init__(self, h_S):
        self.h_S = h_S

    def train(self, T, rng=None):
        return validation_learner_train(self.h_S, T, rng)


class MixtureLearner:
    name = "mixture"

    def __init__(self, base, c: float):
        if not 0 <= c < 1:
            raise ValueError("c must lie in [0, 1)")
        self.base, self.c = base, c

    def train(self, T, rng=None):
        return mixture_learner_train(self.base, self.c, T, rng)


# ---------------------------------------------------------------------------
# Error estimation


@dataclass
class ErrorRate:
    """Error estimate maximized over a finite truth set."""

    m: int
    per_truth: list = field(default_factory=list)

    @property
    def worst_index(self) -> int:
        return int(np.argmax([e.mean for e in self.per_truth]))

    @property
    def estimate(self) -> Estimate:
        return self.per_truth[self.worst_index]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _trial_losses(learner, D: DiscreteDistribution, truth, m: int, trials: int, src: RandomSource,
                  workers: int = 1) -> np.ndarray:
    if workers > 1 and trials > 1:
        # each trial owns stream src.child(j), so chunking leaves results unchanged
        bounds = np.linspace(0, trials, min(workers, trials) + 1).astype(int)
        jobs = [(learner, D, truth, m, src, range(a, b)) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return np.concatenate(list(pool.map(_trial_chunk, jobs)))
    return _trial_chunk((learner, D, truth, m, src, range(trials)))


def _trial_chunk(job) -> np.ndarray:
    learner, D, truth, m, src, idx = job
    true_vals = labels_on(truth, D.points)
    out = np.empty(len(idx))
    for k, j in enumerate(idx):
        gen = src.child(j).generator()
        S = D.sample(m, gen)
        T = LabeledSample(S, true_vals[S.codes])
        if hasattr(learner, "trial_loss"):
            out[k] = learner.trial_loss(T, D, truth, gen)
        else:
            pred = learner.train(T, gen)
            out[k] = float(np.dot(D.masses, labels_on(pred, D.points) != true_vals))
    return out


def estimate_error_rate(learner, cls, D: DiscreteDistribution, truth_set: Sequence, m: int, trials: int, rng,
                        workers: int | None = None) -> ErrorRate:
    """Average loss over ``trials`` draws of ``S ~ D_h^m`` for each truth ``h``; report the worst."""
    if not truth_set:
        raise ValueError("truth set must be nonempty")
    src = as_source(rng)
    res = ErrorRate(m)
    for i, h in enumerate(truth_set):
        res.per_truth.append(Estimate.from_values(_trial_losses(learner, D, h, m, trials, src.child(i),
                                                                    default_workers() if workers is None else workers)))
    return res


def adversarial_erm_error(cls, D, truth, m: int, trials: int, rng) -> Estimate:
    return estimate_error_rate(AdversarialERM(cls), cls, D, [truth], m, trials, rng).estimate
