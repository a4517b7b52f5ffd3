"""Certifiers (unlabeled sample -> error bound) and a statistical soundness audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .construct import SeparationError, row_points, separation_constant
from .core import DiscreteDistribution, Sample, as_source
from .learners import estimate_error_rate, mixture_probability
from .stats import Estimate, combined_se
from .unitest import TesterParams, run_m_test_unif

SOUNDNESS_SE = 3.0


class Certifier:
    """Maps an unlabeled sample to a value in [0, 1]; never sees labels."""

    name = "certifier"

    def __call__(self, S: Sample) -> float:
        raise NotImplementedError

    @property
    def descriptor(self) -> dict:
        return {"name": self.name}


class ConstantCertifier(Certifier):
    name = "constant"

    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def __call__(self, S) -> float:
        return self.value

    @property
    def descriptor(self):
        return {"name": self.name, "value": self.value}


class _TesterGatedCertifier(Certifier):
    """Outputs ``level`` when ``|S| >= m_gate`` and the support-aware tester accepts, else 1."""

    multiplier = 1

    def __init__(self, support, xi: float, m_gate: int, delta: float | None = None):
        self.support = frozenset(support)
        self.xi = float(xi)
        self.m_gate = int(m_gate)
        self.params = TesterParams(self.xi, self.xi if delta is None else delta)

    @property
    def level(self) -> float:
        return min(1.0, self.multiplier * self.xi)

    def __call__(self, S: Sample) -> float:
        if len(S) < self.m_gate:
            return 1.0
        if run_m_test_unif(self.support, self.params, S).accepted:
            return self.level
        return 1.0

    @property
    def descriptor(self):
        return {
            "name": self.name,
            "support_size": len(self.support),
            "xi": self.xi,
            "m_gate": self.m_gate,
            "delta": self.params.delta,
            "level": self.level,
        }


class MajorityCertifier(_TesterGatedCertifier):
    """Certifier for the majority learner on row ``n``: ``3 xi`` after a passing uniformity test."""

    name = "majority"
    multiplier = 3

    def __init__(self, n: int, beta: float | None = None, *, M: int | None = None, m_gate: int | None = None,
                 xi: float | None = None, delta: float | None = None):
        if beta is None and (xi is None and M is None or m_gate is None):
            raise ValueError("give beta for the asymptotic schedule, or xi (or M) and m_gate directly")
        if M is None:
            M = math.ceil(n ** (1 - beta)) if beta is not None else None
        if xi is None:
            xi = M / n
        if m_gate is None:
            m_gate = math.floor(n ** (0.5 + 3 * beta))
        self.n, self.M, self.beta = n, M, beta
        super().__init__(row_points(n), xi, m_gate, delta)


class SetCertifier(_TesterGatedCertifier):
    """Certifier for the validation learner of one set: ``6 xi`` after a passing uniformity test."""

    name = "set"
    multiplier = 6

    def __init__(self, S_set, beta: float | None = None, *, m_gate: int | None = None, xi: float | None = None,
                 delta: float | None = None):
        S_set = list(S_set)
        if not S_set:
            raise ValueError("set must be nonempty")
        n = len(S_set)
        if beta is None and (xi is None or m_gate is None):
            raise ValueError("give beta for the asymptotic schedule, or xi and m_gate directly")
        if xi is None:
            xi = n ** (-beta / 2)
        if m_gate is None:
            m_gate = math.floor(n ** (0.5 + 3 * beta))
        self.n, self.beta = n, beta
        super().__init__(S_set, xi, m_gate, delta)


class WellSeparatedCertifier(Certifier):
    """Outputs the mixture learner's error on the target when the sample stays in its support."""

    name = "wellsep"

    def __init__(self, family: Sequence[DiscreteDistribution], target_index: int, c: float,
                 learner_error: Callable[[int], float]):
        if not 0 <= c < 1:
            raise SeparationError("c must lie in [0, 1)")
        overlap = separation_constant(family)
        # the disjoint case (overlap 0) is admitted at c = 0
        if overlap > c or (overlap == c and c > 0):
            raise SeparationError(f"family overlap {overlap} is not below c = {c}")
        self.family = list(family)
        self.target = self.family[target_index]
        self.support = self.target.support
        self.c = c
        self.learner_error = learner_error

    def value_at(self, m: int) -> float:
        p = mixture_probability(self.c, m)
        return min(1.0, max(0.0, (1 - p) * self.learner_error(m) + p / 2))

    def __call__(self, S: Sample) -> float:
        if not isinstance(S, Sample):
            S = Sample.from_points(S)
        if len(S) and not S.membership(self.support).all():
            return 1.0
        return self.value_at(len(S))

    @property
    def descriptor(self):
        return {"name": self.name, "c": self.c, "target": self.target.name}


def certifier_majority(n: int, beta_params, S: Sample) -> float:
    params = dict(beta_params) if isinstance(beta_params, dict) else {"beta": beta_params}
    return MajorityCertifier(n, **params)(S)


def certifier_set(S_set, params, T: Sample) -> float:
    params = dict(params) if isinstance(params, dict) else {"beta": params}
    return SetCertifier(S_set, **params)(T)


def certifier_wellsep(family, target_index, c, learner_error, m, S) -> float:
    cert = WellSeparatedCertifier(family, target_index, c, learner_error)
    if not isinstance(S, Sample):
        S = Sample.from_points(S)
    if len(S) and not S.membership(cert.support).all():
        return 1.0
    return cert.value_at(m)


def expected_certificate(cert: Certifier, D: DiscreteDistribution, m: int, trials: int, rng) -> Estimate:
    if trials < 30:
        raise ValueError("need at least 30 trials")
    src = as_source(rng)
    vals = np.array([cert(D.sample(m, src.child(j).generator())) for j in range(trials)])
    return Estimate.from_values(vals)


@dataclass
class AuditRow:
    distribution: str
    m: int
    certificate: Estimate
    error: Estimate
    tolerance_se: float = SOUNDNESS_SE

    @property
    def slack(self) -> float:
        return self.certificate.mean - self.error.mean

    @property
    def sound(self) -> bool:
        # statistical verdict: allowed shortfall is a few combined standard errors
        tol = self.tolerance_se * combined_se(self.certificate, self.error)
        return self.slack >= -tol

    def to_json(self) -> dict:
        return {
            "distribution": self.distribution,
            "m": self.m,
            "certificate": self.certificate.to_json(),
            "error": self.error.to_json(),
            "sound": self.sound,
            "verdict": "statistical",
        }


@dataclass
class CertificationReport:
    certifier: dict
    learner: str
    rows: list = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return all(r.sound for r in self.rows)

    def to_json(self) -> dict:
        return {"certifier": self.certifier, "learner": self.learner, "sound": self.sound,
                "verdict": "statistical", "rows": [r.to_json() for r in self.rows]}


def soundness_audit(cert: Certifier, learner, battery, m_grid: Sequence[int], trials: int, rng,
                    tolerance_se: float = SOUNDNESS_SE) -> CertificationReport:
    """Compare the expected certificate with the learner's worst error over each entry's truth set.

    ``battery`` holds ``(distribution, truth_set)`` pairs.
    """
    if not battery:
        raise ValueError("battery must be nonempty")
    src = as_source(rng)
    report = CertificationReport(cert.descriptor, getattr(learner, "name", repr(learner)))
    for i, (D, truths) in enumerate(battery):
        for j, m in enumerate(m_grid):
            ce = expected_certificate(cert, D, m, trials, src.child(i, j, 0))
            err = estimate_error_rate(learner, None, D, list(truths), m, trials, src.child(i, j, 1)).estimate
            report.rows.append(AuditRow(D.name or f"D{i}", int(m), ce, err, tolerance_se))
    return report
