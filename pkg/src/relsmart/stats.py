"""Monte-Carlo estimates with normal-approximation confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Z95 = 1.96


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float
    trials: int

    @property
    def ci_half_width(self) -> float:
        """95% half-width, floored at ``1/trials`` so estimates near 0 or 1 keep a finite interval."""
        if self.trials <= 0:  # exact value
            return 0.0
        return max(Z95 * self.se, 1.0 / self.trials)

    @property
    def lower(self) -> float:
        return self.mean - self.ci_half_width

    @property
    def upper(self) -> float:
        return self.mean + self.ci_half_width

    @classmethod
    def exact(cls, value: float) -> "Estimate":
        return cls(float(value), 0.0, 0)

    @classmethod
    def from_values(cls, values) -> "Estimate":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise ValueError("no trials")
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(float(v.mean()), se, int(v.size))

    def to_json(self) -> dict:
        return {"mean": self.mean, "se": self.se, "trials": self.trials, "ci_half_width": self.ci_half_width}


def combined_se(*estimates: Estimate) -> float:
    return math.sqrt(sum(e.se**2 for e in estimates))
