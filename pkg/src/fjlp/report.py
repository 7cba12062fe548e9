"""Outcome record shared by the exact and Monte-Carlo checks."""

import json
import math
from dataclasses import dataclass, field

__all__ = ["VerificationReport", "wilson_interval", "Z99"]

Z99 = 2.5758293035489004  # two-sided 99% standard-normal quantile


def wilson_interval(successes, trials, z=Z99):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class VerificationReport:
    """One check outcome: estimate, 99% interval, theoretical bound, verdict.

    For exact (enumerated) checks the interval degenerates to the estimate and
    ``trials`` records the enumeration size.
    """

    check: str
    estimate: float
    ci: tuple
    bound: float | None
    trials: int
    passed: bool
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "check": self.check,
            "params": self.params,
            "estimate": self.estimate,
            "ci": [self.ci[0], self.ci[1]],
            "bound": self.bound,
            "trials": self.trials,
            "pass": self.passed,
            "seed": self.seed,
        }

    def to_json(self, indent=None):
        return json.dumps(self.as_dict(), indent=indent)

    def summary(self):
        verdict = "PASS" if self.passed else "FAIL"
        bound = "-" if self.bound is None else f"{self.bound:.6g}"
        return (
            f"[{verdict}] {self.check}: estimate={self.estimate:.6g} "
            f"ci=[{self.ci[0]:.6g}, {self.ci[1]:.6g}] bound={bound} trials={self.trials}"
        )
