"""Two-sided t-tests against normal reference distributions.

The reference is either the standard normal or a normal with variance 2;
the latter is the limit law of the t-statistic built from the
unit-clustered variance in fixed-effects regressions on balanced pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ZeroVariance

__all__ = [
    "NormalReference",
    "STANDARD_NORMAL",
    "NORMAL_VARIANCE_TWO",
    "TestResult",
    "standard_normal_cdf",
    "t_test",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class NormalReference:
    """Mean-zero normal null distribution for a t-statistic."""

    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("reference variance must be positive")

    def two_sided_p(self, t: float) -> float:
        z = abs(t) / math.sqrt(self.variance)
        return math.erfc(z / _SQRT2)

    def __str__(self):
        return f"normal(0,{self.variance:g})"


STANDARD_NORMAL = NormalReference(1.0)
NORMAL_VARIANCE_TWO = NormalReference(2.0)


def standard_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


@dataclass(frozen=True)
class TestResult:
    t_stat: float
    p_value: float
    reject: bool
    reference: NormalReference
    level: float


def t_test(
    tau_hat: float,
    v_hat: float,
    tau_null: float = 0.0,
    level: float = 0.05,
    reference: NormalReference = STANDARD_NORMAL,
) -> TestResult:
    """Two-sided test of tau = tau_null given a variance estimate.

    The statistic is (tau_hat - tau_null)/sqrt(v_hat); the p-value comes
    from the chosen reference law, so for variance 2 it is
    2*(1 - Phi(|t|/sqrt(2))).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    if not v_hat > 0.0:
        raise ZeroVariance(f"variance estimate must be positive, got {v_hat!r}")
    t = (tau_hat - tau_null) / math.sqrt(v_hat)
    p = reference.two_sided_p(t)
    return TestResult(t_stat=t, p_value=p, reject=p < level, reference=reference, level=level)
