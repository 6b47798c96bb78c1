"""Closed-form predictions for serial dictatorship under beta bias with uniform utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

from fairselect.core import ConfigError, InputError

BAND_CONSTANT = 8.0


@dataclass(frozen=True)
class TheoryParams:
    """Two groups of sizes ``n1`` (unbiased) and ``n2`` (scaled by ``beta``), ``K`` slots in total.

    The ``eta`` fields are lower-bound fractions that only enter error terms;
    they are carried for reporting and never used in point predictions.
    """

    n1: int
    n2: int
    K: int
    beta: float
    eta1: float | None = None
    eta2: float | None = None
    eta3: float | None = None

    def __post_init__(self) -> None:
        if self.n1 < 0 or self.n2 < 0:
            raise ConfigError(f"group sizes must be non-negative, got {self.n1}, {self.n2}")
        if not 0 <= self.K <= self.n1 + self.n2:
            raise ConfigError(f"K={self.K} must lie in [0, n1 + n2 = {self.n1 + self.n2}]")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2


@dataclass(frozen=True)
class Prediction:
    R: float
    U: float
    P_upper: float
    alpha1: float
    alpha2: float


def f_order_stat(x: float, y: float) -> float:
    """Expected sum of the top ``x`` of ``y`` i.i.d. uniform[0, 1] draws."""
    if x < 0 or x > y:
        raise InputError(f"need 0 <= x <= y, got x={x}, y={y}")
    return x - x * (x + 1) / (2 * (y + 1))


def predicted_alphas(params: TheoryParams) -> tuple[float, float]:
    """Expected number of selected candidates from each group."""
    n1, n2, K, beta = params.n1, params.n2, params.K, params.beta
    alpha1 = K - n2 / (beta * n1 + n2) * max(K - (1 - beta) * n1, 0.0)
    return alpha1, K - alpha1


def predicted_metrics_uniform(params: TheoryParams) -> Prediction:
    """Representational fairness, utility ratio and the upper bound on preference fairness."""
    n1, n2, K, beta = params.n1, params.n2, params.K, params.beta
    denom = K * beta + n2 * (1 - beta)
    R = max((K - n1 * (1 - beta)) / denom, 0.0) if denom > 0 else 1.0
    # beta > 1 flips which group is disadvantaged; the ratio is symmetric
    R = min(R, 1.0 / R) if R > 0 else 0.0
    a1, a2 = predicted_alphas(params)
    best = f_order_stat(K, params.n)
    U = 1.0 if best == 0 else (f_order_stat(min(a1, n1), n1) + f_order_stat(min(a2, n2), n2)) / best
    return Prediction(R=R, U=U, P_upper=R, alpha1=a1, alpha2=a2)


def utility_ratio_equal_groups(beta: float) -> float:
    """Utility ratio when both groups and the capacity all have the same size."""
    if not beta > 0:
        raise InputError(f"beta must be positive, got {beta}")
    return 2 / 3 + 4 * beta / (3 * (beta + 1) ** 2)


def logconcave_bound(beta: float) -> float:
    """Upper bound ``min(1, 2 beta ln(1/beta))`` on R and P for log-concave utility densities."""
    if not beta > 0:
        raise InputError(f"beta must be positive, got {beta}")
    if beta > 1:
        raise InputError(f"bound is stated for beta <= 1, got {beta}")
    return min(1.0, 2 * beta * math.log(1 / beta))


def logconcave_bound_applies(beta: float) -> bool:
    """Whether ``beta`` falls in the range where the log-concave bound is proven.

    The argument assumes ``beta ln(1/beta) <= 1/2`` and ``beta <= 1/2``; for
    larger beta the formula is still returned but carries no guarantee.
    """
    return 0 < beta <= 0.5 and beta * math.log(1 / beta) <= 0.5


def uncertainty_band(n: int, c: float = BAND_CONSTANT) -> float:
    """Display-only width ``c * sqrt(log n / n)`` for the asymptotic error terms."""
    if n < 2:
        raise InputError(f"need n >= 2, got {n}")
    return c * math.sqrt(math.log(n) / n)
