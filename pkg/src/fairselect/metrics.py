"""Per-draw utility ratio, representational fairness and preference-based fairness.

Ratios of the form min/max evaluate to 1 when every group's value is 0.
Averaging over draws is left to the harness, which averages the per-draw
ratios rather than numerators and denominators separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fairselect.core import Assignment, GroupLabels, InputError, Instance, LatentProfile


def _min_max_ratio(values: np.ndarray) -> float:
    hi = float(np.max(values))
    if hi == 0:
        return 1.0
    return float(np.min(values)) / hi


def _group_sizes(groups: GroupLabels, n: int) -> np.ndarray:
    if len(groups) != n:
        raise InputError(f"{len(groups)} group labels for an assignment of {n} candidates")
    sizes = groups.sizes
    if np.any(sizes == 0):
        raise InputError(f"empty group in sizes {sizes.tolist()}")
    return sizes


def utility_ratio(assignment: Assignment, latent: LatentProfile, K: int) -> float:
    """True utility of the selected candidates over the best possible top-K true utility."""
    u = latent.values
    if len(assignment) != len(u):
        raise InputError(f"assignment has {len(assignment)} slots but {len(u)} latent utilities")
    if not 0 <= K <= len(u):
        raise InputError(f"K={K} must lie in [0, n={len(u)}]")
    best = float(np.sum(np.sort(u)[len(u) - K :])) if K else 0.0
    if best == 0:
        return 1.0
    return float(np.sum(u[assignment.selected()])) / best


def representational_fairness(assignment: Assignment, groups: GroupLabels) -> tuple[np.ndarray, float]:
    """Selected fraction per group and the min/max ratio across groups."""
    sizes = _group_sizes(groups, len(assignment))
    chosen = assignment.as_array() >= 0
    counts = np.bincount(groups.labels[chosen], minlength=groups.num_groups)
    rho = counts / sizes
    return rho, _min_max_ratio(rho)


def top_choice_hits(assignment: Assignment, instance: Instance, ell: int) -> np.ndarray:
    """Boolean mask of candidates assigned to one of their first ``ell`` choices."""
    if not 1 <= ell <= instance.p:
        raise InputError(f"ell must lie in [1, {instance.p}], got {ell}")
    if len(assignment) != instance.n:
        raise InputError(f"assignment has {len(assignment)} slots but instance has {instance.n} candidates")
    slots = assignment.as_array()
    top = instance.preferences[:, :ell]
    return np.any(top == slots[:, None], axis=1) & (slots >= 0)


def preference_fairness(
    assignment: Assignment, instance: Instance, groups: GroupLabels, ell: int = 1
) -> tuple[np.ndarray, float]:
    """Per group, the fraction assigned within their top ``ell`` choices, and the min/max ratio."""
    hits = top_choice_hits(assignment, instance, ell)
    sizes = _group_sizes(groups, instance.n)
    pi = np.bincount(groups.labels[hits], minlength=groups.num_groups) / sizes
    return pi, _min_max_ratio(pi)


@dataclass
class MetricsReport:
    selected_fraction: np.ndarray
    topl_fraction: dict[int, np.ndarray]
    utility_ratio: float | None
    R: float
    P: dict[int, float] = field(default_factory=dict)

    def scalars(self) -> dict[str, float]:
        """Flat metric-name map such as ``{"U": ..., "R": ..., "P1": ...}``."""
        out = {"R": self.R}
        if self.utility_ratio is not None:
            out["U"] = self.utility_ratio
        out.update({f"P{ell}": v for ell, v in self.P.items()})
        return out


def evaluate(
    assignment: Assignment,
    instance: Instance,
    groups: GroupLabels,
    latent: LatentProfile | None = None,
    ells: Sequence[int] = (1,),
) -> MetricsReport:
    """All metrics for one draw; the utility ratio is skipped when ``latent`` is None."""
    rho, R = representational_fairness(assignment, groups)
    topl, P = {}, {}
    for ell in ells:
        topl[ell], P[ell] = preference_fairness(assignment, instance, groups, ell)
    U = None
    if latent is not None:
        U = utility_ratio(assignment, latent, min(instance.total_capacity, instance.n))
    return MetricsReport(rho, topl, U, R, P)
