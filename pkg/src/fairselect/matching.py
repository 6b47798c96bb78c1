"""Assignment algorithms: unconstrained, group-wise, institution-wise, and their relaxed forms.

All algorithms process candidates in decreasing observed utility with ties
broken by ascending candidate index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fairselect.core import Assignment, ConfigError, GroupLabels, InputError, Instance

ALGORITHMS = ("st", "group", "inst_wise", "relaxed_group", "relaxed_inst")


class InfeasibleError(InputError):
    """A group has fewer members than the slots it must fill."""


def quota(x: float, sizes: Sequence[int]) -> np.ndarray:
    """Split ``x`` slots across groups in proportion to ``sizes``.

    Each group gets the floor of its share ``x * n_j / n``; the leftover slots
    go one apiece to the groups with the largest fractional remainders, ties
    to the smaller group id. The total is ``floor(x)``, or ``round(x)`` when
    ``x`` is within 1e-9 of an integer, so products like ``0.3 * 10`` are not
    lost to float error.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if x < 0:
        raise InputError(f"cannot split a negative number of slots: {x}")
    if sizes.size == 0 or np.any(sizes < 0) or sizes.sum() == 0:
        raise InputError(f"group sizes must be non-negative with a positive total, got {sizes.tolist()}")
    total = round(x) if abs(x - round(x)) < 1e-9 else math.floor(x)
    n = int(sizes.sum())
    shares = total * sizes / n
    base = np.floor(shares + 1e-9).astype(np.int64)
    base = np.minimum(base, total)
    left = total - int(base.sum())
    if left > 0:
        remainder = shares - base
        # stable sort on -remainder keeps smaller ids first among ties
        order = np.argsort(-np.round(remainder, 12), kind="stable")
        base[order[:left]] += 1
    return base


def _order(utilities: np.ndarray) -> list[int]:
    return np.argsort(-utilities, kind="stable").tolist()


def _serial(order: Sequence[int], prefs: list[list[int]], capacities: Sequence[int], slots: list[int]) -> None:
    """Greedy pass writing institution ids into ``slots`` for candidates in ``order``."""
    remaining = list(capacities)
    free = sum(remaining)
    for i in order:
        if free == 0:
            break
        for j in prefs[i]:
            if remaining[j]:
                remaining[j] -= 1
                free -= 1
                slots[i] = j
                break


def serial_dictatorship(instance: Instance) -> Assignment:
    """Each candidate in turn takes their most preferred institution with a vacant slot."""
    slots = [-1] * instance.n
    _serial(_order(instance.observed_utilities), instance.preferences.tolist(), instance.capacities, slots)
    return Assignment.from_array(slots)


def _check_groups(instance: Instance, groups: GroupLabels) -> np.ndarray:
    if len(groups) != instance.n:
        raise InputError(f"{len(groups)} group labels for {instance.n} candidates")
    sizes = groups.sizes
    if np.any(sizes == 0):
        raise InputError(f"every group needs at least one member, sizes are {sizes.tolist()}")
    return sizes


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 <= alpha <= 1:
        raise InputError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def group_constrained(instance: Instance, groups: GroupLabels) -> Assignment:
    """Keep the top proportional share of each group, then run serial dictatorship on them."""
    sizes = _check_groups(instance, groups)
    target = quota(min(instance.total_capacity, instance.n), sizes)
    if np.any(target > sizes):
        raise InfeasibleError(f"group quotas {target.tolist()} exceed group sizes {sizes.tolist()}")
    utils = instance.observed_utilities
    chosen = []
    for g in range(groups.num_groups):
        members = groups.members(g)
        ranked = members[np.argsort(-utils[members], kind="stable")]
        chosen.extend(ranked[: target[g]].tolist())
    chosen_set = set(chosen)
    order = [i for i in _order(utils) if i in chosen_set]
    slots = [-1] * instance.n
    _serial(order, instance.preferences.tolist(), instance.capacities, slots)
    return Assignment.from_array(slots)


def institution_quotas(capacities: Sequence[int], sizes: Sequence[int], alpha: float = 1.0) -> np.ndarray:
    """``(p, g)`` array of slots reserved for each group at each institution."""
    return np.array([quota(alpha * k, sizes) for k in capacities], dtype=np.int64).reshape(len(capacities), len(sizes))


def institution_wise(instance: Instance, groups: GroupLabels) -> Assignment:
    """Split every institution's capacity across groups and run serial dictatorship per group."""
    sizes = _check_groups(instance, groups)
    reserved = institution_quotas(instance.capacities, sizes)
    order = _order(instance.observed_utilities)
    prefs = instance.preferences.tolist()
    labels = groups.labels.tolist()
    slots = [-1] * instance.n
    for g in range(groups.num_groups):
        _serial([i for i in order if labels[i] == g], prefs, reserved[:, g].tolist(), slots)
    return Assignment.from_array(slots)


def relaxed_group(instance: Instance, groups: GroupLabels, alpha: float) -> Assignment:
    """Reserve a fraction ``alpha`` of the proportional selection per group; the rest is open.

    A candidate is placed at their top institution with a vacant slot provided
    their group still has reserved selections or the shared excess is
    positive; the group reserve is charged first.
    """
    alpha = _check_alpha(alpha)
    sizes = _check_groups(instance, groups)
    total = instance.total_capacity
    reserve = quota(alpha * min(total, instance.n), sizes).tolist()
    excess = total - sum(reserve)
    remaining = list(instance.capacities)
    free = total
    prefs = instance.preferences.tolist()
    labels = groups.labels.tolist()
    slots = [-1] * instance.n
    for i in _order(instance.observed_utilities):
        if free == 0:
            break
        g = labels[i]
        if reserve[g] == 0 and excess == 0:
            continue
        for j in prefs[i]:
            if remaining[j]:
                remaining[j] -= 1
                free -= 1
                slots[i] = j
                if reserve[g]:
                    reserve[g] -= 1
                else:
                    excess -= 1
                break
    return Assignment.from_array(slots)


def relaxed_institution(instance: Instance, groups: GroupLabels, alpha: float) -> Assignment:
    """Reserve a fraction ``alpha`` of each institution's proportional share per group.

    Unreserved slots at an institution are open to every group. A candidate
    takes the most preferred institution with a slot reserved for their group
    or an open slot, using the reserved one first. Other groups' reserved
    slots are never used.
    """
    alpha = _check_alpha(alpha)
    sizes = _check_groups(instance, groups)
    reserve = institution_quotas(instance.capacities, sizes, alpha)
    excess = (np.asarray(instance.capacities) - reserve.sum(axis=1)).tolist()
    reserve = reserve.tolist()
    free = instance.total_capacity
    prefs = instance.preferences.tolist()
    labels = groups.labels.tolist()
    slots = [-1] * instance.n
    for i in _order(instance.observed_utilities):
        if free == 0:
            break
        g = labels[i]
        for j in prefs[i]:
            if reserve[j][g]:
                reserve[j][g] -= 1
            elif excess[j]:
                excess[j] -= 1
            else:
                continue
            free -= 1
            slots[i] = j
            break
    return Assignment.from_array(slots)


@dataclass(frozen=True)
class ConstraintPolicy:
    """Which algorithm to run; ``alpha`` is used only by the relaxed variants."""

    kind: str = "st"
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.kind!r}; expected one of {ALGORITHMS}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")

    def assign(self, instance: Instance, groups: GroupLabels | None = None) -> Assignment:
        if self.kind == "st":
            return serial_dictatorship(instance)
        if groups is None:
            raise InputError(f"algorithm {self.kind!r} needs group labels")
        if self.kind == "group":
            return group_constrained(instance, groups)
        if self.kind == "inst_wise":
            return institution_wise(instance, groups)
        if self.kind == "relaxed_group":
            return relaxed_group(instance, groups, self.alpha)
        return relaxed_institution(instance, groups, self.alpha)
