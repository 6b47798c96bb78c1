"""Instances, assignments, and stability checking.

Institutions and groups are 0-based integers throughout the package. A
candidate that is not selected holds the :data:`UNASSIGNED` marker, never an
institution id.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class InputError(ValueError):
    """Malformed or inconsistent input to an operation."""


class SizeError(InputError):
    """Instance too large for exhaustive enumeration."""


class ConfigError(ValueError):
    """Invalid model or experiment parameters."""


class _Unassigned(enum.Enum):
    UNASSIGNED = "unassigned"

    def __repr__(self) -> str:
        return "UNASSIGNED"


UNASSIGNED = _Unassigned.UNASSIGNED

ORACLE_MAX_CANDIDATES = 8
ORACLE_MAX_INSTITUTIONS = 4


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """Candidates with observed utilities and preferences over capacitated institutions.

    ``preferences[i]`` lists institution ids from most to least preferred.
    Observed utilities must be finite; negative values are allowed because the
    implicit-variance bias model can produce them.
    """

    capacities: tuple[int, ...]
    observed_utilities: np.ndarray
    preferences: np.ndarray

    def __post_init__(self) -> None:
        caps = tuple(int(k) for k in self.capacities)
        if any(k < 0 for k in caps):
            raise InputError(f"capacities must be non-negative, got {caps}")
        utils = np.asarray(self.observed_utilities, dtype=float)
        if utils.ndim != 1:
            raise InputError("observed_utilities must be one-dimensional")
        if not np.all(np.isfinite(utils)):
            raise InputError("observed_utilities must be finite")
        p = len(caps)
        prefs = np.asarray(self.preferences, dtype=np.int64)
        if prefs.size == 0:
            prefs = prefs.reshape(len(utils), p)
        if prefs.ndim != 2 or prefs.shape != (len(utils), p):
            raise InputError(
                f"preferences must have shape ({len(utils)}, {p}), got {prefs.shape}"
            )
        if p and not np.array_equal(np.sort(prefs, axis=1), np.broadcast_to(np.arange(p), prefs.shape)):
            raise InputError("every preference list must be a permutation of the institutions")
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "observed_utilities", _frozen(utils))
        object.__setattr__(self, "preferences", _frozen(prefs))

    @property
    def n(self) -> int:
        return len(self.observed_utilities)

    @property
    def p(self) -> int:
        return len(self.capacities)

    @property
    def total_capacity(self) -> int:
        return sum(self.capacities)

    def restrict(self, members: Sequence[int], capacities: Sequence[int] | None = None) -> Instance:
        """Sub-instance on ``members`` (in the given order), optionally with new capacities."""
        members = np.asarray(members, dtype=np.int64)
        return Instance(
            tuple(self.capacities if capacities is None else capacities),
            self.observed_utilities[members],
            self.preferences[members],
        )

    def with_capacities(self, capacities: Sequence[int]) -> Instance:
        return Instance(tuple(capacities), self.observed_utilities, self.preferences)

    def with_preference(self, candidate: int, ranking: Sequence[int]) -> Instance:
        prefs = np.array(self.preferences)
        prefs[candidate] = ranking
        return Instance(self.capacities, self.observed_utilities, prefs)


@dataclass(frozen=True, eq=False)
class LatentProfile:
    """True utilities of the candidates, never seen by the algorithms."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or not np.all(np.isfinite(vals)):
            raise InputError("latent utilities must be a finite one-dimensional array")
        if np.any(vals < 0):
            raise InputError("latent utilities must be non-negative")
        object.__setattr__(self, "values", _frozen(vals))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class GroupLabels:
    """Per-candidate group ids in ``0..num_groups-1``."""

    labels: np.ndarray
    num_groups: int = field(default=-1)

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise InputError("group labels must be one-dimensional")
        if labels.size and labels.min() < 0:
            raise InputError("group ids must be non-negative")
        g = self.num_groups
        if g < 0:
            g = int(labels.max()) + 1 if labels.size else 1
        if labels.size and labels.max() >= g:
            raise InputError(f"group id {labels.max()} out of range for {g} groups")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "num_groups", int(g))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> GroupLabels:
        """Contiguous blocks: the first ``sizes[0]`` candidates are group 0, and so on."""
        return cls(np.repeat(np.arange(len(sizes)), sizes), len(sizes))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_groups)

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.labels == group)


@dataclass(frozen=True)
class Assignment:
    """Map from candidate index to an institution id or :data:`UNASSIGNED`."""

    slots: tuple

    @classmethod
    def from_array(cls, institutions: Iterable[int]) -> Assignment:
        """Build from an integer array where negative entries mean unassigned."""
        return cls(tuple(UNASSIGNED if s < 0 else int(s) for s in institutions))

    def __len__(self) -> int:
        return len(self.slots)

    def __getitem__(self, i: int):
        return self.slots[i]

    def as_array(self) -> np.ndarray:
        """Integer view with ``-1`` for unassigned; for vectorised metric code only."""
        return np.fromiter(
            (-1 if s is UNASSIGNED else s for s in self.slots), dtype=np.int64, count=len(self.slots)
        )

    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.as_array() >= 0)

    def members_of(self, institution: int) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.slots) if s == institution)

    def counts(self, p: int) -> np.ndarray:
        arr = self.as_array()
        return np.bincount(arr[arr >= 0], minlength=p)


def respects_capacities(instance: Instance, assignment: Assignment) -> bool:
    arr = assignment.as_array()
    if np.any(arr >= instance.p):
        return False
    return bool(np.all(assignment.counts(instance.p) <= np.asarray(instance.capacities)))


def _is_stable(rank_of, priority, capacities, slots) -> bool:
    """Core check on plain lists.

    ``rank_of[i][j]`` is candidate i's rank of institution j, ``priority[j][i]``
    institution j's score for candidate i, ``slots[i]`` an institution or -1.
    """
    p = len(capacities)
    load = [0] * p
    worst = [None] * p
    for i, s in enumerate(slots):
        if s >= 0:
            load[s] += 1
            w = worst[s]
            if w is None or priority[s][i] < w:
                worst[s] = priority[s][i]
    for i, s in enumerate(slots):
        ranks = rank_of[i]
        current = ranks[s] if s >= 0 else p
        for j in range(p):
            if ranks[j] < current:
                if load[j] < capacities[j] or (worst[j] is not None and priority[j][i] > worst[j]):
                    return False
    return True


def verify_stable(
    instance: Instance, assignment: Assignment, priorities: np.ndarray | None = None
) -> bool:
    """True iff no candidate-institution pair blocks ``assignment``.

    A pair (i, j) with j != M(i) blocks when i prefers j to its assignment
    (unassigned is worse than everything) and j has a vacant slot or holds a
    candidate it ranks strictly below i. Institutions rank candidates by
    observed utility unless ``priorities`` (shape ``(p, n)``) gives each
    institution its own scores; the latter exists to build textbook
    two-sided counterexamples and is not accepted by the algorithms.
    """
    if len(assignment) != instance.n:
        raise InputError(
            f"assignment has {len(assignment)} slots but instance has {instance.n} candidates"
        )
    if not respects_capacities(instance, assignment):
        raise InputError("assignment violates institution capacities")
    if priorities is None:
        prio = np.broadcast_to(instance.observed_utilities, (instance.p, instance.n))
    else:
        prio = np.asarray(priorities, dtype=float)
        if prio.shape != (instance.p, instance.n):
            raise InputError(f"priorities must have shape ({instance.p}, {instance.n})")
    rank_of = np.argsort(instance.preferences, axis=1).tolist()
    return _is_stable(rank_of, prio.tolist(), list(instance.capacities), assignment.as_array().tolist())


def _enumerate_assignments(n: int, capacities: list[int], target: int):
    """Yield every slot list that respects capacities and assigns exactly ``target`` candidates."""
    p = len(capacities)
    remaining = list(capacities)
    slots = [-1] * n

    def rec(i: int, placed: int):
        left = n - i
        if placed + left < target:
            return
        if i == n:
            if placed == target:
                yield list(slots)
            return
        if placed < target:
            for j in range(p):
                if remaining[j]:
                    remaining[j] -= 1
                    slots[i] = j
                    yield from rec(i + 1, placed + 1)
                    remaining[j] += 1
        slots[i] = -1
        yield from rec(i + 1, placed)

    yield from rec(0, 0)


def brute_force_stable(instance: Instance) -> list[Assignment]:
    """All stable assignments of exactly ``min(n, K)`` candidates, by exhaustive enumeration."""
    if instance.n > ORACLE_MAX_CANDIDATES or instance.p > ORACLE_MAX_INSTITUTIONS:
        raise SizeError(
            f"oracle limited to n <= {ORACLE_MAX_CANDIDATES}, p <= {ORACLE_MAX_INSTITUTIONS}; "
            f"got n={instance.n}, p={instance.p}"
        )
    caps = list(instance.capacities)
    rank_of = np.argsort(instance.preferences, axis=1).tolist()
    prio = [instance.observed_utilities.tolist()] * instance.p
    target = min(instance.n, instance.total_capacity)
    return [
        Assignment.from_array(slots)
        for slots in _enumerate_assignments(instance.n, caps, target)
        if _is_stable(rank_of, prio, caps, slots)
    ]
