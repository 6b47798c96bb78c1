"""Bias models turning latent utilities into the utilities an evaluator observes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from fairselect.core import ConfigError, GroupLabels, InputError, LatentProfile
from fairselect.sampling import _truncated_normal


def _as_tuple(values: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class BetaBias:
    """Observed utility is ``betas[g] * u`` for a candidate in group g."""

    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "betas", _as_tuple(self.betas))
        if any(not b > 0 for b in self.betas):
            raise ConfigError(f"bias parameters must be positive, got {self.betas}")


@dataclass(frozen=True)
class NoisyBeta:
    """Per-candidate bias drawn from N(betas[g], std^2) truncated to [0, 1].

    Group 0 is the reference group and keeps its centre value without noise;
    every other group draws one bias factor per candidate.
    """

    betas: tuple[float, ...]
    std: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "betas", _as_tuple(self.betas))
        if any(b < 0 for b in self.betas):
            raise ConfigError(f"bias centres must be non-negative, got {self.betas}")
        if not self.std > 0:
            raise ConfigError(f"noise std must be positive, got {self.std}")


@dataclass(frozen=True)
class ImplicitVariance:
    """Observed utility is ``u + deltas[g] * z`` with z standard normal."""

    deltas: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "deltas", _as_tuple(self.deltas))
        if any(d < 0 for d in self.deltas):
            raise ConfigError(f"noise scales must be non-negative, got {self.deltas}")


BiasModel = Union[BetaBias, NoisyBeta, ImplicitVariance]


def _per_group(params: tuple[float, ...], groups: GroupLabels, what: str) -> np.ndarray:
    if len(params) < groups.num_groups:
        raise ConfigError(f"need one {what} per group: got {len(params)} for {groups.num_groups} groups")
    return np.asarray(params)[groups.labels]


def sample_noisy_betas(center: float, size: int, rng: np.random.Generator, std: float = 0.1) -> np.ndarray:
    return _truncated_normal(rng, size, center, std, 0.0, 1.0)


def apply_bias(
    model: BiasModel, latent: LatentProfile, groups: GroupLabels, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Observed utilities for every candidate under ``model``.

    ``BetaBias`` is deterministic and ignores ``rng``. ``ImplicitVariance`` may
    return negative values; they are kept because only the order matters to
    the assignment algorithms.
    """
    if len(latent) != len(groups):
        raise InputError(f"{len(latent)} latent utilities but {len(groups)} group labels")
    u = latent.values
    if isinstance(model, BetaBias):
        return u * _per_group(model.betas, groups, "bias parameter")
    if rng is None:
        raise InputError(f"{type(model).__name__} needs a random generator")
    if isinstance(model, NoisyBeta):
        factors = _per_group(model.betas, groups, "bias centre").astype(float)
        for g in range(1, groups.num_groups):
            idx = groups.members(g)
            factors[idx] = sample_noisy_betas(model.betas[g], len(idx), rng, model.std)
        return u * factors
    if isinstance(model, ImplicitVariance):
        scale = _per_group(model.deltas, groups, "noise scale")
        return u + scale * rng.standard_normal(len(u))
    raise ConfigError(f"unknown bias model {model!r}")
