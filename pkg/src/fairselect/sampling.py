"""Random latent utilities and preference rankings."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from fairselect.core import ConfigError, InputError, LatentProfile


@dataclass(frozen=True)
class Uniform01:
    pass


@dataclass(frozen=True)
class TruncGaussian:
    mean: float = 0.0
    std: float = 1.0
    lower_bound: float = 0.0

    def __post_init__(self) -> None:
        if not self.std > 0:
            raise ConfigError(f"TruncGaussian std must be positive, got {self.std}")


@dataclass(frozen=True)
class Pareto:
    shape: float = 3.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.shape > 0:
            raise ConfigError(f"Pareto shape must be positive, got {self.shape}")
        if not self.scale > 0:
            raise ConfigError(f"Pareto scale must be positive, got {self.scale}")


UtilityDistribution = Union[Uniform01, TruncGaussian, Pareto]


def _check_permutation(a: Sequence[int], name: str = "ranking") -> np.ndarray:
    arr = np.asarray(a, dtype=np.int64)
    if arr.ndim != 1 or not np.array_equal(np.sort(arr), np.arange(len(arr))):
        raise InputError(f"{name} is not a permutation of 0..{len(arr) - 1}: {list(a)}")
    return arr


@dataclass(frozen=True)
class MallowsModel:
    """Pr(sigma) proportional to phi ** kendall_tau(sigma, central_ranking).

    ``phi = 0`` is accepted as the point mass on the central ranking.
    """

    central_ranking: tuple[int, ...]
    phi: float

    def __post_init__(self) -> None:
        ranking = tuple(int(x) for x in _check_permutation(self.central_ranking, "central_ranking"))
        object.__setattr__(self, "central_ranking", ranking)
        if not 0 <= self.phi <= 1:
            raise ConfigError(f"Mallows dispersion must lie in [0, 1], got {self.phi}")

    @property
    def p(self) -> int:
        return len(self.central_ranking)


def sample_utilities(dist: UtilityDistribution, n: int, rng: np.random.Generator) -> LatentProfile:
    if n < 1:
        raise ConfigError(f"need at least one candidate, got n={n}")
    if isinstance(dist, Uniform01):
        values = rng.random(n)
    elif isinstance(dist, TruncGaussian):
        values = _truncated_normal(rng, n, dist.mean, dist.std, dist.lower_bound, np.inf)
        if dist.lower_bound < 0:
            raise ConfigError("utility distributions must be supported on [0, inf)")
    elif isinstance(dist, Pareto):
        # numpy's pareto is the Lomax form; shift to support [scale, inf)
        values = dist.scale * (1.0 + rng.pareto(dist.shape, n))
    else:
        raise ConfigError(f"unknown utility distribution {dist!r}")
    return LatentProfile(values)


def _truncated_normal(rng, size, mean, std, low, high) -> np.ndarray:
    """Rejection sampling from N(mean, std^2) restricted to [low, high]."""
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        draw = rng.normal(mean, std, max(2 * need, 16))
        draw = draw[(draw >= low) & (draw <= high)][:need]
        out[filled : filled + len(draw)] = draw
        filled += len(draw)
    return out


def kendall_tau(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of item pairs ordered differently by rankings ``a`` and ``b``."""
    a = _check_permutation(a, "a")
    b = _check_permutation(b, "b")
    if len(a) != len(b):
        raise InputError(f"rankings have different lengths {len(a)} and {len(b)}")
    pos_b = np.empty_like(b)
    pos_b[b] = np.arange(len(b))
    seq = pos_b[a]
    # p is small; the quadratic count is exact and cheap
    return int(np.sum(seq[:, None] > seq[None, :], where=np.triu(np.ones((len(seq),) * 2, bool), 1)))


def _insertion_weights(i: int, phi: float) -> np.ndarray:
    """Probability of placing the (i+1)-th item of the central ranking at positions 0..i."""
    if phi == 0:
        w = np.zeros(i + 1)
        w[i] = 1.0
        return w
    w = phi ** np.arange(i, -1, -1, dtype=float)
    return w / w.sum()


def sample_mallows(model: MallowsModel, rng: np.random.Generator) -> tuple[int, ...]:
    """One ranking drawn by the repeated insertion model (exact)."""
    ranking: list[int] = []
    for i, item in enumerate(model.central_ranking):
        pos = rng.choice(i + 1, p=_insertion_weights(i, model.phi))
        ranking.insert(int(pos), item)
    return tuple(ranking)


def sample_mallows_many(model: MallowsModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent Mallows rankings as a ``(size, p)`` array.

    Same repeated insertion scheme as :func:`sample_mallows`, vectorised over rows.
    """
    p = model.p
    out = np.empty((size, p), dtype=np.int64)
    if p == 0 or size == 0:
        return out
    center = model.central_ranking
    out[:, 0] = center[0]
    for i in range(1, p):
        weights = _insertion_weights(i, model.phi)
        pos = np.searchsorted(np.cumsum(weights), rng.random(size), side="right")
        pos = np.minimum(pos, i)
        # shift entries at or after the insertion point one slot right
        for c in range(i, 0, -1):
            shift = pos <= c - 1
            out[shift, c] = out[shift, c - 1]
        out[np.arange(size), pos] = center[i]
    return out


@lru_cache(maxsize=None)
def _bounded_compositions(p: int) -> tuple[tuple[int, ...], ...]:
    """``table[j][s]``: ways for Lehmer digits j..p-2 (digit j in 0..p-1-j) to sum to s."""
    max_d = p * (p - 1) // 2
    table = [[0] * (max_d + 1) for _ in range(p)]
    table[p - 1][0] = 1 if p >= 1 else 0
    for j in range(p - 2, -1, -1):
        cap = p - 1 - j
        for s in range(max_d + 1):
            table[j][s] = sum(table[j + 1][s - c] for c in range(min(cap, s) + 1))
    return tuple(tuple(row) for row in table)


def ranking_at_distance(rho: Sequence[int], gamma: int, rng: np.random.Generator) -> tuple[int, ...]:
    """A random ranking at Kendall-tau distance exactly ``gamma`` from ``rho``.

    Draws a Lehmer code uniformly among those whose digits sum to ``gamma`` and
    decodes it against ``rho``.
    """
    rho = _check_permutation(rho, "rho")
    p = len(rho)
    max_d = p * (p - 1) // 2
    if not 0 <= gamma <= max_d:
        raise InputError(f"gamma must lie in [0, {max_d}] for p={p}, got {gamma}")
    if p == 0:
        return ()
    table = _bounded_compositions(p)
    remaining = int(gamma)
    available = [int(x) for x in rho]
    out = []
    for j in range(p - 1):
        cap = p - 1 - j
        choices = range(min(cap, remaining) + 1)
        weights = np.array([table[j + 1][remaining - c] for c in choices], dtype=float)
        c = int(rng.choice(len(weights), p=weights / weights.sum()))
        remaining -= c
        out.append(available.pop(c))
    out.append(available.pop())
    assert remaining == 0
    result = tuple(out)
    assert kendall_tau(result, rho) == gamma
    return result
