"""Renewal-reward processes and their occupation-time empirical process.

Interval ``k`` of the renewal process has length ``Y_k`` and carries reward
``W_k``; the pairs ``(Y_k, W_k)`` are i.i.d., so ``R(t) = W_k`` on
``[S_{k-1}, S_k)`` with ``S_k = Y_1 + ... + Y_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cadlag import Interval, StepFunction
from .errors import DomainError
from .heavy_tail import TailModel, compute_a_n, sample_tail

__all__ = [
    "ExponentialReward",
    "UniformReward",
    "ConstantReward",
    "MixtureReward",
    "RenewalRewardConfig",
    "RenewalPath",
    "renewal_reward_path",
    "empirical_process",
    "steady_state_cdf",
    "RenewalEmpirical",
]


# ---------------------------------------------------------------------------
# reward laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialReward:
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("rate must be positive")

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        out = -np.expm1(-self.rate * np.maximum(w, 0.0))
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size):
        return rng.standard_exponential(size) / self.rate


@dataclass(frozen=True)
class UniformReward:
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not self.low < self.high:
            raise DomainError("need low < high")

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        out = np.clip((w - self.low) / (self.high - self.low), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size):
        return self.low + (self.high - self.low) * rng.random(size)


@dataclass(frozen=True)
class ConstantReward:
    value: float = 1.0

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        out = (w >= self.value).astype(float)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size):
        return np.full(size, float(self.value))


@dataclass(frozen=True)
class MixtureReward:
    """Finite mixture; ``components`` are reward laws with ``cdf`` and ``sample``."""

    weights: tuple
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size != len(self.components) or w.size == 0:
            raise DomainError("need one weight per component")
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=1e-12):
            raise DomainError("mixture weights must be nonnegative and sum to 1")

    def cdf(self, w):
        out = sum(p * np.asarray(c.cdf(w)) for p, c in zip(self.weights, self.components))
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size):
        label = rng.choice(len(self.components), size=size, p=np.asarray(self.weights))
        out = np.empty(np.shape(label))
        for j, c in enumerate(self.components):
            hit = label == j
            out[hit] = c.sample(rng, int(np.count_nonzero(hit)))
        return out


# ---------------------------------------------------------------------------
# configuration and simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RenewalRewardConfig:
    """Renewal-reward experiment.

    ``coupling(rng, y)`` draws the rewards jointly with given interarrivals
    ``y``; ``None`` means independent rewards from ``reward``.
    """

    interarrival: TailModel
    reward: object = field(default_factory=ExponentialReward)
    T: float = 1e4
    w_grid: Sequence[float] = (0.5,)
    coupling: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("horizon T must be positive")
        grid = tuple(float(w) for w in self.w_grid)
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise DomainError("w_grid must be sorted")
        object.__setattr__(self, "w_grid", grid)

    @property
    def rate(self) -> float:
        """``lambda = 1 / E[Y]``."""
        return 1.0 / self.interarrival.mean

    @property
    def a_T(self) -> float:
        return compute_a_n(self.interarrival, max(self.T, 1.0))

    def rewards(self, rng: np.random.Generator, y: np.ndarray) -> np.ndarray:
        if self.coupling is None:
            return np.asarray(self.reward.sample(rng, y.size), dtype=float)
        return np.asarray(self.coupling(rng, y), dtype=float)


def _simulate(rng: np.random.Generator, config: RenewalRewardConfig):
    """Interarrivals and rewards of the intervals meeting ``[0, T]``."""
    T = float(config.T)
    chunk = int(min(max(16.0, 1.1 * T * config.rate + 16), 1 << 22))
    ys = []
    total = 0.0
    while True:
        y = sample_tail(rng, config.interarrival, chunk)
        ends = total + np.cumsum(y)
        k = int(np.searchsorted(ends, T, side="right"))
        if k < y.size:
            ys.append(y[: k + 1])
            break
        ys.append(y)
        total = float(ends[-1])
    y = np.concatenate(ys)
    return y, config.rewards(rng, y)


@dataclass(frozen=True)
class RenewalPath:
    trajectory: StepFunction
    n_renewals: int


def renewal_reward_path(rng: np.random.Generator, config: RenewalRewardConfig) -> RenewalPath:
    """``R(t)`` on ``[0, T]`` with jumps at the renewal epochs in ``(0, T]``."""
    y, w = _simulate(rng, config)
    keep = y > 0  # zero-length intervals (possible for shifted Pareto) carry no time
    keep[-1] = True
    epochs = np.cumsum(y[keep])[:-1]
    iv = Interval(0.0, float(config.T))
    return RenewalPath(StepFunction(iv, epochs, w[keep]), int(y.size - 1))


def _occupation(y: np.ndarray, w: np.ndarray, T: float, w_grid) -> np.ndarray:
    sojourn = y.copy()
    sojourn[-1] = T - np.sum(y[:-1])
    order = np.argsort(w, kind="stable")
    cum = np.concatenate(([0.0], np.cumsum(sojourn[order])))
    return cum[np.searchsorted(w[order], np.asarray(w_grid), side="right")]


def empirical_process(
    rng: np.random.Generator, config: RenewalRewardConfig, f0: Optional[Sequence[float]] = None
) -> dict:
    """``E_T(w) = a_T^{-1} (int_0^T 1{R(s) <= w} ds - T F_0(w))`` on ``w_grid``.

    Occupation times are exact sums of sojourn lengths, including the last,
    incomplete interval.  ``f0`` supplies ``F_0`` on the grid; it is required
    for custom couplings, where ``F_0`` has no closed form.
    """
    vals = RenewalEmpirical(config, None if f0 is None else tuple(f0))(rng)
    return dict(zip(config.w_grid, vals.tolist()))


def steady_state_cdf(
    config: RenewalRewardConfig,
    w: float,
    rng: Optional[np.random.Generator] = None,
    mc_samples: int = 10_000_000,
) -> float:
    """``F_0(w) = lambda E[Y 1{W <= w}]``.

    Closed form ``G(w)`` for independent rewards, otherwise a Monte Carlo
    estimate from ``mc_samples`` coupled draws (``rng`` required).
    """
    if config.coupling is None:
        return float(config.reward.cdf(w))
    if rng is None:
        raise DomainError("a custom coupling needs a random stream for F_0")
    acc = 0.0
    block = 1_000_000
    done = 0
    while done < mc_samples:
        m = min(block, mc_samples - done)
        y = sample_tail(rng, config.interarrival, m)
        acc += float(np.sum(y * (config.rewards(rng, y) <= w)))
        done += m
    return config.rate * acc / mc_samples


@dataclass(frozen=True)
class RenewalEmpirical:
    """``rng -> E_T(w_grid)`` as an array; ``f0`` overrides the steady-state CDF values."""

    config: RenewalRewardConfig
    f0: Optional[tuple] = None

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        cfg = self.config
        y, w = _simulate(rng, cfg)
        occ = _occupation(y, w, float(cfg.T), cfg.w_grid)
        if self.f0 is not None:
            f0 = np.asarray(self.f0, dtype=float)
        elif cfg.coupling is None:
            f0 = np.asarray(cfg.reward.cdf(np.asarray(cfg.w_grid)), dtype=float)
        else:
            raise DomainError("a custom coupling needs F_0 values on the grid")
        return (occ - cfg.T * f0) / cfg.a_T
