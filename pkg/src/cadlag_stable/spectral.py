"""Samplers of unit-norm spectral paths, their means, and fixed-jump diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cadlag import (
    UNIT_INTERVAL,
    Interval,
    StepFunction,
    VectorStepFunction,
    sup_norm,
)
from .errors import DomainError

__all__ = [
    "SpectralSampler",
    "MeanFunction",
    "FixedJumpReport",
    "indicator_spectral",
    "renewal_spectral",
    "spectral_mean",
    "fixed_jump_check",
    "DEFAULT_MEAN_GRID",
]

KINDS = ("indicator", "renewal_pair", "constant_one", "custom")
DEFAULT_MEAN_GRID = 2049  # 2048 cells on [a, b]


def _uniform_open_left(rng: np.random.Generator, size=None):
    # U in (0, 1]; U = 0 would put the jump on the left endpoint
    return 1.0 - rng.random(size)


def indicator_spectral(rng: np.random.Generator) -> StepFunction:
    """``1_[U, 1]`` with ``U`` uniform, on ``[0, 1]``."""
    u = float(_uniform_open_left(rng))
    return StepFunction.indicator(UNIT_INTERVAL, u)


def renewal_spectral(rng: np.random.Generator) -> VectorStepFunction:
    """``(1_[U, 1], 1)`` on ``[0, 1]``."""
    return VectorStepFunction(
        [indicator_spectral(rng), StepFunction.constant(UNIT_INTERVAL, 1.0)]
    )


@dataclass(frozen=True)
class MeanFunction:
    """Mean path ``t -> E[W(t)]`` tabulated on a grid.

    Attributes
    ----------
    grid : ndarray
        Increasing grid covering the interval.
    values : ndarray
        Shape ``(dim, len(grid))``.
    interpolation : str
        ``"linear"`` for continuous means, ``"step"`` for step-function means.
    n_samples : int
        Monte Carlo sample count; 0 when the mean is analytic.
    """

    interval: Interval
    grid: np.ndarray
    values: np.ndarray
    interpolation: str = "linear"
    n_samples: int = 0

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interpolation == "linear":
            out = np.stack([np.interp(t, self.grid, v) for v in self.values])
        else:
            idx = np.searchsorted(self.grid, t, side="right") - 1
            out = self.values[:, np.clip(idx, 0, self.grid.size - 1)]
        return out

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def as_step(self) -> VectorStepFunction:
        """Right-continuous staircase taking the grid value on each grid cell."""
        # value m(g_j) on [g_j, g_{j+1}) and m(b) at the right end
        g = self.grid
        return VectorStepFunction([StepFunction(self.interval, g[1:], v) for v in self.values])


def _identity_mean(interval: Interval, m: int) -> np.ndarray:
    return np.linspace(interval.a, interval.b, m)


@dataclass(frozen=True)
class SpectralSampler:
    """Law of a random path on the unit sphere of ``D(I)^dim``.

    ``custom`` samplers supply ``generator(rng)`` and, optionally,
    ``mean(t)`` returning an array of shape ``(dim, len(t))``.
    """

    kind: str = "indicator"
    interval: Interval = UNIT_INTERVAL
    dim: int = 1
    fixed_jump_free: bool = True
    generator: Optional[Callable] = field(default=None, compare=False)
    mean: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown spectral kind {self.kind!r}")
        if self.kind in ("indicator", "renewal_pair") and self.interval != UNIT_INTERVAL:
            raise DomainError(f"{self.kind} sampler lives on [0, 1]")
        expected = {"indicator": 1, "renewal_pair": 2, "constant_one": 1}.get(self.kind)
        if expected is not None and self.dim != expected:
            object.__setattr__(self, "dim", expected)
        if self.kind == "custom" and self.generator is None:
            raise DomainError("custom sampler needs a generator")

    @classmethod
    def custom(cls, generator, interval=UNIT_INTERVAL, dim=1, fixed_jump_free=True, mean=None):
        return cls("custom", interval, dim, fixed_jump_free, generator, mean)

    @property
    def has_analytic_mean(self) -> bool:
        return self.kind != "custom" or self.mean is not None

    def draw(self, rng: np.random.Generator) -> VectorStepFunction:
        if self.kind == "indicator":
            w = VectorStepFunction([indicator_spectral(rng)])
        elif self.kind == "renewal_pair":
            w = renewal_spectral(rng)
        elif self.kind == "constant_one":
            w = VectorStepFunction([StepFunction.constant(self.interval, 1.0)])
        else:
            w = VectorStepFunction.wrap(self.generator(rng))
            if w.interval != self.interval or w.dim != self.dim:
                raise DomainError("custom generator returned a path of the wrong shape")
            if sup_norm(w) != 1.0:
                raise DomainError(f"custom generator returned a path of norm {sup_norm(w)}")
        return w

    def draw_jump_times(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Jump locations of ``size`` indicator-type draws (first component).

        Consumes the stream exactly as ``size`` calls of :meth:`draw`.
        """
        if self.kind not in ("indicator", "renewal_pair"):
            raise DomainError(f"{self.kind} paths are not indicator-type")
        return _uniform_open_left(rng, size)


def spectral_mean(
    sampler: SpectralSampler,
    grid_size: int = DEFAULT_MEAN_GRID,
    rng: Optional[np.random.Generator] = None,
    mc_samples: int = 100_000,
) -> MeanFunction:
    """Mean path of ``sampler``; Monte Carlo with ``mc_samples`` draws if no closed form."""
    iv = sampler.interval
    grid = np.linspace(iv.a, iv.b, int(grid_size))
    if sampler.kind == "indicator":
        return MeanFunction(iv, grid, _identity_mean(iv, grid.size)[None, :], "linear")
    if sampler.kind == "renewal_pair":
        vals = np.stack([_identity_mean(iv, grid.size), np.ones(grid.size)])
        return MeanFunction(iv, grid, vals, "linear")
    if sampler.kind == "constant_one":
        return MeanFunction(iv, np.array([iv.a, iv.b]), np.ones((1, 2)), "step")
    if sampler.mean is not None:
        vals = np.asarray(sampler.mean(grid), dtype=float).reshape(sampler.dim, grid.size)
        return MeanFunction(iv, grid, vals, "linear")
    if rng is None:
        raise DomainError("Monte Carlo mean needs a random stream")
    acc = np.zeros((sampler.dim, grid.size))
    for _ in range(int(mc_samples)):
        acc += sampler.draw(rng)(grid)
    return MeanFunction(iv, grid, acc / mc_samples, "linear", int(mc_samples))


@dataclass(frozen=True)
class FixedJumpReport:
    grid: np.ndarray
    fractions: np.ndarray
    common_pairs: int
    m: int

    @property
    def passed(self) -> bool:
        return self.common_pairs == 0 and not np.any(self.fractions > 0)

    @property
    def message(self) -> str:
        if self.passed:
            return f"consistent with no fixed jumps ({self.m} paths)"
        worst = int(np.argmax(self.fractions)) if self.fractions.size else 0
        return (
            f"fixed jumps detected: {self.common_pairs} common breakpoint pairs, "
            f"max grid fraction {self.fractions.max(initial=0.0):.4g}"
            + (f" at t={float(self.grid[worst])!r}" if self.fractions.size else "")
        )


def fixed_jump_check(
    sampler: SpectralSampler, m: int, grid, rng: np.random.Generator
) -> FixedJumpReport:
    """Look for breakpoints shared across ``m`` independent draws.

    Reports the fraction of paths with a breakpoint exactly at each grid time
    and the number of path pairs sharing some breakpoint time.  Passing is
    evidence only: a null-set property cannot be certified from finite samples.
    """
    if m < 2:
        raise DomainError("fixed_jump_check needs m >= 2")
    grid = np.asarray(grid, dtype=float).ravel()
    per_path = [np.unique(sampler.draw(rng).breakpoints) for _ in range(int(m))]
    hits = np.zeros(grid.size)
    for bp in per_path:
        hits += np.isin(grid, bp)
    _, counts = np.unique(np.concatenate(per_path), return_counts=True)
    common = int(np.sum(counts * (counts - 1) // 2))
    return FixedJumpReport(grid, hits / m, common, int(m))

