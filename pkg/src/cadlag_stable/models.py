"""Heavy-tailed path models: partial sums, Pareto-process sums, LePage series,
exceedance point processes and truncated sums.

Every sampler takes an explicit ``numpy.random.Generator``.  The runner
classes at the end of the module compute the same quantities as the
path-level operations without materialising step functions.  They consume
the random stream in the same order, so a runner and its path-level
counterpart agree draw for draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .cadlag import (
    UNIT_INTERVAL,
    PathEnsemble,
    StepFunction,
    VectorStepFunction,
    _combine_vectors,
    step_from_jumps,
    sup_norm,
)
from .errors import DomainError, TruncationError
from .heavy_tail import TailModel, compute_a_n, gamma_frac_moment, make_rng, sample_tail
from .spectral import DEFAULT_MEAN_GRID, MeanFunction, SpectralSampler, spectral_mean

__all__ = [
    "partial_sum_process",
    "partial_sum_row",
    "pareto_sum_process",
    "pareto_sum_row",
    "lepage_tail_bound",
    "lepage_minimal_terms",
    "lepage_sample",
    "ExceedancePoint",
    "ExceedanceProcess",
    "exceedance_process",
    "PartialSumCentering",
    "ParetoSumCentering",
    "MonteCarloCentering",
    "centering_for",
    "truncated_sum",
    "full_centered_sum",
    "PartialSumMarginals",
    "ParetoSumMarginals",
    "LepageMarginals",
    "ExceedanceRadii",
    "PartialSumTruncation",
    "ParetoSumTruncation",
]

DEFAULT_LEPAGE_TERMS = 10_000
DEFAULT_LEPAGE_TOL = 1.0


def _tail_params(tail: TailModel) -> dict:
    return {"kind": tail.kind, "alpha": tail.alpha, "x_m": tail.x_m}


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return int(n)


def _grid_times(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / n


# ---------------------------------------------------------------------------
# partial sums
# ---------------------------------------------------------------------------


def partial_sum_process(rng: np.random.Generator, n: int, tail: TailModel) -> StepFunction:
    """``S_n(t) = a_n^{-1} sum_{k <= [nt]} (z_k - E z)`` on ``[0, 1]``."""
    n = _check_n(n)
    z = sample_tail(rng, tail, n)
    vals = np.concatenate(([0.0], np.cumsum(z - tail.mean))) / compute_a_n(tail, n)
    return StepFunction(UNIT_INTERVAL, _grid_times(n), vals)


def partial_sum_row(rng: np.random.Generator, n: int, tail: TailModel, seed: int = 0) -> PathEnsemble:
    """Uncentred array row ``X_k = z_k 1_[k/n, 1]``, ``k = 1..n``."""
    n = _check_n(n)
    z = sample_tail(rng, tail, n)
    t = _grid_times(n)
    paths = [StepFunction(UNIT_INTERVAL, (t[k],), (0.0, z[k])) for k in range(n)]
    return PathEnsemble(tuple(paths), seed, "partial_sum", _tail_params(tail))


# ---------------------------------------------------------------------------
# Pareto-process sums
# ---------------------------------------------------------------------------


def _draw_spectral(rng, spectral: SpectralSampler, n: int):
    if spectral.kind in ("indicator", "renewal_pair"):
        return spectral.draw_jump_times(rng, n)
    return [spectral.draw(rng) for _ in range(n)]


def pareto_sum_row(
    rng: np.random.Generator, n: int, spectral: SpectralSampler, tail: TailModel, seed: int = 0
) -> PathEnsemble:
    """Uncentred array row ``X_i = R_i W_i``."""
    n = _check_n(n)
    r = sample_tail(rng, tail, n)
    w = _draw_spectral(rng, spectral, n)
    if isinstance(w, np.ndarray):
        w = [
            VectorStepFunction(
                [StepFunction.indicator(UNIT_INTERVAL, u)]
                + ([StepFunction.constant(UNIT_INTERVAL, 1.0)] if spectral.dim == 2 else [])
            )
            for u in w
        ]
    paths = [_combine_vectors([ri], [wi]) for ri, wi in zip(r, w)]
    params = dict(_tail_params(tail), spectral=spectral.kind)
    return PathEnsemble(tuple(paths), seed, "pareto_sum", params)


def pareto_sum_process(
    rng: np.random.Generator,
    n: int,
    spectral: SpectralSampler,
    tail: TailModel,
    mean: Optional[MeanFunction] = None,
) -> VectorStepFunction:
    """``a_n^{-1} sum_i (R_i W_i - E[R] E[W])``.

    A continuous ``E[W]`` enters through its staircase on the mean grid.
    """
    n = _check_n(n)
    a_n = compute_a_n(tail, n)
    mean = spectral_mean(spectral) if mean is None else mean
    r = sample_tail(rng, tail, n)
    w = _draw_spectral(rng, spectral, n)
    centre = n * tail.mean / a_n
    iv = spectral.interval
    if spectral.kind == "constant_one":
        return VectorStepFunction([StepFunction.constant(iv, np.sum(r - tail.mean) / a_n)])
    m_step = mean.as_step()
    if isinstance(w, np.ndarray):
        comps = [step_from_jumps(iv, 0.0, w, r / a_n)]
        if spectral.dim == 2:
            comps.append(StepFunction.constant(iv, np.sum(r) / a_n))
        jump_part = VectorStepFunction(comps)
    else:
        jump_part = _combine_vectors(r / a_n, w)
    return _combine_vectors([1.0, -centre], [jump_part, m_step])


# ---------------------------------------------------------------------------
# LePage series
# ---------------------------------------------------------------------------


def lepage_tail_bound(alpha: float, K: int, mean_sup: float = 1.0) -> float:
    """Root-mean-square bound on the neglected tail of the centred series at any fixed t.

    With ``s = 2/alpha`` and ``Gamma_K`` the K-th arrival,

        E|tail(t)|^2 <= E[Gamma_K^{1-s}] / (s - 1)
                        + mean_sup^2 Var(Gamma_K^{1-1/alpha}) / (1 - 1/alpha)^2,

    both terms in closed form through gamma-function ratios.
    """
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    K = int(K)
    if K < 1:
        raise DomainError("K must be >= 1")
    s = 2.0 / alpha
    lgk = special.gammaln(K)
    first = math.exp(special.gammaln(K + 1.0 - s) - lgk) / (s - 1.0)
    m2 = math.exp(special.gammaln(K + 2.0 - s) - lgk)
    m1 = math.exp(special.gammaln(K + 1.0 - 1.0 / alpha) - lgk)
    var = max(m2 - m1 * m1, 0.0) / (1.0 - 1.0 / alpha) ** 2
    return math.sqrt(first + mean_sup**2 * var)


def lepage_minimal_terms(alpha: float, tail_tol: float, mean_sup: float = 1.0) -> int:
    """Smallest K with ``lepage_tail_bound(alpha, K, mean_sup) <= tail_tol``."""
    if not tail_tol > 0:
        raise DomainError("tail_tol must be positive")
    hi = 1
    while lepage_tail_bound(alpha, hi, mean_sup) > tail_tol:
        hi *= 2
        if hi > 1 << 62:
            raise TruncationError(f"no K reaches tail tolerance {tail_tol}")
    lo = hi // 2
    if lo < 1:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if lepage_tail_bound(alpha, mid, mean_sup) <= tail_tol:
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=64)
def _lepage_centring(alpha: float, K: int) -> float:
    return float(np.sum(gamma_frac_moment(np.arange(1, K + 1), alpha)))


def lepage_sample(
    rng: np.random.Generator,
    alpha: float,
    spectral: SpectralSampler,
    K: int = DEFAULT_LEPAGE_TERMS,
    tail_tol: float = DEFAULT_LEPAGE_TOL,
    mean: Optional[MeanFunction] = None,
) -> VectorStepFunction:
    """K-term truncation of ``sum_i (Gamma_i^{-1/alpha} W_i - E[Gamma_i^{-1/alpha}] E[W])``.

    Raises
    ------
    TruncationError
        If :func:`lepage_tail_bound` at ``K`` exceeds ``tail_tol``; the
        exception carries the minimal adequate K.
    """
    mean = spectral_mean(spectral) if mean is None else mean
    bound = lepage_tail_bound(alpha, K, mean.sup_abs())
    if bound > tail_tol:
        k_min = lepage_minimal_terms(alpha, tail_tol, mean.sup_abs())
        raise TruncationError(
            f"LePage tail bound {bound:.4g} exceeds {tail_tol} at K={K}; need K >= {k_min}",
            minimal_terms=k_min,
        )
    gam = np.cumsum(rng.standard_exponential(int(K)))
    coef = gam ** (-1.0 / alpha)
    centre = _lepage_centring(alpha, int(K))
    w = _draw_spectral(rng, spectral, int(K))
    iv = spectral.interval
    if spectral.kind == "constant_one":
        return VectorStepFunction([StepFunction.constant(iv, float(np.sum(coef)) - centre)])
    if isinstance(w, np.ndarray):
        comps = [step_from_jumps(iv, 0.0, w, coef)]
        if spectral.dim == 2:
            comps.append(StepFunction.constant(iv, float(np.sum(coef))))
        jump_part = VectorStepFunction(comps)
    else:
        jump_part = _combine_vectors(coef, w)
    return _combine_vectors([1.0, -centre], [jump_part, mean.as_step()])


# ---------------------------------------------------------------------------
# exceedances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExceedancePoint:
    radius: float
    spectral: VectorStepFunction

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("exceedance radius must be positive")


@dataclass(frozen=True)
class ExceedanceProcess:
    points: tuple
    n: int

    @property
    def radii(self) -> np.ndarray:
        return np.array([p.radius for p in self.points])

    def count_above(self, r: float) -> int:
        return int(np.count_nonzero(self.radii > r))

    def __len__(self):
        return len(self.points)


def _normalise(p: VectorStepFunction, norm: float) -> VectorStepFunction:
    # division keeps max |v| / norm == 1.0 exactly
    return VectorStepFunction(
        [StepFunction(c.interval, c.breakpoints, c.values / norm) for c in p.components]
    )


def exceedance_process(paths: PathEnsemble, a_n: float) -> ExceedanceProcess:
    """Points ``(|X_i| / a_n, X_i / |X_i|)`` in input order; zero paths are dropped."""
    if not a_n > 0:
        raise DomainError("a_n must be positive")
    pts = []
    for p in paths.paths:
        norm = sup_norm(p)
        if norm > 0:
            pts.append(ExceedancePoint(norm / a_n, _normalise(p, norm)))
    return ExceedanceProcess(tuple(pts), len(paths))


# ---------------------------------------------------------------------------
# truncated sums
# ---------------------------------------------------------------------------


def _tail_from_params(params: dict) -> TailModel:
    return TailModel(params["kind"], params["alpha"], params["x_m"])


@dataclass(frozen=True)
class PartialSumCentering:
    """Row totals ``sum_k E[z 1{z <= c}] 1_[k/n, 1]`` in closed form."""

    tail: TailModel
    n: int

    def total(self, c: Optional[float]) -> VectorStepFunction:
        m = self.tail.mean if c is None else self.tail.truncated_moment(c, 1)
        vals = m * np.arange(self.n + 1, dtype=float)
        return VectorStepFunction([StepFunction(UNIT_INTERVAL, _grid_times(self.n), vals)])


@dataclass(frozen=True)
class ParetoSumCentering:
    """Row totals ``n E[R 1{R <= c}] E[W]`` in closed form."""

    tail: TailModel
    n: int
    spectral: SpectralSampler
    mean: Optional[MeanFunction] = None

    def total(self, c: Optional[float]) -> VectorStepFunction:
        m = self.tail.mean if c is None else self.tail.truncated_moment(c, 1)
        mean = spectral_mean(self.spectral) if self.mean is None else self.mean
        return _combine_vectors([self.n * m], [mean.as_step()])


@dataclass
class MonteCarloCentering:
    """Row totals estimated from ``n_rows`` simulated rows, cached per threshold.

    ``row_sampler(rng)`` must return one :class:`PathEnsemble` row.
    """

    row_sampler: object
    n_rows: int = 1000
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def total(self, c: Optional[float]) -> VectorStepFunction:
        key = math.inf if c is None else float(c)
        if key not in self._cache:
            acc = []
            for r in range(self.n_rows):
                row = self.row_sampler(make_rng(self.seed, r))
                keep = [p for p in row.paths if sup_norm(p) <= key]
                if keep:
                    acc.append(_combine_vectors(np.ones(len(keep)), keep))
            if acc:
                self._cache[key] = _combine_vectors(np.full(len(acc), 1.0 / self.n_rows), acc)
            else:
                self._cache[key] = None
        out = self._cache[key]
        if out is None:
            raise DomainError("Monte Carlo centring saw no paths below the threshold")
        return out


def centering_for(paths: PathEnsemble, spectral: Optional[SpectralSampler] = None):
    """Closed-form centring provider for ensembles built by the row builders."""
    params = paths.params
    n = len(paths)
    if paths.model_tag == "partial_sum":
        return PartialSumCentering(_tail_from_params(params), n)
    if paths.model_tag == "pareto_sum":
        if spectral is None:
            kind = params.get("spectral")
            if kind not in ("indicator", "renewal_pair", "constant_one"):
                raise DomainError("custom spectral law: pass a centring provider")
            spectral = SpectralSampler(kind)
        return ParetoSumCentering(_tail_from_params(params), n, spectral)
    raise DomainError(f"no closed-form centring for model {paths.model_tag!r}")


def _zero(paths: PathEnsemble) -> VectorStepFunction:
    return VectorStepFunction([StepFunction.constant(paths.interval)] * paths.dim)


def _sum_paths(paths) -> Optional[VectorStepFunction]:
    return _combine_vectors(np.ones(len(paths)), paths) if paths else None


def truncated_sum(
    paths: PathEnsemble, a_n: float, epsilon: float, side: str = "below", centering=None
) -> VectorStepFunction:
    """Centred sum of the row terms with norm at most (``below``) or above ``a_n * epsilon``.

    ``below``: ``a_n^{-1} sum_i (X_i 1{|X_i| <= a_n eps} - E[X 1{|X| <= a_n eps}])``;
    ``above`` is centred by the complementary mean, so the two sides add up
    to :func:`full_centered_sum`.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if side not in ("below", "above"):
        raise DomainError(f"side must be 'below' or 'above', got {side!r}")
    centering = centering_for(paths) if centering is None else centering
    c = a_n * epsilon
    below = [p for p in paths.paths if sup_norm(p) <= c]
    above = [p for p in paths.paths if sup_norm(p) > c]
    sel = below if side == "below" else above
    s = _sum_paths(sel) or _zero(paths)
    mean_below = centering.total(c)
    if side == "below":
        centre = mean_below
    else:
        centre = _combine_vectors([1.0, -1.0], [centering.total(None), mean_below])
    return _combine_vectors([1.0 / a_n, -1.0 / a_n], [s, centre])


def full_centered_sum(paths: PathEnsemble, a_n: float, centering=None) -> VectorStepFunction:
    """``a_n^{-1} sum_i (X_i - E[X_i])``."""
    centering = centering_for(paths) if centering is None else centering
    s = _sum_paths(list(paths.paths))
    return _combine_vectors([1.0 / a_n, -1.0 / a_n], [s, centering.total(None)])


# ---------------------------------------------------------------------------
# array-level runners
# ---------------------------------------------------------------------------


def _times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if np.any((t < 0) | (t > 1)):
        raise DomainError("evaluation times must lie in [0, 1]")
    return t


@dataclass(frozen=True)
class PartialSumMarginals:
    """``rng -> (S_n(t_1), ..., S_n(t_k))`` matching :func:`partial_sum_process`."""

    tail: TailModel
    n: int
    times: Sequence[float] = (1.0,)

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        z = sample_tail(rng, self.tail, self.n)
        vals = np.concatenate(([0.0], np.cumsum(z - self.tail.mean))) / compute_a_n(self.tail, self.n)
        idx = np.searchsorted(_grid_times(self.n), _times(self.times), side="right")
        return vals[idx]


def _staircase(mean: MeanFunction, t: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(mean.grid[1:], t, side="right")
    return mean.values[0][idx]


@dataclass(frozen=True)
class ParetoSumMarginals:
    """Marginals of :func:`pareto_sum_process` for the indicator spectral law."""

    tail: TailModel
    n: int
    times: Sequence[float] = (1.0,)
    grid_size: int = DEFAULT_MEAN_GRID

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        a_n = compute_a_n(self.tail, self.n)
        r = sample_tail(rng, self.tail, self.n)
        u = 1.0 - rng.random(self.n)
        t = _times(self.times)
        jump = np.array([np.sum(r[u <= tt]) for tt in t]) / a_n
        mean = spectral_mean(SpectralSampler("indicator"), self.grid_size)
        return jump - self.n * self.tail.mean / a_n * _staircase(mean, t)


@dataclass(frozen=True)
class LepageMarginals:
    """Marginals of :func:`lepage_sample` for the indicator spectral law."""

    alpha: float
    K: int = DEFAULT_LEPAGE_TERMS
    times: Sequence[float] = (1.0,)
    grid_size: int = DEFAULT_MEAN_GRID

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        coef = np.cumsum(rng.standard_exponential(self.K)) ** (-1.0 / self.alpha)
        u = 1.0 - rng.random(self.K)
        t = _times(self.times)
        jump = np.array([np.sum(coef[u <= tt]) for tt in t])
        mean = spectral_mean(SpectralSampler("indicator"), self.grid_size)
        return jump - _lepage_centring(self.alpha, self.K) * _staircase(mean, t)


@dataclass(frozen=True)
class ExceedanceRadii:
    """Radii ``|X_i| / a_n`` of one row of the partial-sum or Pareto-sum array.

    Both rows draw the norms ``z_i`` (resp. ``R_i``) first, so this matches
    ``exceedance_process(partial_sum_row(...))`` and the Pareto-sum row alike.
    """

    tail: TailModel
    n: int

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        return sample_tail(rng, self.tail, self.n) / compute_a_n(self.tail, self.n)


@dataclass(frozen=True)
class PartialSumTruncation:
    """``rng, eps -> (S^{<eps}(1), sup_t |S^{<eps}(t)|)`` for the partial-sum row."""

    tail: TailModel
    n: int

    def __call__(self, rng: np.random.Generator, epsilons) -> tuple:
        a_n = compute_a_n(self.tail, self.n)
        z = sample_tail(rng, self.tail, self.n)
        eps = np.asarray(epsilons, dtype=float)
        at_one = np.empty(eps.size)
        sup = np.empty(eps.size)
        # only O(eps^-alpha) terms exceed the cutoff; patch them by index
        big = np.flatnonzero(z > a_n * eps.min())
        for j, e in enumerate(eps):
            c = a_n * e
            m = self.tail.truncated_moment(c, 1)
            path = z - m
            path[big[z[big] > c]] = -m
            np.cumsum(path, out=path)
            at_one[j] = path[-1] / a_n
            sup[j] = max(0.0, path.max(), -path.min()) / a_n
        return at_one, sup


def _cell_index(grid: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``j`` with ``grid[j] <= u < grid[j + 1]`` on a uniform grid (last index for u = b)."""
    m = grid.size - 1
    cell = np.clip(np.floor((u - grid[0]) / (grid[-1] - grid[0]) * m).astype(np.intp), 0, m)
    cell -= grid[cell] > u
    up = cell < m
    cell[up] += grid[cell[up] + 1] <= u[up]
    return cell


@dataclass(frozen=True)
class ParetoSumTruncation:
    """Same as :class:`PartialSumTruncation` for the indicator Pareto-sum row.

    The centring staircase is constant on each mean-grid cell and the jump
    part only increases there, so the supremum is attained at cell ends.
    """

    tail: TailModel
    n: int
    grid_size: int = DEFAULT_MEAN_GRID

    def __call__(self, rng: np.random.Generator, epsilons) -> tuple:
        a_n = compute_a_n(self.tail, self.n)
        r = sample_tail(rng, self.tail, self.n)
        u = 1.0 - rng.random(self.n)
        grid = np.linspace(0.0, 1.0, self.grid_size)
        cell = _cell_index(grid, u)
        n_cells = self.grid_size  # last "cell" is the single point t = 1
        eps = np.asarray(epsilons, dtype=float)
        at_one = np.empty(eps.size)
        sup = np.empty(eps.size)
        for j, e in enumerate(eps):
            c = a_n * e
            w = np.where(r <= c, r, 0.0)
            per_cell = np.bincount(cell, weights=w, minlength=n_cells)
            through = np.cumsum(per_cell)
            before = through - per_cell
            centre = self.n * self.tail.truncated_moment(c, 1) * grid
            lo = (before - centre) / a_n
            hi = (through - centre) / a_n
            at_one[j] = hi[-1]
            sup[j] = max(np.max(np.abs(lo)), np.max(np.abs(hi)))
        return at_one, sup
