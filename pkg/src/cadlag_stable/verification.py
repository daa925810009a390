"""Statistical checks of simulated ensembles against stable and Poisson limits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .cadlag import (
    UNIT_INTERVAL,
    PathEnsemble,
    StepFunction,
    evaluate,
    j1_distance,
    mean_path,
    sup_norm,
    uniform_distance,
)
from .errors import DegenerateFitError, DomainError
from .heavy_tail import StableParams, compute_a_n, stable_cf
from .parallel import map_replicates

__all__ = [
    "empirical_cf",
    "CfComparisonReport",
    "cf_shape_test",
    "KsReport",
    "ks_test",
    "ks_two_sample",
    "kolmogorov_threshold",
    "functional_beta",
    "ExceedanceRow",
    "PoissonExceedanceReport",
    "poisson_exceedance_test",
    "NegligibilityCurve",
    "negligibility_curve",
    "FixtureResult",
    "counterexample_suite",
]


# ---------------------------------------------------------------------------
# characteristic functions
# ---------------------------------------------------------------------------


def empirical_cf(samples, t):
    """``(1/m) sum_j exp(i t x_j)``; vectorised over ``t``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empirical_cf needs at least one sample")
    t_arr = np.asarray(t, dtype=float)
    out = np.array([np.mean(np.exp(1j * tt * x)) for tt in t_arr.ravel()]).reshape(t_arr.shape)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CfComparisonReport:
    t_grid: np.ndarray
    empirical: np.ndarray
    model: np.ndarray
    fitted_scale: float
    max_abs_gap: float
    alpha: float
    beta: float
    threshold: float = 0.02
    fit_points: int = 0

    @property
    def passed(self) -> bool:
        return self.max_abs_gap < self.threshold


def cf_shape_test(
    samples,
    alpha: float,
    beta: float,
    t_grid: Sequence[float] = tuple(np.linspace(0.2, 2.0, 10)),
    location: float = 0.0,
    threshold: float = 0.02,
    noise_floor: Optional[float] = None,
) -> CfComparisonReport:
    """Compare the empirical CF with a stable CF of given ``alpha``, ``beta`` and fitted scale.

    The scale is fitted by least squares of ``-log|phi_hat(t)|`` on
    ``|t|^alpha`` through the origin, using only grid points where
    ``|phi_hat|`` clears the sampling-noise floor (default
    ``max(0.05, 5/sqrt(m))``).  The gap is measured on the whole grid.
    """
    x = np.asarray(samples, dtype=float).ravel()
    t = np.asarray(t_grid, dtype=float).ravel()
    if not np.any(t != 0):
        raise DomainError("t_grid must contain nonzero points")
    floor = max(0.05, 5.0 / math.sqrt(x.size)) if noise_floor is None else noise_floor
    emp = empirical_cf(x, t)
    mod = np.abs(emp)
    use = (mod > floor) & (t != 0)
    if not np.any(use):
        raise DegenerateFitError("empirical CF below the noise floor everywhere; use smaller t")
    y = -np.log(mod[use])
    xs = np.abs(t[use]) ** alpha
    if np.all(y < 1e-8):
        raise DegenerateFitError("|empirical CF| ~ 1 on the grid; use larger t")
    s_pow = max(float(xs @ y / (xs @ xs)), 1e-300)
    scale = s_pow ** (1.0 / alpha)
    model = stable_cf(StableParams(alpha, scale, beta, location), t)
    gap = float(np.max(np.abs(emp - model)))
    return CfComparisonReport(t, emp, model, scale, gap, alpha, beta, threshold, int(use.sum()))


def functional_beta(values, probs, alpha: float, signed: bool = True) -> float:
    """Skewness of ``int phi dM`` for a totally right-skewed random measure.

    For ``phi(W*)`` taking ``values`` with ``probs``, the signed version is
    ``(E[phi_+^alpha] - E[phi_-^alpha]) / E[|phi|^alpha]``; ``signed=False``
    returns ``E[phi_+^alpha] / E[|phi|^alpha]``.
    """
    v = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    pos = float(np.sum(p * np.maximum(v, 0.0) ** alpha))
    neg = float(np.sum(p * np.maximum(-v, 0.0) ** alpha))
    if pos + neg == 0:
        raise DomainError("phi vanishes almost surely")
    return (pos - neg) / (pos + neg) if signed else pos / (pos + neg)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------


def kolmogorov_threshold(m: int, level_const: float = 1.63) -> float:
    return level_const / math.sqrt(m)


@dataclass(frozen=True)
class KsReport:
    statistic: float
    n_samples: int
    reference: str
    pass_threshold: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.pass_threshold


def ks_test(samples, cdf: Callable, reference: str = "", threshold: Optional[float] = None) -> KsReport:
    """One-sample Kolmogorov-Smirnov distance to ``cdf`` (vectorised callable)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    m = x.size
    if m < 1:
        raise DomainError("ks_test needs samples")
    f = np.asarray(cdf(x), dtype=float)
    # ties: the empirical CDF jumps once per distinct value
    last = np.searchsorted(x, x, side="right")
    first = np.searchsorted(x, x, side="left")
    d = max(np.max(last / m - f), np.max(f - first / m))
    thr = kolmogorov_threshold(m) if threshold is None else threshold
    return KsReport(float(min(max(d, 0.0), 1.0)), m, reference, thr)


def ks_two_sample(x, y, reference: str = "", threshold: Optional[float] = None) -> KsReport:
    """Two-sample Kolmogorov-Smirnov distance."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if x.size == 0 or y.size == 0:
        raise DomainError("ks_two_sample needs two nonempty samples")
    pts = np.concatenate((x, y))
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    d = float(np.max(np.abs(fx - fy)))
    n_eff = x.size * y.size / (x.size + y.size)
    thr = kolmogorov_threshold(1) / math.sqrt(n_eff) if threshold is None else threshold
    return KsReport(d, int(x.size + y.size), reference, thr)


# ---------------------------------------------------------------------------
# exceedances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExceedanceRow:
    r: float
    expected: float
    mean: float
    variance: float
    std_error: float
    passed_mean: bool
    passed_dispersion: bool

    @property
    def dispersion(self) -> float:
        return self.variance / self.mean if self.mean > 0 else math.nan

    @property
    def passed(self) -> bool:
        return self.passed_mean and self.passed_dispersion


@dataclass(frozen=True)
class PoissonExceedanceReport:
    rows: tuple
    alpha: float
    n: int
    replicates: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _radii(x) -> np.ndarray:
    return np.asarray(getattr(x, "radii", x), dtype=float)


class _CountAbove:
    def __init__(self, runner, r_grid):
        self.runner = runner
        self.r_grid = np.asarray(r_grid, dtype=float)

    def __call__(self, rng):
        rad = np.sort(_radii(self.runner(rng)))
        return rad.size - np.searchsorted(rad, self.r_grid, side="right")


def poisson_exceedance_test(
    runner: Callable,
    n: int,
    r_grid: Sequence[float],
    alpha: float,
    replicates: int,
    seed: int = 0,
    workers: int = 1,
    se_mult: float = 3.0,
    dispersion: tuple = (0.9, 1.1),
) -> PoissonExceedanceReport:
    """Compare counts of radii above ``r`` with the Poisson mean ``r^-alpha``.

    ``runner(rng)`` returns the radii of one array row (or an
    :class:`ExceedanceProcess`).  A row passes if the mean count lies within
    ``se_mult`` standard errors of ``r^-alpha`` and variance/mean lies in
    ``dispersion``.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 0):
        raise DomainError("r_grid must be positive")
    counts = map_replicates(_CountAbove(runner, r_grid), seed, replicates, workers)
    counts = counts.reshape(int(replicates), r_grid.size).astype(float)
    rows = []
    for j, r in enumerate(r_grid):
        c = counts[:, j]
        mean = float(c.mean())
        var = float(c.var(ddof=1)) if c.size > 1 else 0.0
        se = math.sqrt(var / c.size)
        expected = float(r ** (-alpha))
        ok_mean = abs(mean - expected) <= se_mult * se if se > 0 else mean == expected
        disp = var / mean if mean > 0 else math.nan
        ok_disp = bool(dispersion[0] <= disp <= dispersion[1])
        rows.append(ExceedanceRow(float(r), expected, mean, var, se, bool(ok_mean), ok_disp))
    return PoissonExceedanceReport(tuple(rows), float(alpha), int(n), int(replicates))


# ---------------------------------------------------------------------------
# negligibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NegligibilityCurve:
    epsilons: np.ndarray
    exceed_prob: np.ndarray
    variances: np.ndarray
    eta: float
    n: int
    fitted_slope: float
    isotonic_residual: float
    infeasible: np.ndarray
    replicates: int = 0

    def slope_ok(self, target: float, tol: float = 0.1) -> bool:
        return bool(abs(self.fitted_slope - target) <= tol)

    def monotone_ok(self, tol: float = 0.02) -> bool:
        return bool(self.isotonic_residual < tol)


def negligibility_curve(
    runner: Callable,
    epsilons: Sequence[float],
    eta: float,
    n: int,
    replicates: int,
    seed: int = 0,
    workers: int = 1,
) -> NegligibilityCurve:
    """Tail probabilities and variances of the small-jump sum across truncation levels.

    ``runner(rng, epsilons)`` returns ``(S^{<eps}(1), sup_t |S^{<eps}(t)|)``
    for one replicate (see :class:`~cadlag_stable.models.PartialSumTruncation`).
    Levels with ``a_n * eps`` below the support of the norm law remove every
    term and are flagged as infeasible; they are excluded from the slope fit.
    """
    eps = np.sort(np.asarray(epsilons, dtype=float))
    if eps.size < 2 or np.any(eps <= 0):
        raise DomainError("need at least two positive epsilons")
    if getattr(runner, "n", n) != n:
        raise DomainError("runner row size differs from n")
    tail = getattr(runner, "tail", None)
    if tail is not None:
        infeasible = compute_a_n(tail, n) * eps < tail.support_min
    else:
        infeasible = np.zeros(eps.size, dtype=bool)
    out = map_replicates(partial(runner, epsilons=eps), seed, replicates, workers)
    at_one, sups = out[:, 0, :], out[:, 1, :]
    prob = np.mean(sups > eta, axis=0)
    var = np.var(at_one, axis=0, ddof=1)
    ok = ~infeasible & (var > 0)
    if ok.sum() >= 2:
        slope = float(np.polyfit(np.log(eps[ok]), np.log(var[ok]), 1)[0])
    else:
        slope = math.nan
    iso = optimize.isotonic_regression(prob, increasing=True).x
    resid = float(np.max(np.abs(prob - iso)))
    return NegligibilityCurve(eps, prob, var, float(eta), int(n), slope, resid, infeasible, int(replicates))


# ---------------------------------------------------------------------------
# deterministic counterexamples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixtureResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""


def _ind(start: float, height: float = 1.0) -> StepFunction:
    return StepFunction.indicator(UNIT_INTERVAL, start, height)


def _levy_fixture(n: int, u: float, tol: float) -> FixtureResult:
    x_n = _ind(u * (n - 1) / n)
    x = _ind(u)
    d_j1 = j1_distance(x_n, x, tol)
    d_unif = uniform_distance(x_n, x)
    bound = u / n + tol
    ok = d_j1 <= bound and d_unif == 1.0
    return FixtureResult(
        "levy_j1_not_uniform", ok, d_j1, bound, f"n={n}, U={u}, uniform distance={d_unif!r}"
    )


def _j1_mean_fixture(n_values, tol: float) -> FixtureResult:
    target = _ind(0.5)
    worst = math.inf
    for n in n_values:
        lo = 0.5 - 1.0 / n
        ens = PathEnsemble((_ind(lo), _ind(0.5)), model_tag="j1_counterexample")
        m = mean_path(ens)[0]
        plateau = evaluate(m, lo) if lo < 0.5 else math.nan
        if plateau != 0.5:
            return FixtureResult("j1_mean_gap", False, plateau, 0.5, f"n={n}: no 1/2 plateau")
        worst = min(worst, j1_distance(m, target, tol))
    ok = worst >= 0.25 - tol
    return FixtureResult(
        "j1_mean_gap", ok, worst, 0.25, f"min J1 distance over n in [{min(n_values)}, {max(n_values)}]"
    )


def _m1_mean_fixture(n_values, expected_sup: float) -> FixtureResult:
    sups = []
    probes = (0.25, 0.75, 1.0)
    worst_probe = 0.0
    for n in n_values:
        u_n, v_n = 0.5 - 1.0 / n, 0.5 - 1.0 / (2 * n)
        ens = PathEnsemble((_ind(u_n), _ind(v_n, -1.0)), model_tag="m1_counterexample")
        m = mean_path(ens)
        sups.append(sup_norm(m))
        if n >= 8:
            worst_probe = max(worst_probe, max(abs(evaluate(m[0], t)) for t in probes))
    sups = np.array(sups)
    ok = bool(np.all(sups == expected_sup)) and worst_probe == 0.0
    return FixtureResult(
        "m1_mean_sup",
        ok,
        float(sups.min()),
        expected_sup,
        f"sup norm range [{float(sups.min())!r}, {float(sups.max())!r}], pointwise mean at fixed t -> {worst_probe!r}",
    )


def counterexample_suite(
    tol: float = 1e-9,
    levy_n: int = 100,
    levy_u: float = 0.7,
    n_values: Sequence[int] = tuple(range(2, 10_001)),
    m1_expected_sup: float = 0.5,
) -> list:
    """Three deterministic fixtures about means and J1 convergence.

    1. ``1_[U(n-1)/n, 1] -> 1_[U, 1]``: J1 distance ``U/n``, uniform distance 1.
    2. ``1_[U_n, 1]`` with ``U_n`` equally likely at ``1/2 - 1/n`` and ``1/2``:
       the mean has a plateau at 1/2 and stays at J1 distance >= 1/4 from
       ``1_[1/2, 1]``.
    3. ``+1_[u_n, 1]`` or ``-1_[v_n, 1]`` with probability 1/2 each: the mean
       ``(1/2) 1_[u_n, v_n)`` keeps sup norm ``m1_expected_sup`` for every n
       while vanishing at every fixed t away from 1/2.
    """
    return [
        _levy_fixture(levy_n, levy_u, tol),
        _j1_mean_fixture(n_values, tol),
        _m1_mean_fixture(n_values, m1_expected_sup),
    ]
