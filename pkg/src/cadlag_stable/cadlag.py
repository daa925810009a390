"""Exact algebra, norms and J1 geometry for piecewise-constant cadlag functions.

A :class:`StepFunction` on ``[a, b]`` is stored as breakpoints
``t_1 < ... < t_k`` in ``(a, b]`` and values ``v_0, ..., v_k`` with
``f(t) = v_j`` on ``[t_j, t_{j+1})``.  Zero jumps are never stored, so the
breakpoint set is exactly the discontinuity set of the function.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError

__all__ = [
    "Interval",
    "UNIT_INTERVAL",
    "StepFunction",
    "VectorStepFunction",
    "PathEnsemble",
    "evaluate",
    "linear_combine",
    "sup_norm",
    "oscillation",
    "w_doubleprime",
    "uniform_distance",
    "j1_distance",
    "bounded_j1_distance",
    "mean_path",
    "occupation_time",
    "write_csv",
    "read_csv",
]


@dataclass(frozen=True)
class Interval:
    """Compact interval ``[a, b]`` with ``a < b``."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise DomainError(f"interval endpoints must be finite, got [{a}, {b}]")
        if not a < b:
            raise DomainError(f"interval needs a < b, got [{a}, {b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, t) -> bool:
        t = np.asarray(t, dtype=float)
        return bool(np.all((t >= self.a) & (t <= self.b)))

    def contains_interval(self, other: "Interval") -> bool:
        return self.a <= other.a and other.b <= self.b


UNIT_INTERVAL = Interval(0.0, 1.0)


def _readonly(x: np.ndarray) -> np.ndarray:
    x.setflags(write=False)
    return x


class StepFunction:
    """Right-continuous step function with finitely many jumps.

    Parameters
    ----------
    interval : Interval
        Domain ``[a, b]``.
    breakpoints : array_like
        Strictly increasing jump times in ``(a, b]``.
    values : array_like
        ``len(breakpoints) + 1`` finite values; ``values[0]`` holds on
        ``[a, t_1)``.

    Stored values are canonicalised: breakpoints across which the value does
    not change are removed.
    """

    __slots__ = ("interval", "breakpoints", "values")

    def __init__(self, interval: Interval, breakpoints=(), values=(0.0,)):
        bp = np.array(breakpoints, dtype=float).ravel()
        v = np.array(values, dtype=float).ravel()
        if v.size != bp.size + 1:
            raise DomainError(
                f"need len(values) == len(breakpoints) + 1, got {v.size} and {bp.size}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("step function values must be finite")
        if bp.size:
            if not np.all(np.isfinite(bp)):
                raise DomainError("breakpoints must be finite")
            if bp.size > 1 and not np.all(np.diff(bp) > 0):
                raise DomainError("breakpoints must be strictly increasing")
            if bp[0] <= interval.a or bp[-1] > interval.b:
                raise DomainError(
                    f"breakpoints must lie in ({interval.a}, {interval.b}]"
                )
            keep = v[1:] != v[:-1]
            if not keep.all():
                bp = bp[keep]
                v = np.concatenate((v[:1], v[1:][keep]))
        self.interval = interval
        self.breakpoints = _readonly(bp)
        self.values = _readonly(v)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, interval: Interval, c: float = 0.0) -> "StepFunction":
        return cls(interval, (), (c,))

    @classmethod
    def indicator(
        cls, interval: Interval, start: float, height: float = 1.0
    ) -> "StepFunction":
        """``height * 1_[start, b]``."""
        if not interval.a <= start <= interval.b:
            raise DomainError(f"indicator start {start} outside {interval}")
        if start == interval.a:
            return cls.constant(interval, height)
        return cls(interval, (start,), (0.0, height))

    # -- evaluation -------------------------------------------------------
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if not self.interval.contains(t):
            raise DomainError(f"evaluation point outside {self.interval}")
        out = self.values[np.searchsorted(self.breakpoints, t, side="right")]
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.maximum(np.searchsorted(self.breakpoints, t, side="left"), 0)
        out = self.values[idx]
        return float(out) if out.ndim == 0 else out

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def n_jumps(self) -> int:
        return int(self.breakpoints.size)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, StepFunction):
            return linear_combine((1.0, 1.0), (self, other))
        return StepFunction(self.interval, self.breakpoints, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, StepFunction):
            return linear_combine((1.0, -1.0), (self, other))
        return StepFunction(self.interval, self.breakpoints, self.values - float(other))

    def __neg__(self):
        return StepFunction(self.interval, self.breakpoints, -self.values)

    def __mul__(self, c):
        return StepFunction(self.interval, self.breakpoints, self.values * float(c))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            self.interval == other.interval
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"StepFunction([{self.interval.a}, {self.interval.b}], "
            f"breakpoints={self.breakpoints.tolist()}, values={self.values.tolist()})"
        )


class VectorStepFunction:
    """An ``l``-tuple of step functions sharing one interval."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence[StepFunction]):
        comps = tuple(components)
        if not comps:
            raise DomainError("a vector step function needs at least one component")
        iv = comps[0].interval
        if any(c.interval != iv for c in comps):
            raise DomainError("all components must share the same interval")
        self.components = comps

    @classmethod
    def wrap(cls, f: Union[StepFunction, "VectorStepFunction"]) -> "VectorStepFunction":
        return f if isinstance(f, VectorStepFunction) else cls((f,))

    @property
    def interval(self) -> Interval:
        return self.components[0].interval

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def breakpoints(self) -> np.ndarray:
        """Union of the component discontinuity sets."""
        return np.unique(np.concatenate([c.breakpoints for c in self.components]))

    def __getitem__(self, i) -> StepFunction:
        return self.components[i]

    def __call__(self, t):
        return np.stack([np.asarray(c(t)) for c in self.components])

    def __eq__(self, other):
        if not isinstance(other, VectorStepFunction):
            return NotImplemented
        return self.components == other.components

    __hash__ = None

    def __repr__(self):
        return f"VectorStepFunction({list(self.components)!r})"


AnyStep = Union[StepFunction, VectorStepFunction]


@dataclass(frozen=True)
class PathEnsemble:
    """Monte Carlo sample of paths with provenance."""

    paths: tuple
    seed: int = 0
    model_tag: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        paths = tuple(VectorStepFunction.wrap(p) for p in self.paths)
        if not paths:
            raise DomainError("a path ensemble must be nonempty")
        iv, dim = paths[0].interval, paths[0].dim
        if any(p.interval != iv or p.dim != dim for p in paths):
            raise DomainError("ensemble paths must share interval and dimension")
        object.__setattr__(self, "paths", paths)

    def __len__(self):
        return len(self.paths)

    @property
    def interval(self) -> Interval:
        return self.paths[0].interval

    @property
    def dim(self) -> int:
        return self.paths[0].dim


# ---------------------------------------------------------------------------
# pointwise algebra
# ---------------------------------------------------------------------------


def evaluate(f: StepFunction, t: float) -> float:
    """Value of ``f`` at ``t``; raises :class:`DomainError` outside the interval."""
    if not f.interval.a <= t <= f.interval.b:
        raise DomainError(f"t={t} outside {f.interval}")
    return float(f.values[np.searchsorted(f.breakpoints, t, side="right")])


# above this many (function, grid point) pairs the jump-aggregation path is used
_DENSE_LIMIT = 4_000_000


def linear_combine(coeffs: Sequence[float], fs: Sequence[StepFunction]) -> StepFunction:
    """Pointwise ``sum_i coeffs[i] * fs[i]`` on the merged breakpoint grid."""
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    fs = list(fs)
    if not fs or coeffs.size != len(fs):
        raise DomainError("need equally many (and at least one) coefficients and functions")
    iv = fs[0].interval
    if any(f.interval != iv for f in fs):
        raise DomainError("all functions must share the same interval")
    grid = np.unique(np.concatenate([f.breakpoints for f in fs]))
    if len(fs) * (grid.size + 1) <= _DENSE_LIMIT:
        pts = np.concatenate(([iv.a], grid))
        vals = np.zeros(pts.size)
        for c, f in zip(coeffs, fs):
            vals += c * f.values[np.searchsorted(f.breakpoints, pts, side="right")]
        return StepFunction(iv, grid, vals)
    return _combine_by_jumps(iv, coeffs, fs)


def _combine_by_jumps(iv: Interval, coeffs: np.ndarray, fs) -> StepFunction:
    v0 = float(np.dot(coeffs, [f.values[0] for f in fs]))
    times = np.concatenate([f.breakpoints for f in fs])
    jumps = np.concatenate([c * f.jumps for c, f in zip(coeffs, fs)])
    return step_from_jumps(iv, v0, times, jumps)


def step_from_jumps(iv: Interval, v0: float, times, jumps) -> StepFunction:
    """Step function starting at ``v0`` with (possibly repeated) jump times."""
    times = np.asarray(times, dtype=float)
    jumps = np.asarray(jumps, dtype=float)
    if times.size == 0:
        return StepFunction.constant(iv, v0)
    grid, inv = np.unique(times, return_inverse=True)
    agg = np.bincount(inv.ravel(), weights=jumps, minlength=grid.size)
    vals = np.concatenate(([v0], v0 + np.cumsum(agg)))
    return StepFunction(iv, grid, vals)


def _combine_vectors(coeffs, fs: Sequence[VectorStepFunction]) -> VectorStepFunction:
    dim = fs[0].dim
    if any(f.dim != dim for f in fs):
        raise DomainError("vector step functions must share their dimension")
    return VectorStepFunction(
        [linear_combine(coeffs, [f.components[i] for f in fs]) for i in range(dim)]
    )


def sup_norm(f: AnyStep) -> float:
    """``max_i sup_t |f_i(t)|``, computed from stored values."""
    if isinstance(f, StepFunction):
        return float(np.max(np.abs(f.values)))
    return max(float(np.max(np.abs(c.values))) for c in f.components)


def oscillation(f: StepFunction, sub: Interval) -> float:
    """``sup f - inf f`` over the closed subinterval ``sub``."""
    if not f.interval.contains_interval(sub):
        raise DomainError(f"{sub} is not contained in {f.interval}")
    lo = np.searchsorted(f.breakpoints, sub.a, side="right")
    hi = np.searchsorted(f.breakpoints, sub.b, side="right")
    active = f.values[lo : hi + 1]
    return float(active.max() - active.min())


def w_doubleprime(f: StepFunction, delta: float) -> float:
    """Two-sided modulus ``sup min(|f(t)-f(s)|, |f(u)-f(t)|)`` over ``s<=t<=u``, ``u-s<=delta``.

    For a step function the supremum is reached with ``s``, ``t``, ``u`` in
    plateaus ``i < j < k``; such a triple is admissible iff the gap between
    the end of plateau ``i`` and the start of plateau ``k`` is strictly below
    ``delta``.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    t, v = f.breakpoints, f.values
    n_plateaus = v.size
    best = 0.0
    for i in range(n_plateaus - 2):
        end_i = t[i]  # plateau i ends where plateau i+1 starts
        # plateau k starts at t[k-1]; admissible while t[k-1] - end_i < delta
        k_max = int(np.searchsorted(t, end_i + delta, side="left"))
        for k in range(i + 2, min(k_max, n_plateaus - 1) + 1):
            mid = v[i + 1 : k]
            cand = np.minimum(np.abs(mid - v[i]), np.abs(v[k] - mid)).max()
            if cand > best:
                best = float(cand)
    return best


def uniform_distance(f: StepFunction, g: StepFunction) -> float:
    """``sup_t |f(t) - g(t)|``."""
    if f.interval != g.interval:
        raise DomainError("functions live on different intervals")
    return sup_norm(linear_combine((1.0, -1.0), (f, g)))


def j1_distance(f: StepFunction, g: StepFunction, tol: float = 1e-9) -> float:
    """Skorohod J1 distance ``inf_lambda max(||lambda - id||, ||f - g o lambda||)``.

    Any time change acts on ``g`` only by relocating its jumps, preserving
    their order.  The infimum is therefore a bottleneck path problem over
    interleavings of the two jump sequences: each jump of ``g`` is either
    placed on a jump of ``f`` or inside a gap between consecutive jumps of
    ``f``.  The dynamic programme below solves it exactly in
    ``O(k_f * k_g)``; ``tol`` is accepted for interface compatibility and only
    validated.
    """
    if f.interval != g.interval:
        raise DomainError("functions live on different intervals")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    a, b = f.interval.a, f.interval.b
    s, F = f.breakpoints.tolist(), f.values.tolist()
    r, G = g.breakpoints.tolist(), g.values.tolist()
    k, m = len(s), len(r)
    f_jumps_at_b = k > 0 and s[-1] == b
    inf = float("inf")

    def gap_cost(i: int, rj: float) -> float:
        # cost of placing a jump of g originally at rj strictly inside gap i
        lo = a if i == 0 else s[i - 1]
        hi = b if i == k else s[i]
        if rj == b:
            return 0.0 if (i == k and not f_jumps_at_b) else inf
        if not lo < hi:
            return inf
        if rj < lo:
            return lo - rj
        if rj > hi:
            return rj - hi
        return 0.0

    prev = [inf] * (m + 1)
    for i in range(k + 1):
        row = [inf] * (m + 1)
        for j in range(m + 1):
            node = abs(F[i] - G[j])
            cand = inf
            if i == 0 and j == 0:
                cand = 0.0
            if i > 0:
                cand = min(cand, prev[j])  # jump of f alone
                if j > 0 and (s[i - 1] == b) == (r[j - 1] == b):
                    cand = min(cand, max(prev[j - 1], abs(s[i - 1] - r[j - 1])))
            if j > 0 and row[j - 1] < inf:
                cand = min(cand, max(row[j - 1], gap_cost(i, r[j - 1])))
            row[j] = max(cand, node)
        prev = row
    return float(prev[m])


def bounded_j1_distance(f: StepFunction, g: StepFunction, tol: float = 1e-9) -> float:
    """``min(d_J1(f, g), 1)``, the bounded version used for point-measure work."""
    return min(j1_distance(f, g, tol), 1.0)


def mean_path(ensemble: PathEnsemble) -> VectorStepFunction:
    """Pointwise average of the ensemble paths."""
    m = len(ensemble)
    w = np.full(m, 1.0 / m)
    return _combine_vectors(w, ensemble.paths)


def occupation_time(f: StepFunction, level: float) -> float:
    """Lebesgue measure of ``{s : f(s) <= level}``."""
    a, b = f.interval.a, f.interval.b
    starts = np.concatenate(([a], f.breakpoints))
    ends = np.concatenate((f.breakpoints, [b]))
    return float(np.sum((ends - starts)[f.values <= level]))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def step_rows(f: AnyStep) -> list:
    """Rows ``[t, v_1, ..., v_l]`` starting with the left endpoint."""
    vf = VectorStepFunction.wrap(f)
    grid = np.concatenate(([vf.interval.a], vf.breakpoints))
    vals = vf(grid)
    return [[_fmt(t)] + [_fmt(x) for x in vals[:, i]] for i, t in enumerate(grid)]


def write_csv(f: AnyStep, path, comment: str | None = None) -> None:
    """Write ``f`` as ``t,v`` rows (``t,v1,..,vl`` for vectors).

    The first data row is ``a,v0``; the right endpoint is recorded in the
    header comment so the interval round-trips.
    """
    vf = VectorStepFunction.wrap(f)
    header = ["t"] + (["v"] if vf.dim == 1 else [f"v{i + 1}" for i in range(vf.dim)])
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(f"# interval={_fmt(vf.interval.a)},{_fmt(vf.interval.b)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(step_rows(vf))


def read_csv(path) -> AnyStep:
    """Inverse of :func:`write_csv`."""
    iv = None
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# interval="):
                    a, b = line.split("=", 1)[1].strip().split(",")
                    iv = Interval(float(a), float(b))
                continue
            rows.append(line.strip())
    data = [list(map(float, r.split(","))) for r in rows[1:] if r]
    if iv is None or not data:
        raise DomainError(f"{path} is not a step-function CSV")
    arr = np.array(data)
    comps = [StepFunction(iv, arr[1:, 0], arr[:, c]) for c in range(1, arr.shape[1])]
    return comps[0] if len(comps) == 1 else VectorStepFunction(comps)
