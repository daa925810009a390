import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cadlag_stable import (
    UNIT_INTERVAL,
    DomainError,
    Interval,
    PathEnsemble,
    StepFunction,
    VectorStepFunction,
    evaluate,
    j1_distance,
    linear_combine,
    mean_path,
    oscillation,
    sup_norm,
    uniform_distance,
    w_doubleprime,
)
from cadlag_stable.cadlag import occupation_time, read_csv, write_csv

TOL = 1e-9


def ind(u, h=1.0):
    return StepFunction.indicator(UNIT_INTERVAL, u, h)


# ---------------------------------------------------------------------------
# brute-force J1 oracle: enumerate every order-preserving placement of the
# jumps of g (onto a jump of f or strictly inside a gap of f)
# ---------------------------------------------------------------------------


def _slot_time_cost(f, slot, r):
    a, b = f.interval.a, f.interval.b
    s = list(f.breakpoints)
    k = len(s)
    if slot % 2 == 1:  # matched with jump (slot - 1) / 2 of f
        sj = s[(slot - 1) // 2]
        if (sj == b) != (r == b):
            return np.inf
        return abs(sj - r)
    i = slot // 2
    lo = a if i == 0 else s[i - 1]
    hi = b if i == k else s[i]
    if r == b:
        return 0.0 if (i == k and not (k and s[-1] == b)) else np.inf
    if not lo < hi:
        return np.inf
    return max(lo - r, r - hi, 0.0)


def brute_j1(f, g):
    k, m = f.n_jumps, g.n_jumps
    F, G = f.values, g.values
    r = list(g.breakpoints)
    best = np.inf
    for slots in itertools.combinations_with_replacement(range(2 * k + 1), m):
        odd = [x for x in slots if x % 2 == 1]
        if len(set(odd)) != len(odd):
            continue
        cost = max([_slot_time_cost(f, sl, rj) for sl, rj in zip(slots, r)], default=0.0)
        if cost == np.inf:
            continue
        # walk the merged event sequence and track |F - G| on every plateau
        fi = gi = 0
        gap = abs(F[0] - G[0])
        for pos in range(2 * k + 1):
            if pos % 2 == 1:
                fi += 1
                gi += slots.count(pos)
                gap = max(gap, abs(F[fi] - G[gi]))
            else:
                for _ in range(slots.count(pos)):
                    gi += 1
                    gap = max(gap, abs(F[fi] - G[gi]))
        best = min(best, max(cost, gap))
    return best


grid_times = st.integers(1, 32).map(lambda i: i / 32)


@st.composite
def step_functions(draw, max_jumps=4):
    times = sorted(draw(st.sets(grid_times, max_size=max_jumps)))
    vals = draw(st.lists(st.integers(-3, 3), min_size=len(times) + 1, max_size=len(times) + 1))
    return StepFunction(UNIT_INTERVAL, times, [float(v) for v in vals])


@st.composite
def real_step_functions(draw, max_jumps=8):
    times = sorted(draw(st.sets(st.floats(0.001, 1.0, allow_nan=False), max_size=max_jumps)))
    vals = draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=len(times) + 1,
                         max_size=len(times) + 1))
    return StepFunction(UNIT_INTERVAL, times, vals)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


class TestStepFunction:
    def test_rejects_bad_breakpoints(self):
        with pytest.raises(DomainError):
            StepFunction(UNIT_INTERVAL, [0.5, 0.4], [0, 1, 2])
        with pytest.raises(DomainError):
            StepFunction(UNIT_INTERVAL, [0.0], [0, 1])
        with pytest.raises(DomainError):
            StepFunction(UNIT_INTERVAL, [1.5], [0, 1])
        with pytest.raises(DomainError):
            StepFunction(UNIT_INTERVAL, [0.5], [0, np.nan])

    def test_canonical_form_drops_null_jumps(self):
        f = StepFunction(UNIT_INTERVAL, [0.2, 0.5], [1.0, 1.0, 2.0])
        assert f.breakpoints.tolist() == [0.5]
        assert f == StepFunction(UNIT_INTERVAL, [0.5], [1.0, 2.0])

    def test_jump_at_right_endpoint(self):
        f = ind(1.0)
        assert evaluate(f, 1.0) == 1.0
        assert evaluate(f, 0.999) == 0.0

    def test_interval_validation(self):
        with pytest.raises(DomainError):
            Interval(1.0, 1.0)


class TestEvaluate:
    def test_examples(self):
        f = ind(0.5)
        assert evaluate(f, 0.4) == 0.0
        assert evaluate(f, 0.5) == 1.0
        assert evaluate(f, 1.0) == 1.0

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            evaluate(ind(0.5), 1.2)

    def test_left_limit(self):
        assert ind(0.5).left_limit(0.5) == 0.0


class TestLinearCombine:
    def test_two_indicators(self):
        f = linear_combine([1, 1], [ind(0.3), ind(0.7)])
        assert f.breakpoints.tolist() == [0.3, 0.7]
        assert f.values.tolist() == [0.0, 1.0, 2.0]

    def test_exact_cancellation(self):
        f = linear_combine([1, -1], [ind(0.5), ind(0.5)])
        assert f.n_jumps == 0
        assert f.values.tolist() == [0.0]

    def test_mixed_coefficients(self):
        f = linear_combine([2, -3], [ind(0.2), ind(0.6)])
        assert f.breakpoints.tolist() == [0.2, 0.6]
        assert f.values.tolist() == [0.0, 2.0, -1.0]

    def test_interval_mismatch(self):
        g = StepFunction.indicator(Interval(0.0, 2.0), 0.5)
        with pytest.raises(DomainError):
            linear_combine([1, 1], [ind(0.5), g])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(real_step_functions(), min_size=1, max_size=4), st.data())
    def test_pointwise_exact(self, fs, data):
        coeffs = data.draw(st.lists(st.integers(-4, 4), min_size=len(fs), max_size=len(fs)))
        h = linear_combine(coeffs, fs)
        ts = np.random.default_rng(0).random(1000)
        ts = np.concatenate((ts, h.breakpoints, [0.0, 1.0]))
        expected = sum(c * f(ts) for c, f in zip(coeffs, fs))
        np.testing.assert_allclose(h(ts), expected, rtol=0, atol=1e-12)

    def test_dense_and_jump_paths_agree(self):
        rng = np.random.default_rng(3)
        fs = [ind(u, h) for u, h in zip(rng.random(3000), rng.normal(size=3000))]
        c = rng.normal(size=3000)
        h = linear_combine(c, fs)
        ts = rng.random(200)
        np.testing.assert_allclose(h(ts), sum(ci * f(ts) for ci, f in zip(c, fs)), atol=1e-10)


class TestNorms:
    def test_sup_norm_examples(self):
        assert sup_norm(ind(0.37)) == 1.0
        assert sup_norm(StepFunction.constant(UNIT_INTERVAL)) == 0.0
        assert sup_norm(linear_combine([2, -3], [ind(0.2), ind(0.6)])) == 2.0

    def test_vector_sup_norm(self):
        v = VectorStepFunction([ind(0.3, 0.5), StepFunction.constant(UNIT_INTERVAL, -2.0)])
        assert sup_norm(v) == 2.0

    @settings(max_examples=100, deadline=None)
    @given(real_step_functions(), st.floats(-10, 10, allow_nan=False))
    def test_sup_norm_homogeneous(self, f, c):
        assert sup_norm(linear_combine([c], [f])) == abs(c) * sup_norm(f)

    def test_oscillation_examples(self):
        f = ind(0.5)
        assert oscillation(f, UNIT_INTERVAL) == 1.0
        assert oscillation(f, Interval(0.6, 0.9)) == 0.0
        assert oscillation(linear_combine([2, -3], [ind(0.2), ind(0.6)]), UNIT_INTERVAL) == 3.0

    def test_oscillation_closed_subinterval(self):
        assert oscillation(ind(0.5), Interval(0.2, 0.5)) == 1.0

    def test_uniform_distance_examples(self):
        assert uniform_distance(ind(0.3), ind(0.3)) == 0.0
        assert uniform_distance(ind(0.3), ind(0.31)) == 1.0
        assert uniform_distance(ind(0.5), ind(0.5, 2.0)) == 1.0


class TestWDoublePrime:
    def test_single_jump(self):
        for d in (0.01, 0.3, 1.0, 5.0):
            assert w_doubleprime(ind(0.5), d) == 0.0

    def test_two_close_jumps(self):
        f = ind(0.4) + ind(0.45)
        assert w_doubleprime(f, 0.1) == 1.0
        assert w_doubleprime(f, 0.03) == 0.0

    def test_nonpositive_delta(self):
        with pytest.raises(DomainError):
            w_doubleprime(ind(0.5), 0.0)

    def test_against_grid_search(self):
        # brute force over a fine grid containing every breakpoint
        f = StepFunction(UNIT_INTERVAL, [0.25, 0.5, 0.625], [0.0, 2.0, 1.0, 3.0])
        ts = np.arange(0, 129) / 128
        v = f(ts)
        for delta in (0.2, 0.3, 0.4, 0.5):
            best = 0.0
            for i, s in enumerate(ts):
                for k in range(i, len(ts)):
                    if ts[k] - s > delta:
                        break
                    mid = v[i : k + 1]
                    best = max(best, np.max(np.minimum(abs(mid - v[i]), abs(v[k] - mid))))
            assert w_doubleprime(f, delta) == pytest.approx(best, abs=0)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-3, 3).filter(lambda x: x != 0), min_size=1, max_size=6),
           st.floats(0.01, 0.1))
    def test_sparse_jumps_vanish(self, heights, delta):
        # jumps pairwise more than delta apart
        spacing = delta * 1.01
        times = 0.001 + spacing * np.arange(1, len(heights) + 1)
        times = times[times <= 1.0]
        if times.size == 0:
            return
        f = linear_combine(np.ones(times.size), [ind(t, h) for t, h in zip(times, heights)])
        assert w_doubleprime(f, delta) == 0.0


class TestJ1:
    def test_examples(self):
        assert j1_distance(ind(0.5), ind(0.5), TOL) == 0.0
        assert j1_distance(ind(0.5), ind(0.6), TOL) == pytest.approx(0.1, abs=1e-15)
        assert j1_distance(ind(0.5), ind(0.5, 2.0), TOL) == 1.0

    def test_endpoint_jump_cannot_move(self):
        # lambda(1) = 1, so a jump at 1 cannot be matched with one at 0.9
        assert j1_distance(ind(1.0), ind(0.9), TOL) == 1.0

    def test_bad_tol(self):
        with pytest.raises(DomainError):
            j1_distance(ind(0.5), ind(0.5), 0.0)

    @settings(max_examples=250, deadline=None)
    @given(step_functions(max_jumps=3), step_functions(max_jumps=3))
    def test_matches_brute_force(self, f, g):
        assert j1_distance(f, g, TOL) == pytest.approx(brute_j1(f, g), abs=1e-12)

    @settings(max_examples=150, deadline=None)
    @given(step_functions(), step_functions(), step_functions())
    def test_metric_axioms(self, f, g, h):
        d = lambda x, y: j1_distance(x, y, TOL)  # noqa: E731
        assert d(f, f) == 0.0
        assert d(f, g) >= 0.0
        assert abs(d(f, g) - d(g, f)) <= 2 * TOL
        assert d(f, h) <= d(f, g) + d(g, h) + 2 * TOL

    @settings(max_examples=150, deadline=None)
    @given(real_step_functions(), real_step_functions())
    def test_bounded_by_uniform(self, f, g):
        assert j1_distance(f, g, TOL) <= uniform_distance(f, g) + TOL


class TestMeanPath:
    def test_two_indicators(self):
        m = mean_path(PathEnsemble((ind(0.25), ind(0.75))))[0]
        assert m.breakpoints.tolist() == [0.25, 0.75]
        assert m.values.tolist() == [0.0, 0.5, 1.0]

    def test_identical_paths(self):
        f = linear_combine([2, -3], [ind(0.2), ind(0.6)])
        assert mean_path(PathEnsemble((f, f, f)))[0] == f

    def test_signed_counterexample_ensemble(self):
        # +1_[u,1] and -1_[v,1] with probability 1/2 each average to (1/2) 1_[u,v)
        u, v = 0.4, 0.45
        m = mean_path(PathEnsemble((ind(u), ind(v, -1.0))))[0]
        assert m.breakpoints.tolist() == [u, v]
        assert m.values.tolist() == [0.0, 0.5, 0.0]

    @settings(max_examples=60, deadline=None)
    @given(st.lists(real_step_functions(), min_size=1, max_size=6))
    def test_commutes_with_evaluate(self, fs):
        m = mean_path(PathEnsemble(tuple(fs)))[0]
        ts = np.unique(np.concatenate([f.breakpoints for f in fs] + [[0.0, 1.0]]))
        for t in ts:
            assert evaluate(m, t) == pytest.approx(np.mean([evaluate(f, t) for f in fs]), abs=1e-12)

    def test_ensemble_validation(self):
        with pytest.raises(DomainError):
            PathEnsemble(())
        with pytest.raises(DomainError):
            PathEnsemble((ind(0.5), StepFunction.constant(Interval(0.0, 2.0))))


class TestMisc:
    def test_occupation_time(self):
        f = StepFunction(UNIT_INTERVAL, [0.25, 0.75], [1.0, 3.0, 2.0])
        assert occupation_time(f, 2.0) == pytest.approx(0.5)
        assert occupation_time(f, 0.0) == 0.0

    def test_csv_round_trip(self, tmp_path):
        f = StepFunction(UNIT_INTERVAL, [0.1, 1 / 3, 1.0], [0.0, np.pi, -1e-300, 7.0])
        write_csv(f, tmp_path / "f.csv", comment="seed=1")
        assert read_csv(tmp_path / "f.csv") == f
        v = VectorStepFunction([f, ind(0.5)])
        write_csv(v, tmp_path / "v.csv")
        assert read_csv(tmp_path / "v.csv") == v
