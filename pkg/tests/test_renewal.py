import math

import numpy as np
import pytest

from cadlag_stable import (
    ConstantReward,
    DomainError,
    ExponentialReward,
    MixtureReward,
    RenewalEmpirical,
    RenewalRewardConfig,
    TailModel,
    UniformReward,
    empirical_process,
    make_rng,
    map_replicates,
    renewal_reward_path,
    sample_tail,
    steady_state_cdf,
)
from cadlag_stable.cadlag import occupation_time

PARETO = TailModel("pareto", 1.5, 1.0)


def config(T=1e3, reward=None, w_grid=(0.25, 0.7, 1.5), **kw):
    return RenewalRewardConfig(PARETO, reward or ExponentialReward(), T, w_grid, **kw)


class TestRewards:
    @pytest.mark.parametrize("law", [ExponentialReward(2.0), UniformReward(-1, 3), ConstantReward(0.5),
                                     MixtureReward((0.3, 0.7), (ConstantReward(0.0), UniformReward(0, 1)))])
    def test_sample_matches_cdf(self, law):
        x = np.sort(law.sample(make_rng(0), 50_000))
        for w in (-0.5, 0.1, 0.5, 0.9, 2.0):
            assert np.mean(x <= w) == pytest.approx(law.cdf(w), abs=0.01)

    def test_validation(self):
        with pytest.raises(DomainError):
            UniformReward(1, 1)
        with pytest.raises(DomainError):
            MixtureReward((0.5, 0.6), (ConstantReward(), ConstantReward()))
        with pytest.raises(DomainError):
            config(T=0.0)
        with pytest.raises(DomainError):
            config(w_grid=(1.0, 0.5))


class TestPath:
    def test_breakpoints_are_renewal_epochs(self):
        cfg = config(T=200.0)
        y = sample_tail(make_rng(1), PARETO, 200)
        path = renewal_reward_path(make_rng(1), cfg)
        epochs = np.cumsum(y)
        epochs = epochs[epochs <= 200.0]
        bp = path.trajectory.breakpoints
        assert np.all((bp > 0) & (bp <= 200.0))
        # continuous rewards: every epoch inside (0, T] is a jump
        np.testing.assert_allclose(bp, epochs, rtol=1e-13)
        assert path.n_renewals == epochs.size

    def test_renewal_rate(self):
        rates = [renewal_reward_path(make_rng(2, r), config(T=1e5)).n_renewals / 1e5 for r in range(50)]
        assert np.mean(rates) == pytest.approx(1 / PARETO.mean, rel=0.02)

    def test_constant_reward_trajectory(self):
        path = renewal_reward_path(make_rng(3), config(reward=ConstantReward(2.5)))
        assert path.trajectory.n_jumps == 0
        assert path.trajectory.values.tolist() == [2.5]

    def test_shifted_pareto_interarrivals(self):
        cfg = RenewalRewardConfig(TailModel("pareto_shifted", 1.5, 1.0), ExponentialReward(), 100.0, (0.5,))
        path = renewal_reward_path(make_rng(4), cfg)
        assert path.trajectory.interval.b == 100.0
        assert np.all(np.diff(path.trajectory.breakpoints) > 0)


class TestEmpiricalProcess:
    def test_matches_trajectory_occupation(self):
        cfg = config(T=500.0)
        for seed in range(5):
            path = renewal_reward_path(make_rng(seed), cfg)
            e = empirical_process(make_rng(seed), cfg)
            for w in cfg.w_grid:
                occ = occupation_time(path.trajectory, w)
                expected = (occ - cfg.T * cfg.reward.cdf(w)) / cfg.a_T
                assert e[w] == pytest.approx(expected, abs=1e-9)

    def test_above_support_vanishes(self):
        cfg = config(reward=UniformReward(0, 1), w_grid=(1.0, 3.0))
        vals = RenewalEmpirical(cfg)(make_rng(0))
        np.testing.assert_allclose(vals, 0.0, atol=1e-12)

    def test_mean_zero(self):
        cfg = config(T=1e3)
        vals = map_replicates(RenewalEmpirical(cfg), 5, 10_000)
        se = vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])
        assert np.all(np.abs(vals.mean(axis=0)) <= 3 * se)

    def test_deterministic_envelope(self):
        cfg = config(T=300.0)
        f0 = np.asarray(cfg.reward.cdf(np.asarray(cfg.w_grid)))
        env = cfg.T * np.maximum(f0, 1 - f0) / cfg.a_T
        vals = map_replicates(RenewalEmpirical(cfg), 6, 2000)
        assert np.all(np.abs(vals) <= env + 1e-12)

    def test_custom_coupling_needs_f0(self):
        cfg = config(coupling=lambda rng, y: np.minimum(y, 1.0))
        with pytest.raises(DomainError):
            RenewalEmpirical(cfg)(make_rng(0))
        vals = RenewalEmpirical(cfg, (0.0, 0.0, 1.0))(make_rng(0))
        assert vals.shape == (3,)


class TestSteadyState:
    def test_independent_is_reward_cdf(self):
        cfg = config()
        for w in (-1.0, 0.0, 0.3, 2.0, 50.0):
            assert steady_state_cdf(cfg, w) == cfg.reward.cdf(w)

    def test_monotone_limits(self):
        cfg = config()
        vals = [steady_state_cdf(cfg, w) for w in np.linspace(-1, 30, 50)]
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] == 0.0 and vals[-1] == pytest.approx(1.0, abs=1e-12)

    def test_custom_coupling_min_y_one(self):
        # W = min(Y, 1) with Y >= 1 is the constant 1, so F_0 vanishes below 1
        cfg = config(coupling=lambda rng, y: np.minimum(y, 1.0))
        for w in (0.5, 0.9):
            assert steady_state_cdf(cfg, w, make_rng(0), 10**6) == 0.0

    def test_custom_coupling_against_closed_form(self):
        # W = Y - 1: F_0(w) = lambda E[Y 1{Y <= 1 + w}]
        cfg = config(coupling=lambda rng, y: y - 1.0)
        m = 10**7
        for w in (0.5, 0.9):
            exact = PARETO.truncated_moment(1 + w, 1) / PARETO.mean
            # per-draw variance of lambda Y 1{Y <= 1 + w} is bounded by lambda^2 (1 + w)^2
            se = (1 + w) / PARETO.mean / math.sqrt(m)
            assert abs(steady_state_cdf(cfg, w, make_rng(1), m) - exact) <= 3 * se

    def test_custom_coupling_needs_rng(self):
        with pytest.raises(DomainError):
            steady_state_cdf(config(coupling=lambda rng, y: y), 0.5)
