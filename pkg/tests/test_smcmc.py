import numpy as np
import pytest
from scipy import stats
from scipy.special import digamma, polygamma

from dqma.dgp import simulate_smooth
from dqma.distributions import make_quantile_config
from dqma.errors import ConfigError
from dqma.gibbs import default_hyper
from dqma.smcmc import (
    ConvergenceConfig,
    estimate_rate,
    hpd_interval,
    init_population,
    monitored_coordinates,
    posterior_summary,
    step_time,
)

QC = make_quantile_config(0.25)


def small_run(T=15, L=4, seed=0, conv=None, workers=None, lag=None, m=3):
    out = simulate_smooth(40, seed=seed)
    pop = init_population(L, m, default_hyper(m), QC, seed, lag=lag, columns=list(range(m)))
    conv = conv or ConvergenceConfig()
    for s in range(T):
        step_time(pop, (out.y[s], out.x[s]), conv, workers=workers)
    return pop


def same_population(a, b):
    for u, v in zip(a.chains, b.chains):
        assert u.sigma == v.sigma
        np.testing.assert_array_equal(u.betas, v.betas)
        np.testing.assert_array_equal(u.omegas, v.omegas)
        np.testing.assert_array_equal(u.Omega, v.Omega)


class TestConfig:
    def test_defaults(self):
        c = ConvergenceConfig()
        assert (c.epsilon, c.m_min, c.m_max) == (0.05, 2, 50)
        assert c.check_points() == [2, 4, 8, 16, 32, 50]

    @pytest.mark.parametrize("kw", [dict(epsilon=0), dict(epsilon=1), dict(m_min=0), dict(m_min=5, m_max=4)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ConvergenceConfig(**kw)

    def test_single_sweep_schedule(self):
        assert ConvergenceConfig(m_min=1, m_max=1).check_points() == [1]


class TestInit:
    def test_needs_two_chains(self):
        with pytest.raises(ConfigError):
            init_population(1, 2, default_hyper(2), QC, 0)

    def test_fresh_population(self):
        pop = init_population(5, 2, default_hyper(2), QC, 0)
        assert pop.t == 0 and pop.L == 5
        sigmas = {c.sigma for c in pop.chains}
        assert len(sigmas) == 5

    def test_prior_sigma_moments(self):
        hyper = default_hyper(1)
        pop = init_population(10_000, 1, hyper, QC, 1)
        s = np.array([c.sigma for c in pop.chains])
        # a0 = 2.5 gives an infinite variance, so compare log(sigma), whose moments are digamma/trigamma
        ls = np.log(s)
        ref = stats.invgamma(hyper.a0, scale=hyper.b0)
        mean_log = np.log(hyper.b0) - digamma(hyper.a0)
        sd_log = np.sqrt(polygamma(1, hyper.a0))
        assert abs(ls.mean() - mean_log) < 3 * sd_log / np.sqrt(ls.size)
        assert abs(np.median(s) - ref.median()) < 0.05 * ref.median()

    def test_same_seed_same_population(self):
        a = init_population(4, 2, default_hyper(2), QC, 7)
        b = init_population(4, 2, default_hyper(2), QC, 7)
        same_population(a, b)


class TestRate:
    def test_identical(self):
        a = np.random.default_rng(0).normal(size=(50, 4))
        assert estimate_rate(a, a) == pytest.approx(1.0)

    def test_sign_flip(self):
        a = np.random.default_rng(1).normal(size=(50, 1))
        assert estimate_rate(a, -a) == pytest.approx(-1.0)

    def test_independent(self):
        rng = np.random.default_rng(2)
        L = 10_000
        r = estimate_rate(rng.normal(size=(L, 3)), rng.normal(size=(L, 3)))
        assert abs(r) < 3 / np.sqrt(L)

    def test_zero_variance_skipped(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(30, 2))
        b = a.copy()
        b[:, 0] = 1.0
        b[:, 1] = rng.normal(size=30)
        assert estimate_rate(a, b) == pytest.approx(np.corrcoef(a[:, 1], b[:, 1])[0, 1])
        assert estimate_rate(np.ones((5, 2)), np.ones((5, 2))) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError):
            estimate_rate(np.ones((4, 2)), np.ones((4, 3)))


class TestStep:
    def test_one_sweep(self):
        pop = small_run(T=5, conv=ConvergenceConfig(m_min=1, m_max=1))
        assert pop.m_history == [1] * 5
        assert all(tr == [(1, tr[0][1])] for tr in pop.rate_history)

    def test_lengths_and_bounds(self):
        conv = ConvergenceConfig(m_min=2, m_max=8)
        pop = small_run(T=10, conv=conv)
        assert pop.t == 10 and all(c.t == 10 for c in pop.chains)
        assert all(2 <= m <= 8 for m in pop.m_history)
        assert all(len(c.filter_cache) == 10 for c in pop.chains)

    def test_epsilon_monotone(self):
        # the stopping bound is r <= 1 - epsilon, so a larger epsilon needs at least as many sweeps
        totals = []
        for eps in (0.01, 0.05, 0.2, 0.5, 0.9):
            pop = small_run(T=1, seed=3, conv=ConvergenceConfig(epsilon=eps, m_min=1, m_max=16))
            totals.append(pop.m_history[0])
        assert totals == sorted(totals)

    def test_cache_matches_final_parameters(self):
        from dqma.gibbs import filter_chain

        pop = small_run(T=8)
        for c in pop.chains:
            ref = filter_chain(c, pop.data, pop.qc, pop.hyper)
            np.testing.assert_allclose(c.filter_cache.filt_mean, ref.filt_mean, rtol=1e-12, atol=1e-12)

    def test_reproducible(self):
        same_population(small_run(T=6, seed=4), small_run(T=6, seed=4))

    def test_threads_match_sequential(self):
        same_population(small_run(T=6, seed=5), small_run(T=6, seed=5, workers=3))

    def test_fixed_lag_prefix_frozen(self):
        out = simulate_smooth(40, seed=6)
        pop = init_population(3, 3, default_hyper(3), QC, 6, lag=2)
        conv = ConvergenceConfig(m_min=1, m_max=2)
        for s in range(8):
            step_time(pop, (out.y[s], out.x[s]), conv)
        before = [c.betas.copy() for c in pop.chains]
        step_time(pop, (out.y[8], out.x[8]), conv)
        for b, c in zip(before, pop.chains):
            # only indices t-h..t (0-based 6..8) may move
            np.testing.assert_array_equal(c.betas[:6], b[:6])

    def test_column_selection(self):
        out = simulate_smooth(20, seed=7)
        pop = init_population(2, 2, default_hyper(2), QC, 7, columns=[0, 2])
        step_time(pop, (out.y[0], out.x[0]), ConvergenceConfig(m_min=1, m_max=1))
        np.testing.assert_array_equal(pop.data.X[0], out.x[0, [0, 2]])

    def test_wrong_row_length(self):
        from dqma.errors import DomainError

        pop = init_population(2, 2, default_hyper(2), QC, 0)
        with pytest.raises(DomainError):
            step_time(pop, (1.0, np.ones(3)), ConvergenceConfig())

    def test_monitored_coordinates(self):
        pop = small_run(T=3, L=2, m=2)
        v = monitored_coordinates(pop.chains[0])
        assert v.shape == (1 + 3 + 2 + 1,)


class TestSummary:
    def test_constant(self):
        assert hpd_interval(np.full(30, 2.5)) == (2.5, 2.5)

    def test_standard_normal(self):
        lo, hi = hpd_interval(np.random.default_rng(8).standard_normal(100_000))
        assert lo == pytest.approx(-1.96, abs=0.05) and hi == pytest.approx(1.96, abs=0.05)

    def test_shortest(self):
        x = np.array([0.0, 0.1, 0.2, 5.0])
        assert hpd_interval(x, 0.75) == (0.0, 0.2)

    def test_median_permutation_invariant(self):
        pop = small_run(T=4)
        med, lo, hi = posterior_summary(pop, "beta", 1)
        pop.chains = pop.chains[::-1]
        med2, lo2, hi2 = posterior_summary(pop, "beta", 1)
        np.testing.assert_array_equal(med, med2)
        np.testing.assert_array_equal(lo, lo2)
        assert np.all(lo <= med) and np.all(med <= hi)

    def test_selectors(self):
        pop = small_run(T=4)
        assert posterior_summary(pop, "sigma")[0].shape == (1,)
        assert posterior_summary(pop, "omega")[0].shape == (4,)
        with pytest.raises(ConfigError):
            posterior_summary(pop, "gamma")
