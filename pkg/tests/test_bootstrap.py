import numpy as np
import pytest
from fractions import Fraction
from scipy import stats

from erpforge.bootstrap import (
    CHRONOLOGICAL,
    EvaluationError,
    TrialCountSampler,
    bootstrap_sample,
    chronological_prefix,
    evaluate_estimator,
    make_estimator,
    sample_trial_count,
    sample_trial_counts,
)
from erpforge.core import MeasureWindow, split_half
from erpforge.errors import ConfigError, SizeError
from erpforge.estimators import simple_average

from conftest import make_trials


def harmonic_probs(n):
    h = sum(Fraction(1, j) for j in range(1, n + 1))
    return np.array([float(Fraction(1, k) / h) for k in range(1, n + 1)])


class TestSampler:
    def test_single(self):
        s = TrialCountSampler(1)
        assert {sample_trial_count(s, seed) for seed in range(20)} == {1}

    def test_three(self):
        np.testing.assert_allclose(TrialCountSampler(3).weights, [6 / 11, 3 / 11, 2 / 11], rtol=1e-15)

    def test_chi_square_n20(self):
        n = 20
        draws = sample_trial_counts(TrialCountSampler(n), 100_000, 17)
        obs = np.bincount(draws, minlength=n + 1)[1:]
        p = stats.chisquare(obs, 100_000 * harmonic_probs(n)).pvalue
        assert p > 0.01

    def test_scalar_and_vector_agree(self):
        s = TrialCountSampler(10)
        assert sample_trial_count(s, 5) == int(sample_trial_counts(s, 1, 5)[0])

    def test_bad_n(self):
        with pytest.raises(SizeError):
            TrialCountSampler(0)


class TestBootstrapSample:
    def test_single(self):
        ts = make_trials(np.arange(4.0)[None, :])
        np.testing.assert_array_equal(bootstrap_sample(ts, 1, 0).data, ts.data)

    def test_deterministic(self, rng):
        ts = make_trials(rng.normal(size=(10, 5)))
        np.testing.assert_array_equal(bootstrap_sample(ts, 7, 3).data, bootstrap_sample(ts, 7, 3).data)

    def test_uniform(self):
        ts = make_trials(np.arange(5.0)[:, None] * np.ones((5, 2)))
        vals = bootstrap_sample(ts, 1000, 11).data[:, 0, 0]
        freq = np.bincount(vals.astype(int), minlength=5) / 1000
        assert np.all(np.abs(freq - 0.2) <= 0.05)

    def test_bad_k(self):
        with pytest.raises(SizeError):
            bootstrap_sample(make_trials(np.zeros((2, 3))), 0, 0)


class TestPrefix:
    def test_prefix(self, rng):
        ts = make_trials(rng.normal(size=(6, 4)))
        np.testing.assert_array_equal(chronological_prefix(ts, 6).data, ts.data)
        np.testing.assert_array_equal(chronological_prefix(ts, 1).data, ts.data[:1])
        a, b = chronological_prefix(ts, 2), chronological_prefix(ts, 5)
        np.testing.assert_array_equal(b.data[:2], a.data)
        with pytest.raises(SizeError):
            chronological_prefix(ts, 7)


def fixed_halves(seed=0, n=40, T=60, noise=1.0):
    rng = np.random.default_rng(seed)
    wave = np.sin(np.linspace(0, 3 * np.pi, T)) + 0.5
    return split_half(make_trials(wave + noise * rng.normal(size=(n, T))), seed), wave


class TestEvaluate:
    def test_oracle_estimator(self):
        halves, _ = fixed_halves()
        target = simple_average(halves.target_half)
        rep = evaluate_estimator(halves, lambda t: target, [1, 3, 5], B=10)
        assert rep.rmse_per_k == [0.0, 0.0, 0.0]
        assert rep.r2_per_k == [1.0, 1.0, 1.0]

    def test_zero_estimator(self):
        halves, _ = fixed_halves()
        zero = simple_average(halves.target_half).with_data(np.zeros((1, 60)))
        rep = evaluate_estimator(halves, lambda t: zero, [1, 4], B=5)
        assert rep.r2_per_k == [0.0, 0.0]

    def test_constant_offset(self):
        halves, _ = fixed_halves()
        target = simple_average(halves.target_half)
        rep = evaluate_estimator(halves, lambda t: target.with_data(target.data + 2.0), [1], B=1)
        assert rep.rmse_per_k == [2.0]
        assert rep.per_bootstrap_rmse == [[2.0]]

    def test_reproducible(self):
        halves, _ = fixed_halves()
        a = evaluate_estimator(halves, "simple", [1, 2, 8], B=30, rng_seed=4).to_dict()
        b = evaluate_estimator(halves, "simple", [8, 2, 1][::-1], B=30, rng_seed=4).to_dict()
        assert a == b

    def test_seed_per_k_independent_of_grid(self):
        halves, _ = fixed_halves()
        a = evaluate_estimator(halves, "simple", [3], B=20, rng_seed=2)
        b = evaluate_estimator(halves, "simple", [1, 3], B=20, rng_seed=2)
        assert a.per_bootstrap_rmse[0] == b.per_bootstrap_rmse[1]

    def test_chronological(self):
        halves, _ = fixed_halves()
        rep = evaluate_estimator(halves, "simple", [1, 5, 20], B=200, mode=CHRONOLOGICAL)
        assert rep.B == 1
        assert all(len(r) == 1 for r in rep.per_bootstrap_rmse)
        with pytest.raises(SizeError):
            evaluate_estimator(halves, "simple", [21], mode=CHRONOLOGICAL)

    def test_rmse_non_increasing(self):
        halves, _ = fixed_halves(n=200, noise=2.0)
        rep = evaluate_estimator(halves, "simple", [1, 2, 4, 8, 16, 32], B=200, rng_seed=1)
        r = np.array(rep.rmse_per_k)
        assert np.all(np.diff(r) <= 0.02 * r[:-1])
        assert all(v <= 1.0 for v in rep.r2_per_k)

    def test_failure_carries_index(self):
        halves, _ = fixed_halves()
        with pytest.raises(EvaluationError) as info:
            evaluate_estimator(halves, "tanh", [2, 1], B=3)
        assert info.value.k == 1 and info.value.b == 0
        assert isinstance(info.value.cause, SizeError)

    def test_bad_mode(self):
        halves, _ = fixed_halves()
        with pytest.raises(ConfigError):
            evaluate_estimator(halves, "simple", [1], mode="shuffled")


def test_make_estimator_requirements():
    with pytest.raises(ConfigError):
        make_estimator("woody")
    with pytest.raises(ConfigError):
        make_estimator("template")
    with pytest.raises(ConfigError):
        make_estimator("xdawn")
    est = make_estimator("woody", window=MeasureWindow(0.0, 50.0))
    ts = make_trials(np.random.default_rng(0).normal(size=(1, 60)))
    np.testing.assert_array_equal(est(ts).data, ts.data[0])
