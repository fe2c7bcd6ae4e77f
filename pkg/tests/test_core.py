import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erpforge.core import (
    MeasureWindow,
    TimeAxis,
    baseline_correct,
    crop,
    select_channel,
    split_half,
)
from erpforge.errors import ChannelError, ConfigError, ShapeError, SizeError, WindowError

from conftest import make_erp, make_trials


def test_time_axis_sample_times():
    axis = TimeAxis(-200.0, 500.0, 501)
    assert axis.times_ms[0] == -200.0
    assert axis.times_ms[100] == 0.0
    assert axis.end_ms == 800.0


def test_time_axis_rejects_bad_rate():
    with pytest.raises(ConfigError):
        TimeAxis(0.0, 0.0, 10)
    with pytest.raises(ConfigError):
        TimeAxis(0.0, 100.0, 0)


def test_trialset_rejects_non_finite_and_bad_names():
    data = np.zeros((2, 1, 5))
    data[0, 0, 0] = np.nan
    with pytest.raises(ShapeError):
        make_trials(data)
    with pytest.raises(ShapeError):
        make_trials(np.zeros((2, 2, 5)), names=["a"])


def test_containers_are_read_only():
    ts = make_trials(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        ts.data[0, 0, 0] = 1.0


class TestSplitHalf:
    def test_even_split_reproducible(self):
        ts = make_trials(np.arange(10)[:, None] * np.ones((10, 4)))
        a = split_half(ts, 7)
        b = split_half(ts, 7)
        assert a.input_indices == b.input_indices
        assert len(a.input_indices) == len(a.target_indices) == 5
        assert set(a.input_indices).isdisjoint(a.target_indices)
        np.testing.assert_array_equal(a.input_half.data, b.input_half.data)

    def test_odd_extra_goes_to_input(self):
        ts = make_trials(np.zeros((11, 4)))
        h = split_half(ts, 0)
        assert h.input_half.n_trials == 6
        assert h.target_half.n_trials == 5

    def test_two_trials(self):
        ts = make_trials(np.array([[1.0, 1.0], [2.0, 2.0]]))
        h = split_half(ts, 3)
        assert h.input_half.n_trials == h.target_half.n_trials == 1
        assert h.input_indices != h.target_indices
        assert not np.array_equal(h.input_half.data, h.target_half.data)

    def test_too_few(self):
        with pytest.raises(SizeError):
            split_half(make_trials(np.zeros((1, 3))), 0)

    @given(n=st.integers(2, 60), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_partition_properties(self, n, seed):
        ts = make_trials(np.arange(n, dtype=float)[:, None] * np.ones((n, 3)))
        h = split_half(ts, seed)
        both = sorted(h.input_indices + h.target_indices)
        assert both == list(range(n))
        assert 0 <= len(h.input_indices) - len(h.target_indices) <= 1
        # halves keep chronological order
        assert list(h.input_indices) == sorted(h.input_indices)
        np.testing.assert_array_equal(h.input_half.data[:, 0, 0], np.array(h.input_indices, float))


class TestBaseline:
    def test_constant_trial_goes_to_zero(self):
        ts = make_trials(np.full((2, 2, 501), 7.0))
        out = baseline_correct(ts, (-100.0, 0.0))
        np.testing.assert_array_equal(out.data, 0.0)

    def test_zero_mean_window_unchanged(self, rng):
        x = rng.normal(size=(3, 501))
        ts = make_trials(x)
        mask = ts.axis.half_open_mask(-100.0, 0.0)
        x = x - x[:, mask].mean(axis=1, keepdims=True)
        ts = make_trials(x)
        out = baseline_correct(ts, (-100.0, 0.0))
        np.testing.assert_allclose(out.data, ts.data, atol=1e-12)

    def test_offset_removed_bump_preserved(self):
        ts0 = make_trials(np.zeros((1, 501)))
        t = ts0.axis.times_ms
        bump = 4.0 * np.exp(-0.5 * ((t - 300.0) / 30.0) ** 2)
        ts = make_trials((3.0 + bump)[None, :])
        out = baseline_correct(ts, (-100.0, 0.0))
        # independent recomputation of the window mean with explicit times
        inside = [i for i, ti in enumerate(t) if -100.0 <= ti < 0.0]
        assert len(inside) == 50
        assert abs(sum(out.data[0, 0, i] for i in inside) / len(inside)) < 1e-9
        expected_offset = sum(3.0 + bump[i] for i in inside) / len(inside)
        np.testing.assert_allclose(out.data[0, 0], 3.0 + bump - expected_offset, atol=1e-12)

    def test_half_open_excludes_end(self):
        # sample at exactly 0 ms must not count toward the baseline
        x = np.zeros(501)
        x[100] = 1000.0  # t = 0 ms
        out = baseline_correct(make_trials(x[None, :]), (-100.0, 0.0))
        assert out.data[0, 0, 0] == 0.0

    def test_empty_window(self):
        with pytest.raises(WindowError):
            baseline_correct(make_trials(np.zeros((1, 10))), (5000.0, 6000.0))

    def test_idempotent(self, rng):
        ts = make_trials(rng.normal(size=(3, 2, 501)))
        once = baseline_correct(ts)
        np.testing.assert_allclose(baseline_correct(once).data, once.data, atol=1e-12)

    def test_commutes_with_crop(self, rng):
        ts = make_trials(rng.normal(size=(3, 501)))
        a = crop(baseline_correct(ts, (-100.0, 0.0)), -100.0, 800.0)
        b = baseline_correct(crop(ts, -100.0, 800.0), (-100.0, 0.0))
        np.testing.assert_allclose(a.data, b.data, atol=1e-12)


class TestCrop:
    def test_full_span_identity(self, rng):
        ts = make_trials(rng.normal(size=(2, 501)))
        out = crop(ts, -200.0, 800.0)
        assert out.axis == ts.axis
        np.testing.assert_array_equal(out.data, ts.data)

    def test_first_sample(self):
        ts = make_trials(np.zeros((1, 501)))
        out = crop(ts, -100.0, 800.0)
        assert out.axis.t0_ms == -100.0
        assert out.n_samples == 451
        assert out.axis.end_ms == 800.0

    def test_idempotent(self, rng):
        ts = make_trials(rng.normal(size=(2, 501)))
        a = crop(ts, -100.0, 600.0)
        b = crop(a, -100.0, 600.0)
        assert a.axis == b.axis
        np.testing.assert_array_equal(a.data, b.data)

    def test_outside(self):
        with pytest.raises(WindowError):
            crop(make_trials(np.zeros((1, 501))), -300.0, 800.0)


class TestSelectChannel:
    def test_select(self, rng):
        ts = make_trials(rng.normal(size=(4, 30, 20)))
        one = select_channel(ts, "ch7")
        assert one.n_channels == 1
        np.testing.assert_array_equal(one.data[:, 0], ts.data[:, 7])
        assert one.axis == ts.axis

    def test_unknown(self):
        ts = make_trials(np.zeros((1, 2, 5)))
        with pytest.raises(ChannelError, match="ch0, ch1"):
            select_channel(ts, "Pz")

    def test_idempotent_on_erp(self):
        erp = make_erp(np.arange(12.0).reshape(3, 4))
        once = select_channel(erp, "ch1")
        twice = select_channel(once, "ch1")
        assert once.channel_names == twice.channel_names
        np.testing.assert_array_equal(twice.data, [[4.0, 5.0, 6.0, 7.0]])


def test_measure_window_validation():
    with pytest.raises(WindowError):
        MeasureWindow(10.0, 10.0)
    with pytest.raises(ConfigError):
        MeasureWindow(0.0, 10.0, "up")
