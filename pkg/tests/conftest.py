import numpy as np
import pytest

from erpforge.core import Erp, TimeAxis, TrialSet


def make_trials(data, rate=500.0, t0=-200.0, names=None, subject="s1", task="P3"):
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, None, :]
    if names is None:
        names = [f"ch{i}" for i in range(data.shape[1])]
    return TrialSet(data, TimeAxis(t0, rate, data.shape[2]), names, subject, task)


def make_erp(data, rate=500.0, t0=-200.0, names=None):
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if names is None:
        names = [f"ch{i}" for i in range(data.shape[0])]
    return Erp(data, TimeAxis(t0, rate, data.shape[1]), names)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
