import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from erpforge import io
from erpforge.core import TimeAxis, TrialSet, UncertainErp
from erpforge.errors import FormatError, ShapeError

from conftest import make_erp, make_trials


def sample_set(rng, n=3, c=2, t=7):
    return TrialSet(
        rng.normal(size=(n, c, t)),
        TimeAxis(-100.0, 250.0, t),
        [f"E{i}" for i in range(c)],
        subject_id="sub-07",
        task_id="N170",
        annotations={"note": "a b=c"},
    )


class TestEtb:
    def test_round_trip(self, tmp_path, rng):
        ts = sample_set(rng)
        path = tmp_path / "x.etb"
        io.write_etb(ts, path)
        back = io.read_etb(path)
        assert back.channel_names == ts.channel_names
        assert (back.subject_id, back.task_id) == ("sub-07", "N170")
        assert back.annotations == {"note": "a b=c"}
        assert back.axis == ts.axis
        np.testing.assert_array_equal(back.data, ts.data.astype(np.float32))
        # a second round trip is bit-exact
        io.write_etb(back, tmp_path / "y.etb")
        assert (tmp_path / "y.etb").read_bytes() == path.read_bytes()

    def test_layout(self, rng):
        ts = make_trials(np.arange(6.0).reshape(2, 1, 3), names=["Cz"])
        raw = io.encode_etb(ts)
        magic, ver, n, c, t, rate, t0, L = struct.unpack_from("<4sIIIIffI", raw)
        assert (magic, ver, n, c, t, rate, t0) == (b"ERPT", 1, 2, 1, 3, 500.0, -200.0)
        assert L % 4 == 0
        block = raw[32 : 32 + L].rstrip(b"\0").decode()
        assert block.split("\n")[0] == "Cz"
        np.testing.assert_array_equal(np.frombuffer(raw[32 + L :], "<f4"), np.arange(6.0))

    def test_bad_magic(self, rng):
        raw = bytearray(io.encode_etb(sample_set(rng)))
        raw[:4] = b"NOPE"
        with pytest.raises(FormatError, match="magic"):
            io.decode_etb(bytes(raw))

    def test_size_mismatch(self, rng):
        raw = io.encode_etb(sample_set(rng))
        with pytest.raises(FormatError, match=rf"expected {len(raw)} bytes, got {len(raw) - 4}"):
            io.decode_etb(raw[:-4])
        with pytest.raises(FormatError):
            io.decode_etb(raw + b"\0\0\0\0")
        with pytest.raises(FormatError):
            io.decode_etb(raw[:10])

    def test_bad_version(self, rng):
        raw = bytearray(io.encode_etb(sample_set(rng)))
        raw[4:8] = struct.pack("<I", 2)
        with pytest.raises(FormatError, match="version"):
            io.decode_etb(bytes(raw))

    @given(
        data=arrays(np.float32, st.tuples(st.integers(1, 4), st.integers(1, 3), st.integers(1, 9)),
                    elements=st.floats(-1e6, 1e6, width=32)),
        rate=st.sampled_from([128.0, 250.0, 500.0, 1000.0]),
        t0=st.sampled_from([-200.0, -100.0, 0.0, 12.5]),
    )
    @settings(max_examples=60, deadline=None)
    def test_lossless_float32(self, data, rate, t0):
        ts = TrialSet(data.astype(np.float64), TimeAxis(t0, rate, data.shape[2]),
                      [f"ch{i}" for i in range(data.shape[1])])
        back, kind = io.decode_etb(io.encode_etb(ts))
        assert kind == io.KIND_TRIALS
        np.testing.assert_array_equal(back.data, data.astype(np.float64))
        assert back.axis == ts.axis and back.channel_names == ts.channel_names

    def test_erp_and_uncertain(self, tmp_path, rng):
        erp = make_erp(rng.normal(size=(2, 5)))
        io.write_erp(erp, tmp_path / "e.etb", "s1", "P3")
        back, container = io.read_erp(tmp_path / "e.etb")
        np.testing.assert_array_equal(back.data, erp.data.astype(np.float32))
        assert container.task_id == "P3"
        u = UncertainErp(erp, rng.uniform(0.5, 2.0, size=(2, 5)))
        io.write_uncertain(u, tmp_path / "u.etb")
        ub = io.read_uncertain(tmp_path / "u.etb")
        np.testing.assert_array_equal(ub.sigma, u.sigma.astype(np.float32))
        with pytest.raises(FormatError):
            io.read_uncertain(tmp_path / "e.etb")

    def test_trial_file_read_as_erp_is_average(self, tmp_path):
        ts = make_trials(np.array([[1.0, 2.0], [3.0, 6.0]]))
        io.write_etb(ts, tmp_path / "t.etb")
        erp, _ = io.read_erp(tmp_path / "t.etb")
        np.testing.assert_array_equal(erp.data, [[2.0, 4.0]])

    def test_atomic_write_leaves_no_temp(self, tmp_path, rng):
        io.write_etb(sample_set(rng), tmp_path / "a.etb")
        assert [p.name for p in tmp_path.iterdir()] == ["a.etb"]


class TestCsv:
    def test_with_header(self, tmp_path):
        p = tmp_path / "x.csv"
        rows = "\n".join(",".join(str(i * 5 + j) for j in range(5)) for i in range(3))
        p.write_text("# rate=250 t0=-100\n" + rows + "\n")
        ts = io.read_csv(p)
        assert ts.data.shape == (3, 1, 5)
        assert ts.axis == TimeAxis(-100.0, 250.0, 5)
        assert ts.data[2, 0, 4] == 14.0

    def test_missing_header_warns(self):
        with pytest.warns(UserWarning, match="500"):
            ts = io.decode_csv("1,2,3\n4,5,6\n")
        assert ts.axis.sampling_rate_hz == 500.0 and ts.axis.t0_ms == -200.0

    def test_non_numeric(self):
        with pytest.raises(FormatError, match="row 2, column 3"):
            io.decode_csv("# rate=500 t0=0\n1,2,3\n4,5,x\n")

    def test_ragged(self):
        with pytest.raises(FormatError, match="row 2"):
            io.decode_csv("# rate=500 t0=0\n1,2,3\n4,5\n")

    def test_round_trip(self, tmp_path, rng):
        ts = make_trials(rng.normal(size=(4, 9)))
        io.write_csv(ts, tmp_path / "r.csv")
        back = io.read_trials(tmp_path / "r.csv")
        np.testing.assert_array_equal(back.data, ts.data)
        assert back.axis == ts.axis

    def test_multichannel_rejected(self, rng):
        with pytest.raises(ShapeError):
            io.encode_csv(make_trials(rng.normal(size=(2, 2, 3))))
