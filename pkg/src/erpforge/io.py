"""ETB binary trial files, single-channel CSV and atomic output helpers.

ETB layout (little-endian)::

    offset  size  field
    0       4     magic b"ERPT"
    4       4     version (uint32, = 1)
    8       4     n_trials (uint32)
    12      4     n_channels (uint32)
    16      4     n_samples (uint32)
    20      4     sampling_rate_hz (float32)
    24      4     t0_ms (float32)
    28      4     name_block_len (uint32)
    32      L     UTF-8 name block, NUL padded to L bytes
    32+L    4*N   float32 samples, [trial][channel][sample] row-major

The name block holds one channel name per line. Lines after the channel
names of the form ``@key=value`` carry metadata: ``subject_id``,
``task_id``, ``kind`` and free-form annotations.
"""

from __future__ import annotations

import io as _io
import os
import struct
import sys
import tempfile
import warnings
from pathlib import Path
from typing import Union

import numpy as np

from .core import Erp, TimeAxis, TrialSet, UncertainErp
from .errors import FormatError, ShapeError

MAGIC = b"ERPT"
VERSION = 1
HEADER = struct.Struct("<4sIIIIffI")

KIND_TRIALS = "trials"
KIND_ERP = "erp"
KIND_UNCERTAIN = "uncertain_erp"

CSV_DEFAULT_RATE = 500.0
CSV_DEFAULT_T0 = -200.0

PathLike = Union[str, os.PathLike]


# ---------------------------------------------------------------------------
# Byte-level helpers

def atomic_write_bytes(path: PathLike, payload: bytes) -> None:
    """Write ``payload`` to ``path`` via a temp file and rename; ``-`` means stdout."""
    if str(path) == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_bytes(path: PathLike) -> bytes:
    if str(path) == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


# ---------------------------------------------------------------------------
# ETB

def encode_etb(trials: TrialSet, kind: str = KIND_TRIALS) -> bytes:
    lines = list(trials.channel_names)
    for name in lines:
        if "\n" in name or name.startswith("@"):
            raise FormatError(f"channel name {name!r} cannot be stored in an ETB name block")
    meta = {"kind": kind, "subject_id": trials.subject_id, "task_id": trials.task_id}
    meta.update(trials.annotations)
    for key, value in meta.items():
        if "\n" in key or "=" in key or "\n" in str(value):
            raise FormatError(f"metadata {key!r} cannot be stored in an ETB name block")
        lines.append(f"@{key}={value}")
    block = "\n".join(lines).encode("utf-8")
    block += b"\0" * (-len(block) % 4)
    header = HEADER.pack(
        MAGIC,
        VERSION,
        trials.n_trials,
        trials.n_channels,
        trials.n_samples,
        trials.axis.sampling_rate_hz,
        trials.axis.t0_ms,
        len(block),
    )
    data = np.ascontiguousarray(trials.data, dtype="<f4").tobytes()
    return header + block + data


def decode_etb(raw: bytes) -> tuple[TrialSet, str]:
    if len(raw) < HEADER.size:
        raise FormatError(f"file too short for an ETB header: {len(raw)} < {HEADER.size} bytes")
    magic, version, n_tr, n_ch, n_s, rate, t0, name_len = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}; expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported ETB version {version}")
    if min(n_tr, n_ch, n_s) < 1:
        raise FormatError(f"dimensions must be >= 1, got {n_tr}x{n_ch}x{n_s}")
    expected = HEADER.size + name_len + 4 * n_tr * n_ch * n_s
    if len(raw) != expected:
        raise FormatError(f"payload size mismatch: expected {expected} bytes, got {len(raw)}")
    block = raw[HEADER.size : HEADER.size + name_len].rstrip(b"\0").decode("utf-8")
    lines = block.split("\n") if block else []
    if len(lines) < n_ch:
        raise FormatError(f"name block has {len(lines)} lines for {n_ch} channels")
    names, extra = lines[:n_ch], lines[n_ch:]
    meta = {}
    for line in extra:
        if not line.startswith("@") or "=" not in line:
            raise FormatError(f"malformed metadata line {line!r}")
        key, value = line[1:].split("=", 1)
        meta[key] = value
    kind = meta.pop("kind", KIND_TRIALS)
    subject = meta.pop("subject_id", "")
    task = meta.pop("task_id", "")
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER.size + name_len).reshape(n_tr, n_ch, n_s)
    axis = TimeAxis(float(t0), float(rate), n_s)
    return TrialSet(data.astype(np.float64), axis, names, subject, task, meta), kind


def write_etb(trials: TrialSet, path: PathLike, kind: str = KIND_TRIALS) -> None:
    atomic_write_bytes(path, encode_etb(trials, kind))


def read_etb(path: PathLike) -> TrialSet:
    return decode_etb(read_bytes(path))[0]


def erp_as_trials(erp: Erp, subject_id: str = "", task_id: str = "") -> TrialSet:
    return TrialSet(erp.data[None], erp.axis, erp.channel_names, subject_id, task_id)


def write_erp(erp: Erp, path: PathLike, subject_id: str = "", task_id: str = "") -> None:
    write_etb(erp_as_trials(erp, subject_id, task_id), path, KIND_ERP)


def read_erp(path: PathLike) -> tuple[Erp, TrialSet]:
    """Load an ERP file; trial files are reduced to their simple average.

    Returns the ERP and the decoded container (for its labels).
    """
    trials, kind = decode_etb(read_bytes(path))
    if kind == KIND_UNCERTAIN:
        data = trials.data[0]
    else:
        data = trials.data.mean(axis=0)
    return Erp(data, trials.axis, trials.channel_names), trials


def write_uncertain(erp: UncertainErp, path: PathLike) -> None:
    stacked = np.stack([erp.mean.data, erp.sigma])
    trials = TrialSet(stacked, erp.mean.axis, erp.mean.channel_names)
    write_etb(trials, path, KIND_UNCERTAIN)


def read_uncertain(path: PathLike) -> UncertainErp:
    trials, kind = decode_etb(read_bytes(path))
    if kind != KIND_UNCERTAIN or trials.n_trials != 2:
        raise FormatError(f"{path}: not an uncertain-ERP file (kind={kind!r})")
    mean = Erp(trials.data[0], trials.axis, trials.channel_names)
    return UncertainErp(mean, trials.data[1])


# ---------------------------------------------------------------------------
# CSV

def _parse_csv_header(line: str) -> tuple[float, float]:
    fields = dict(tok.split("=", 1) for tok in line.lstrip("#").split() if "=" in tok)
    try:
        return float(fields["rate"]), float(fields["t0"])
    except (KeyError, ValueError):
        raise FormatError(f"CSV header must read '# rate=<hz> t0=<ms>', got {line!r}") from None


def decode_csv(text: str, source: str = "<csv>") -> TrialSet:
    """Parse a single-channel CSV: one trial per row, one sample per column."""
    rate = t0 = None
    rows = []
    row_no = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if rate is None and "rate=" in line:
                rate, t0 = _parse_csv_header(line)
            continue
        row_no += 1
        cells = [c.strip() for c in line.split(",")]
        values = []
        for col, cell in enumerate(cells, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise FormatError(
                    f"{source}: non-numeric cell {cell!r} at row {row_no}, column {col}"
                ) from None
        if rows and len(values) != len(rows[0]):
            raise FormatError(
                f"{source}: ragged row {row_no} has {len(values)} columns, expected {len(rows[0])}"
            )
        rows.append(values)
    if not rows:
        raise FormatError(f"{source}: no data rows")
    if rate is None:
        warnings.warn(
            f"{source}: no '# rate=... t0=...' header; assuming {CSV_DEFAULT_RATE} Hz "
            f"and t0 = {CSV_DEFAULT_T0} ms",
            stacklevel=2,
        )
        rate, t0 = CSV_DEFAULT_RATE, CSV_DEFAULT_T0
    data = np.asarray(rows)[:, None, :]
    try:
        return TrialSet(data, TimeAxis(t0, rate, data.shape[2]), ("ch0",))
    except ShapeError as exc:
        raise FormatError(f"{source}: {exc}") from None


def read_csv(path: PathLike) -> TrialSet:
    return decode_csv(read_bytes(path).decode("utf-8"), str(path))


def encode_csv(trials: TrialSet) -> bytes:
    if trials.n_channels != 1:
        raise ShapeError("CSV holds a single channel; select one first")
    out = _io.StringIO()
    out.write(f"# rate={trials.axis.sampling_rate_hz!r} t0={trials.axis.t0_ms!r}\n")
    for row in trials.data[:, 0, :]:
        out.write(",".join(repr(float(v)) for v in row))
        out.write("\n")
    return out.getvalue().encode("utf-8")


def write_csv(trials: TrialSet, path: PathLike) -> None:
    atomic_write_bytes(path, encode_csv(trials))


def read_trials(path: PathLike) -> TrialSet:
    """Read ETB or CSV, chosen by extension (stdin is assumed to be ETB)."""
    if str(path).lower().endswith(".csv"):
        return read_csv(path)
    return read_etb(path)
