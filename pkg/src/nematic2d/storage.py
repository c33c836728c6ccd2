"""Binary field snapshots and the diagnostics CSV."""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .director import AngleField
from .dynamics import DiagnosticsRecord, SimState
from .spectral import Grid

MAGIC = b"ELS1"
_HEADER = struct.Struct("<4sIIiid")
COMPONENTS = ("v1", "v2", "theta_remainder")
CSV_COLUMNS = ("t", "energy_E", "dissipation_D", "energy_EH", "v_l2", "v_h1", "theta_residual", "dist_h2")
MANIFEST = "manifest.json"


class SnapshotError(ValueError):
    pass


class CSVFormatError(ValueError):
    pass


class OutputConflict(RuntimeError):
    pass


# ---------------------------------------------------------------- snapshots

def encode_snapshot(state: SimState) -> bytes:
    n = state.grid.n
    a1, a2 = state.theta.winding
    data = np.concatenate([state.v, state.theta.remainder[None]]).astype("<f8")
    return _HEADER.pack(MAGIC, n, len(COMPONENTS), a1, a2, float(state.t)) + data.tobytes(order="C")


def decode_snapshot(buf: bytes) -> SimState:
    if len(buf) < _HEADER.size:
        raise SnapshotError("snapshot truncated before end of header")
    magic, n, count, a1, a2, t = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if count != len(COMPONENTS):
        raise SnapshotError(f"expected {len(COMPONENTS)} components, found {count}")
    expected = _HEADER.size + 8 * count * n * n
    if len(buf) != expected:
        raise SnapshotError(f"snapshot has {len(buf)} bytes, expected {expected}")
    data = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).reshape(count, n, n).astype(float)
    grid = Grid(n)
    return SimState(grid, data[:2].copy(), AngleField(data[2].copy(), (a1, a2)), t)


def write_snapshot(path, state: SimState, config_hash: str | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    path.write_bytes(encode_snapshot(state))
    side = {"format": MAGIC.decode(), "components": list(COMPONENTS), "n": state.grid.n,
            "winding": list(state.theta.winding), "t": state.t, "config_hash": config_hash}
    if extra:
        side.update(extra)
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path


def read_snapshot(path) -> SimState:
    try:
        return decode_snapshot(Path(path).read_bytes())
    except OSError as exc:
        raise SnapshotError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------- CSV

def _fmt(x) -> str:
    return "" if x is None else "%.17g" % x


def format_csv(records) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in records:
        buf.write(",".join(_fmt(getattr(r, c)) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def write_csv(path, records) -> None:
    Path(path).write_text(format_csv(records))


def read_series(path, required=("t",)) -> dict[str, np.ndarray]:
    """Read a numeric CSV with a header row into float columns.

    Empty cells become NaN.  Any malformed row raises :class:`CSVFormatError`
    naming its 1-based line number.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CSVFormatError(f"cannot read {path}: {exc.strerror}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise CSVFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    for name in required:
        if name not in header:
            raise CSVFormatError(f"{path}: missing column {name!r}")
    cols = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != len(header):
            raise CSVFormatError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        for h, cell in zip(header, row):
            cell = cell.strip()
            try:
                cols[h].append(float(cell) if cell else np.nan)
            except ValueError:
                raise CSVFormatError(f"{path}: row {lineno}, column {h!r}: not a number: {cell!r}") from None
    return {h: np.asarray(v, dtype=float) for h, v in cols.items()}


def records_from_series(series: dict[str, np.ndarray]) -> list[DiagnosticsRecord]:
    out = []
    for i in range(len(series["t"])):
        vals = {c: float(series[c][i]) for c in CSV_COLUMNS if c in series}
        if np.isnan(vals.get("dist_h2", np.nan)):
            vals["dist_h2"] = None
        out.append(DiagnosticsRecord(**vals))
    return out


# ---------------------------------------------------------------- output dirs

def claim_output_dir(path, config_hash: str) -> Path:
    """Create ``path`` or reuse it when it belongs to the same configuration."""
    path = Path(path)
    manifest = path / MANIFEST
    if manifest.exists():
        try:
            old = json.loads(manifest.read_text()).get("config_hash")
        except (OSError, ValueError):
            old = None
        if old != config_hash:
            raise OutputConflict(f"{path} holds outputs of a different configuration (hash {old})")
    elif path.exists() and any(path.iterdir()):
        raise OutputConflict(f"{path} is not empty and has no manifest")
    path.mkdir(parents=True, exist_ok=True)
    manifest.write_text(json.dumps({"config_hash": config_hash}, indent=2) + "\n")
    return path
