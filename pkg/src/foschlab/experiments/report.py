"""Experiment reports and their on-disk formats.

Snapshot files are little-endian: magic ``F4NS``, uint32 version, uint32
ndim, uint32 N per axis, float64 L per axis, float64 t, then the samples as
interleaved (re, im) float64 in row-major order.  Text files are CSV with a
header row and 17 significant digits.
"""

from __future__ import annotations

import datetime as _dt
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..analysis import NormSeries
from ..grid import ComplexField, GridSpec

SNAPSHOT_MAGIC = b"F4NS"
SNAPSHOT_VERSION = 1
FLOAT_FMT = "%.17g"


@dataclass
class Verdict:
    criterion: str
    passed: bool
    measured: float
    tolerance: float
    note: str = ""


@dataclass
class ExperimentReport:
    experiment_kind: str
    config: dict = field(default_factory=dict)
    series: list[NormSeries] = field(default_factory=list)
    fitted: list[tuple[str, float, float]] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    metrics: list[dict] = field(default_factory=list)
    metrics_p: float = 2.0
    snapshots: list[tuple[float, ComplexField]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, criterion: str) -> Verdict:
        for v in self.verdicts:
            if v.criterion == criterion:
                return v
        raise KeyError(criterion)

    def add_verdict(self, criterion, passed, measured, tolerance, note=""):
        self.verdicts.append(Verdict(criterion, bool(passed), float(measured), float(tolerance), note))

    def fit(self, name: str) -> tuple[float, float]:
        for n, v, s in self.fitted:
            if n == name:
                return v, s
        raise KeyError(name)


# --------------------------------------------------------------------------
# snapshots

def write_snapshot(path, t: float, f: ComplexField) -> Path:
    path = Path(path)
    g = f.grid
    head = SNAPSHOT_MAGIC + struct.pack("<II", SNAPSHOT_VERSION, g.ndim)
    head += struct.pack(f"<{g.ndim}I", *g.points)
    head += struct.pack(f"<{g.ndim}d", *g.half_width)
    head += struct.pack("<d", float(t))
    data = np.ascontiguousarray(f.physical().samples, dtype="<c16").tobytes()
    try:
        path.write_bytes(head + data)
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def read_snapshot(path) -> tuple[float, ComplexField]:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    off = 12
    points = struct.unpack_from(f"<{ndim}I", raw, off)
    off += 4 * ndim
    widths = struct.unpack_from(f"<{ndim}d", raw, off)
    off += 8 * ndim
    (t,) = struct.unpack_from("<d", raw, off)
    off += 8
    grid = GridSpec(ndim, tuple(points), tuple(widths))
    data = np.frombuffer(raw, dtype="<c16", offset=off)
    if data.size != grid.size:
        raise ValueError(f"{path}: expected {grid.size} samples, found {data.size}")
    return t, ComplexField(grid, data.reshape(grid.shape))


# --------------------------------------------------------------------------
# text files

def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", text).strip("_") or "series"


def metrics_columns(p: float) -> list[str]:
    return ["t", "mass", "energy", "h2", "linf", f"weak_lp_{p:g}"]


def write_csv(path, header: list[str], rows: np.ndarray) -> Path:
    path = Path(path)
    rows = np.asarray(rows, dtype=float).reshape(-1, len(header))
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            if rows.size:
                np.savetxt(fh, rows, fmt=FLOAT_FMT, delimiter=",")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    if not body.strip():
        return header, np.empty((0, len(header)))
    rows = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    return header, rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return FLOAT_FMT % v
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(v, sort_keys=True, default=_json_default)
    return str(v)


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def summary_lines(report: ExperimentReport, timestamp: str | None = None) -> list[str]:
    lines = [f"experiment_kind: {report.experiment_kind}"]
    for k in sorted(report.config):
        lines.append(f"config.{k}: {_fmt(report.config[k])}")
    for k in sorted(report.provenance):
        lines.append(f"provenance.{k}: {_fmt(report.provenance[k])}")
    for name, value, err in report.fitted:
        lines.append(f"fit.{name}: {FLOAT_FMT % value} +- {FLOAT_FMT % err}")
    for v in report.verdicts:
        status = "pass" if v.passed else "fail"
        note = f" ({v.note})" if v.note else ""
        lines.append(f"verdict.{v.criterion}: {status} measured={FLOAT_FMT % v.measured} "
                     f"tolerance={FLOAT_FMT % v.tolerance}{note}")
    lines.append(f"overall: {'pass' if report.passed else 'fail'}")
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    lines.append(f"timestamp (nondeterministic): {timestamp}")
    return lines


def persist_report(report: ExperimentReport, out_dir) -> list[Path]:
    """Write metrics.csv, one CSV per series, snapshots and summary.txt."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = []
    cols = metrics_columns(report.metrics_p)
    rows = np.array([[m[c] for c in cols] for m in report.metrics], dtype=float)
    paths.append(write_csv(out / "metrics.csv", cols, rows.reshape(-1, len(cols))))
    for i, s in enumerate(report.series):
        name = out / f"series_{i}_{_slug(s.norm_kind + ('_' + s.label if s.label else ''))}.csv"
        paths.append(write_csv(name, ["t", "value"], np.column_stack([s.times, s.values])))
    for i, (t, f) in enumerate(report.snapshots):
        paths.append(write_snapshot(out / f"snapshot_{i:05d}.f4ns", t, f))
    summary = out / "summary.txt"
    try:
        summary.write_text("\n".join(summary_lines(report)) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {summary}: {exc}") from exc
    paths.append(summary)
    return paths
