"""Spectrum CSV files, JSON reports and whitespace-separated plot data."""
from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

from .errors import DomainError
from .experiments import AXIS_UNITS, ScanGrid, Spectrum

SPECTRUM_MAGIC = "# mscheme spectrum v1"

PLOT_X_COLUMN = {
    "detuning_delta3": "detuning_2pi_mhz",
    "detuning_delta4": "detuning_2pi_mhz",
    "time": "t_us",
    "intensity": "intensity_mw_per_cm2",
}


def fmt(x):
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def dumps_json(obj):
    """Canonical JSON (sorted keys, fixed indentation, trailing newline)."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_text(path, text):
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def save_spectrum(spectrum, path):
    lines = [
        SPECTRUM_MAGIC,
        f"# axis: {spectrum.grid.axis}",
        f"# units: {spectrum.grid.units}",
        "# metadata: " + json.dumps(_plain(spectrum.metadata), sort_keys=True),
    ]
    has_err = spectrum.survival_err is not None
    lines.append("x_value,survival" + (",survival_err" if has_err else ""))
    for i, (x, s) in enumerate(zip(spectrum.x, spectrum.survival)):
        row = [fmt(x), fmt(s)]
        if has_err:
            row.append(fmt(spectrum.survival_err[i]))
        lines.append(",".join(row))
    return write_text(path, "\n".join(lines) + "\n")


def load_spectrum(path):
    """Parse a spectrum CSV; a missing metadata block loads with a warning."""
    path = Path(path)
    axis = None
    metadata = None
    header = None
    xs, ss, es = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("axis:"):
                    axis = body[len("axis:") :].strip()
                elif body.startswith("metadata:"):
                    try:
                        metadata = json.loads(body[len("metadata:") :].strip())
                    except json.JSONDecodeError as exc:
                        raise DomainError(f"{path}:{lineno}: bad metadata JSON: {exc}") from exc
                continue
            if header is None:
                header = [c.strip() for c in next(csv.reader([line]))]
                if header[:2] != ["x_value", "survival"] or len(header) > 3:
                    raise DomainError(f"{path}:{lineno}: expected header x_value,survival[,survival_err]")
                continue
            cells = next(csv.reader([line]))
            if len(cells) != len(header):
                raise DomainError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}")
            try:
                vals = [float(c) for c in cells]
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from exc
            if not 0.0 <= vals[1] <= 1.0:
                raise DomainError(f"{path}:{lineno}: survival {vals[1]} outside [0, 1]")
            xs.append(vals[0])
            ss.append(vals[1])
            if len(vals) == 3:
                es.append(vals[2])
    if header is None:
        raise DomainError(f"{path}: no data header found")
    if metadata is None:
        warnings.warn(f"{path}: no metadata block; metadata set to null", UserWarning, stacklevel=2)
    if axis is None:
        axis = "detuning_delta3"
    if axis not in AXIS_UNITS:
        raise DomainError(f"{path}: unknown axis {axis!r}")
    grid = ScanGrid(axis, np.array(xs))
    return Spectrum(grid, np.array(ss), metadata, np.array(es) if es else None)


def spectrum_columns(spectrum):
    cols = {PLOT_X_COLUMN[spectrum.grid.axis]: spectrum.x, "survival": spectrum.survival}
    if spectrum.survival_err is not None:
        cols["survival_err"] = spectrum.survival_err
    return cols


def trajectory_columns(trajectory):
    cols = {"t_us": trajectory.times}
    pops = trajectory.populations
    for i, label in enumerate(trajectory.labels):
        name = "sink" if label == "sink" else f"pop{label}"
        cols[name] = pops[:, i]
    return cols


def emit_plot_data(data, path):
    """Whitespace-separated columns with a single ``#`` header line.

    ``data`` is a Spectrum, a Trajectory, or a mapping of column name to
    equal-length arrays.
    """
    from .dynamics import Trajectory

    if isinstance(data, Spectrum):
        cols = spectrum_columns(data)
    elif isinstance(data, Trajectory):
        cols = trajectory_columns(data)
    else:
        cols = {k: np.asarray(v, dtype=float) for k, v in dict(data).items()}
    lengths = {len(v) for v in cols.values()}
    if len(lengths) > 1:
        raise DomainError("plot columns must have equal length")
    names = list(cols)
    lines = ["# " + " ".join(names)]
    n = lengths.pop() if lengths else 0
    for i in range(n):
        lines.append(" ".join(fmt(cols[name][i]) for name in names))
    return write_text(path, "\n".join(lines) + "\n")


def load_plot_data(path):
    """Inverse of :func:`emit_plot_data`: dict of column name to array."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise DomainError(f"{path}: missing header line")
        names = header[1:].split()
        rows = [list(map(float, line.split())) for line in fh if line.strip()]
    arr = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return {name: arr[:, i] for i, name in enumerate(names)}


def save_trajectory_csv(trajectory, path):
    cols = trajectory_columns(trajectory)
    names = list(cols)
    lines = [",".join(names)]
    for i in range(len(trajectory.times)):
        lines.append(",".join(fmt(cols[n][i]) for n in names))
    return write_text(path, "\n".join(lines) + "\n")


def load_potential_csv(path):
    """Two-column (r_angstrom, v_cm) potential table."""
    rs, vs = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and not _is_number(row[0]):
                continue
            if len(row) < 2:
                raise DomainError(f"{path}:{lineno}: expected r_angstrom,v_cm")
            try:
                rs.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from exc
    if len(rs) < 4 or np.any(np.diff(rs) <= 0):
        raise DomainError(f"{path}: need at least four strictly increasing radii")
    return np.array(rs), np.array(vs)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True
