"""``mscheme`` command-line entry point.

Each subcommand reads a JSON config, runs one computation and writes its
artifacts plus ``manifest.json`` into the output directory.
"""
from __future__ import annotations

import argparse
import hashlib
import platform
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import ccdvr
from . import dynamics as dyn
from . import experiments as ex
from . import fileio
from . import fitting
from . import levels
from ._integrator import BACKEND
from .config import COMMANDS, RunConfig, load_config
from .errors import ConfigurationError, DomainError, IntegrationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4


class ValidationFailure(Exception):
    """Raised when a run completes but its checks do not pass."""


class NumericalFailure(Exception):
    """Raised when a computation finishes without a usable result."""


# ---------------------------------------------------------------------------
# subcommands: each returns a dict {filename: text} of artifacts


def _spectrum_artifacts(spec, stem):
    return {
        f"{stem}.csv": lambda p: fileio.save_spectrum(spec, p),
        f"{stem}.dat": lambda p: fileio.emit_plot_data(spec, p),
    }


def run_scan_loss(p):
    grid = ex.ScanGrid.linspace("detuning_delta3", p["delta3_start_2pi_mhz"], p["delta3_stop_2pi_mhz"],
                                p["delta3_points"])
    spec = ex.loss_spectrum(grid, p["intensity_mw_per_cm2"], p["wait_us"], p["gamma_2pi_mhz"],
                            p["omega_norm_2pi_khz"], p["linewidth_2pi_khz"], p["model"], p["tol"])
    return _spectrum_artifacts(spec, "spectrum"), {"min_survival": float(spec.survival.min())}


def run_scan_decay(p):
    grid = ex.ScanGrid.linspace("time", 0.0, p["t_stop_us"], p["t_points"])
    spec = ex.decay_curve(p["intensity_mw_per_cm2"], grid, p["gamma_2pi_mhz"], p["omega_norm_2pi_khz"],
                          p["detuning_2pi_mhz"], p["linewidth_2pi_khz"], p["model"], p["tol"])
    return _spectrum_artifacts(spec, "spectrum"), {"final_survival": float(spec.survival[-1])}


def dark_grid(p):
    coarse = np.linspace(p["delta3_start_2pi_mhz"], p["delta3_stop_2pi_mhz"], p["delta3_points"])
    pts = coarse
    if p["fine_points"] > 0:
        hw = p["fine_halfwidth_2pi_mhz"]
        pts = np.concatenate([coarse, p["delta4_2pi_mhz"] + np.linspace(-hw, hw, p["fine_points"])])
    return ex.ScanGrid("detuning_delta3", np.unique(np.round(pts, 12)))


def run_scan_dark(p):
    i3, i4 = p["intensity3_mw_per_cm2"], p["intensity4_mw_per_cm2"]
    omega3 = dyn.rabi_from_intensity(p["omega3_norm_2pi_khz"], i3)
    omega4 = dyn.rabi_from_intensity(p["omega4_norm_2pi_khz"], i4)
    lw = p["linewidth_2pi_khz"]
    spec = ex.dark_resonance_scan(dark_grid(p), p["delta4_2pi_mhz"], omega3, omega4, p["gamma_2pi_mhz"],
                                  (lw, lw), p["wait_us"], p["tol"])
    spec.metadata.update(
        {
            "intensity3_mw_per_cm2": i3,
            "intensity4_mw_per_cm2": i4,
            "omega3_norm_2pi_khz": p["omega3_norm_2pi_khz"],
            "omega4_norm_2pi_khz": p["omega4_norm_2pi_khz"],
            "linewidth_2pi_khz": lw,
        }
    )
    return _spectrum_artifacts(spec, "spectrum"), {"revival": bool(fitting.has_revival(spec.survival))}


def stirap_config(p):
    return ex.StirapConfig(
        p["omega1_2pi_mhz"], p["omega2_2pi_mhz"], p["pulse_width_us"], p["pulse_delay_us"],
        p["delta1_2pi_mhz"], p["delta2_2pi_mhz"], p["gamma_2pi_mhz"],
        (p["linewidth1_2pi_khz"], p["linewidth2_2pi_khz"]),
    )


def run_stirap(p):
    cfg = stirap_config(p)
    res = ex.simulate_stirap(cfg, tol=p["tol"], n_samples=p["samples"])
    report = {"efficiency": res.efficiency, "stirap": cfg.snapshot(), "n_steps": res.trajectory.n_steps}
    arts = {
        "efficiency.json": lambda path: fileio.write_text(path, fileio.dumps_json(report)),
        "trajectory.csv": lambda path: fileio.save_trajectory_csv(res.trajectory, path),
        "trajectory.dat": lambda path: fileio.emit_plot_data(res.trajectory, path),
    }
    return arts, {"efficiency": res.efficiency}


def run_roundtrip(p):
    cfg = stirap_config(p)
    res = ex.double_stirap_roundtrip(cfg, p["hold_us"], p["hold_loss_per_us"], tol=p["tol"])
    report = {
        "survival": res.survival,
        "forward_efficiency": res.forward.efficiency,
        "backward_efficiency": res.backward.efficiency,
        "hold_us": p["hold_us"],
        "stirap": cfg.snapshot(),
    }
    arts = {"roundtrip.json": lambda path: fileio.write_text(path, fileio.dumps_json(report))}
    return arts, {"survival": res.survival}


def _pick(cfg_value, meta, meta_key, name):
    if cfg_value is not None:
        return cfg_value
    if meta and meta.get(meta_key) is not None:
        return meta[meta_key]
    raise ConfigurationError(f"{name} is neither configured nor recorded in the spectrum metadata")


def run_fit(p, base_dir=Path(".")):
    path = Path(p["input_csv"])
    if not path.is_absolute():
        path = base_dir / path
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        spec = fileio.load_spectrum(path)
    meta = spec.metadata or {}
    kind = p["model"]
    if kind == "exponential_decay":
        res = fitting.fit_exponential(spec, offset=p["offset"])
    elif kind == "loss_line":
        wait = _pick(p["wait_us"], meta, "wait_us", "wait_us")
        intensity = _pick(p["intensity_mw_per_cm2"], meta, "intensity_mw_per_cm2", "intensity_mw_per_cm2")
        res = fitting.fit_loss_line(spec, wait, intensity, model=p["line_model"], tol=p["tol"])
    else:
        base = dict(
            intensity3=_pick(p["intensity3_mw_per_cm2"], meta, "intensity3_mw_per_cm2", "intensity3_mw_per_cm2"),
            intensity4=_pick(p["intensity4_mw_per_cm2"], meta, "intensity4_mw_per_cm2", "intensity4_mw_per_cm2"),
            wait=_pick(p["wait_us"], meta, "wait_us", "wait_us"),
            gamma=_pick(p["gamma_2pi_mhz"], meta, "gamma_2pi_mhz", "gamma_2pi_mhz"),
            linewidth=_pick(p["linewidth_2pi_khz"], meta, "linewidth_2pi_khz", "linewidth_2pi_khz"),
            delta4=_pick(p["delta4_2pi_mhz"], meta, "delta4_2pi_mhz", "delta4_2pi_mhz"),
        )
        res = None
        # multi-start: scale both initial guesses, keep the lowest residual
        for scale in p["start_scales"]:
            model = fitting.default_dark_model(
                omega3_guess=p["omega3_guess_2pi_khz"] * scale,
                omega4_guess=p["omega4_guess_2pi_khz"] * scale,
                **base,
            )
            trial = fitting.fit_dark_resonance(spec, model, tol=p["tol"])
            if res is None or (trial.converged, -trial.residual_norm) > (res.converged, -res.residual_norm):
                res = trial
    report = res.as_dict()
    arts = {"fit.json": lambda path: fileio.write_text(path, fileio.dumps_json(report))}
    if not res.converged:
        return arts, NumericalFailure(f"fit did not converge: {res.message}")
    return arts, {"residual_norm": res.residual_norm}


def _channel(spec, grid, base_dir):
    if spec["kind"] == "morse":
        return ccdvr.ChannelPotential.morse(grid, spec["d_e_cm"], spec["a_per_angstrom"], spec["r_e_angstrom"],
                                            spec["t_e_cm"])
    if not spec.get("path"):
        raise ConfigurationError("csv channel needs 'path'")
    path = Path(spec["path"])
    if not path.is_absolute():
        path = base_dir / path
    r, v = fileio.load_potential_csv(path)
    return ccdvr.ChannelPotential.tabulated(grid, r, v, spec.get("asymptote_cm"))


def run_dvr(p, base_dir=Path(".")):
    grid = ccdvr.RadialGrid(p["r_min_angstrom"], p["r_max_angstrom"], p["n_points"])
    mu = p["reduced_mass_amu"]
    va = _channel(p["channel_a"], grid, base_dir)
    if p["mode"] == "single":
        found = ccdvr.solve_single_channel(va, reduced_mass=mu, j_total=p["j_total"], max_levels=p["max_levels"])
        found = [replace(lvl, assignment=ccdvr.Assignment("A", i, i)) for i, lvl in enumerate(found)]
    else:
        vb = _channel(p["channel_b"], grid, base_dir)
        c = p["coupling"]
        if c["kind"] == "constant":
            w = ccdvr.constant_coupling(grid, c["w_cm"])
        else:
            w = ccdvr.gaussian_coupling(grid, c["w_cm"], c["r_c_angstrom"], c["sigma_angstrom"])
        system = ccdvr.CoupledSystem(va, vb, w, mu, p["j_total"])
        found = ccdvr.assign_character(ccdvr.solve_coupled(system, max_levels=p["max_levels"]))
    report = {
        "mode": p["mode"],
        "n_points": grid.n_points,
        "spacing_angstrom": grid.spacing,
        "levels": [lvl.as_dict() for lvl in found],
    }
    arts = {"levels.json": lambda path: fileio.write_text(path, fileio.dumps_json(report))}
    if p["wavefunctions"]:
        for i, lvl in enumerate(found):
            table = ccdvr.wavefunction_table(lvl)
            cols = {"r_angstrom": table[:, 0], "psi_a": table[:, 1], "psi_b": table[:, 2]}
            arts[f"wavefunction_{i:03d}.csv"] = _csv_writer(cols)
    return arts, {"n_levels": len(found)}


def _csv_writer(cols):
    def write(path):
        names = list(cols)
        n = len(cols[names[0]])
        lines = [",".join(names)] + [",".join(fileio.fmt(cols[k][i]) for k in names) for i in range(n)]
        return fileio.write_text(path, "\n".join(lines) + "\n")

    return write


def run_validate_table(p, base_dir=Path(".")):
    path = p["table_csv"]
    if path is not None and not Path(path).is_absolute():
        path = base_dir / path
    table = levels.load_table(path)
    report = levels.validate_table(table)
    doc = {
        "ok": report.ok,
        "reference_offset_cm": table.reference_offset_cm,
        "offset_spread_cm": table.offset_spread_cm,
        "entries": report.entries,
    }
    arts = {
        "validation.json": lambda path: fileio.write_text(path, fileio.dumps_json(doc)),
        "levels.csv": lambda path: levels.write_table_csv(table, path),
    }
    if not report.ok:
        bad = ", ".join(f"{e['check']}[{e['row']}]" for e in report.failures)
        return arts, ValidationFailure(f"table validation failed: {bad}")
    return arts, {"checks": len(report)}


RUNNERS = {
    "scan-loss": run_scan_loss,
    "scan-decay": run_scan_decay,
    "scan-dark": run_scan_dark,
    "stirap": run_stirap,
    "roundtrip": run_roundtrip,
    "fit": run_fit,
    "dvr": run_dvr,
    "validate-table": run_validate_table,
}


# ---------------------------------------------------------------------------


def _versions():
    import scipy

    return {
        "mscheme": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(config: RunConfig, out_dir=None, stderr=None):
    """Execute one configured run; returns the process exit status."""
    stderr = sys.stderr if stderr is None else stderr
    out = Path(out_dir if out_dir is not None else config.output_dir)
    base_dir = Path(config.source).parent if config.source else Path(".")
    start = time.perf_counter()
    runner = RUNNERS[config.command]
    status = EXIT_OK
    failure = None
    try:
        if runner in (run_fit, run_dvr, run_validate_table):
            artifacts, summary = runner(config.parameters, base_dir)
        else:
            artifacts, summary = runner(config.parameters)
    except (ConfigurationError, DomainError, KeyError, OSError) as exc:
        print(f"mscheme {config.command}: error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (IntegrationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"mscheme {config.command}: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    if isinstance(summary, Exception):
        failure = summary
        status = EXIT_VALIDATION if isinstance(summary, ValidationFailure) else EXIT_NUMERICAL
        summary = {"error": str(summary)}

    try:
        out.mkdir(parents=True, exist_ok=True)
        outputs = {}
        for name, writer in artifacts.items():
            writer(out / name)
            outputs[name] = _sha256(out / name)
        manifest = {
            "command": config.command,
            "config_hash": config.config_hash(),
            "config": config.semantic(),
            "outputs": outputs,
            "summary": summary,
            "exit_status": status,
            "backend": BACKEND,
            "threads": ex.thread_count(),
            "versions": _versions(),
            "wall_time_s": time.perf_counter() - start,
        }
        fileio.write_text(out / "manifest.json", fileio.dumps_json(manifest))
    except OSError as exc:
        print(f"mscheme {config.command}: error: {exc}", file=stderr)
        return EXIT_CONFIG
    if failure is not None:
        print(f"mscheme {config.command}: {failure}", file=stderr)
    return status


def build_parser():
    parser = argparse.ArgumentParser(prog="mscheme", description="Multi-level molecular transfer simulations.")
    parser.add_argument("--version", action="version", version=f"mscheme {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run {name}")
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a parameter; dotted keys reach nested objects")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        config = load_config(args.config, args.override, command=args.command)
        ex.thread_count()
    except ConfigurationError as exc:
        print(f"mscheme {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with np.errstate(all="ignore"):
        return run(config, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
