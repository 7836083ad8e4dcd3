"""Scan drivers: one-colour loss spectra, decay curves, dark-resonance scans and STIRAP.

Survival is ``1 - P(sink)``: the fraction of molecules not lost through
the decaying excited levels.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import dynamics as dyn
from .errors import ConfigurationError, DomainError, IntegrationError

AXES = ("detuning_delta3", "detuning_delta4", "time", "intensity")
AXIS_UNITS = {
    "detuning_delta3": "2pi_mhz",
    "detuning_delta4": "2pi_mhz",
    "time": "us",
    "intensity": "mw_per_cm2",
}

DEFAULT_LOSS_WAIT_US = 20.0
DEFAULT_DECAY_SPAN_US = 50.0
DEFAULT_DARK_WAIT_US = 100.0
DEFAULT_GAMMA_MHZ = 2.0
DEFAULT_LINEWIDTH_KHZ = 1.0

THREADS_ENV = "MSCHEME_THREADS"


@dataclass(frozen=True)
class ScanGrid:
    axis: str
    points: np.ndarray

    def __post_init__(self):
        if self.axis not in AXES:
            raise DomainError(f"unknown scan axis {self.axis!r}")
        pts = np.array(self.points, dtype=float)
        pts.setflags(write=False)
        if pts.ndim != 1 or len(pts) < 2:
            raise DomainError("a scan grid needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("scan grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, axis, start, stop, num):
        return cls(axis, np.linspace(start, stop, num))

    @classmethod
    def stepped(cls, axis, start, stop, step):
        n = int(round((stop - start) / step))
        return cls(axis, start + step * np.arange(n + 1))

    @property
    def units(self):
        return AXIS_UNITS[self.axis]

    def __len__(self):
        return len(self.points)


@dataclass
class Spectrum:
    grid: ScanGrid
    survival: np.ndarray
    metadata: dict = field(default_factory=dict)
    survival_err: Optional[np.ndarray] = None

    def __post_init__(self):
        s = np.array(self.survival, dtype=float)
        if s.shape != (len(self.grid),):
            raise DomainError("survival must have one value per grid point")
        if np.any(~np.isfinite(s)) or np.any(s < 0) or np.any(s > 1):
            raise DomainError("survival fractions must lie in [0, 1]")
        self.survival = s
        if self.survival_err is not None:
            err = np.array(self.survival_err, dtype=float)
            if err.shape != s.shape:
                raise DomainError("survival_err must match survival")
            self.survival_err = err

    @property
    def x(self):
        return self.grid.points

    def __len__(self):
        return len(self.survival)


@dataclass
class EfficiencyResult:
    efficiency: float
    trajectory: dyn.Trajectory
    target_level: int = 2

    def __post_init__(self):
        final = float(self.trajectory.populations[-1, self.target_level])
        self.efficiency = float(min(1.0, max(0.0, final)))


@dataclass(frozen=True)
class StirapConfig:
    """Counterintuitive two-pulse transfer |1> -> |3> via the decaying |2>.

    Rabi frequencies in 2pi*MHz, times in us, detunings in 2pi*MHz, decay in
    2pi*MHz, linewidths (L1, L2) in 2pi*kHz. Gaussian pulse ``L2`` is centred
    at 0 and ``L1`` at ``pulse_delay``.
    """

    omega_peak_1: float = 3.0
    omega_peak_2: float = 6.0
    pulse_width: float = 10.0
    pulse_delay: float = 7.0
    delta1: float = 0.0
    delta2: float = 0.0
    excited_decay: float = 2.0
    laser_linewidths: tuple = (0.0, 0.0)
    span_widths: float = 3.0

    def __post_init__(self):
        if not (self.pulse_width > 0 and self.pulse_delay > 0):
            raise ConfigurationError("pulse width and delay must be positive")
        if self.omega_peak_1 < 0 or self.omega_peak_2 < 0:
            raise ConfigurationError("peak Rabi frequencies must be non-negative")
        lw = tuple(float(x) for x in np.broadcast_to(self.laser_linewidths, (2,)))
        object.__setattr__(self, "laser_linewidths", lw)

    @property
    def t_span(self):
        pad = self.span_widths * self.pulse_width
        return (-pad, self.pulse_delay + pad)

    def lasers(self, reverse=False):
        """L1 and L2 with Gaussian envelopes; ``reverse`` swaps the pulse order."""
        c2, c1 = (self.pulse_delay, 0.0) if reverse else (0.0, self.pulse_delay)
        g1, g2 = self.laser_linewidths
        return [
            dyn.LaserField.from_rabi(
                1,
                self.omega_peak_1,
                detuning=self.delta1,
                linewidth=g1,
                envelope=dyn.PulseEnvelope("gaussian", 1.0, c1, self.pulse_width),
            ),
            dyn.LaserField.from_rabi(
                2,
                self.omega_peak_2,
                detuning=self.delta2,
                linewidth=g2,
                envelope=dyn.PulseEnvelope("gaussian", 1.0, c2, self.pulse_width),
            ),
        ]

    def snapshot(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["laser_linewidths"] = list(self.laser_linewidths)
        return d


def thread_count():
    raw = os.environ.get(THREADS_ENV, "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        if n < 1:
            raise ConfigurationError(f"{THREADS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _map_points(fn, points, threads=None):
    """Evaluate ``fn`` on every point; results keep grid order."""
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(points) < 2:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, points))


def _survival(trajectory, sink):
    s = 1.0 - trajectory.populations[:, sink]
    return np.clip(s, 0.0, 1.0)


def _point_failure(axis, value, exc):
    err = IntegrationError(
        f"propagation failed at {axis} = {value!r}: {exc}",
        last_time=exc.last_time,
        last_state=exc.last_state,
    )
    err.scan_value = value
    return err


def _two_level_survival(delta3, rabi_khz, gamma, wait, linewidth, tol, backend):
    scheme = dyn.two_level_scheme(gamma)
    laser = dyn.LaserField(3, delta3, rabi_khz, 1.0, linewidth)
    rho0 = dyn.DensityOperator.pure(scheme.dimension, 0)
    tr = dyn.propagate(rho0, scheme, [laser], (0.0, wait), tol=tol, backend=backend)
    return float(_survival(tr, scheme.sink)[-1])


def loss_spectrum(
    delta3_grid,
    intensity,
    wait=DEFAULT_LOSS_WAIT_US,
    gamma=DEFAULT_GAMMA_MHZ,
    omega_norm=6.0,
    linewidth=0.0,
    model="master",
    tol=dyn.DEFAULT_TOL,
    backend=None,
    threads=None,
):
    """Survival after irradiating |3> with L3 for ``wait`` us, versus Delta3.

    ``model='master'`` integrates the two-level master equation with a sink;
    ``model='rate'`` uses the adiabatic-elimination loss rate.
    """
    if not wait > 0:
        raise DomainError("wait time must be positive")
    if delta3_grid.axis != "detuning_delta3":
        raise DomainError("loss_spectrum scans the detuning_delta3 axis")
    rabi = dyn.rabi_from_intensity(omega_norm, intensity)
    meta = {
        "experiment": "loss",
        "intensity_mw_per_cm2": intensity,
        "omega_norm_2pi_khz": omega_norm,
        "rabi_2pi_khz": rabi,
        "gamma_2pi_mhz": gamma,
        "linewidth_2pi_khz": linewidth,
        "wait_us": wait,
        "model": model,
    }
    if model == "rate":
        rate = dyn.adiabatic_loss_rate(rabi, gamma, delta3_grid.points)
        return Spectrum(delta3_grid, np.exp(-rate * wait), meta)
    if model != "master":
        raise DomainError(f"unknown model {model!r}")

    def point(delta3):
        try:
            return _two_level_survival(delta3, rabi, gamma, wait, linewidth, tol, backend)
        except IntegrationError as exc:
            raise _point_failure("delta3", delta3, exc) from exc

    survival = _map_points(point, delta3_grid.points.tolist(), threads)
    return Spectrum(delta3_grid, np.array(survival), meta)


def decay_curve(
    intensity,
    time_grid,
    gamma=DEFAULT_GAMMA_MHZ,
    omega_norm=6.0,
    detuning=0.0,
    linewidth=0.0,
    model="master",
    tol=dyn.DEFAULT_TOL,
    backend=None,
):
    """Survival versus irradiation time with L3 held on resonance."""
    if time_grid.axis != "time":
        raise DomainError("decay_curve needs a time axis")
    if time_grid.points[0] < 0:
        raise DomainError("irradiation times must be non-negative")
    rabi = dyn.rabi_from_intensity(omega_norm, intensity)
    meta = {
        "experiment": "decay",
        "intensity_mw_per_cm2": intensity,
        "omega_norm_2pi_khz": omega_norm,
        "rabi_2pi_khz": rabi,
        "gamma_2pi_mhz": gamma,
        "detuning_2pi_mhz": detuning,
        "linewidth_2pi_khz": linewidth,
        "model": model,
    }
    t = time_grid.points
    if model == "rate":
        rate = dyn.adiabatic_loss_rate(rabi, gamma, detuning)
        return Spectrum(time_grid, np.exp(-rate * t), meta)
    if model != "master":
        raise DomainError(f"unknown model {model!r}")
    scheme = dyn.two_level_scheme(gamma)
    laser = dyn.LaserField(3, detuning, rabi, 1.0, linewidth)
    rho0 = dyn.DensityOperator.pure(scheme.dimension, 0)
    try:
        tr = dyn.propagate(rho0, scheme, [laser], (0.0, t[-1]), tol=tol, t_eval=t, backend=backend)
    except IntegrationError as exc:
        raise _point_failure("time", float(exc.last_time or 0.0), exc) from exc
    return Spectrum(time_grid, _survival(tr, scheme.sink), meta)


def dark_resonance_scan(
    delta3_grid,
    delta4=0.0,
    omega3=0.0,
    omega4=0.0,
    gamma=DEFAULT_GAMMA_MHZ,
    linewidths=(DEFAULT_LINEWIDTH_KHZ, DEFAULT_LINEWIDTH_KHZ),
    wait=DEFAULT_DARK_WAIT_US,
    tol=dyn.DEFAULT_TOL,
    backend=None,
    threads=None,
):
    """Survival of molecules starting in |3> with L3 scanned and L4 fixed.

    ``omega3`` and ``omega4`` are Rabi frequencies in 2pi*kHz,
    ``linewidths`` the (L3, L4) linewidths in 2pi*kHz. With ``omega4 == 0``
    level |5> is decoupled and the scan is the two-level loss spectrum.
    """
    if not wait > 0:
        raise DomainError("wait time must be positive")
    if delta3_grid.axis != "detuning_delta3":
        raise DomainError("dark_resonance_scan scans the detuning_delta3 axis")
    g3, g4 = (float(x) for x in np.broadcast_to(linewidths, (2,)))
    meta = {
        "experiment": "dark",
        "delta4_2pi_mhz": delta4,
        "rabi3_2pi_khz": omega3,
        "rabi4_2pi_khz": omega4,
        "gamma_2pi_mhz": gamma,
        "linewidths_2pi_khz": [g3, g4],
        "wait_us": wait,
    }
    if omega4 == 0:
        spec = loss_spectrum(
            delta3_grid, 1.0, wait, gamma, omega3, g3, tol=tol, backend=backend, threads=threads
        )
        return Spectrum(delta3_grid, spec.survival, meta)

    scheme = dyn.lambda_scheme(gamma)
    rho0 = dyn.DensityOperator.pure(scheme.dimension, 0)

    def point(delta3):
        lasers = [
            dyn.LaserField(3, delta3, omega3, 1.0, g3),
            dyn.LaserField(4, delta4, omega4, 1.0, g4),
        ]
        try:
            tr = dyn.propagate(rho0, scheme, lasers, (0.0, wait), tol=tol, backend=backend)
        except IntegrationError as exc:
            raise _point_failure("delta3", delta3, exc) from exc
        return float(_survival(tr, scheme.sink)[-1])

    survival = _map_points(point, delta3_grid.points.tolist(), threads)
    return Spectrum(delta3_grid, np.array(survival), meta)


def _check_overlap(config):
    if config.pulse_delay >= 2.0 * config.pulse_width:
        warnings.warn(
            f"STIRAP pulses barely overlap (delay {config.pulse_delay} us, width {config.pulse_width} us)",
            RuntimeWarning,
            stacklevel=3,
        )


def simulate_stirap(config, tol=dyn.DEFAULT_TOL, n_samples=201, backend=None, rho0=None, reverse=False):
    """Forward (or, with ``reverse``, backward) STIRAP between |1> and |3>.

    Efficiency is the final population of the target level: |3> forward,
    |1> backward.
    """
    _check_overlap(config)
    scheme = dyn.stirap_scheme(config.excited_decay)
    if rho0 is None:
        rho0 = dyn.DensityOperator.pure(scheme.dimension, 2 if reverse else 0)
    t0, t1 = config.t_span
    t_eval = np.linspace(t0, t1, max(2, n_samples))
    tr = dyn.propagate(rho0, scheme, config.lasers(reverse), (t0, t1), tol=tol, t_eval=t_eval, backend=backend)
    return EfficiencyResult(0.0, tr, target_level=0 if reverse else 2)


def hold(rho, config, wait, hold_loss_rate=0.0, tol=dyn.DEFAULT_TOL, backend=None):
    """Free evolution between the two transfers, lasers off.

    ``hold_loss_rate`` (1/us) empties |3> into the sink, e.g. resonant L3
    excitation during the hold.
    """
    if wait < 0:
        raise DomainError("hold time must be non-negative")
    base = dyn.stirap_scheme(config.excited_decay)
    if wait == 0:
        return rho
    levels = list(base.levels)
    levels[2] = dyn.Level("3", hold_loss_rate / dyn.MHZ)
    scheme = dyn.DynamicalScheme(tuple(levels), base.couplings)
    off = [replace(laser, intensity=0.0) for laser in config.lasers()]
    tr = dyn.propagate(rho, scheme, off, (0.0, wait), tol=tol, backend=backend)
    return tr.final


@dataclass
class RoundTripResult:
    survival: float
    forward: EfficiencyResult
    backward: EfficiencyResult

    def __float__(self):
        return self.survival


def double_stirap_roundtrip(config, wait=0.0, hold_losses=0.0, tol=dyn.DEFAULT_TOL, backend=None):
    """|1> -> |3>, hold for ``wait`` us, |3> -> |1>; returns the round-trip result.

    ``float(result)`` is the final |1> population.
    """
    fwd = simulate_stirap(config, tol=tol, backend=backend)
    mid = hold(fwd.trajectory.final, config, wait, hold_losses, tol=tol, backend=backend)
    back = simulate_stirap(config, tol=tol, backend=backend, rho0=mid, reverse=True)
    return RoundTripResult(back.efficiency, fwd, back)
