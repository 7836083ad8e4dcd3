"""Dip detection and least-squares extraction of linewidths, lifetimes and Rabi coefficients.

Fitted quantities use the package units: Gamma and detunings in 2pi*MHz,
normalized Rabi frequencies in 2pi*kHz per sqrt(mW/cm^2), times in us.
Standard errors are statistical only (Gauss-Newton curvature at the
optimum); calibration uncertainty of intensities is not included.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import dynamics as dyn
from . import experiments as ex
from .errors import DomainError

MODEL_KINDS = ("exponential_decay", "loss_line", "dark_resonance")

GTOL = 1e-8
MAX_ITERATIONS = 200
JACOBIAN_REL_STEP = 1e-6


@dataclass
class FitResult:
    parameter_names: list
    values: list
    standard_errors: list
    residual_norm: float
    converged: bool
    iterations: int
    model: str = "custom"
    at_bounds: list = field(default_factory=list)
    message: str = ""
    history: list = field(default_factory=list)
    gradient_norm: float = math.nan

    def __getitem__(self, name):
        return self.values[self.parameter_names.index(name)]

    def stderr(self, name):
        return self.standard_errors[self.parameter_names.index(name)]

    @property
    def params(self):
        return dict(zip(self.parameter_names, self.values))

    def as_dict(self):
        return {
            "model": self.model,
            "params": {
                name: {"value": float(v), "stderr": float(e)}
                for name, v, e in zip(self.parameter_names, self.values, self.standard_errors)
            },
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "at_bounds": [name for name, b in zip(self.parameter_names, self.at_bounds) if b],
            "message": self.message,
        }


@dataclass(frozen=True)
class FreeParameter:
    name: str
    initial: float
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower <= self.initial <= self.upper:
            raise DomainError(
                f"initial guess {self.initial} for {self.name!r} outside bounds [{self.lower}, {self.upper}]"
            )


@dataclass
class ModelSpec:
    kind: str
    fixed: dict = field(default_factory=dict)
    free: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        self.free = [p if isinstance(p, FreeParameter) else FreeParameter(**p) for p in self.free]
        names = [p.name for p in self.free]
        if len(set(names)) != len(names):
            raise DomainError("free parameters must be unique")
        overlap = set(names) & set(self.fixed)
        if overlap:
            raise DomainError(f"parameters both fixed and free: {sorted(overlap)}")

    @property
    def free_names(self):
        return [p.name for p in self.free]


# ---------------------------------------------------------------------------
# generic driver


def numerical_jacobian(fun, p, r0, lower, upper, rel_step=JACOBIAN_REL_STEP):
    """Central differences with step ``rel_step * max(|p_j|, 1e-3)``; one-sided at bounds."""
    n = len(p)
    J = np.empty((len(r0), n))
    for j in range(n):
        h = rel_step * max(abs(p[j]), 1e-3)
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        if up[j] > upper[j]:
            up[j] = p[j]
            J[:, j] = (r0 - np.asarray(fun(dn), float)) / h
        elif dn[j] < lower[j]:
            J[:, j] = (np.asarray(fun(up), float) - r0) / h
        else:
            J[:, j] = (np.asarray(fun(up), float) - np.asarray(fun(dn), float)) / (2 * h)
    return J


def _active(p, g, lower, upper):
    return ((p <= lower) & (g > 0)) | ((p >= upper) & (g < 0))


def least_squares(
    model: Callable,
    init,
    bounds=None,
    names: Optional[Sequence[str]] = None,
    gtol=GTOL,
    max_iterations=MAX_ITERATIONS,
    jacobian: Optional[Callable] = None,
    label="custom",
):
    """Bounded Levenberg-Marquardt on the residual vector ``model(p)``.

    Steps are taken on the parameters not pinned by an active bound and
    then clipped to the box; a trial is accepted only when it lowers the
    sum of squares, so accepted residual norms never increase. Terminates
    when the projected gradient norm drops below ``gtol * (1 + |r|)`` or
    after ``max_iterations`` Jacobian evaluations.

    Raises
    ------
    DomainError
        On fewer residuals than parameters or on NaN residuals.
    """
    p = np.array(init, dtype=float)
    n = len(p)
    names = list(names) if names is not None else [f"p{i}" for i in range(n)]
    if bounds is None:
        lower, upper = np.full(n, -np.inf), np.full(n, np.inf)
    else:
        lower = np.broadcast_to(np.asarray(bounds[0], float), (n,)).copy()
        upper = np.broadcast_to(np.asarray(bounds[1], float), (n,)).copy()
    if np.any(p < lower) or np.any(p > upper):
        raise DomainError("initial parameters outside bounds")

    def evaluate(q):
        r = np.asarray(model(q), dtype=float)
        if not np.all(np.isfinite(r)):
            raise DomainError(f"residuals contain NaN or inf at parameters {q.tolist()}")
        return r

    r = evaluate(p)
    m = len(r)
    if m < n:
        raise DomainError(f"{m} residuals cannot determine {n} parameters")
    cost = float(r @ r)
    history = [math.sqrt(cost)]
    lam = None
    iterations = 0
    converged = False
    message = "iteration limit reached"
    gnorm = math.inf
    J = None

    while iterations < max_iterations:
        J = jacobian(p) if jacobian is not None else numerical_jacobian(evaluate, p, r, lower, upper)
        iterations += 1
        g = J.T @ r
        act = _active(p, g, lower, upper)
        free = ~act
        gnorm = float(np.linalg.norm(g[free]))
        if gnorm < gtol * (1.0 + math.sqrt(cost)):
            converged = True
            message = "projected gradient below tolerance"
            break
        A = J[:, free].T @ J[:, free]
        diag = np.maximum(np.diag(A), 1e-12 * max(1.0, float(np.max(np.diag(A)))))
        if lam is None:
            lam = 1e-3
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g[free])
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p.copy()
            trial[free] += step
            trial = np.clip(trial, lower, upper)
            if np.array_equal(trial, p):
                break
            r_trial = evaluate(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial < cost:
                p, r, cost = trial, r_trial, cost_trial
                history.append(math.sqrt(cost))
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            # no downhill step exists at machine resolution
            converged = gnorm < gtol * (1.0 + math.sqrt(cost))
            message = (
                "projected gradient below tolerance"
                if converged
                else "no further decrease possible; gradient above tolerance"
            )
            break
    else:
        if J is not None:
            g = J.T @ r
            gnorm = float(np.linalg.norm(g[~_active(p, g, lower, upper)]))

    J_final = J if J is not None else numerical_jacobian(evaluate, p, r, lower, upper)
    dof = m - n
    stderr = np.full(n, math.nan)
    if dof > 0:
        s2 = cost / dof
        cov = np.linalg.pinv(J_final.T @ J_final)
        stderr = np.sqrt(np.maximum(np.diag(cov), 0.0) * s2)
    at_bounds = [bool(p[i] <= lower[i] or p[i] >= upper[i]) for i in range(n)]
    if any(at_bounds):
        message += "; solution on bounds: " + ", ".join(
            name for name, b in zip(names, at_bounds) if b
        )
    return FitResult(
        names,
        p.tolist(),
        stderr.tolist(),
        math.sqrt(cost),
        converged,
        iterations,
        model=label,
        at_bounds=at_bounds,
        message=message,
        history=history,
        gradient_norm=gnorm,
    )


def _failed(names, model, message):
    n = len(names)
    return FitResult(
        list(names), [math.nan] * n, [math.nan] * n, math.nan, False, 0, model=model, message=message,
        at_bounds=[False] * n,
    )


# ---------------------------------------------------------------------------
# dip search


@dataclass(frozen=True)
class DipCandidate:
    center: float
    depth: float
    width_estimate: float
    point_indices: tuple

    def __post_init__(self):
        if not 0 < self.depth <= 1:
            raise DomainError("dip depth must lie in (0, 1]")
        idx = list(self.point_indices)
        if idx != list(range(idx[0], idx[-1] + 1)):
            raise DomainError("dip indices must be contiguous")


def running_median(values, window):
    """Centered running median; the window shrinks at the edges."""
    values = np.asarray(values, dtype=float)
    half = window // 2
    n = len(values)
    return np.array([np.median(values[max(0, i - half) : min(n, i + half + 1)]) for i in range(n)])


def detect_dips(spectrum, baseline_window=41, threshold=0.5):
    """Candidate dips: maximal runs with ``survival < threshold * baseline``.

    The baseline is a running median over ``baseline_window`` points, so it
    should span well over twice the widest expected dip. Candidates come
    back deepest first; equal depths are ordered by position.
    """
    s = np.asarray(spectrum.survival, dtype=float)
    x = spectrum.x
    if len(s) < baseline_window:
        raise DomainError(f"spectrum has {len(s)} points, fewer than the baseline window {baseline_window}")
    if not 0 < threshold < 1:
        raise DomainError("threshold must lie in (0, 1)")
    if np.ptp(s) == 0:
        return []
    base = running_median(s, baseline_window)
    below = s < threshold * base
    dips = []
    i = 0
    while i < len(s):
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(s) and below[j + 1]:
            j += 1
        idx = np.arange(i, j + 1)
        weights = base[idx] - s[idx]
        center = float(np.sum(weights * x[idx]) / np.sum(weights))
        depth = float(np.max(1.0 - s[idx] / base[idx]))
        lo = x[i] - 0.5 * (x[i] - x[i - 1]) if i > 0 else x[i]
        hi = x[j] + 0.5 * (x[j + 1] - x[j]) if j + 1 < len(s) else x[j]
        dips.append(DipCandidate(center, min(depth, 1.0), float(hi - lo), tuple(range(i, j + 1))))
        i = j + 1
    return sorted(dips, key=lambda d: (-round(d.depth, 12), d.center))


# ---------------------------------------------------------------------------
# model fits


def fit_exponential(decay, offset=False, tau_bounds=None):
    """Fit ``A exp(-t / tau)`` (plus a constant when ``offset``) to a time-axis spectrum."""
    names = ["tau", "amplitude"] + (["offset"] if offset else [])
    t = decay.x
    y = decay.survival
    if decay.grid.axis != "time":
        raise DomainError("fit_exponential needs a time axis")
    if len(t) < 4:
        raise DomainError("at least four points are needed")
    span = float(t[-1] - t[0]) or 1.0
    lo_tau, hi_tau = tau_bounds or (1e-3 * span, 1e3 * span)

    pos = y > 1e-12
    tau0 = 0.5 * span
    if np.count_nonzero(pos) >= 2:
        slope = np.polyfit(t[pos], np.log(y[pos]), 1)[0]
        if slope < 0:
            tau0 = -1.0 / slope
    tau0 = float(np.clip(tau0, lo_tau, hi_tau))
    amp0 = float(max(y[0], 1e-6) * math.exp(t[0] / tau0))
    init = [tau0, amp0] + ([0.0] if offset else [])
    lower = [lo_tau, 0.0] + ([-1.0] if offset else [])
    upper = [hi_tau, 10.0] + ([1.0] if offset else [])
    init[1] = float(np.clip(init[1], lower[1], upper[1]))

    def residuals(p):
        model = p[1] * np.exp(-t / p[0])
        if offset:
            model = model + p[2]
        return model - y

    res = least_squares(residuals, init, (lower, upper), names, label="exponential_decay")
    if res.at_bounds[0]:
        res.converged = False
        res.message += "; lifetime not determined by the data"
    return res


def _contrast_ok(y):
    return float(np.max(y) - np.min(y)) > 1e-9


def _half_depth_width(x, y):
    """FWHM of the loss ``-ln(survival)`` profile, in x units."""
    loss = -np.log(np.clip(y, 1e-300, 1.0))
    peak = float(np.max(loss))
    if peak <= 0:
        return math.nan
    above = np.nonzero(loss >= 0.5 * peak)[0]
    i, j = above[0], above[-1]
    if i == 0 or j == len(x) - 1:
        return math.nan
    return float(x[j] - x[i])


def loss_line_model(x, wait, intensity, gamma, omega_norm, center, model="rate", tol=dyn.DEFAULT_TOL):
    grid = ex.ScanGrid("detuning_delta3", np.asarray(x, dtype=float) - center)
    spec = ex.loss_spectrum(grid, intensity, wait, gamma, omega_norm, model=model, tol=tol)
    return spec.survival


def fit_loss_line(spectrum, wait, intensity, model="rate", init=None, tol=1e-10):
    """Fit Gamma, the normalized Rabi frequency and the line center.

    ``model='rate'`` uses ``survival = exp(-R(Delta) wait)`` with
    ``R = Omega^2 Gamma / (Gamma^2 + 4 Delta^2)``; ``model='master'`` uses
    the two-level master-equation survival.
    """
    names = ["gamma", "omega_norm", "center"]
    x, y = spectrum.x, spectrum.survival
    if not _contrast_ok(y):
        return _failed(names, "loss_line", "no contrast: survival is flat")
    width = _half_depth_width(x, y)
    if not math.isfinite(width) or (x[-1] - x[0]) < 3.0 * width:
        return _failed(
            names, "loss_line", "insufficient span: the scan must cover at least three linewidths"
        )
    if init is None:
        center0 = float(x[np.argmin(y)])
        gamma0 = width
        r0 = -math.log(max(float(np.min(y)), 1e-12)) / wait
        # r0 = Omega^2 / Gamma (angular), Omega = KHZ * omega_norm * sqrt(I)
        omega0 = math.sqrt(r0 * dyn.MHZ * gamma0) / dyn.KHZ / math.sqrt(intensity)
        init = [gamma0, omega0, center0]
    init = [float(v) for v in init]
    lower = [1e-6, 1e-9, float(x[0])]
    upper = [1e3, 1e9, float(x[-1])]

    def residuals(p):
        return loss_line_model(x, wait, intensity, p[0], p[1], p[2], model=model, tol=tol) - y

    return least_squares(residuals, init, (lower, upper), names, label="loss_line")


DARK_DEFAULTS = {
    "gamma": ex.DEFAULT_GAMMA_MHZ,
    "linewidth": ex.DEFAULT_LINEWIDTH_KHZ,
    "delta4": 0.0,
    "wait": ex.DEFAULT_DARK_WAIT_US,
    "intensity3": 1.0,
    "intensity4": 1.0,
}
DARK_FREE = ("omega3_norm", "omega4_norm", "gamma", "linewidth", "delta4")


def dark_resonance_model(x, params, tol=1e-10):
    grid = ex.ScanGrid("detuning_delta3", np.asarray(x, dtype=float))
    omega3 = params["omega3_norm"] * math.sqrt(params["intensity3"])
    omega4 = params["omega4_norm"] * math.sqrt(params["intensity4"])
    spec = ex.dark_resonance_scan(
        grid,
        params["delta4"],
        omega3,
        omega4,
        params["gamma"],
        (params["linewidth"], params["linewidth"]),
        params["wait"],
        tol=tol,
    )
    return spec.survival


def has_revival(y, margin=0.02):
    """True if some interior point rises ``margin`` above the minima on both sides."""
    y = np.asarray(y, dtype=float)
    best = 0.0
    for i in range(1, len(y) - 1):
        best = max(best, min(y[i] - y[:i].min(), y[i] - y[i + 1 :].min()))
    return best > margin


def fit_dark_resonance(spectrum, model, tol=1e-10):
    """Fit the Lambda-system master equation to a dark-resonance scan.

    ``model.fixed`` supplies everything not fitted: ``intensity3``,
    ``intensity4`` (mW/cm^2), ``wait`` (us), ``delta4``, ``gamma``,
    ``linewidth`` (2pi*kHz, both lasers) and any of ``omega3_norm``,
    ``omega4_norm``. Unset entries fall back to the spectrum metadata and
    then to package defaults.
    """
    if model.kind != "dark_resonance":
        raise DomainError("fit_dark_resonance needs a dark_resonance ModelSpec")
    unknown = set(model.free_names) - set(DARK_FREE)
    if unknown:
        raise DomainError(f"cannot fit {sorted(unknown)}; choose from {DARK_FREE}")
    meta = spectrum.metadata or {}
    params = dict(DARK_DEFAULTS)
    from_meta = {
        "wait": meta.get("wait_us"),
        "delta4": meta.get("delta4_2pi_mhz"),
        "gamma": meta.get("gamma_2pi_mhz"),
        "intensity3": meta.get("intensity3_mw_per_cm2"),
        "intensity4": meta.get("intensity4_mw_per_cm2"),
    }
    params.update({k: v for k, v in from_meta.items() if v is not None})
    params.update(model.fixed)
    names = model.free_names
    x, y = spectrum.x, spectrum.survival
    if not _contrast_ok(y):
        return _failed(names, "dark_resonance", "no contrast: survival is flat")
    omega4_fixed_zero = "omega4_norm" not in names and params.get("omega4_norm", None) == 0
    if not omega4_fixed_zero and not has_revival(y):
        return _failed(names, "dark_resonance", "no two-photon feature: no survival revival found")
    missing = [k for k in ("omega3_norm", "omega4_norm") if k not in names and k not in params]
    if missing:
        raise DomainError(f"{missing} must be fixed or free")

    def residuals(p):
        q = dict(params)
        q.update(zip(names, p))
        return dark_resonance_model(x, q, tol=tol) - y

    init = [p.initial for p in model.free]
    lower = [p.lower for p in model.free]
    upper = [p.upper for p in model.free]
    res = least_squares(residuals, init, (lower, upper), names, label="dark_resonance")
    return res


def default_dark_model(intensity3, intensity4, wait=ex.DEFAULT_DARK_WAIT_US, omega3_guess=6.0,
                       omega4_guess=5.0, gamma=ex.DEFAULT_GAMMA_MHZ,
                       linewidth=ex.DEFAULT_LINEWIDTH_KHZ, delta4=0.0):
    """ModelSpec fitting both normalized Rabi frequencies with the rest fixed."""
    return ModelSpec(
        "dark_resonance",
        fixed={
            "intensity3": intensity3,
            "intensity4": intensity4,
            "wait": wait,
            "gamma": gamma,
            "linewidth": linewidth,
            "delta4": delta4,
        },
        free=[
            FreeParameter("omega3_norm", omega3_guess, 1e-3, 1e3),
            FreeParameter("omega4_norm", omega4_guess, 1e-3, 1e3),
        ],
    )
