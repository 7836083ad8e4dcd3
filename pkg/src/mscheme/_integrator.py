"""Adaptive Dormand-Prince 5(4) integration of a linear, envelope-modulated ODE.

The system is ``y' = (L0 + sum_k f_k(t) L_k) y`` with real ``y``. Envelopes
are encoded row-wise in ``env`` as ``[shape, peak, center, width, t_on, t_off]``
with shape 0 = constant, 1 = gaussian, 2 = sine-squared.

Two interchangeable backends exist: the compiled ``mscheme._kernels.dopri5``
and :func:`dopri5_python` below. The compiled one is used when importable,
unless ``MSCHEME_PURE_PYTHON`` is set to a non-empty value other than ``0``.

Both return ``(records, n_steps, n_rejected, status, t_last, y_last)``;
status 0 = finished, 1 = step budget exhausted, 2 = step size underflow,
3 = non-finite error estimate.
"""
import math
import os

import numpy as np

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

STATUS_MESSAGES = {
    0: "ok",
    1: "step budget exhausted before reaching the final time",
    2: "step size underflow",
    3: "non-finite values in the error estimate",
}


def envelope_value(row, t, tmid=None):
    """Envelope of one ``env`` row at time ``t``.

    ``tmid`` decides on/off against the window; integrators pass the step
    midpoint so a step that ends on a switching time sees one side only.
    """
    shape, peak, center, width, t_on, t_off = row
    tm = t if tmid is None else tmid
    if tm < t_on or tm > t_off:
        return 0.0
    if shape == 0:
        return peak
    x = (t - center) / width
    if shape == 1:
        return peak * math.exp(-2.0 * x * x)
    if abs(x) >= 1.0:
        return 0.0
    c = math.cos(0.5 * math.pi * x)
    return peak * c * c


def _rhs(L0, Lk, env, t, tmid, y):
    out = L0 @ y
    for k in range(Lk.shape[0]):
        f = envelope_value(env[k], t, tmid)
        if f != 0.0:
            out += f * (Lk[k] @ y)
    return out


def _wrms(v, y, y2, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y), np.abs(y2))
    return math.sqrt(float(np.mean((v / sc) ** 2)))


def dopri5_python(L0, Lk, env, y0, t0, stops, record, is_break, rtol, atol, max_steps, h_init):
    y = np.array(y0, dtype=float)
    n_stops = len(stops)
    out = []
    t = float(t0)
    s_idx = 0
    while s_idx < n_stops and stops[s_idx] <= t:
        if record[s_idx]:
            out.append(y.copy())
        s_idx += 1

    h = h_init
    if s_idx < n_stops and not h > 0.0:
        tmid = t + 1e-9 * (stops[s_idx] - t)
        f0 = _rhs(L0, Lk, env, t, tmid, y)
        d0 = _wrms(y, y, y, rtol, atol)
        d1 = _wrms(f0, y, y, rtol, atol)
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h0 = min(h0, stops[-1] - t)
        f1 = _rhs(L0, Lk, env, t + h0, tmid, y + h0 * f0)
        d2 = max(d1, _wrms((f1 - f0) / h0, y, y, rtol, atol))
        h1 = max(1e-6, h0 * 1e-3) if d2 <= 1e-15 else (0.01 / d2) ** 0.2
        h = min(100.0 * h0, h1)

    n_steps = n_rejected = status = 0
    fac_max = 10.0
    k1 = None
    while s_idx < n_stops:
        if n_steps >= max_steps:
            status = 1
            break
        t_stop = stops[s_idx]
        h_saved = h
        hit = t + 1.01 * h >= t_stop
        if hit:
            h = t_stop - t
        if h <= 1e-14 * (abs(t) + 1.0):
            status = 2
            break
        tmid = t + 0.5 * h
        if k1 is None:
            k1 = _rhs(L0, Lk, env, t, tmid, y)
        k2 = _rhs(L0, Lk, env, t + C2 * h, tmid, y + h * A21 * k1)
        k3 = _rhs(L0, Lk, env, t + C3 * h, tmid, y + h * (A31 * k1 + A32 * k2))
        k4 = _rhs(L0, Lk, env, t + C4 * h, tmid, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = _rhs(
            L0, Lk, env, t + C5 * h, tmid, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)
        )
        k6 = _rhs(
            L0,
            Lk,
            env,
            t + h,
            tmid,
            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        )
        yn = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = _rhs(L0, Lk, env, t + h, tmid, yn)
        e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = _wrms(e, y, yn, rtol, atol)
        n_steps += 1
        if not math.isfinite(err):
            status = 3
            break
        if err <= 1.0:
            t = t_stop if hit else t + h
            y = yn
            k1 = k7
            fac = fac_max if err == 0.0 else min(fac_max, max(0.2, 0.9 * err**-0.2))
            fac_max = 10.0
            if hit:
                if record[s_idx]:
                    out.append(y.copy())
                if is_break[s_idx]:
                    k1 = None
                s_idx += 1
            h = h * fac
            if hit and h < h_saved:
                h = h_saved
        else:
            n_rejected += 1
            h = h * max(0.2, 0.9 * err**-0.2)
            fac_max = 1.0

    records = np.array(out) if out else np.zeros((0, len(y)))
    return records, n_steps, n_rejected, status, t, y.copy()


def _select_backend():
    flag = os.environ.get("MSCHEME_PURE_PYTHON", "")
    if flag and flag != "0":
        return "python", dopri5_python
    try:
        from ._kernels import dopri5 as compiled
    except ImportError:
        return "python", dopri5_python
    return "compiled", compiled


BACKEND, _dopri5 = _select_backend()


def get_backend(name=None):
    """Return the integrator function for ``name`` ('compiled', 'python') or the default."""
    if name is None:
        return _dopri5
    if name == "python":
        return dopri5_python
    if name == "compiled":
        from ._kernels import dopri5 as compiled

        return compiled
    raise ValueError(f"unknown backend {name!r}")


def integrate(L0, Lk, env, y0, t0, stops, record, is_break, rtol, atol, max_steps, h_init=0.0, backend=None):
    fn = get_backend(backend)
    return fn(
        np.ascontiguousarray(L0, dtype=float),
        np.ascontiguousarray(Lk, dtype=float),
        np.ascontiguousarray(env, dtype=float),
        np.ascontiguousarray(y0, dtype=float),
        float(t0),
        np.ascontiguousarray(stops, dtype=float),
        np.ascontiguousarray(record, dtype=np.uint8),
        np.ascontiguousarray(is_break, dtype=np.uint8),
        float(rtol),
        float(atol),
        int(max_steps),
        float(h_init),
    )
