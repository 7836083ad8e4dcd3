import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from mscheme import _integrator
from mscheme import dynamics as dyn

from schemes import random_scheme, random_state

HAVE_COMPILED = True
try:
    _integrator.get_backend("compiled")
except ImportError:  # pragma: no cover
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")


def _run(L0, y0, stops, backend, tol=1e-10):
    n = len(y0)
    return _integrator.integrate(
        L0, np.zeros((0, n, n)), np.zeros((0, 6)), y0, 0.0, stops,
        np.ones(len(stops), np.uint8), np.zeros(len(stops), np.uint8), tol, tol * 1e-2, 100000,
        backend=backend,
    )


@pytest.mark.parametrize("backend", ["python", pytest.param("compiled", marks=needs_compiled)])
def test_linear_system_matches_expm(backend):
    rng = np.random.default_rng(1)
    A = rng.normal(size=(5, 5))
    A = A - A.T - 0.3 * np.eye(5)
    y0 = rng.normal(size=5)
    stops = np.array([0.5, 1.0, 2.0])
    rec, n_steps, n_rej, status, t_last, _ = _run(A, y0, stops, backend)
    assert status == 0 and t_last == 2.0
    for t, y in zip(stops, rec):
        assert np.allclose(y, expm(A * t) @ y0, rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("backend", ["python", pytest.param("compiled", marks=needs_compiled)])
def test_step_budget_status(backend):
    A = -np.eye(2) * 50.0
    rec, n_steps, _, status, t_last, y_last = _integrator.integrate(
        A, np.zeros((0, 2, 2)), np.zeros((0, 6)), np.ones(2), 0.0, [10.0], [1], [0], 1e-10, 1e-12, 3,
        backend=backend,
    )
    assert status == 1
    assert n_steps == 3
    assert 0.0 < t_last < 10.0
    assert np.all(np.isfinite(y_last))


@needs_compiled
@given(st.integers(0, 2**31 - 1))
def test_backends_agree(seed):
    rng = np.random.default_rng(seed)
    scheme, lasers = random_scheme(rng, max_levels=4)
    rho0 = random_state(rng, scheme.dimension)
    t = np.linspace(0.0, 4.0, 5)
    a = dyn.propagate(rho0, scheme, lasers, (0.0, 4.0), t_eval=t, backend="python")
    b = dyn.propagate(rho0, scheme, lasers, (0.0, 4.0), t_eval=t, backend="compiled")
    assert np.max(np.abs(a.states - b.states)) < 1e-11


def test_square_pulse_area_is_exact():
    """A resonant window switching on and off mid-span gives an exact pi rotation."""
    s = dyn.two_level_scheme(0.0)
    rabi = 250.0
    t_pi = math.pi / (dyn.KHZ * rabi)
    env = dyn.PulseEnvelope("constant", 1.0, on_window=(0.37, 0.37 + t_pi))
    lasers = [dyn.LaserField(3, 0.0, rabi, 1.0, envelope=env)]
    tr = dyn.propagate(dyn.DensityOperator.pure(3, 0), s, lasers, (0.0, 5.0), tol=1e-10)
    assert tr.populations[-1, 1] > 1 - 1e-9


def test_sine_squared_pulse_area():
    """Area of a cos^2 pulse of half-width w is w; choose w so the area is pi."""
    s = dyn.two_level_scheme(0.0)
    rabi = 100.0
    w = math.pi / (dyn.KHZ * rabi)
    env = dyn.PulseEnvelope("sine_squared", 1.0, 3.0 + w, w)
    lasers = [dyn.LaserField(3, 0.0, rabi, 1.0, envelope=env)]
    tr = dyn.propagate(dyn.DensityOperator.pure(3, 0), s, lasers, (0.0, 6.0 + 3 * w), tol=1e-10)
    assert tr.populations[-1, 1] > 1 - 1e-8


def test_envelope_midpoint_rule():
    row = [0.0, 1.0, 0.0, 1.0, 1.0, 2.0]
    assert _integrator.envelope_value(row, 1.0, tmid=0.9) == 0.0
    assert _integrator.envelope_value(row, 1.0, tmid=1.1) == 1.0
    assert _integrator.envelope_value(row, 2.0, tmid=2.1) == 0.0


def _backend_in_subprocess(env_value):
    env = dict(os.environ)
    env["MSCHEME_PURE_PYTHON"] = env_value
    out = subprocess.run(
        [sys.executable, "-c", "import mscheme; print(mscheme.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    return out.stdout.strip()


def test_pure_python_switch():
    assert _backend_in_subprocess("1") == "python"
    if HAVE_COMPILED:
        assert _backend_in_subprocess("") == "compiled"


def test_unknown_backend():
    with pytest.raises(ValueError):
        _integrator.get_backend("fortran")
