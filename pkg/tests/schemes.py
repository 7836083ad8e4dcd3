"""Random laser-coupled level schemes for invariant tests."""
import numpy as np

from mscheme import dynamics as dyn


def random_scheme(rng, max_levels=6):
    """Random tree over up to ``max_levels`` levels (sink included) plus lasers."""
    n_active = int(rng.integers(2, max_levels))
    levels = []
    for k in range(n_active):
        gamma = float(rng.uniform(0.0, 3.0)) if (k > 0 and rng.random() < 0.6) else 0.0
        levels.append(dyn.Level(str(k + 1), gamma))
    levels.append(dyn.Level("sink", is_sink=True))
    couplings = []
    for k in range(1, n_active):
        parent = int(rng.integers(0, k))
        lo, up = (parent, k) if rng.random() < 0.5 else (k, parent)
        couplings.append(dyn.Coupling(lo, up, k))
    scheme = dyn.DynamicalScheme(tuple(levels), tuple(couplings))
    lasers = []
    for k in range(1, n_active):
        shape = dyn.SHAPES[int(rng.integers(0, 3))]
        env = dyn.PulseEnvelope(
            shape,
            float(rng.uniform(0.2, 1.0)),
            float(rng.uniform(0.0, 4.0)),
            float(rng.uniform(0.5, 3.0)),
            (float(rng.uniform(-1.0, 1.0)), float(rng.uniform(3.0, 6.0))),
        )
        lasers.append(
            dyn.LaserField(
                k,
                detuning=float(rng.uniform(-3.0, 3.0)),
                normalized_rabi=float(rng.uniform(0.0, 2000.0)),
                intensity=float(rng.uniform(0.0, 1.0)),
                linewidth=float(rng.uniform(0.0, 50.0)) if rng.random() < 0.5 else 0.0,
                envelope=env,
            )
        )
    return scheme, lasers


def random_state(rng, n, exclude=None):
    """Random mixed state with support off the ``exclude`` level."""
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    if exclude is not None:
        m[exclude, :] = 0.0
    rho = m @ m.conj().T
    return dyn.DensityOperator(rho / np.trace(rho).real)


def check_trajectory(tr, trace_tol=1e-8, herm_tol=1e-9, pos_tol=1e-8):
    """Worst trace, Hermiticity and positivity deviations along a trajectory."""
    worst = [0.0, 0.0, 0.0]
    for i in range(len(tr)):
        st = tr.state(i)
        worst[0] = max(worst[0], abs(st.trace() - 1.0))
        worst[1] = max(worst[1], st.hermiticity_error())
        worst[2] = max(worst[2], -st.min_eigenvalue())
    ok = worst[0] <= trace_tol and worst[1] <= herm_tol and worst[2] <= pos_tol
    return ok, worst


def rescaled(scheme, lasers, s):
    """Scheme and lasers with every rate multiplied by ``s`` and every time divided by it."""
    levels = tuple(dyn.Level(l.label, l.decay_rate_gamma * s, l.is_sink) for l in scheme.levels)
    out = [
        dyn.LaserField(
            l.laser_index,
            l.detuning * s,
            l.normalized_rabi * s,
            l.intensity,
            l.linewidth * s,
            l.envelope.scaled_time(1.0 / s),
        )
        for l in lasers
    ]
    return dyn.DynamicalScheme(levels, scheme.couplings), out
