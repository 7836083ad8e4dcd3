"""Compare the compiled DOPRI5 kernel with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernel.py [--repeat 3]

Each case propagates one representative problem with both backends, reports
the best wall time of ``--repeat`` runs and the largest population
difference between the two results.
"""
import argparse
import time

import numpy as np

from mscheme import dynamics as dyn
from mscheme import experiments as ex
from mscheme._integrator import get_backend


def _two_level():
    s = dyn.two_level_scheme(2.0)
    rho0 = dyn.DensityOperator.pure(3, 0)
    lasers = [dyn.LaserField(3, 0.0, 6.0, 270.0)]
    return lambda backend: dyn.propagate(rho0, s, lasers, (0.0, 50.0), t_eval=np.linspace(0, 50, 26), backend=backend)


def _lambda():
    s = dyn.lambda_scheme(2.0)
    rho0 = dyn.DensityOperator.pure(4, 0)
    o3 = dyn.rabi_from_intensity(6.0, 500.0)
    o4 = dyn.rabi_from_intensity(4.0, 5000.0)
    lasers = [dyn.LaserField(3, 0.05, o3, 1.0, 1.0), dyn.LaserField(4, 0.0, o4, 1.0, 1.0)]
    return lambda backend: dyn.propagate(rho0, s, lasers, (0.0, 100.0), backend=backend)


def _stirap():
    cfg = ex.StirapConfig(laser_linewidths=(1.0, 1.0))
    return lambda backend: ex.simulate_stirap(cfg, backend=backend).trajectory


def _m_scheme():
    s = dyn.m_scheme()
    rho0 = dyn.DensityOperator.pure(s.dimension, 0)
    env = dyn.PulseEnvelope("gaussian", 1.0, 0.0, 5.0)
    lasers = [dyn.LaserField(k, 0.0, 2000.0 * (k % 2 + 1), 1.0, 1.0, env) for k in (1, 2, 3, 4)]
    return lambda backend: dyn.propagate(rho0, s, lasers, (-15.0, 15.0), backend=backend)


CASES = {
    "two-level decay": _two_level,
    "lambda dark resonance": _lambda,
    "STIRAP transfer": _stirap,
    "M-scheme pulses": _m_scheme,
}


def best_time(fn, repeat):
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    try:
        get_backend("compiled")
    except ImportError:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'case':<24}{'compiled s':>12}{'python s':>12}{'speedup':>10}{'max |dP|':>12}")
    for name, make in CASES.items():
        run = make()
        tc, rc = best_time(lambda: run("compiled"), args.repeat)
        tp, rp = best_time(lambda: run("python"), args.repeat)
        diff = float(np.max(np.abs(rc.populations - rp.populations)))
        print(f"{name:<24}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}{diff:>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
