"""Synthetic broad-range line-search scans with known resonance positions."""
import numpy as np

from mscheme import experiments as ex

STEP_MHZ = 20.0


def broad_scan(resonances, start=-2000.0, stop=2000.0, step=STEP_MHZ, wait=1000.0, gamma=2.0):
    """Survival on a stepped grid with one rate-model loss line per (center, intensity)."""
    grid = ex.ScanGrid.stepped("detuning_delta3", start, stop, step)
    survival = np.ones(len(grid))
    for center, intensity in resonances:
        shifted = ex.ScanGrid("detuning_delta3", grid.points - center)
        survival *= ex.loss_spectrum(shifted, intensity, wait=wait, gamma=gamma, model="rate").survival
    return ex.Spectrum(grid, survival, {"resonances": [list(r) for r in resonances]})


def flat_scan(start=-2000.0, stop=2000.0, step=STEP_MHZ, level=1.0):
    grid = ex.ScanGrid.stepped("detuning_delta3", start, stop, step)
    return ex.Spectrum(grid, np.full(len(grid), level))
