"""Sinc-DVR bound states for one radial channel and two spin-orbit-coupled channels.

Energies are in cm^-1, distances in angstrom, masses in amu. Wavefunctions
are stored as DVR coefficient vectors (unit 2-norm); the radial amplitude on
the grid is ``coefficients / sqrt(spacing)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import constants as sc
from scipy.linalg import eigh

from .errors import DomainError

#: hbar^2 / (2 amu angstrom^2) expressed in cm^-1
HBAR2_OVER_2AMU = sc.hbar**2 / (2.0 * sc.atomic_mass * 1e-20) / (sc.h * sc.c * 100.0)
CS2_REDUCED_MASS = 66.4527


def rotational_scale(reduced_mass):
    """hbar^2 / (2 mu) in cm^-1 angstrom^2."""
    if not reduced_mass > 0:
        raise DomainError("reduced mass must be positive")
    return HBAR2_OVER_2AMU / reduced_mass


@dataclass(frozen=True)
class RadialGrid:
    r_min: float
    r_max: float
    n_points: int

    def __post_init__(self):
        if not self.r_max > self.r_min > 0:
            raise DomainError("grid needs r_max > r_min > 0")
        if self.n_points < 16:
            raise DomainError("grid needs at least 16 points")

    @property
    def spacing(self):
        return (self.r_max - self.r_min) / (self.n_points - 1)

    @property
    def r(self):
        return np.linspace(self.r_min, self.r_max, self.n_points)

    def shifted(self, dr):
        return RadialGrid(self.r_min + dr, self.r_max + dr, self.n_points)


@dataclass(frozen=True)
class ChannelPotential:
    """Potential values (cm^-1) on a grid and the energy of its dissociation limit."""

    grid: RadialGrid
    values: np.ndarray
    asymptote: float = math.inf
    name: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise DomainError("potential must have one value per grid point")
        if not np.all(np.isfinite(v)):
            raise DomainError("potential must be finite on the grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def morse(cls, grid, D_e, a, r_e, T_e=0.0):
        """``T_e + D_e (1 - exp(-a (r - r_e)))^2``; limit ``T_e + D_e``."""
        r = grid.r
        return cls(grid, T_e + D_e * (1.0 - np.exp(-a * (r - r_e))) ** 2, T_e + D_e, "morse")

    @classmethod
    def harmonic(cls, grid, k, r_e, T_e=0.0):
        """``T_e + k (r - r_e)^2 / 2`` (k in cm^-1 / angstrom^2); no dissociation limit."""
        return cls(grid, T_e + 0.5 * k * (grid.r - r_e) ** 2, math.inf, "harmonic")

    @classmethod
    def tabulated(cls, grid, r, v, asymptote=None):
        """Cubic-spline interpolation of tabulated (r, V) onto ``grid``."""
        from scipy.interpolate import CubicSpline

        r = np.asarray(r, dtype=float)
        v = np.asarray(v, dtype=float)
        if grid.r_min < r[0] or grid.r_max > r[-1]:
            raise DomainError("grid extends beyond the tabulated range")
        spline = CubicSpline(r, v)
        limit = float(v[-1]) if asymptote is None else asymptote
        return cls(grid, spline(grid.r), limit, "tabulated")


def morse_levels(D_e, a, reduced_mass, n, T_e=0.0):
    """Analytic Morse term values ``T_e + w (v+1/2) - wx (v+1/2)^2`` for v < n."""
    B = rotational_scale(reduced_mass)
    omega = 2.0 * a * math.sqrt(B * D_e)
    omega_x = a * a * B
    v = np.arange(n) + 0.5
    return T_e + omega * v - omega_x * v * v


def constant_coupling(grid, w):
    return np.full(grid.n_points, float(w))


def gaussian_coupling(grid, w, r_c, sigma):
    """``w exp(-((r - r_c) / sigma)^2)``: spin-orbit mixing localized near a crossing."""
    return w * np.exp(-(((grid.r - r_c) / sigma) ** 2))


@dataclass(frozen=True)
class CoupledSystem:
    v_a: ChannelPotential
    v_b: ChannelPotential
    coupling_w: np.ndarray
    reduced_mass: float = CS2_REDUCED_MASS
    j_total: int = 0

    def __post_init__(self):
        if self.v_a.grid != self.v_b.grid:
            raise DomainError("both channels must share one grid")
        w = np.array(self.coupling_w, dtype=float)
        if w.ndim == 0:
            w = np.full(self.v_a.grid.n_points, float(w))
        if w.shape != (self.v_a.grid.n_points,) or not np.all(np.isfinite(w)):
            raise DomainError("coupling must be finite with one value per grid point")
        if not self.reduced_mass > 0:
            raise DomainError("reduced mass must be positive")
        if self.j_total < 0:
            raise DomainError("J must be non-negative")
        object.__setattr__(self, "coupling_w", w)

    @property
    def grid(self):
        return self.v_a.grid


@dataclass(frozen=True)
class Assignment:
    character: str
    progression_index: int
    coupled_v: int
    ambiguous: bool = False


@dataclass(frozen=True)
class BoundLevel:
    energy: float
    fraction_a: float
    fraction_b: float
    coeffs_a: np.ndarray = field(repr=False)
    coeffs_b: np.ndarray = field(repr=False)
    grid: RadialGrid = field(repr=False)
    assignment: Optional[Assignment] = None

    def psi(self):
        """Radial amplitudes (psi_a, psi_b) on the grid, angstrom^-1/2."""
        s = 1.0 / math.sqrt(self.grid.spacing)
        return self.coeffs_a * s, self.coeffs_b * s

    @property
    def norm(self):
        return float(self.coeffs_a @ self.coeffs_a + self.coeffs_b @ self.coeffs_b)

    def as_dict(self):
        a = self.assignment
        return {
            "energy_cm": float(self.energy),
            "fraction_a": float(self.fraction_a),
            "character": None if a is None else a.character,
            "progression_index": None if a is None else a.progression_index,
            "coupled_v": None if a is None else a.coupled_v,
        }


def kinetic_matrix(grid, reduced_mass):
    """Colbert-Miller sinc-DVR kinetic energy on a uniform grid (cm^-1)."""
    scale = rotational_scale(reduced_mass) / grid.spacing**2
    idx = np.arange(grid.n_points)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        T = 2.0 * np.where(diff % 2 == 0, 1.0, -1.0) / np.where(diff == 0, 1, diff) ** 2
    np.fill_diagonal(T, math.pi**2 / 3.0)
    return scale * T


def centrifugal(grid, reduced_mass, j_total):
    return rotational_scale(reduced_mass) * j_total * (j_total + 1) / grid.r**2


def _fix_sign(vec):
    """Make the first appreciable amplitude (inner lobe) positive."""
    big = np.nonzero(np.abs(vec) > 1e-3 * np.max(np.abs(vec)))[0]
    if big.size and vec[big[0]] < 0:
        return -vec
    return vec


def _select(energies, vectors, e_max, max_levels):
    keep = np.nonzero(energies < e_max)[0]
    if max_levels is not None:
        keep = keep[:max_levels]
    return energies[keep], vectors[:, keep]


def solve_single_channel(potential, grid=None, reduced_mass=CS2_REDUCED_MASS, j_total=0,
                         max_levels=None, e_max=None):
    """Bound levels of ``K + V + hbar^2 J(J+1) / (2 mu r^2)`` below the asymptote."""
    grid = potential.grid if grid is None else grid
    if grid != potential.grid:
        raise DomainError("potential is tabulated on a different grid")
    H = kinetic_matrix(grid, reduced_mass)
    H[np.diag_indices_from(H)] += potential.values + centrifugal(grid, reduced_mass, j_total)
    energies, vectors = eigh(H)
    limit = potential.asymptote if e_max is None else min(e_max, potential.asymptote)
    energies, vectors = _select(energies, vectors, limit, max_levels)
    zeros = np.zeros(grid.n_points)
    out = []
    for k in range(len(energies)):
        c = _fix_sign(vectors[:, k])
        out.append(BoundLevel(float(energies[k]), 1.0, 0.0, c, zeros, grid))
    return out


def coupled_matrix(system):
    """The 2N x 2N Hamiltonian ``[[K+V_A+cent, W], [W, K+V_b+cent]]``."""
    grid = system.grid
    n = grid.n_points
    K = kinetic_matrix(grid, system.reduced_mass)
    cent = centrifugal(grid, system.reduced_mass, system.j_total)
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = K
    H[n:, n:] = K
    H[np.arange(n), np.arange(n)] += system.v_a.values + cent
    H[n + np.arange(n), n + np.arange(n)] += system.v_b.values + cent
    H[np.arange(n), n + np.arange(n)] = system.coupling_w
    H[n + np.arange(n), np.arange(n)] = system.coupling_w
    return H


def solve_coupled(system, grid=None, max_levels=None, e_max=None):
    """Eigenlevels of the two-channel problem below the lower dissociation limit."""
    if grid is not None and grid != system.grid:
        raise DomainError("system is defined on a different grid")
    grid = system.grid
    n = grid.n_points
    H = coupled_matrix(system)
    if not np.array_equal(H, H.T):
        raise DomainError("assembled coupled Hamiltonian is not symmetric")
    try:
        energies, vectors = eigh(H)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"diagonalization failed: {exc}") from exc
    limit = min(system.v_a.asymptote, system.v_b.asymptote)
    if e_max is not None:
        limit = min(limit, e_max)
    energies, vectors = _select(energies, vectors, limit, max_levels)
    out = []
    for k in range(len(energies)):
        vec = vectors[:, k]
        ca, cb = vec[:n], vec[n:]
        fa = float(ca @ ca)
        fb = float(cb @ cb)
        # sign from the dominant channel's inner lobe
        flip = _fix_sign(ca if fa >= fb else cb)
        sign = 1.0 if np.array_equal(flip, ca if fa >= fb else cb) else -1.0
        total = fa + fb
        out.append(BoundLevel(float(energies[k]), fa / total, fb / total, sign * ca, sign * cb, grid))
    return out


def assign_character(levels, start_a=0, start_b=0):
    """Label each level A or b by its dominant channel and number the two progressions.

    Levels are taken in energy order. ``coupled_v`` is the overall index;
    ``progression_index`` counts within each character class starting from
    ``start_a`` / ``start_b``. Fractions within 1e-6 of 1/2 are flagged
    ambiguous and assigned to A.
    """
    order = sorted(range(len(levels)), key=lambda i: levels[i].energy)
    counters = {"A": start_a, "b": start_b}
    out = list(levels)
    for v, i in enumerate(order):
        lvl = levels[i]
        ambiguous = abs(lvl.fraction_a - 0.5) < 1e-6
        if ambiguous:
            warnings.warn(
                f"level at {lvl.energy:.6f} cm^-1 has equal A/b weight; assigned to A",
                RuntimeWarning,
                stacklevel=2,
            )
        char = "A" if (lvl.fraction_a > 0.5 or ambiguous) else "b"
        out[i] = replace(lvl, assignment=Assignment(char, counters[char], v, ambiguous))
        counters[char] += 1
    return out


def overlap(level_x, level_e):
    """Franck-Condon amplitude between a ground level and the A channel of an excited level."""
    if level_x.grid != level_e.grid:
        raise DomainError("levels live on different grids")
    return float(level_x.coeffs_a @ level_e.coeffs_a)


def wavefunction_table(level):
    """Columns (r, psi_a, psi_b) for export."""
    psi_a, psi_b = level.psi()
    return np.column_stack([level.grid.r, psi_a, psi_b])
