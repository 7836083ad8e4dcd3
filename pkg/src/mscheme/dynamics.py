"""Rotating-frame Hamiltonians and Lindblad propagation for laser-coupled level chains.

Units
-----
Parameters carried by :class:`DynamicalScheme` and :class:`LaserField` are
frequencies written as plain numbers in units of 2pi*MHz (so ``gamma=2.0``
means Gamma = 2pi x 2 MHz) except Rabi frequencies and laser linewidths,
which are in 2pi*kHz. Times are in microseconds. Matrices returned by
:func:`build_rotating_hamiltonian` and :func:`collapse_operators` are already
converted to angular frequency, rad/us.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _integrator
from .errors import ConfigurationError, DomainError, IntegrationError

TWO_PI = 2.0 * math.pi
#: 2pi*MHz -> rad/us
MHZ = TWO_PI
#: 2pi*kHz -> rad/us
KHZ = TWO_PI * 1e-3
#: 1 cm^-1 in MHz
CM_TO_MHZ = 29979.2458

SHAPES = ("constant", "gaussian", "sine_squared")


@dataclass(frozen=True)
class Level:
    label: str
    decay_rate_gamma: float = 0.0
    is_sink: bool = False


@dataclass(frozen=True)
class Coupling:
    lower: int
    upper: int
    laser_index: int


@dataclass(frozen=True)
class DynamicalScheme:
    """Levels plus the laser-driven transitions between them.

    The non-sink levels and the couplings must form a tree (a chain or an
    M/Lambda pattern). The first non-sink level is the root of the rotating
    frame. Decaying levels empty into the single sink level.
    """

    levels: tuple
    couplings: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        n = len(self.levels)
        if n < 1:
            raise ConfigurationError("a scheme needs at least one level")
        sinks = [i for i, lvl in enumerate(self.levels) if lvl.is_sink]
        for lvl in self.levels:
            if lvl.decay_rate_gamma < 0:
                raise ConfigurationError(f"negative decay rate on level {lvl.label!r}")
            if lvl.is_sink and lvl.decay_rate_gamma != 0:
                raise ConfigurationError(f"sink level {lvl.label!r} cannot decay")
        if len(sinks) > 1:
            raise ConfigurationError("at most one sink level is supported")
        if any(lvl.decay_rate_gamma > 0 for lvl in self.levels) and not sinks:
            raise ConfigurationError("decaying levels require a sink level")

        seen = set()
        for c in self.couplings:
            for idx in (c.lower, c.upper):
                if not 0 <= idx < n:
                    raise ConfigurationError(f"coupling index {idx} out of range")
                if self.levels[idx].is_sink:
                    raise ConfigurationError("sink levels cannot be laser coupled")
            if c.lower == c.upper:
                raise ConfigurationError("a coupling must join two different levels")
            if c.laser_index in seen:
                raise ConfigurationError(f"laser {c.laser_index} drives more than one transition")
            seen.add(c.laser_index)

        active = [i for i in range(n) if not self.levels[i].is_sink]
        if len(self.couplings) != len(active) - 1:
            raise ConfigurationError(
                "couplings must form a tree over the non-sink levels "
                f"({len(active)} levels need {len(active) - 1} couplings, got {len(self.couplings)})"
            )
        order, _ = self._traverse()
        if len(order) != len(active):
            raise ConfigurationError("coupling graph is not connected over the non-sink levels")

    @property
    def dimension(self):
        return len(self.levels)

    @property
    def root(self):
        return next(i for i, lvl in enumerate(self.levels) if not lvl.is_sink)

    @property
    def sink(self) -> Optional[int]:
        for i, lvl in enumerate(self.levels):
            if lvl.is_sink:
                return i
        return None

    @property
    def labels(self):
        return [lvl.label for lvl in self.levels]

    def index(self, label):
        for i, lvl in enumerate(self.levels):
            if lvl.label == label:
                return i
        raise KeyError(label)

    def _traverse(self):
        """Breadth-first walk from the root: visiting order and parent edge per level."""
        adj = {}
        for c in self.couplings:
            adj.setdefault(c.lower, []).append(c)
            adj.setdefault(c.upper, []).append(c)
        root = self.root
        order = [root]
        parent = {root: None}
        queue = [root]
        while queue:
            node = queue.pop(0)
            for c in adj.get(node, ()):
                other = c.upper if c.lower == node else c.lower
                if other not in parent:
                    parent[other] = c
                    order.append(other)
                    queue.append(other)
        return order, parent

    def frame_signs(self):
        """Per level, the signed laser indices whose detunings make up its frame energy.

        Returns a dict ``level -> {laser_index: sign}`` with the level energy
        equal to ``sum(sign * Delta_laser)``. Climbing a coupling from its
        lower to its upper level subtracts that laser's detuning, descending
        adds it.
        """
        order, parent = self._traverse()
        signs = {self.root: {}}
        for node in order[1:]:
            c = parent[node]
            prev = c.lower if c.upper == node else c.upper
            s = dict(signs[prev])
            step = -1.0 if node == c.upper else 1.0
            s[c.laser_index] = s.get(c.laser_index, 0.0) + step
            signs[node] = s
        return signs

    def beyond(self, laser_index):
        """Levels separated from the root by the transition driven by ``laser_index``."""
        order, parent = self._traverse()
        out = []
        for node in order[1:]:
            cur = node
            while parent[cur] is not None:
                c = parent[cur]
                if c.laser_index == laser_index:
                    out.append(node)
                    break
                cur = c.lower if c.upper == cur else c.upper
        return sorted(out)


@dataclass(frozen=True)
class PulseEnvelope:
    """Dimensionless time profile multiplying a laser's Rabi frequency.

    ``gaussian``: ``peak * exp(-2 ((t - center) / width)**2)``, i.e. the Rabi
    profile falls to 1/e^2 of its peak at ``center +- width``.
    ``sine_squared``: ``peak * cos^2(pi (t - center) / (2 width))`` for
    ``|t - center| < width``, zero elsewhere.
    All shapes are zero outside ``on_window``.
    """

    shape: str = "constant"
    peak: float = 1.0
    center: float = 0.0
    width: float = 1.0
    on_window: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigurationError(f"unknown envelope shape {self.shape!r}")
        if not 0.0 <= self.peak <= 1.0:
            raise ConfigurationError(f"envelope peak must lie in [0, 1], got {self.peak}")
        if self.shape != "constant" and not self.width > 0:
            raise ConfigurationError("envelope width must be positive")
        t_on, t_off = self.on_window
        if not t_on <= t_off:
            raise ConfigurationError("on_window must satisfy t_on <= t_off")
        object.__setattr__(self, "on_window", (float(t_on), float(t_off)))

    def as_row(self):
        return [float(SHAPES.index(self.shape)), self.peak, self.center, self.width, *self.on_window]

    def __call__(self, t):
        row = self.as_row()
        if np.ndim(t) == 0:
            return _integrator.envelope_value(row, float(t))
        return np.array([_integrator.envelope_value(row, float(x)) for x in np.ravel(t)]).reshape(
            np.shape(t)
        )

    def is_static_on(self, t0, t1):
        """True when the envelope is constant and switched on over ``[t0, t1]``."""
        return self.shape == "constant" and self.on_window[0] <= t0 and self.on_window[1] >= t1

    def breakpoints(self):
        pts = [p for p in self.on_window if math.isfinite(p)]
        if self.shape == "sine_squared":
            pts += [self.center - self.width, self.center + self.width]
        return pts

    def scaled_time(self, factor):
        """Same profile on a time axis stretched by ``factor``."""
        return PulseEnvelope(
            self.shape,
            self.peak,
            self.center * factor,
            self.width * factor,
            (self.on_window[0] * factor, self.on_window[1] * factor),
        )


@dataclass(frozen=True)
class LaserField:
    """One laser: detuning (2pi*MHz), normalized Rabi frequency (2pi*kHz per
    sqrt(mW/cm^2)), intensity (mW/cm^2), linewidth (2pi*kHz) and envelope."""

    laser_index: int
    detuning: float = 0.0
    normalized_rabi: float = 0.0
    intensity: float = 0.0
    linewidth: float = 0.0
    envelope: PulseEnvelope = field(default_factory=PulseEnvelope)

    def __post_init__(self):
        if self.normalized_rabi < 0 or self.intensity < 0 or self.linewidth < 0:
            raise ConfigurationError(
                f"laser {self.laser_index}: Rabi coefficient, intensity and linewidth must be >= 0"
            )

    @classmethod
    def from_rabi(cls, laser_index, rabi_mhz, detuning=0.0, linewidth=0.0, envelope=None):
        """Laser specified directly by its peak Rabi frequency in 2pi*MHz."""
        return cls(
            laser_index,
            detuning=detuning,
            normalized_rabi=1e3 * rabi_mhz,
            intensity=1.0,
            linewidth=linewidth,
            envelope=envelope or PulseEnvelope(),
        )

    @property
    def peak_rabi(self):
        """Rabi frequency at full envelope, 2pi*kHz."""
        return rabi_from_intensity(self.normalized_rabi, self.intensity)

    def rabi(self, t):
        """Time-dependent Rabi frequency, 2pi*kHz."""
        return self.peak_rabi * self.envelope(t)


def rabi_from_intensity(normalized_rabi, intensity):
    """Rabi frequency (2pi*kHz) from a normalized coefficient and an intensity in mW/cm^2."""
    if normalized_rabi < 0 or intensity < 0:
        raise DomainError("normalized Rabi frequency and intensity must be non-negative")
    return normalized_rabi * math.sqrt(intensity)


def adiabatic_loss_rate(rabi_khz, gamma_mhz, detuning_mhz=0.0):
    """Loss rate (1/us) out of a ground level weakly driven to a decaying level.

    Adiabatic elimination of the excited level gives
    ``R = Omega^2 Gamma / (Gamma^2 + 4 Delta^2)`` in angular units.
    """
    omega = KHZ * rabi_khz
    gamma = MHZ * gamma_mhz
    delta = MHZ * np.asarray(detuning_mhz, dtype=float)
    return omega**2 * gamma / (gamma**2 + 4.0 * delta**2)


def adiabatic_lifetime(rabi_khz, gamma_mhz):
    """On-resonance ground-level lifetime ``tau = Gamma / Omega^2`` in us."""
    if rabi_khz <= 0:
        return math.inf
    return float(1.0 / adiabatic_loss_rate(rabi_khz, gamma_mhz, 0.0))


def _lasers_by_index(scheme, lasers):
    table = {}
    for laser in lasers:
        if laser.laser_index in table:
            raise ConfigurationError(f"laser {laser.laser_index} given twice")
        table[laser.laser_index] = laser
    for c in scheme.couplings:
        if c.laser_index not in table:
            raise ConfigurationError(
                f"coupling {c.lower}-{c.upper} refers to laser {c.laser_index}, which is not defined"
            )
    return table


def frame_energies(scheme, lasers):
    """Rotating-frame diagonal in 2pi*MHz (sink and root at zero)."""
    table = _lasers_by_index(scheme, lasers)
    diag = np.zeros(scheme.dimension)
    for level, signs in scheme.frame_signs().items():
        diag[level] = sum(s * table[i].detuning for i, s in signs.items())
    return diag


def build_rotating_hamiltonian(scheme, lasers, t=0.0):
    """Rotating-wave Hamiltonian at time ``t`` in rad/us.

    Diagonal: cumulative detunings along the coupling tree, with each
    upward step subtracting and each downward step adding the laser's
    detuning (for the M chain: 0, -D1, -(D1-D2), -(D1-D2+D3), ...).
    Off-diagonal: ``Omega_i(t) / 2`` on every coupled pair.
    """
    table = _lasers_by_index(scheme, lasers)
    H = np.diag(MHZ * frame_energies(scheme, lasers)).astype(complex)
    for c in scheme.couplings:
        half = 0.5 * KHZ * table[c.laser_index].rabi(t)
        H[c.lower, c.upper] += half
        H[c.upper, c.lower] += half
    return H


def collapse_operators(scheme, lasers):
    """Lindblad operators (rad/us)^(1/2) for decay into the sink and laser dephasing.

    Decay: ``sqrt(Gamma_k) |sink><k|`` for every decaying level.
    Dephasing: ``sqrt(2 gamma_i) P_i`` per laser with nonzero linewidth, where
    ``P_i`` projects on the levels lying beyond transition ``i`` as seen from
    the root. A coherence between two levels then decays at the sum of the
    linewidths of the lasers on the path joining them.
    """
    table = _lasers_by_index(scheme, lasers)
    n = scheme.dimension
    sink = scheme.sink
    ops = []
    for k, lvl in enumerate(scheme.levels):
        if lvl.decay_rate_gamma > 0:
            if sink is None:
                raise ConfigurationError("decay requires a sink level")
            c = np.zeros((n, n), dtype=complex)
            c[sink, k] = math.sqrt(MHZ * lvl.decay_rate_gamma)
            ops.append(c)
    for cpl in scheme.couplings:
        gamma = table[cpl.laser_index].linewidth
        if gamma > 0:
            P = np.zeros((n, n), dtype=complex)
            for k in scheme.beyond(cpl.laser_index):
                P[k, k] = 1.0
            ops.append(math.sqrt(2.0 * KHZ * gamma) * P)
    return ops


def lindblad_derivative(H, collapse_ops, rho):
    """``-i[H, rho] + sum_c (c rho c^+ - {c^+ c, rho} / 2)``."""
    H = np.asarray(H)
    rho = np.asarray(rho.matrix if isinstance(rho, DensityOperator) else rho)
    n = rho.shape[0]
    if H.shape != (n, n) or rho.shape != (n, n):
        raise DomainError(f"shape mismatch: H {H.shape}, rho {rho.shape}")
    out = -1j * (H @ rho - rho @ H)
    for c in collapse_ops:
        c = np.asarray(c)
        if c.shape != (n, n):
            raise DomainError(f"collapse operator shape {c.shape} does not match {n}x{n}")
        cd = c.conj().T
        cdc = cd @ c
        out += c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)
    return out


def liouvillian(H, collapse_ops):
    """Superoperator acting on row-major ``vec(rho)``."""
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    eye = np.eye(n)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for c in collapse_ops:
        c = np.asarray(c, dtype=complex)
        cdc = c.conj().T @ c
        L += np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return L


class HermitianCoordinates:
    """Real coordinates of an n x n Hermitian matrix.

    ``y = [rho_00, ..., rho_nn, Re rho_jk (j<k) ..., Im rho_jk (j<k) ...]``.
    """

    def __init__(self, n):
        self.n = n
        iu = np.triu_indices(n, 1)
        self.upper = iu
        self.size = n * n
        m = len(iu[0])
        # vec(rho) = B @ y
        B = np.zeros((n * n, n * n), dtype=complex)
        # y = Re(A @ vec(rho))
        A = np.zeros((n * n, n * n), dtype=complex)
        for k in range(n):
            B[k * n + k, k] = 1.0
            A[k, k * n + k] = 1.0
        for p, (j, k) in enumerate(zip(*iu)):
            B[j * n + k, n + p] = 1.0
            B[k * n + j, n + p] = 1.0
            B[j * n + k, n + m + p] = 1j
            B[k * n + j, n + m + p] = -1j
            A[n + p, j * n + k] = 1.0
            A[n + m + p, j * n + k] = -1j
        self._A = A
        self._B = B

    def to_coords(self, rho):
        rho = np.asarray(rho)
        j, k = self.upper
        return np.concatenate([rho.diagonal().real, rho[j, k].real, rho[j, k].imag])

    def from_coords(self, y):
        y = np.asarray(y)
        n = self.n
        m = len(self.upper[0])
        rho = np.zeros(y.shape[:-1] + (n, n), dtype=complex)
        idx = np.arange(n)
        rho[..., idx, idx] = y[..., :n]
        j, k = self.upper
        z = y[..., n : n + m] + 1j * y[..., n + m :]
        rho[..., j, k] = z
        rho[..., k, j] = z.conj()
        return rho

    def real_superoperator(self, L):
        """Real matrix acting on coordinates, for a Hermiticity-preserving ``L``."""
        return np.real(self._A @ L @ self._B)


@dataclass
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.array(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise DomainError("density matrix must be square")

    @classmethod
    def pure(cls, n, level):
        rho = np.zeros((n, n), dtype=complex)
        rho[level, level] = 1.0
        return cls(rho)

    @classmethod
    def from_vector(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()) / np.vdot(psi, psi).real)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def populations(self):
        return self.matrix.diagonal().real.copy()

    def trace(self):
        return float(np.trace(self.matrix).real)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self):
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def check(self, trace_tol=1e-8, herm_tol=1e-9, pos_tol=1e-8):
        """Raise DomainError unless trace, Hermiticity and positivity hold."""
        if abs(self.trace() - 1.0) > trace_tol:
            raise DomainError(f"trace {self.trace()!r} differs from 1")
        if self.hermiticity_error() > herm_tol:
            raise DomainError("density matrix is not Hermitian")
        if self.min_eigenvalue() < -pos_tol:
            raise DomainError("density matrix is not positive semidefinite")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    labels: list
    n_steps: int = 0
    n_rejected: int = 0

    def __len__(self):
        return len(self.times)

    @property
    def populations(self):
        return np.einsum("tii->ti", self.states).real

    @property
    def observables(self):
        pops = self.populations
        return {label: pops[:, i] for i, label in enumerate(self.labels)}

    def state(self, i):
        return DensityOperator(self.states[i])

    @property
    def final(self):
        return self.state(-1)


DEFAULT_TOL = 1e-8
DEFAULT_MAX_STEPS = 2_000_000


@dataclass
class PreparedSystem:
    """Scheme and lasers compiled to the integrator's real linear form."""

    coords: HermitianCoordinates
    L0: np.ndarray
    Lk: np.ndarray
    env: np.ndarray
    breakpoints: list


def prepare(scheme, lasers, t_span):
    t0, t1 = t_span
    table = _lasers_by_index(scheme, lasers)
    coords = HermitianCoordinates(scheme.dimension)
    n = scheme.dimension

    H0 = np.diag(MHZ * frame_energies(scheme, lasers)).astype(complex)
    dynamic = []
    for c in scheme.couplings:
        laser = table[c.laser_index]
        half = 0.5 * KHZ * laser.peak_rabi
        if half == 0.0:
            continue
        if laser.envelope.is_static_on(t0, t1):
            half *= laser.envelope.peak
            H0[c.lower, c.upper] += half
            H0[c.upper, c.lower] += half
        else:
            Hk = np.zeros((n, n), dtype=complex)
            Hk[c.lower, c.upper] = Hk[c.upper, c.lower] = half
            dynamic.append((Hk, laser.envelope))

    L0 = coords.real_superoperator(liouvillian(H0, collapse_operators(scheme, lasers)))
    Lk = np.zeros((len(dynamic), coords.size, coords.size))
    env = np.zeros((len(dynamic), 6))
    breaks = []
    for k, (Hk, envelope) in enumerate(dynamic):
        Lk[k] = coords.real_superoperator(liouvillian(Hk, []))
        env[k] = envelope.as_row()
        breaks += [b for b in envelope.breakpoints() if t0 < b < t1]
    return PreparedSystem(coords, L0, Lk, env, sorted(set(breaks)))


def propagate(
    rho0,
    scheme,
    lasers,
    t_span,
    tol=DEFAULT_TOL,
    t_eval=None,
    atol=None,
    max_steps=DEFAULT_MAX_STEPS,
    backend=None,
):
    """Integrate the master equation from ``t_span[0]`` to ``t_span[1]`` (us).

    Adaptive Dormand-Prince 5(4) with relative tolerance ``tol`` (absolute
    tolerance defaults to ``tol / 100``). States are recorded at ``t_eval``
    (default: both ends of the span); the integrator lands exactly on those
    times and on every envelope switching time.

    Raises
    ------
    IntegrationError
        If the step budget runs out or the step size collapses; the last
        accepted state is attached.
    """
    rho0 = rho0 if isinstance(rho0, DensityOperator) else DensityOperator(rho0)
    if rho0.dimension != scheme.dimension:
        raise DomainError(
            f"initial state has dimension {rho0.dimension}, scheme has {scheme.dimension}"
        )
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 >= t0:
        raise DomainError("t_span must be increasing")
    if t_eval is None:
        t_eval = np.array([t0, t1]) if t1 > t0 else np.array([t0])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or len(t_eval) == 0:
        raise DomainError("t_eval must be a non-empty 1-d sequence")
    if np.any(np.diff(t_eval) <= 0):
        raise DomainError("t_eval must be strictly increasing")
    if t_eval[0] < t0 or t_eval[-1] > t1:
        raise DomainError("t_eval must lie inside t_span")
    if atol is None:
        atol = 1e-2 * tol

    prep = prepare(scheme, lasers, (t0, t1))
    stops = sorted(set(t_eval.tolist()) | set(prep.breakpoints))
    eval_set = set(t_eval.tolist())
    break_set = set(prep.breakpoints)
    record = [s in eval_set for s in stops]
    is_break = [s in break_set for s in stops]

    y0 = prep.coords.to_coords(rho0.matrix)
    records, n_steps, n_rej, status, t_last, y_last = _integrator.integrate(
        prep.L0, prep.Lk, prep.env, y0, t0, stops, record, is_break, tol, atol, max_steps, backend=backend
    )
    if status != 0:
        raise IntegrationError(
            f"integration stopped at t = {t_last:.6g} us: {_integrator.STATUS_MESSAGES[status]}",
            last_time=t_last,
            last_state=DensityOperator(prep.coords.from_coords(y_last)),
        )
    states = prep.coords.from_coords(records)
    return Trajectory(t_eval, states, scheme.labels, n_steps=n_steps, n_rejected=n_rej)


def dark_state(omega3, omega4):
    """Dark superposition over (|3>, |5>) of a Lambda system at two-photon resonance.

    Returns ``(Omega4, -Omega3) / sqrt(Omega3^2 + Omega4^2)``.
    """
    if omega3 < 0 or omega4 < 0:
        raise DomainError("Rabi frequencies must be non-negative")
    norm = math.hypot(omega3, omega4)
    if norm == 0:
        raise DomainError("dark state undefined when both Rabi frequencies vanish")
    return np.array([omega4 / norm, -omega3 / norm])


# ---------------------------------------------------------------------------
# standard schemes


def m_scheme(gamma2=2.0, gamma4=2.0, sink=True):
    """The five-level M chain |1>-|2>-|3>-|4>-|5> driven by L1..L4, plus a sink."""
    levels = [
        Level("1"),
        Level("2", gamma2),
        Level("3"),
        Level("4", gamma4),
        Level("5"),
    ]
    if sink:
        levels.append(Level("sink", is_sink=True))
    couplings = [Coupling(0, 1, 1), Coupling(2, 1, 2), Coupling(2, 3, 3), Coupling(4, 3, 4)]
    return DynamicalScheme(tuple(levels), tuple(couplings))


def lambda_scheme(gamma4=2.0):
    """|3> -L3- |4> -L4- |5> with |4> decaying into a sink."""
    levels = (Level("3"), Level("4", gamma4), Level("5"), Level("sink", is_sink=True))
    return DynamicalScheme(levels, (Coupling(0, 1, 3), Coupling(2, 1, 4)))


def two_level_scheme(gamma4=2.0):
    """|3> -L3- |4> with |4> decaying into a sink."""
    levels = (Level("3"), Level("4", gamma4), Level("sink", is_sink=True))
    return DynamicalScheme(levels, (Coupling(0, 1, 3),))


def stirap_scheme(gamma2=2.0):
    """|1> -L1- |2> -L2- |3> with |2> decaying into a sink."""
    levels = (Level("1"), Level("2", gamma2), Level("3"), Level("sink", is_sink=True))
    return DynamicalScheme(levels, (Coupling(0, 1, 1), Coupling(2, 1, 2)))
