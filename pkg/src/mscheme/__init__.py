"""Simulation and analysis tools for multi-level molecular state transfer.

Submodules: :mod:`levels` (spectroscopic table), :mod:`dynamics` (Lindblad
master equation), :mod:`experiments` (scan drivers), :mod:`fitting`,
:mod:`ccdvr` (coupled-channel DVR) and :mod:`cli`.
"""
__version__ = "0.1.0"

from ._integrator import BACKEND
from .dynamics import (
    Coupling,
    DensityOperator,
    DynamicalScheme,
    LaserField,
    Level,
    PulseEnvelope,
    Trajectory,
    propagate,
)
from .errors import ConfigurationError, DomainError, IntegrationError
from .experiments import ScanGrid, Spectrum, StirapConfig
from .fitting import FitResult

__all__ = [
    "BACKEND",
    "ConfigurationError",
    "Coupling",
    "DensityOperator",
    "DomainError",
    "DynamicalScheme",
    "FitResult",
    "IntegrationError",
    "LaserField",
    "Level",
    "PulseEnvelope",
    "ScanGrid",
    "Spectrum",
    "StirapConfig",
    "Trajectory",
    "propagate",
    "__version__",
]
