"""
ringsap — spatial adiabatic passage of a single atom between concentric
harmonic and ring traps.

Submodules
----------
potentials   trap shapes, joint potentials and parameter schedules
localized    variational localized states and their orthonormalization
fewstate     two- and three-state reduced models
radial       exact radial Crank-Nicolson solver and 2D reconstruction
protocols    presets of the transport protocols and the sweep harness
cli          command-line entry point
"""

from . import fewstate, localized, potentials, protocols
from .errors import (
    ConfigurationError,
    DegeneracyError,
    DomainError,
    NumericalError,
    RingSAPError,
    StepSizeError,
    ResolutionError,
    UndefinedAngleError,
    UndefinedWindingError,
)
from .potentials import JointPotential, ScheduleParams, TrapKind, TrapSpec
from .protocols import preset
from .radial.dynamics import evolve, imaginary_time_ground_state
from .radial.grid import RadialGrid

__version__ = "0.1.0"

__all__ = [
    "potentials",
    "localized",
    "fewstate",
    "protocols",
    "TrapKind",
    "TrapSpec",
    "JointPotential",
    "ScheduleParams",
    "RadialGrid",
    "preset",
    "evolve",
    "imaginary_time_ground_state",
    "RingSAPError",
    "DomainError",
    "ConfigurationError",
    "DegeneracyError",
    "UndefinedAngleError",
    "UndefinedWindingError",
    "NumericalError",
    "StepSizeError",
    "ResolutionError",
]
