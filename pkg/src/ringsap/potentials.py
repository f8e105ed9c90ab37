"""
Concentric trap potentials and their time-dependent parameter schedules.

All quantities are in harmonic-oscillator units (m = hbar = omega_h = 1).
Traps are analytic value objects; sampling onto a grid happens in the
solvers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "TrapKind",
    "TrapSpec",
    "JointPotential",
    "ScheduleParams",
    "evaluate_trap",
    "crossing_radius",
    "evaluate_joint",
    "schedule_omega",
    "schedule_radius",
]

# relative slack on the [0, t_f] check so that t = n*dt == t_f survives rounding
_TIME_SLACK = 1e-9


class TrapKind(str, enum.Enum):
    HARMONIC = "harmonic"
    RING = "ring"


@dataclass(frozen=True)
class TrapSpec:
    """A harmonic trap (radius 0) or a harmonic ring of given radius."""

    kind: TrapKind
    omega: float
    radius: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TrapKind(self.kind))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.omega > 0:
            raise ConfigurationError(f"trap frequency must be > 0, got {self.omega}", key="omega")
        if self.radius < 0:
            raise ConfigurationError(f"trap radius must be >= 0, got {self.radius}", key="radius")
        if self.kind is TrapKind.HARMONIC and self.radius != 0.0:
            raise ConfigurationError("a harmonic trap has radius 0", key="radius")

    @classmethod
    def harmonic(cls, omega: float = 1.0) -> "TrapSpec":
        return cls(TrapKind.HARMONIC, omega, 0.0)

    @classmethod
    def ring(cls, omega: float, radius: float) -> "TrapSpec":
        return cls(TrapKind.RING, omega, radius)

    def __call__(self, r):
        return evaluate_trap(self, r)


def _check_radius(r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("radius must be non-negative")
    return arr


def _as_result(arr, r):
    return float(arr) if np.ndim(r) == 0 else arr


def evaluate_trap(trap: TrapSpec, r):
    """Potential ``0.5 * omega**2 * (r - radius)**2``; scalar or array ``r``."""
    arr = _check_radius(r)
    return _as_result(0.5 * trap.omega**2 * (arr - trap.radius) ** 2, r)


def crossing_radius(inner: TrapSpec, outer: TrapSpec) -> float:
    """Radius between two concentric traps where their potentials coincide.

    Returns ``(r_in*w_in + r_out*w_out) / (w_in + w_out)``; a harmonic inner
    trap enters with ``r_in = 0``.
    """
    if not outer.radius > inner.radius:
        raise ConfigurationError(
            f"traps are not concentrically ordered: outer radius {outer.radius} "
            f"<= inner radius {inner.radius}",
            key="radius",
        )
    return (inner.radius * inner.omega + outer.radius * outer.omega) / (inner.omega + outer.omega)


@dataclass(frozen=True)
class JointPotential:
    """Two or three concentric traps, innermost first, truncated where they meet."""

    traps: tuple

    def __post_init__(self):
        traps = tuple(self.traps)
        object.__setattr__(self, "traps", traps)
        if len(traps) not in (2, 3):
            raise ConfigurationError(f"expected 2 or 3 traps, got {len(traps)}", key="traps")
        for k, trap in enumerate(traps):
            if not isinstance(trap, TrapSpec):
                raise ConfigurationError(f"trap {k} is not a TrapSpec", key="traps")
            if k > 0 and trap.kind is TrapKind.HARMONIC:
                raise ConfigurationError("only the innermost trap may be harmonic", key="traps")
        # raises on bad ordering
        self.boundaries

    @property
    def boundaries(self) -> tuple:
        return tuple(crossing_radius(a, b) for a, b in zip(self.traps[:-1], self.traps[1:]))

    def __len__(self):
        return len(self.traps)

    def region_index(self, r) -> np.ndarray:
        """Index of the trap whose piece of the potential contains ``r``."""
        arr = _check_radius(r)
        # r <= first boundary belongs to the inner trap
        return np.searchsorted(np.asarray(self.boundaries), arr, side="left")

    def __call__(self, r):
        return evaluate_joint(self, r)


def evaluate_joint(jp: JointPotential, r):
    arr = _check_radius(r)
    out = evaluate_trap(jp.traps[0], arr)
    for bound, trap in zip(jp.boundaries, jp.traps[1:]):
        out = np.where(arr > bound, evaluate_trap(trap, arr), out)
    return _as_result(out, r)


@dataclass(frozen=True)
class ScheduleParams:
    """Sigmoid frequency ramp plus Gaussian radius excursion over ``[0, t_f]``.

    ``center`` is the time of the radius excursion as a fraction of ``t_f``.
    """

    t_f: float
    omega0: float
    delta_omega: float = 0.0
    a: float = 8.0
    R0: float = 4.5
    delta_R: float = 0.0
    sigma: float = 2.0 / 15.0
    center: float = 0.5

    def __post_init__(self):
        for name in ("t_f", "sigma", "a"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0", key=name)
        if not self.R0 + self.delta_R > 0:
            raise ConfigurationError("R0 + delta_R must be > 0", key="delta_R")
        if not self.omega0 > 0 or not self.omega0 + self.delta_omega > 0:
            raise ConfigurationError("schedule frequency must stay positive", key="omega0")

    def replace(self, **changes) -> "ScheduleParams":
        return replace(self, **changes)


def _check_time(p: ScheduleParams, t):
    arr = np.asarray(t, dtype=float)
    slack = _TIME_SLACK * p.t_f
    if np.any(arr < -slack) or np.any(arr > p.t_f + slack) or np.any(np.isnan(arr)):
        raise DomainError(f"time outside [0, {p.t_f}]")
    return np.clip(arr, 0.0, p.t_f)


def schedule_omega(p: ScheduleParams, t):
    """Trap frequency ``omega0 + delta_omega*(1+(2/3)^a)/(1+(t/t_f+1/2)^-a)``."""
    s = _check_time(p, t) / p.t_f
    value = p.omega0 + p.delta_omega * (1.0 + (2.0 / 3.0) ** p.a) / (1.0 + (s + 0.5) ** (-p.a))
    return _as_result(value, t)


def schedule_radius(p: ScheduleParams, t):
    s = _check_time(p, t) / p.t_f
    value = p.R0 + p.delta_R * np.exp(-((s - p.center) ** 2) / (2.0 * p.sigma**2))
    return _as_result(value, t)

