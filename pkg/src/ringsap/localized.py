"""
Localized ground states of isolated traps and their symmetric orthonormalization.

Each ring trap gets the Gaussian ansatz ``N exp(-alpha (r - beta r_j)^2)``
with ``(alpha, beta)`` fixed variationally; the harmonic trap uses its exact
ground state. The energy functional is the Rayleigh quotient of the discrete
``ell = 0`` radial Hamiltonian, so the variational bound holds exactly with
respect to the solver's own ground state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import erf

from .errors import DegeneracyError, DomainError, NumericalError
from .potentials import TrapKind, TrapSpec
from .radial.grid import RadialGrid, build_hamiltonian

__all__ = [
    "LocalizedState",
    "OrthonormalBasis",
    "normalization_constant",
    "gaussian_profile",
    "variational_energy",
    "variational_ground_state",
    "orthonormalize",
    "localized_basis",
]

ENERGY_SPREAD_TOL = 1e-10
MAX_ITER = 2000
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LocalizedState:
    trap: TrapSpec
    alpha: float
    beta: float
    norm_const: float
    energy: float
    grid: RadialGrid
    profile: np.ndarray = field(repr=False)

    @property
    def u(self) -> np.ndarray:
        return self.grid.to_u(self.profile)


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Löwdin-orthonormalized profiles, one row per input state."""

    states: np.ndarray = field(repr=False)
    overlap_before: np.ndarray
    grid: RadialGrid
    sources: tuple = ()

    @property
    def u(self) -> np.ndarray:
        return self.states * self.grid.sqrt_r

    def __len__(self):
        return self.states.shape[0]


def normalization_constant(alpha: float, beta: float, r_j: float) -> float:
    """Closed-form ``N`` with ``2 pi int |N exp(-alpha (r - beta r_j)^2)|^2 r dr = 1``."""
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if beta < 0 or r_j < 0:
        raise DomainError("beta and r_j must be non-negative")
    c = beta * r_j
    denom = math.exp(-2.0 * alpha * c**2) + c * math.sqrt(2.0 * math.pi * alpha) * (
        erf(c * math.sqrt(2.0 * alpha)) + 1.0
    )
    return math.sqrt((2.0 * alpha / math.pi) / denom)


def gaussian_profile(alpha: float, beta: float, r_j: float, r) -> np.ndarray:
    return normalization_constant(alpha, beta, r_j) * np.exp(-alpha * (np.asarray(r) - beta * r_j) ** 2)


@lru_cache(maxsize=64)
def _isolated_hamiltonian(trap: TrapSpec, grid: RadialGrid):
    return build_hamiltonian(trap, grid, 0)


def variational_energy(trap: TrapSpec, grid: RadialGrid, alpha: float, beta: float) -> float:
    """Energy of the ansatz in the isolated trap, by quadrature on ``grid``."""
    h = _isolated_hamiltonian(trap, grid)
    u = grid.sqrt_r * np.exp(-alpha * (grid.r - beta * trap.radius) ** 2)
    norm = float(u @ u)
    if norm == 0.0:
        return math.inf
    return float(u @ (h @ u)) / norm


@lru_cache(maxsize=1024)
def variational_ground_state(trap: TrapSpec, grid: RadialGrid) -> LocalizedState:
    """Variational ``ell = 0`` ground state of an isolated trap.

    Nelder-Mead over ``(alpha, beta)`` from ``(omega/2, 1)``, stopped when the
    simplex energy spread drops below ``1e-10``.
    """
    if trap.kind is TrapKind.HARMONIC:
        alpha, beta = 0.5 * trap.omega, 0.0
        energy = variational_energy(trap, grid, alpha, beta)
    else:
        res = minimize(
            lambda x: variational_energy(trap, grid, x[0], x[1]),
            x0=np.array([0.5 * trap.omega, 1.0]),
            method="Nelder-Mead",
            bounds=[(1e-6, None), (0.0, None)],
            options={"fatol": ENERGY_SPREAD_TOL, "xatol": 1e-8, "maxiter": MAX_ITER},
        )
        if not res.success:
            raise NumericalError(
                f"variational optimisation did not converge for {trap}: {res.message}",
                nit=res.nit,
                x=tuple(res.x),
                energy=float(res.fun),
            )
        alpha, beta = float(res.x[0]), float(res.x[1])
        energy = float(res.fun)
    norm_const = normalization_constant(alpha, beta, trap.radius)
    psi = norm_const * np.exp(-alpha * (grid.r - beta * trap.radius) ** 2)
    psi = psi / math.sqrt(grid.norm2(grid.to_u(psi)))
    psi.setflags(write=False)
    return LocalizedState(trap, alpha, beta, norm_const, energy, grid, psi)


def orthonormalize(states: Sequence, grid: RadialGrid) -> OrthonormalBasis:
    """Symmetric (Löwdin) orthonormalization of 2 or 3 states on ``grid``.

    Accepts ``LocalizedState`` objects or raw real profiles ``psi(r_k)``.
    """
    profiles = np.array([s.profile if isinstance(s, LocalizedState) else np.asarray(s) for s in states], dtype=float)
    if profiles.ndim != 2 or profiles.shape[1] != grid.n:
        raise DomainError("states must be sampled on the given grid")
    u = profiles * grid.sqrt_r
    overlap = 2.0 * np.pi * grid.dr * (u @ u.T)
    w, v = np.linalg.eigh(overlap)
    if w.min() < DEGENERACY_TOL * w.max():
        raise DegeneracyError(f"overlap matrix is singular (eigenvalues {w})")
    x = (v * w**-0.5) @ v.T
    new = x.T @ profiles
    sources = tuple(s for s in states if isinstance(s, LocalizedState))
    return OrthonormalBasis(new, overlap, grid, sources)


def localized_basis(traps: Sequence[TrapSpec], grid: RadialGrid) -> OrthonormalBasis:
    return orthonormalize([variational_ground_state(t, grid) for t in traps], grid)
