"""
Two- and three-state reduced models of tunnel-coupled concentric traps.

Sign convention: the tunneling rates are reported positive for the usual
nodeless localized states, i.e. ``J = -2 <i|H|o>``, so that the model
matrices carry ``-J/2`` off the diagonal and reproduce the projected
Hamiltonian exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ResolutionError, StepSizeError, UndefinedAngleError
from .localized import OrthonormalBasis, localized_basis
from .potentials import JointPotential
from .radial.grid import RadialGrid, build_hamiltonian, check_resolution

__all__ = [
    "TwoStateCouplings",
    "ThreeStateCouplings",
    "TwoStateSystem",
    "ThreeStateSystem",
    "coupling_integrals",
    "projected_hamiltonian",
    "two_state_hamiltonian",
    "three_state_hamiltonian",
    "two_state_eigensystem",
    "dark_state",
    "integrate_amplitudes",
    "propagate_model",
    "ModelRun",
    "NextNearestCouplingWarning",
]

NORM_DRIFT_LIMIT = 1e-6
NEXT_NEAREST_RATIO = 1e-3
QUADRATURE_TOL = 1e-4


class NextNearestCouplingWarning(UserWarning):
    """The neglected inner/outer coupling of the three-state model is not small."""


class TwoStateCouplings(NamedTuple):
    J: float
    Delta: float


class ThreeStateCouplings(NamedTuple):
    J_im: float
    J_mo: float
    Delta_i: float
    Delta_o: float
    J_io: float = 0.0


@dataclass
class TwoStateSystem:
    J: float
    Delta: float
    amplitudes: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0], dtype=complex))

    @property
    def hamiltonian(self):
        return two_state_hamiltonian(self.J, self.Delta)


@dataclass
class ThreeStateSystem:
    J_im: float
    J_mo: float
    Delta_i: float = 0.0
    Delta_o: float = 0.0
    amplitudes: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0], dtype=complex))

    @property
    def hamiltonian(self):
        return three_state_hamiltonian(self.J_im, self.J_mo, self.Delta_i, self.Delta_o)


def two_state_hamiltonian(J, Delta):
    return np.array([[0.0, -0.5 * J], [-0.5 * J, Delta]])


def three_state_hamiltonian(J_im, J_mo, Delta_i, Delta_o):
    return np.array(
        [
            [Delta_i, -0.5 * J_im, 0.0],
            [-0.5 * J_im, 0.0, -0.5 * J_mo],
            [0.0, -0.5 * J_mo, Delta_o],
        ]
    )


def projected_hamiltonian(basis: OrthonormalBasis, jp: JointPotential, grid: RadialGrid) -> np.ndarray:
    """Matrix ``2 pi int psi_a H psi_b r dr`` of the joint Hamiltonian in the basis."""
    h = build_hamiltonian(jp, grid, 0)
    u = basis.u
    hu = np.array([h @ row for row in u])
    m = 2.0 * np.pi * grid.dr * (u @ hu.T)
    return 0.5 * (m + m.T)


def _check_quadrature(basis: OrthonormalBasis, grid: RadialGrid):
    omegas = [s.trap.omega for s in basis.sources]
    if omegas:
        check_resolution(grid, max(omegas))
    for s in basis.sources:
        raw = s.norm_const * np.exp(-s.alpha * (grid.r - s.beta * s.trap.radius) ** 2)
        err = abs(grid.norm2(grid.to_u(raw)) - 1.0)
        if err > QUADRATURE_TOL:
            raise ResolutionError(
                f"grid quadrature of the {s.trap} state deviates from its closed-form norm by {err:.2e}",
                error=err,
            )


def coupling_integrals(basis: OrthonormalBasis, jp: JointPotential, grid: RadialGrid):
    """Tunneling rates and energy biases of the reduced model.

    Two states give ``(J, Delta)`` with the inner energy as origin; three give
    ``(J_im, J_mo, Delta_i, Delta_o, J_io)`` with the middle energy as origin.
    """
    if len(basis) != len(jp):
        raise ValueError("basis and joint potential have different numbers of traps")
    _check_quadrature(basis, grid)
    m = projected_hamiltonian(basis, jp, grid)
    if len(basis) == 2:
        return TwoStateCouplings(-2.0 * m[0, 1], m[1, 1] - m[0, 0])
    return ThreeStateCouplings(
        -2.0 * m[0, 1], -2.0 * m[1, 2], m[0, 0] - m[1, 1], m[2, 2] - m[1, 1], -2.0 * m[0, 2]
    )


def two_state_eigensystem(J, Delta):
    """Eigenvalues ``E_+ >= E_-`` and mixing angle ``theta`` in ``[0, pi/2]``.

    ``theta = atan2(|J|, Delta) / 2`` tends to ``pi/2`` for a large negative
    bias and to ``0`` for a large positive one.
    """
    root = np.hypot(Delta, J)
    e_plus = 0.5 * (Delta + root)
    e_minus = 0.5 * (Delta - root)
    theta = 0.5 * np.arctan2(np.abs(J), Delta)
    return e_plus, e_minus, theta


def dark_state(J_im, J_mo):
    """Angle ``Theta = atan(J_im/J_mo)`` and the dark-state amplitudes ``(cos, 0, -sin)``."""
    if J_im == 0 and J_mo == 0:
        raise UndefinedAngleError("dark-state angle is undefined when both couplings vanish")
    theta = math.atan2(J_im, J_mo)
    return theta, np.array([math.cos(theta), 0.0, -math.sin(theta)])


@dataclass
class ModelRun:
    """Time series produced by ``propagate_model``; one row per output sample."""

    times: np.ndarray
    amplitudes: np.ndarray
    traps: np.ndarray  # (T, n_traps, 2): omega, radius
    couplings: dict
    angle: np.ndarray
    eigenvalues: np.ndarray  # ascending
    adiabatic_overlap: np.ndarray
    norm_drift: float
    max_next_nearest_ratio: float = 0.0
    lattice_times: np.ndarray = None

    @property
    def n_states(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    def columns(self) -> dict:
        cols = {"t": self.times}
        labels = "io" if self.n_states == 2 else "imo"
        for j, lab in enumerate(labels):
            cols[f"omega_{lab}"] = self.traps[:, j, 0]
            cols[f"r_{lab}"] = self.traps[:, j, 1]
        cols.update(self.couplings)
        if self.n_states == 2:
            cols["theta"] = self.angle
            cols["E_minus"] = self.eigenvalues[:, 0]
            cols["E_plus"] = self.eigenvalues[:, 1]
        else:
            cols["Theta"] = self.angle
            cols["E_minus"] = self.eigenvalues[:, 0]
            cols["E_d"] = self.eigenvalues[:, 1]
            cols["E_plus"] = self.eigenvalues[:, 2]
        for j, lab in enumerate(labels):
            cols[f"P_{lab}"] = self.populations[:, j]
        cols["adiabatic_overlap"] = self.adiabatic_overlap
        return cols


def _rk4(hs, amplitudes, dt, stride):
    """Fixed-step RK4 for ``i da/dt = H a``; ``hs`` holds H at t, t+dt/2, t+dt per step."""
    a = np.array(amplitudes, dtype=complex)
    out = [a.copy()]
    for k in range(hs.shape[0]):
        h0, h1, h2 = hs[k]
        k1 = -1j * (h0 @ a)
        k2 = -1j * (h1 @ (a + 0.5 * dt * k1))
        k3 = -1j * (h1 @ (a + 0.5 * dt * k2))
        k4 = -1j * (h2 @ (a + dt * k3))
        a = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % stride == 0 or k + 1 == hs.shape[0]:
            out.append(a.copy())
    return np.array(out)


def integrate_amplitudes(hamiltonian, initial, t_f: float, dt: float = 1e-2, stride: int = 100):
    """RK4 integration of ``i da/dt = H(t) a`` on ``[0, t_f]``.

    ``hamiltonian`` maps an array of times to stacked matrices. Returns the
    sample times, amplitudes and the maximal norm drift; raises
    ``StepSizeError`` when the drift exceeds ``1e-6``.
    """
    n_steps = max(1, int(round(t_f / dt)))
    dt = t_f / n_steps
    tk = dt * np.arange(n_steps)
    hs = np.asarray(hamiltonian(np.concatenate([tk, tk + 0.5 * dt, tk + dt])))
    n = hs.shape[-1]
    hs = hs.reshape(3, n_steps, n, n).transpose(1, 0, 2, 3)
    initial = np.asarray(initial, dtype=complex)
    initial = initial / np.linalg.norm(initial)
    amps = _rk4(hs, initial, dt, stride)
    idx = np.arange(0, n_steps + 1, stride)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    norm_drift = float(np.max(np.abs(np.sum(np.abs(amps) ** 2, axis=1) - 1.0)))
    if norm_drift > NORM_DRIFT_LIMIT:
        raise StepSizeError(f"amplitude norm drifted by {norm_drift:.2e}; reduce dt (now {dt})", dt=dt,
                            norm_drift=norm_drift)
    return idx * dt, amps, norm_drift


def propagate_model(protocol, grid: RadialGrid = None, dt: float = 1e-2, n_lattice: int = 200,
                    initial=None, stride: int = 100) -> ModelRun:
    """Integrate the reduced model along a protocol.

    ``protocol`` supplies ``t_f`` and ``traps_at(t)``. Couplings are evaluated
    on ``n_lattice`` equally spaced times and cubic-interpolated; amplitudes
    are advanced with fixed-step RK4 and sampled every ``stride`` steps.
    """
    grid = grid or RadialGrid()
    t_f = float(protocol.t_f)
    lattice = np.linspace(0.0, t_f, n_lattice)
    values = []
    for t in lattice:
        traps = protocol.traps_at(t)
        basis = localized_basis(traps, grid)
        values.append(coupling_integrals(basis, JointPotential(traps), grid))
    kind = type(values[0])
    values = np.array(values)
    spline = CubicSpline(lattice, values, axis=0)

    n_states = 2 if kind is TwoStateCouplings else 3
    if initial is None:
        initial = np.eye(n_states)[0]
    times, amps, norm_drift = integrate_amplitudes(
        lambda t: _stack_hamiltonians(kind, spline(t)), initial, t_f, dt, stride
    )

    c = spline(times)
    hm = _stack_hamiltonians(kind, c)
    eigvals = np.linalg.eigvalsh(hm)
    traps = np.array([[(tr.omega, tr.radius) for tr in protocol.traps_at(t)] for t in times])
    if kind is TwoStateCouplings:
        J, Delta = c[:, 0], c[:, 1]
        _, _, theta = two_state_eigensystem(J, Delta)
        angle = 0.5 * np.unwrap(2.0 * theta)
        followed = np.stack([np.sin(angle), -np.cos(angle)], axis=1)
        couplings = {"J": J, "Delta": Delta}
        ratio = 0.0
    else:
        J_im, J_mo, D_i, D_o, J_io = c.T
        angle = np.unwrap(np.arctan2(J_im, J_mo))
        followed = np.stack([np.cos(angle), np.zeros_like(angle), -np.sin(angle)], axis=1)
        couplings = {"J_im": J_im, "J_mo": J_mo, "J_io": J_io, "Delta_i": D_i, "Delta_o": D_o}
        big = np.maximum(np.abs(values[:, 0]), np.abs(values[:, 1]))
        ratio = float(np.max(np.abs(values[:, 4]) / big))
        if ratio > NEXT_NEAREST_RATIO:
            warnings.warn(
                f"neglected next-nearest coupling reaches {ratio:.2e} of the nearest-neighbour ones",
                NextNearestCouplingWarning,
                stacklevel=2,
            )
    overlap = np.abs(np.sum(followed * amps, axis=1)) ** 2
    return ModelRun(times, amps, traps, couplings, angle, eigvals, overlap, norm_drift, ratio, lattice)


def _stack_hamiltonians(kind, c):
    c = np.atleast_2d(c)
    n = c.shape[0]
    if kind is TwoStateCouplings:
        h = np.zeros((n, 2, 2))
        h[:, 0, 1] = h[:, 1, 0] = -0.5 * c[:, 0]
        h[:, 1, 1] = c[:, 1]
        return h
    h = np.zeros((n, 3, 3))
    h[:, 0, 1] = h[:, 1, 0] = -0.5 * c[:, 0]
    h[:, 1, 2] = h[:, 2, 1] = -0.5 * c[:, 1]
    h[:, 0, 0] = c[:, 2]
    h[:, 2, 2] = c[:, 3]
    return h
