"""
Imaginary- and real-time Crank-Nicolson propagation in a fixed winding sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import localized
from ..errors import DomainError, NumericalError, StepSizeError
from ..potentials import JointPotential
from .grid import RadialGrid, build_hamiltonian, crank_nicolson_step

__all__ = [
    "RadialWavefunction",
    "EvolutionResult",
    "energy",
    "imaginary_time_ground_state",
    "initial_state",
    "evolve",
    "project_populations",
    "region_populations",
]

NORM_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class RadialWavefunction:
    """``u = sqrt(r) psi`` on the grid nodes, for winding number ``ell``."""

    grid: RadialGrid
    ell: int
    u: np.ndarray = field(repr=False)

    @property
    def psi(self) -> np.ndarray:
        return self.grid.to_psi(self.u)

    @property
    def norm2(self) -> float:
        return self.grid.norm2(self.u)

    def normalized(self) -> "RadialWavefunction":
        return RadialWavefunction(self.grid, self.ell, self.u / math.sqrt(self.norm2))

    def with_ell(self, ell: int) -> "RadialWavefunction":
        """Same radial profile carrying the azimuthal phase ``exp(i ell phi)``."""
        return RadialWavefunction(self.grid, ell, self.u)

    def overlap(self, other) -> complex:
        v = other.u if isinstance(other, RadialWavefunction) else np.asarray(other)
        return complex(self.grid.inner(v, self.u))


def energy(state: RadialWavefunction, potential) -> float:
    h = build_hamiltonian(potential, state.grid, state.ell)
    u = state.u.astype(complex)
    return float(np.real(state.grid.inner(u, h @ u)) / state.norm2)


def _default_guess(potential, grid: RadialGrid, center=None):
    if center is None:
        trap = potential.traps[0] if isinstance(potential, JointPotential) else potential
        center, omega = trap.radius, trap.omega
    else:
        omega = 1.0
    psi = np.exp(-0.5 * omega * (grid.r - center) ** 2)
    return grid.normalize(grid.to_u(psi))


def _check_imaginary_step(h, grid, u, dtau):
    """Reject ``dtau`` for which the stiffest mode outlives the ground state.

    A Crank-Nicolson factor ``(1 - x)/(1 + x)`` with ``x = dtau E / 2`` damps
    the top of the spectrum more slowly than the bottom once
    ``x_min x_max >= 1``; relaxation would then converge to the wrong state.
    The seed energy bounds ``E_min`` from above and Gershgorin bounds ``E_max``.
    """
    limit = _max_imaginary_step(h, grid, u)
    if dtau >= limit:
        raise DomainError(f"dtau={dtau} too large for this grid: need dtau < {limit:.3g}")


def _max_imaginary_step(h, grid, u) -> float:
    e_seed = float(np.real(grid.inner(u, h @ u)) / grid.norm2(u))
    e_top = float(np.max(h.diag) + 2.0 * np.max(np.abs(h.off)))
    return 2.0 / math.sqrt(e_seed * e_top) if e_seed > 0 else math.inf


def imaginary_time_ground_state(potential, grid: RadialGrid = None, ell: int = 0, dtau: float = 1e-3,
                                initial=None, tol: float = 1e-12, max_steps: int = 500_000,
                                center: float = None) -> RadialWavefunction:
    """Lowest state of ``potential`` in sector ``ell`` by imaginary-time relaxation.

    Each Crank-Nicolson step is followed by renormalisation; iteration stops
    once the energy changes by less than ``tol`` in one step. Without an
    ``initial`` state the seed is a Gaussian at the minimum of the trap (the
    innermost one for a joint potential) or at ``center``.
    """
    grid = grid or RadialGrid()
    h = build_hamiltonian(potential, grid, ell)
    if initial is None:
        u = _default_guess(potential, grid, center)
    else:
        u = initial.u if isinstance(initial, RadialWavefunction) else np.asarray(initial)
        u = grid.normalize(u)
    u = np.asarray(u, dtype=np.complex128)
    _check_imaginary_step(h, grid, u, dtau)
    c = complex(0.5 * dtau)
    e_old = math.inf
    for step in range(1, max_steps + 1):
        u = crank_nicolson_step(h.diag, h.off, c, u)
        u = u / math.sqrt(grid.norm2(u))
        e_new = float(np.real(grid.inner(u, h @ u)))
        change = abs(e_new - e_old)
        if change < tol:
            break
        e_old = e_new
    else:
        raise NumericalError(
            f"imaginary-time relaxation not converged after {max_steps} steps",
            steps=max_steps,
            energy=e_new,
            last_change=change,
        )
    u = u.real.copy()
    # fix the global sign so the profile is mostly positive
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    return RadialWavefunction(grid, ell, u.astype(np.complex128))


def initial_state(protocol, grid: RadialGrid = None, ell: int = None, mode: str = "isolated",
                  dtau: float = None) -> RadialWavefunction:
    """Starting state of a protocol: the ground state of its innermost trap.

    ``mode="isolated"`` relaxes in the isolated inner trap; ``"joint"`` relaxes
    in the full potential at ``t = 0`` seeded in the inner trap, which only
    stays inner-localized when that state is the global ground state. The
    ``ell = 0`` profile is used and then given the protocol's winding number.
    """
    grid = grid or protocol.solver.grid
    ell = protocol.ell if ell is None else ell
    dtau = protocol.solver.dtau if dtau is None else dtau
    traps = protocol.traps_at(0.0)
    if mode == "isolated":
        gs = imaginary_time_ground_state(traps[0], grid, 0, dtau)
    elif mode == "joint":
        jp = JointPotential(traps)
        seed = imaginary_time_ground_state(traps[0], grid, 0, dtau)
        # tunnelling splittings are tiny, so take the largest safe step
        step = 0.5 * _max_imaginary_step(build_hamiltonian(jp, grid, 0), grid, seed.u)
        gs = imaginary_time_ground_state(jp, grid, 0, max(dtau, min(step, 0.05)), initial=seed, tol=1e-13)
    else:
        raise DomainError(f"unknown initial-state mode {mode!r}")
    return gs.with_ell(ell)


def project_populations(u, basis: "localized.OrthonormalBasis") -> np.ndarray:
    grid = basis.grid
    amps = 2.0 * np.pi * grid.dr * (basis.u @ u)
    return np.abs(amps) ** 2


def region_populations(u, jp: JointPotential, grid: RadialGrid) -> np.ndarray:
    """Density integrated over each trap's piece of the joint potential."""
    idx = jp.region_index(grid.r)
    dens = 2.0 * np.pi * grid.dr * np.abs(u) ** 2
    return np.bincount(idx, weights=dens, minlength=len(jp))


@dataclass
class EvolutionResult:
    times: np.ndarray
    populations: np.ndarray  # projection onto the orthonormalized localized states
    region_populations: np.ndarray
    final_state: RadialWavefunction
    fidelity: float
    fidelity_candidates: dict
    norm_drift: float
    survival: float  # |<psi(0)|psi(t_f)>|^2
    snapshots: dict = field(default_factory=dict)

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    def columns(self) -> dict:
        labels = "io" if self.populations.shape[1] == 2 else "imo"
        cols = {"t": self.times}
        for j, lab in enumerate(labels):
            cols[f"P_{lab}"] = self.populations[:, j]
        for j, lab in enumerate(labels):
            cols[f"P_{lab}_region"] = self.region_populations[:, j]
        return cols


def _target_fidelities(protocol, u, grid, ell, basis):
    cands = {"localized": float(project_populations(u, basis)[-1])}
    if ell != 0:
        outer = protocol.traps_at(protocol.t_f)[-1]
        gs = imaginary_time_ground_state(outer, grid, ell, protocol.solver.dtau)
        cands["sector_ground_state"] = float(abs(grid.inner(gs.u, u)) ** 2)
    return cands


def evolve(protocol, grid: RadialGrid = None, ell: int = None, dt: float = None,
           initial: RadialWavefunction = None, stride=None, snapshot_times=()) -> EvolutionResult:
    """Real-time Crank-Nicolson evolution along ``protocol``.

    The potential of each step is evaluated at its midpoint. Populations are
    recorded every ``stride`` steps (``stride=0`` records only the endpoints)
    by projection onto the instantaneous orthonormalized localized states.
    """
    solver = protocol.solver
    grid = grid or solver.grid
    ell = protocol.ell if ell is None else ell
    dt = solver.dt if dt is None else dt
    stride = solver.stride if stride is None else stride
    t_f = float(protocol.t_f)
    for ts in snapshot_times:
        if not 0.0 <= ts <= t_f:
            raise DomainError(f"snapshot time {ts} outside [0, {t_f}]")
    if initial is None:
        initial = initial_state(protocol, grid, ell, solver.initial_mode)
    if initial.grid != grid:
        raise DomainError("initial state lives on a different grid")
    u0 = np.asarray(initial.u / math.sqrt(initial.norm2), dtype=np.complex128)

    n_steps = max(1, int(round(t_f / dt)))
    dt = t_f / n_steps
    h0 = build_hamiltonian(np.zeros(grid.n), grid, ell)
    base_diag, off = h0.diag, h0.off
    c = 0.5j * dt

    record = set(range(0, n_steps + 1, stride)) if stride else set()
    record |= {0, n_steps}
    snap_steps = {int(round(ts / dt)): ts for ts in snapshot_times}

    times, pops, regions, drifts = [], [], [], [0.0]
    snapshots = {}

    def sample(k, u):
        t = k * dt
        traps = protocol.traps_at(t)
        basis = localized.localized_basis(traps, grid)
        times.append(t)
        pops.append(project_populations(u, basis))
        regions.append(region_populations(u, JointPotential(traps), grid))
        return basis

    u = u0.copy()
    basis = sample(0, u)
    if 0 in snap_steps:
        snapshots[snap_steps[0]] = RadialWavefunction(grid, ell, u.copy())
    for k in range(n_steps):
        v = protocol.joint_at((k + 0.5) * dt)(grid.r)
        u = crank_nicolson_step(base_diag + v, off, c, u)
        step = k + 1
        if step in record:
            drift = abs(grid.norm2(u) - 1.0)
            drifts.append(drift)
            if drift > NORM_DRIFT_LIMIT:
                raise StepSizeError(
                    f"norm drifted by {drift:.2e} at t={step * dt:.4g}; reduce dt (now {dt})",
                    dt=dt,
                    norm_drift=drift,
                )
            basis = sample(step, u)
        if step in snap_steps:
            snapshots[snap_steps[step]] = RadialWavefunction(grid, ell, u.copy())

    cands = _target_fidelities(protocol, u, grid, ell, basis)
    return EvolutionResult(
        times=np.array(times),
        populations=np.array(pops),
        region_populations=np.array(regions),
        final_state=RadialWavefunction(grid, ell, u),
        fidelity=max(cands.values()),
        fidelity_candidates=cands,
        norm_drift=float(max(drifts)),
        survival=float(abs(grid.inner(u0, u)) ** 2),
        snapshots=snapshots,
    )
