"""
Radial grid, the fixed-winding radial Hamiltonian and tridiagonal kernels.

The wavefunction of winding number ``ell`` is stored as ``u(r) = sqrt(r) psi(r)``
on cell centres ``r_k = (k - 1/2) dr``. The cylindrical Laplacian is
discretised in flux form,

    (1/r) d/dr (r d psi/dr)  ->  [r_{k+1/2}(psi_{k+1}-psi_k) - r_{k-1/2}(psi_k-psi_{k-1})] / (r_k dr^2),

and symmetrised by the ``sqrt(r)`` scaling. The flux through ``r = 0``
vanishes, which is the correct regularity condition for every ``ell`` and
keeps the scheme second-order accurate in the ``ell = 0`` sector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np
from scipy.linalg import eigh_tridiagonal

from ..errors import ConfigurationError, ResolutionError

__all__ = [
    "RadialGrid",
    "TridiagonalOperator",
    "build_hamiltonian",
    "solve_tridiagonal",
    "crank_nicolson_step",
    "check_resolution",
]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform cell-centred radial grid on ``[0, r_max]`` with ``n`` nodes."""

    r_max: float = 20.0
    n: int = 2048

    def __post_init__(self):
        if not self.r_max > 0:
            raise ConfigurationError("r_max must be > 0", key="r_max")
        if int(self.n) != self.n or self.n < 8:
            raise ConfigurationError("grid needs an integer n >= 8", key="n")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r_max", float(self.r_max))

    @property
    def dr(self) -> float:
        return self.r_max / self.n

    @cached_property
    def r(self) -> np.ndarray:
        r = self.dr * (np.arange(1, self.n + 1) - 0.5)
        r.setflags(write=False)
        return r

    @cached_property
    def sqrt_r(self) -> np.ndarray:
        s = np.sqrt(self.r)
        s.setflags(write=False)
        return s

    def inner(self, u, v):
        """2D inner product ``2 pi int conj(psi_u) psi_v r dr`` of u-representations."""
        return 2.0 * np.pi * self.dr * np.vdot(u, v)

    def norm2(self, u) -> float:
        return float(2.0 * np.pi * self.dr * np.sum(np.abs(u) ** 2))

    def normalize(self, u):
        return u / np.sqrt(self.norm2(u))

    def to_u(self, psi):
        return self.sqrt_r * psi

    def to_psi(self, u):
        return u / self.sqrt_r

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.r_max, self.n * factor)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix given by its diagonal and off-diagonal."""

    diag: np.ndarray
    off: np.ndarray

    def __matmul__(self, u):
        u = np.asarray(u)
        if np.iscomplexobj(u):
            return _tridiag_matvec(self.diag, self.off, u.astype(np.complex128))
        return _tridiag_matvec_real(self.diag, self.off, u.astype(np.float64))

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def lowest(self, k: int = 1):
        """Lowest ``k`` eigenvalues and eigenvectors (columns)."""
        w, v = eigh_tridiagonal(self.diag, self.off, select="i", select_range=(0, k - 1))
        return w, v


def _kinetic(grid: RadialGrid):
    r = grid.r
    dr = grid.dr
    r_face = r[:-1] + 0.5 * dr
    off = -r_face / (2.0 * dr**2 * np.sqrt(r[:-1] * r[1:]))
    # r_{k+1/2} + r_{k-1/2} = 2 r_k on cell centres, including k = 1 where r_{1/2} = 0
    diag = np.full(grid.n, 1.0 / dr**2)
    return diag, off


def build_hamiltonian(potential, grid: RadialGrid, ell: int = 0) -> TridiagonalOperator:
    """Discrete ``H_ell = T_radial + ell^2/(2 r^2) + V(r)`` acting on ``u = sqrt(r) psi``.

    ``potential`` is anything callable on an array of radii (a ``TrapSpec``
    or ``JointPotential``) or an array already sampled on the grid.
    """
    diag, off = _kinetic(grid)
    v = potential(grid.r) if callable(potential) else np.asarray(potential, dtype=float)
    diag = diag + ell**2 / (2.0 * grid.r**2) + v
    return TridiagonalOperator(diag, off)


def check_resolution(grid: RadialGrid, omega_max: float, energy: float = None, v_edge: float = None):
    """Raise ``ResolutionError`` unless the grid resolves and contains the states.

    ``dr`` must be below a tenth of the narrowest oscillator length and, when
    given, the potential at ``r_max`` must exceed ``energy`` by at least 10.
    """
    length = 1.0 / np.sqrt(omega_max)
    if not grid.dr < length / 10.0:
        raise ResolutionError(
            f"dr={grid.dr:.4g} does not resolve oscillator length {length:.4g}",
            dr=grid.dr,
            length=length,
        )
    if energy is not None and v_edge is not None and v_edge - energy < 10.0:
        raise ResolutionError(
            f"potential at r_max={grid.r_max} exceeds the state energy by only {v_edge - energy:.3g}",
            margin=v_edge - energy,
        )


@numba.njit(cache=True)
def _tridiag_matvec(d, e, u):
    n = u.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for k in range(n):
        out[k] = d[k] * u[k]
    for k in range(n - 1):
        out[k] += e[k] * u[k + 1]
        out[k + 1] += e[k] * u[k]
    return out


@numba.njit(cache=True)
def _tridiag_matvec_real(d, e, u):
    n = u.shape[0]
    out = np.empty(n, dtype=np.float64)
    for k in range(n):
        out[k] = d[k] * u[k]
    for k in range(n - 1):
        out[k] += e[k] * u[k + 1]
        out[k + 1] += e[k] * u[k]
    return out


@numba.njit(cache=True)
def solve_tridiagonal(a, b, c, d):
    """
    Solve a tridiagonal system with the Thomas algorithm.

    Parameters
    ----------
    a : ndarray
        Sub-diagonal, length n-1 (``a[k]`` multiplies ``x[k]`` in row k+1).
    b : ndarray
        Diagonal, length n.
    c : ndarray
        Super-diagonal, length n-1.
    d : ndarray
        Right-hand side, length n.

    Returns
    -------
    x : ndarray
        Complex solution vector.
    """
    n = d.shape[0]
    cp = np.empty(n, dtype=np.complex128)
    dp = np.empty(n, dtype=np.complex128)
    cp[0] = c[0] / b[0] if n > 1 else 0.0
    dp[0] = d[0] / b[0]
    for k in range(1, n):
        m = b[k] - a[k - 1] * cp[k - 1]
        if k < n - 1:
            cp[k] = c[k] / m
        dp[k] = (d[k] - a[k - 1] * dp[k - 1]) / m
    x = np.empty(n, dtype=np.complex128)
    x[n - 1] = dp[n - 1]
    for k in range(n - 2, -1, -1):
        x[k] = dp[k] - cp[k] * x[k + 1]
    return x


@numba.njit(cache=True)
def crank_nicolson_step(d, e, c, u):
    """One step ``(1 + c H) u_new = (1 - c H) u`` for symmetric tridiagonal ``H``.

    ``c`` is ``1j*dt/2`` for real time and ``dtau/2`` for imaginary time.
    """
    n = u.shape[0]
    rhs = np.empty(n, dtype=np.complex128)
    for k in range(n):
        rhs[k] = u[k] - c * d[k] * u[k]
    for k in range(n - 1):
        rhs[k] -= c * e[k] * u[k + 1]
        rhs[k + 1] -= c * e[k] * u[k]
    # forward sweep with a = c_up = c*e, b = 1 + c*d
    cp = np.empty(n, dtype=np.complex128)
    b0 = 1.0 + c * d[0]
    cp[0] = c * e[0] / b0
    rhs[0] = rhs[0] / b0
    for k in range(1, n):
        ak = c * e[k - 1]
        m = 1.0 + c * d[k] - ak * cp[k - 1]
        if k < n - 1:
            cp[k] = c * e[k] / m
        rhs[k] = (rhs[k] - ak * rhs[k - 1]) / m
    for k in range(n - 2, -1, -1):
        rhs[k] = rhs[k] - cp[k] * rhs[k + 1]
    return rhs
