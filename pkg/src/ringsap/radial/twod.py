"""Polar-raster reconstruction of a radial state and winding-number measurement."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import UndefinedWindingError

__all__ = ["PolarField", "reconstruct_2d", "winding_number", "export_snapshot"]


@dataclass(frozen=True, eq=False)
class PolarField:
    r: np.ndarray
    phi: np.ndarray
    psi: np.ndarray = field(repr=False)  # shape (len(r), len(phi))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.psi)


def reconstruct_2d(state, n_angular: int = 128) -> PolarField:
    """``psi(r_k, phi_q) = (u_k / sqrt(r_k)) exp(i ell phi_q)`` on a polar raster."""
    phi = 2.0 * np.pi * np.arange(n_angular) / n_angular
    radial = state.grid.to_psi(state.u)
    psi = np.outer(radial, np.exp(1j * state.ell * phi))
    return PolarField(state.grid.r, phi, psi)


def winding_number(field: PolarField, threshold: float = 1e-6) -> int:
    """Phase accumulated around the circle through the density maximum, over 2 pi.

    Raises ``UndefinedWindingError`` when the density on that circle falls
    below ``threshold`` times the global maximum anywhere.
    """
    dens = field.density
    peak = dens.max()
    if peak == 0.0:
        raise UndefinedWindingError("field vanishes everywhere")
    k = int(np.argmax(dens.max(axis=1)))
    ring = field.psi[k]
    if np.min(np.abs(ring) ** 2) < threshold * peak:
        raise UndefinedWindingError(f"density on the circle r={field.r[k]:.4g} is below threshold")
    steps = np.angle(np.roll(ring, -1) / ring)
    return int(np.rint(steps.sum() / (2.0 * np.pi)))


def export_snapshot(field: PolarField, path, what: str = "density"):
    """Write the density or phase raster as a plain-text matrix, one row per radius."""
    data = field.density if what == "density" else field.phase
    header = f"{what}; rows r_k, columns phi_q = 2 pi q / {field.phi.size}"
    np.savetxt(Path(path), data, fmt="%.17g", header=header)
