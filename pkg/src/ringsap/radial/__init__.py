"""Exact radial propagation in a fixed winding-number sector."""

from .grid import RadialGrid, TridiagonalOperator, build_hamiltonian, check_resolution, solve_tridiagonal

__all__ = ["RadialGrid", "TridiagonalOperator", "build_hamiltonian", "check_resolution", "solve_tridiagonal"]
