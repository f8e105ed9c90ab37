import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ringsap.errors import DegeneracyError, DomainError
from ringsap.localized import (
    gaussian_profile,
    localized_basis,
    normalization_constant,
    orthonormalize,
    variational_energy,
    variational_ground_state,
)
from ringsap.potentials import TrapSpec
from ringsap.radial.dynamics import energy, imaginary_time_ground_state
from ringsap.radial.grid import RadialGrid

GRID = RadialGrid()


def _quad_norm(alpha, beta, r_j):
    f = lambda r: math.exp(-2 * alpha * (r - beta * r_j) ** 2) * r
    val, _ = quad(f, 0, np.inf, epsabs=1e-14, epsrel=1e-13, points=None)
    return 1.0 / math.sqrt(2 * math.pi * val)


def test_normalization_constant_quad_oracle():
    assert normalization_constant(1.0, 1.0, 4.0) == pytest.approx(_quad_norm(1.0, 1.0, 4.0), abs=1e-8)


@settings(max_examples=40)
@given(st.floats(0.1, 3.0), st.floats(0.0, 1.5), st.floats(0.0, 10.0))
def test_normalization_constant_property(alpha, beta, r_j):
    assert normalization_constant(alpha, beta, r_j) == pytest.approx(_quad_norm(alpha, beta, r_j), rel=1e-7)


def test_normalization_constant_harmonic_limit():
    # centred Gaussian: N^2 = 2 alpha / pi
    assert normalization_constant(0.5, 0.0, 3.0) == pytest.approx(math.sqrt(1 / math.pi))


def test_normalization_constant_domain():
    with pytest.raises(DomainError):
        normalization_constant(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        normalization_constant(1.0, -1.0, 1.0)


def test_harmonic_state_is_exact():
    st_ = variational_ground_state(TrapSpec.harmonic(1.0), GRID)
    assert st_.alpha == 0.5 and st_.beta == 0.0
    assert st_.energy == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("omega", [0.7, 1.0, 2.0])
def test_ring_at_origin_recovers_oscillator(omega):
    st_ = variational_ground_state(TrapSpec.ring(omega, 0.0), GRID)
    assert st_.alpha == pytest.approx(omega / 2, abs=1e-3)
    assert st_.energy == pytest.approx(omega, abs=1e-4)


def test_variational_bound():
    trap = TrapSpec.ring(2.0, 3.5)
    var = variational_ground_state(trap, GRID)
    exact = imaginary_time_ground_state(trap, GRID, 0)
    e_exact = energy(exact, trap)
    assert var.energy >= e_exact
    assert var.energy - e_exact < 1e-3
    assert abs(GRID.inner(exact.u, var.u)) ** 2 > 0.9999


def test_variational_minimum_is_stationary():
    trap = TrapSpec.ring(2.0, 7.5)
    st_ = variational_ground_state(trap, GRID)
    for da, db in [(1e-3, 0), (-1e-3, 0), (0, 1e-4), (0, -1e-4)]:
        assert variational_energy(trap, GRID, st_.alpha + da, st_.beta + db) >= st_.energy - 1e-12


def test_profile_normalized_on_grid():
    st_ = variational_ground_state(TrapSpec.ring(1.7, 4.5), GRID)
    assert GRID.norm2(st_.u) == pytest.approx(1.0, abs=1e-12)
    closed = gaussian_profile(st_.alpha, st_.beta, 4.5, GRID.r)
    assert GRID.norm2(GRID.to_u(closed)) == pytest.approx(1.0, abs=1e-5)


def _three_states():
    return [variational_ground_state(TrapSpec.ring(2.0, r), GRID) for r in (4.0, 6.0, 8.5)]


def test_orthonormality():
    basis = orthonormalize(_three_states(), GRID)
    s = 2 * np.pi * GRID.dr * basis.u @ basis.u.T
    np.testing.assert_allclose(s, np.eye(3), atol=1e-12)
    assert basis.overlap_before[0, 1] > 1e-3


def test_permutation_equivariance():
    states = _three_states()
    perm = [2, 0, 1]
    a = orthonormalize(states, GRID).states
    b = orthonormalize([states[k] for k in perm], GRID).states
    np.testing.assert_allclose(b, a[perm], atol=1e-12)


def test_span_preserved():
    states = _three_states()
    basis = orthonormalize(states, GRID)
    raw = np.array([s.profile for s in states])
    # projecting the old profiles onto the new span loses nothing
    coef, res, *_ = np.linalg.lstsq(basis.states.T, raw.T, rcond=None)
    np.testing.assert_allclose(basis.states.T @ coef, raw.T, atol=1e-10)


def test_lowdin_is_closest_orthonormal_set():
    states = _three_states()
    basis = orthonormalize(states, GRID)
    raw = np.array([s.profile for s in states])
    dist = np.sum((basis.states - raw) ** 2)
    # any other orthonormal set in the span is a rotation of the Löwdin one
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    assert dist <= np.sum((q @ basis.states - raw) ** 2)


def test_orthonormalize_accepts_raw_profiles():
    prof = [s.profile for s in _three_states()]
    a = orthonormalize(prof, GRID).states
    b = orthonormalize(_three_states(), GRID).states
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_degenerate_states_rejected():
    st_ = variational_ground_state(TrapSpec.ring(2.0, 4.0), GRID)
    with pytest.raises(DegeneracyError):
        orthonormalize([st_, st_], GRID)


def test_localized_basis_size():
    traps = (TrapSpec.harmonic(1.0), TrapSpec.ring(1.7, 4.5))
    assert len(localized_basis(traps, GRID)) == 2
