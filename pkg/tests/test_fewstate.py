import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringsap import protocols
from ringsap.errors import ResolutionError, StepSizeError, UndefinedAngleError
from ringsap.fewstate import (
    NextNearestCouplingWarning,
    ThreeStateCouplings,
    TwoStateCouplings,
    coupling_integrals,
    dark_state,
    integrate_amplitudes,
    projected_hamiltonian,
    propagate_model,
    three_state_hamiltonian,
    two_state_eigensystem,
    two_state_hamiltonian,
)
from ringsap.localized import localized_basis
from ringsap.potentials import JointPotential, TrapSpec
from ringsap.radial.grid import RadialGrid

couplings = st.floats(1e-4, 1.0)


def _const(h):
    return lambda t: np.broadcast_to(h, (np.size(t),) + h.shape)


def test_rabi_oscillation():
    J = 0.05
    times, amps, drift = integrate_amplitudes(_const(two_state_hamiltonian(J, 0.0)), [1, 0], 400.0, 1e-2, 10)
    err = np.abs(np.abs(amps[:, 1]) ** 2 - np.sin(J * times / 2) ** 2)
    assert err.max() < 1e-6
    assert drift < 1e-8


def test_landau_zener():
    # i da/dt = H a with H = [[0, -J/2], [-J/2, v t]]; diabatic survival exp(-2 pi (J/2)^2 / v)
    J, v, T = 0.1, 0.01, 400.0
    ham = lambda t: np.stack([two_state_hamiltonian(J, v * (tt - T / 2)) for tt in np.atleast_1d(t)])
    _, amps, _ = integrate_amplitudes(ham, [1, 0], T, 1e-2, 100)
    expected = math.exp(-2 * math.pi * (J / 2) ** 2 / v)
    assert abs(amps[-1, 0]) ** 2 == pytest.approx(expected, abs=2e-2)


def test_zero_coupling_keeps_populations():
    _, amps, _ = integrate_amplitudes(_const(three_state_hamiltonian(0.0, 0.0, 0.3, -0.2)), [0.6, 0.0, 0.8],
                                      100.0)
    np.testing.assert_allclose(np.abs(amps) ** 2, np.tile([0.36, 0.0, 0.64], (len(amps), 1)), atol=1e-12)


def test_norm_conservation_three_state():
    rng = np.random.default_rng(4)
    c = rng.standard_normal(4) * 0.05

    def ham(t):
        t = np.atleast_1d(t)
        s = np.sin(2 * np.pi * t / 400.0)
        return np.stack([three_state_hamiltonian(c[0] * (1 + x), c[1] * (1 - x), c[2] * x, c[3]) for x in s])

    _, _, drift = integrate_amplitudes(ham, [1, 0, 0], 400.0, 1e-2)
    assert drift < 1e-8


def test_step_size_error():
    with pytest.raises(StepSizeError):
        integrate_amplitudes(_const(two_state_hamiltonian(10.0, 0.0)), [1, 0], 50.0, 0.5)


@given(couplings, st.floats(-1.0, 1.0))
def test_two_state_eigensystem(J, Delta):
    e_plus, e_minus, theta = two_state_eigensystem(J, Delta)
    w = np.linalg.eigvalsh(two_state_hamiltonian(J, Delta))
    assert e_minus == pytest.approx(w[0], abs=1e-12)
    assert e_plus == pytest.approx(w[1], abs=1e-12)
    assert 0.0 <= theta <= math.pi / 2
    # Psi_+ = (sin theta, -cos theta) is the upper eigenvector
    vec = np.array([math.sin(theta), -math.cos(theta)])
    np.testing.assert_allclose(two_state_hamiltonian(J, Delta) @ vec, e_plus * vec, atol=1e-12)


def test_mixing_angle_limits():
    assert two_state_eigensystem(1e-6, -1.0)[2] == pytest.approx(math.pi / 2, abs=1e-5)
    assert two_state_eigensystem(1e-6, 1.0)[2] == pytest.approx(0.0, abs=1e-5)
    assert two_state_eigensystem(0.3, 0.0)[2] == pytest.approx(math.pi / 4)


@settings(max_examples=100)
@given(couplings, couplings)
def test_dark_state_nullity(J_im, J_mo):
    theta, vec = dark_state(J_im, J_mo)
    hv = three_state_hamiltonian(J_im, J_mo, 0.0, 0.0) @ vec
    assert abs(hv[1]) < 1e-12
    assert np.max(np.abs(hv)) < 1e-12
    assert vec[1] == 0.0
    assert 0 <= theta <= math.pi / 2


@given(couplings, couplings)
def test_three_state_spectrum(J_im, J_mo):
    w = np.linalg.eigvalsh(three_state_hamiltonian(J_im, J_mo, 0.0, 0.0))
    half = 0.5 * math.hypot(J_im, J_mo)
    np.testing.assert_allclose(w, [-half, 0.0, half], atol=1e-12)


def test_dark_state_undefined():
    with pytest.raises(UndefinedAngleError):
        dark_state(0.0, 0.0)


def test_dark_state_limits():
    assert dark_state(0.0, 1.0)[0] == 0.0
    assert dark_state(1.0, 0.0)[0] == pytest.approx(math.pi / 2)


def test_couplings_reproduce_projected_hamiltonian():
    grid = RadialGrid()
    traps = (TrapSpec.harmonic(1.0), TrapSpec.ring(1.7, 3.8))
    basis = localized_basis(traps, grid)
    jp = JointPotential(traps)
    c = coupling_integrals(basis, jp, grid)
    assert isinstance(c, TwoStateCouplings)
    m = projected_hamiltonian(basis, jp, grid)
    h = two_state_hamiltonian(c.J, c.Delta) + m[0, 0] * np.eye(2)
    np.testing.assert_allclose(h, m, atol=1e-14)
    assert c.J > 0


def test_three_state_couplings():
    grid = RadialGrid()
    traps = (TrapSpec.ring(2.0, 4.5), TrapSpec.ring(2.0, 7.5), TrapSpec.ring(2.0, 10.5))
    c = coupling_integrals(localized_basis(traps, grid), JointPotential(traps), grid)
    assert isinstance(c, ThreeStateCouplings)
    # mirror-symmetric spacing and equal frequencies: nearly equal rates
    assert c.J_im > 0 and c.J_mo > 0
    assert c.J_im == pytest.approx(c.J_mo, rel=0.1)
    assert abs(c.J_io) < 2e-2 * c.J_im  # next-nearest is about 1% here


def test_coarse_grid_is_rejected():
    grid = RadialGrid(20.0, 64)
    traps = (TrapSpec.harmonic(1.0), TrapSpec.ring(1.7, 4.5))
    with pytest.raises(ResolutionError):
        coupling_integrals(localized_basis(traps, grid), JointPotential(traps), grid)


@pytest.fixture(scope="module")
def rap_model():
    return propagate_model(protocols.preset("RAP_HARMONIC_RING"))


def test_model_follows_upper_state_initially(rap_model):
    assert rap_model.adiabatic_overlap[0] > 0.99
    assert rap_model.angle[0] > 1.4
    assert rap_model.angle[-1] < 0.1
    assert np.all(np.diff(rap_model.eigenvalues, axis=1) > 0)
    assert rap_model.norm_drift < 1e-8


def test_model_columns(rap_model):
    cols = rap_model.columns()
    for key in ("t", "omega_o", "r_o", "J", "Delta", "theta", "E_minus", "E_plus", "P_i", "P_o"):
        assert len(cols[key]) == len(rap_model.times)
    assert cols["r_o"][np.argmin(np.abs(cols["t"] - 200))] == pytest.approx(3.5, abs=1e-3)


def test_lattice_doubling(rap_model):
    fine = propagate_model(protocols.preset("RAP_HARMONIC_RING"), n_lattice=400)
    assert abs(fine.final_populations[1] - rap_model.final_populations[1]) < 1e-4


def test_next_nearest_warning():
    with pytest.warns(NextNearestCouplingWarning):
        run = propagate_model(protocols.preset("STIRAP_TRIPLE_RING", t_f=50.0), n_lattice=50)
    assert run.max_next_nearest_ratio > 1e-3
    assert run.n_states == 3


def test_far_separated_rings_decouple():
    grid = RadialGrid()
    traps = (TrapSpec.ring(2.0, 4.0), TrapSpec.ring(2.0, 14.0))
    c = coupling_integrals(localized_basis(traps, grid), JointPotential(traps), grid)
    assert abs(c.J) < 1e-6


def test_identical_rings_bias_is_isolated_energy_difference():
    # identical rings at different radii differ only by the curvature term ~ -1/(8 r^2)
    from ringsap.localized import variational_ground_state

    grid = RadialGrid()
    traps = (TrapSpec.ring(2.0, 6.0), TrapSpec.ring(2.0, 14.0))
    c = coupling_integrals(localized_basis(traps, grid), JointPotential(traps), grid)
    e = [variational_ground_state(t, grid).energy for t in traps]
    assert c.Delta == pytest.approx(e[1] - e[0], abs=1e-6)
    assert abs(c.Delta) < 5e-3
