import numpy as np
import pytest

from ringsap import protocols
from ringsap.errors import DomainError, NumericalError, StepSizeError, UndefinedWindingError
from ringsap.potentials import JointPotential, TrapKind, TrapSpec
from ringsap.protocols import ProtocolPreset, TrapSchedule
from ringsap.radial import dynamics
from ringsap.radial.dynamics import (
    RadialWavefunction,
    energy,
    evolve,
    imaginary_time_ground_state,
    initial_state,
    region_populations,
)
from ringsap.radial.grid import RadialGrid, build_hamiltonian, crank_nicolson_step
from ringsap.radial.twod import export_snapshot, reconstruct_2d, winding_number

GRID = RadialGrid()


@pytest.mark.parametrize("ell, exact", [(0, 1.0), (1, 2.0)])
def test_imaginary_time_oscillator(ell, exact):
    gs = imaginary_time_ground_state(TrapSpec.harmonic(1.0), GRID, ell)
    assert energy(gs, TrapSpec.harmonic(1.0)) == pytest.approx(exact, abs=1e-4)
    assert gs.norm2 == pytest.approx(1.0, abs=1e-12)
    # exact 2D oscillator ground state in sector ell: r^|ell| exp(-r^2/2)
    ref = GRID.normalize(GRID.to_u(GRID.r ** abs(ell) * np.exp(-0.5 * GRID.r**2)))
    assert abs(gs.overlap(ref)) ** 2 > 0.9999


def test_imaginary_time_matches_lowest_eigenvector():
    trap = TrapSpec.ring(2.0, 5.0)
    gs = imaginary_time_ground_state(trap, GRID, 0, dtau=1e-2)
    w, v = build_hamiltonian(trap, GRID, 0).lowest(1)
    assert energy(gs, trap) == pytest.approx(w[0], abs=1e-8)
    assert np.all(gs.u.real[np.abs(gs.u) > 1e-3] > 0)


def test_imaginary_time_not_converged():
    with pytest.raises(NumericalError) as info:
        imaginary_time_ground_state(TrapSpec.ring(2.0, 4.0), GRID, 1, max_steps=5)
    assert info.value.diagnostics["steps"] == 5
    assert info.value.diagnostics["last_change"] > 0


def test_imaginary_time_step_too_large():
    # the l = 1 centrifugal wall makes the spectrum stiff near the origin
    with pytest.raises(DomainError):
        imaginary_time_ground_state(TrapSpec.harmonic(1.0), GRID, 1, dtau=1e-2)


def test_norm_conservation_1e5_steps():
    grid = RadialGrid(20.0, 512)
    h = build_hamiltonian(TrapSpec.ring(2.0, 4.0), grid, 1)
    rng = np.random.default_rng(5)
    u = grid.normalize(np.exp(-(grid.r - 6.0) ** 2) * (1 + 0.1 * rng.standard_normal(grid.n)) + 0j)
    c = 0.5j * 5e-3
    for _ in range(100_000):
        u = crank_nicolson_step(h.diag, h.off, c, u)
    assert abs(grid.norm2(u) - 1.0) < 1e-8


def _static(traps, t_f=20.0, ell=0):
    scheds = tuple(TrapSchedule(t.kind, t.omega, t.radius) for t in traps)
    return ProtocolPreset("static", scheds, t_f, ell)


def test_stationary_state_survives():
    traps = (TrapSpec.harmonic(1.0), TrapSpec.ring(1.7, 4.0))
    proto = _static(traps)
    _, v = build_hamiltonian(JointPotential(traps), GRID, 0).lowest(1)
    psi0 = RadialWavefunction(GRID, 0, GRID.normalize(v[:, 0] + 0j))
    res = evolve(proto, initial=psi0, stride=400)
    assert res.survival == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(res.populations, np.tile(res.populations[0], (len(res.times), 1)), atol=1e-6)
    assert res.norm_drift < 1e-10


def test_evolve_short_rap_and_columns():
    proto = protocols.preset("RAP_HARMONIC_RING", t_f=25.0)
    res = evolve(proto, stride=500, snapshot_times=(0.0, 12.5))
    assert res.populations.shape == (len(res.times), 2)
    assert np.all(res.populations <= 1 + 1e-6) and np.all(res.populations >= 0)
    assert res.populations[0, 0] > 0.999
    # a fast sweep is diabatic
    assert res.final_populations[1] < 0.99
    assert set(res.snapshots) == {0.0, 12.5}
    cols = res.columns()
    assert set(cols) == {"t", "P_i", "P_o", "P_i_region", "P_o_region"}
    np.testing.assert_allclose(res.region_populations.sum(axis=1), 1.0, atol=1e-6)
    assert res.fidelity == res.fidelity_candidates["localized"]

    endpoints = evolve(proto, stride=0)
    assert len(endpoints.times) == 2
    assert endpoints.final_populations == pytest.approx(res.final_populations, abs=1e-14)


def test_snapshot_outside_range():
    with pytest.raises(DomainError):
        evolve(protocols.preset("RAP_HARMONIC_RING", t_f=10.0), snapshot_times=(11.0,))


def test_norm_drift_guard(monkeypatch):
    monkeypatch.setattr(dynamics, "NORM_DRIFT_LIMIT", -1.0)
    with pytest.raises(StepSizeError):
        evolve(protocols.preset("RAP_HARMONIC_RING", t_f=1.0))


def test_initial_state_modes():
    proto = protocols.preset("STIRAP_TRIPLE_RING", ell=1)
    iso = initial_state(proto, GRID)
    assert iso.ell == 1
    jp = proto.joint_at(0.0)
    assert region_populations(iso.u, jp, GRID)[0] > 0.999
    with pytest.raises(DomainError):
        initial_state(proto, GRID, mode="nonsense")


def test_region_populations_sum_to_norm():
    jp = JointPotential((TrapSpec.ring(2, 3), TrapSpec.ring(2, 7.5), TrapSpec.ring(2, 12)))
    u = GRID.normalize(np.exp(-0.1 * (GRID.r - 7) ** 2) + 0j)
    assert region_populations(u, jp, GRID).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("ell", [0, 1, -1, 3])
def test_winding_number(ell):
    u = GRID.normalize(GRID.to_u(np.exp(-(GRID.r - 5.0) ** 2)) + 0j)
    field = reconstruct_2d(RadialWavefunction(GRID, ell, u), n_angular=64)
    assert field.psi.shape == (GRID.n, 64)
    assert winding_number(field) == ell


def test_winding_undefined():
    field = reconstruct_2d(RadialWavefunction(GRID, 1, np.zeros(GRID.n, complex)))
    with pytest.raises(UndefinedWindingError):
        winding_number(field)


def test_export_snapshot_roundtrip(tmp_path):
    grid = RadialGrid(10.0, 32)
    u = grid.normalize(grid.to_u(np.exp(-(grid.r - 3.0) ** 2)) + 0j)
    field = reconstruct_2d(RadialWavefunction(grid, 1, u), n_angular=8)
    export_snapshot(field, tmp_path / "d.txt", "density")
    export_snapshot(field, tmp_path / "p.txt", "phase")
    assert np.array_equal(np.loadtxt(tmp_path / "d.txt"), field.density)
    assert np.array_equal(np.loadtxt(tmp_path / "p.txt"), field.phase)
