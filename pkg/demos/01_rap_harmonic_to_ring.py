"""
Rapid adiabatic passage from a harmonic trap into a surrounding ring.

The ring starts at radius 4.5 with frequency 1.7, dips to radius 3.5 in the
middle of the protocol while its frequency ramps up to 2.3. The energy bias
between the two localized states changes sign around t_f/2 and the atom
follows the upper adiabatic state from the centre into the ring.

Run:  python3 demos/01_rap_harmonic_to_ring.py   (about half a minute)
"""

import numpy as np

from ringsap import preset
from ringsap.fewstate import propagate_model
from ringsap.radial.dynamics import evolve

protocol = preset("RAP_HARMONIC_RING", t_f=400.0)

# %% Two-state model: couplings on a time lattice, RK4 for the amplitudes
model = propagate_model(protocol)
cols = model.columns()

print("   t      r_o     omega_o      J          Delta      theta     P_o")
for k in range(0, len(model.times), max(1, len(model.times) // 10)):
    print(f"{cols['t'][k]:6.1f}  {cols['r_o'][k]:6.3f}  {cols['omega_o'][k]:7.4f}  "
          f"{cols['J'][k]:9.2e}  {cols['Delta'][k]:+9.4f}  {cols['theta'][k]:7.4f}  {cols['P_o'][k]:7.4f}")

gap = np.min(cols["E_plus"] - cols["E_minus"])
print(f"\nmodel: final P_o = {model.final_populations[1]:.5f}, minimum gap {gap:.4f}")
print(f"adiabatic overlap with Psi_+: start {model.adiabatic_overlap[0]:.5f}, end {model.adiabatic_overlap[-1]:.5f}")

# %% The same protocol with the exact radial solver
result = evolve(protocol, stride=2000)
print(f"solver: final P_o = {result.final_populations[1]:.5f} (norm drift {result.norm_drift:.1e})")
print(f"model - solver = {model.final_populations[1] - result.final_populations[1]:+.5f}")

# %% Final population oscillates with t_f: the two adiabatic states beat
for t_f in (300.0, 500.0):
    m = propagate_model(protocol.with_tf(t_f))
    print(f"t_f = {t_f:5.0f}: model P_o = {m.final_populations[1]:.5f}")
