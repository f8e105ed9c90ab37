"""
Robustness of the harmonic-to-ring transfer against total time and the
minimum ring radius, with the P_o = 0.99 iso-line.

The demo uses a coarse 6 x 5 grid so that it finishes in a few minutes on
one core; ``SweepSpec.default()`` is the 16 x 16 version. Completed cells
are checkpointed in ``demo_sweep/`` so an interrupted run resumes.

Run:  python3 demos/03_robustness_map.py
"""

import os

import numpy as np

from ringsap import preset
from ringsap.protocols import SweepSpec, extract_contour, run_sweep

spec = SweepSpec(
    t_f_values=np.linspace(50.0, 500.0, 6),
    r_min_values=np.linspace(2.5, 4.4, 5),
    preset=preset("RAP_HARMONIC_RING"),
    parallelism=os.cpu_count() or 1,
    checkpoint_dir="demo_sweep",
)
result = run_sweep(spec)

# %% Final outer population, rows t_f, columns r_min; '*' marks P_o >= 0.99
print("t_f \\ r_min " + " ".join(f"{r:7.3f}" for r in result.r_min_values))
for t_f, row in zip(result.t_f_values, result.P_o):
    print(f"{t_f:10.1f}  " + " ".join(f"{p:6.4f}{'*' if p >= 0.99 else ' '}" for p in row))

# %% Iso-line at 0.99, linearly interpolated along cell edges
for k, line in enumerate(extract_contour(result, 0.99)):
    pts = ", ".join(f"({t:.0f}, {r:.2f})" for t, r in line)
    print(f"contour {k}: {pts}")
print(f"total compute {np.nansum(result.wall_time):.0f} s")
