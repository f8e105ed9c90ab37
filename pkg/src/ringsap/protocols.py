"""
Protocol presets for the three transport configurations and the
robustness-map sweep harness.
"""

from __future__ import annotations

import enum
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .potentials import JointPotential, ScheduleParams, TrapKind, TrapSpec, schedule_omega, schedule_radius
from .radial.grid import RadialGrid

__all__ = [
    "ProtocolName",
    "TrapSchedule",
    "SolverSettings",
    "ProtocolPreset",
    "preset",
    "SweepSpec",
    "SweepResult",
    "run_sweep",
    "run_cell",
    "extract_contour",
]

# Fraction of t_f by which the inner-ring excursion trails the outer one in
# the three-ring preset (outer ring approaches first).
STIRAP_DELAY = 0.08


class ProtocolName(str, enum.Enum):
    RAP_HARMONIC_RING = "RAP_HARMONIC_RING"
    RAP_RING_RING = "RAP_RING_RING"
    STIRAP_TRIPLE_RING = "STIRAP_TRIPLE_RING"


@dataclass(frozen=True)
class TrapSchedule:
    """A trap that is either static or driven by a schedule over ``[0, t_f]``."""

    kind: TrapKind
    omega: float = 1.0
    radius: float = 0.0
    schedule: ScheduleParams = None

    def at(self, t: float) -> TrapSpec:
        if self.schedule is None:
            return TrapSpec(self.kind, self.omega, self.radius)
        return TrapSpec(self.kind, schedule_omega(self.schedule, t), schedule_radius(self.schedule, t))

    def with_tf(self, t_f: float) -> "TrapSchedule":
        if self.schedule is None:
            return self
        return replace(self, schedule=self.schedule.replace(t_f=t_f))


@dataclass(frozen=True)
class SolverSettings:
    grid: RadialGrid = field(default_factory=RadialGrid)
    dt: float = 5e-3
    dtau: float = 1e-3
    stride: int = 100
    model_dt: float = 1e-2
    n_lattice: int = 200
    initial_mode: str = "isolated"

    def __post_init__(self):
        for name in ("dt", "dtau", "model_dt"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0", key=name)
        if self.stride < 0:
            raise ConfigurationError("stride must be >= 0", key="stride")
        if self.n_lattice < 4:
            raise ConfigurationError("n_lattice must be >= 4", key="n_lattice")
        if self.initial_mode not in ("isolated", "joint"):
            raise ConfigurationError(f"unknown initial_mode {self.initial_mode!r}", key="initial_mode")


@dataclass(frozen=True)
class ProtocolPreset:
    name: str
    traps: tuple
    t_f: float
    ell: int = 0
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(self, "traps", tuple(self.traps))
        if not self.t_f > 0:
            raise ConfigurationError("t_f must be > 0", key="t_f")
        for trap in self.traps:
            if trap.schedule is not None and trap.schedule.t_f != self.t_f:
                raise ConfigurationError("schedule t_f differs from protocol t_f", key="t_f")
        # every intermediate configuration must be a valid concentric ordering
        for t in np.linspace(0.0, self.t_f, 401):
            self.joint_at(t)

    def traps_at(self, t: float) -> tuple:
        return tuple(trap.at(t) for trap in self.traps)

    def joint_at(self, t: float) -> JointPotential:
        return JointPotential(self.traps_at(t))

    @property
    def moving(self) -> tuple:
        return tuple(k for k, trap in enumerate(self.traps) if trap.schedule is not None)

    def with_tf(self, t_f: float) -> "ProtocolPreset":
        return replace(self, t_f=float(t_f), traps=tuple(trap.with_tf(float(t_f)) for trap in self.traps))

    def with_min_radius(self, r_min: float, index: int = -1) -> "ProtocolPreset":
        """Set the extremal radius ``R0 + delta_R`` of a moving trap, keeping ``R0``."""
        traps = list(self.traps)
        trap = traps[index]
        if trap.schedule is None:
            raise ConfigurationError("trap has no radius schedule", key="r_min")
        traps[index] = replace(trap, schedule=trap.schedule.replace(delta_R=float(r_min) - trap.schedule.R0))
        return replace(self, traps=tuple(traps))

    def with_ell(self, ell: int) -> "ProtocolPreset":
        return replace(self, ell=int(ell))

    def with_solver(self, **changes) -> "ProtocolPreset":
        return replace(self, solver=replace(self.solver, **changes))


def preset(name, t_f: float = 400.0, ell: int = 0, solver: SolverSettings = None,
           delay: float = None) -> ProtocolPreset:
    """The parameter sets of the three transport configurations.

    ``delay`` (three-ring preset only) overrides ``STIRAP_DELAY``.
    """
    try:
        name = ProtocolName(name)
    except ValueError:
        raise ConfigurationError(f"unknown preset {name!r}", key="preset") from None
    solver = solver or SolverSettings()
    if name is ProtocolName.RAP_HARMONIC_RING:
        sched = ScheduleParams(t_f, omega0=1.7, delta_omega=0.6, a=8.0, R0=4.5, delta_R=-1.0, sigma=2 / 15)
        traps = (TrapSchedule(TrapKind.HARMONIC, 1.0), TrapSchedule(TrapKind.RING, schedule=sched))
    elif name is ProtocolName.RAP_RING_RING:
        sched = ScheduleParams(t_f, omega0=1.7, delta_omega=0.6, a=8.0, R0=7.5, delta_R=2.0, sigma=2 / 15)
        traps = (TrapSchedule(TrapKind.RING, 2.0, 3.5), TrapSchedule(TrapKind.RING, schedule=sched))
    else:
        d = STIRAP_DELAY if delay is None else float(delay)
        if not 0.0 <= d < 0.5:
            raise ConfigurationError(f"delay must lie in [0, 0.5), got {d}", key="delay")
        inner = ScheduleParams(t_f, omega0=2.0, R0=3.0, delta_R=2.0, sigma=2 / 15, center=0.5 + d / 2)
        outer = ScheduleParams(t_f, omega0=2.0, R0=12.0, delta_R=-2.0, sigma=2 / 15, center=0.5 - d / 2)
        traps = (
            TrapSchedule(TrapKind.RING, schedule=inner),
            TrapSchedule(TrapKind.RING, 2.0, 7.5),
            TrapSchedule(TrapKind.RING, schedule=outer),
        )
    return ProtocolPreset(name.value, traps, float(t_f), int(ell), solver)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of total times and minimum ring radii for the robustness map."""

    t_f_values: tuple
    r_min_values: tuple
    preset: ProtocolPreset = None
    parallelism: int = 1
    checkpoint_dir: str = None

    def __post_init__(self):
        object.__setattr__(self, "t_f_values", tuple(float(x) for x in self.t_f_values))
        object.__setattr__(self, "r_min_values", tuple(float(x) for x in self.r_min_values))
        if self.preset is None:
            object.__setattr__(self, "preset", preset(ProtocolName.RAP_HARMONIC_RING))
        for key in ("t_f_values", "r_min_values"):
            axis = np.asarray(getattr(self, key))
            if axis.size == 0:
                raise ConfigurationError(f"sweep axis {key} is empty", key=key)
            steps = np.diff(axis)
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise ConfigurationError(f"sweep axis {key} is not strictly monotone", key=key)
        if np.any(np.asarray(self.t_f_values) <= 0):
            raise ConfigurationError("total times must be > 0", key="t_f_values")
        if int(self.parallelism) < 1:
            raise ConfigurationError("parallelism must be >= 1", key="parallelism")

    @classmethod
    def default(cls, **kwargs) -> "SweepSpec":
        return cls(tuple(np.linspace(50.0, 500.0, 16)), tuple(np.linspace(2.5, 4.4, 16)), **kwargs)


@dataclass
class SweepResult:
    t_f_values: np.ndarray
    r_min_values: np.ndarray
    P_o: np.ndarray  # (len(t_f_values), len(r_min_values)); nan where the cell failed
    norm_drift: np.ndarray
    wall_time: np.ndarray
    errors: dict = field(default_factory=dict)

    @property
    def completed_fraction(self) -> float:
        return float(np.mean(np.isfinite(self.P_o)))

    def contour(self, level: float = 0.99):
        return extract_contour(self, level)


def cell_protocol(base: ProtocolPreset, t_f: float, r_min: float) -> ProtocolPreset:
    return base.with_tf(t_f).with_min_radius(r_min)


def run_cell(base: ProtocolPreset, t_f: float, r_min: float) -> dict:
    """One sweep cell: final outer population of a full radial evolution."""
    from .radial.dynamics import evolve

    start = time.perf_counter()
    record = {"t_f": float(t_f), "r_min": float(r_min)}
    try:
        result = evolve(cell_protocol(base, t_f, r_min), stride=0)
    except Exception as exc:  # recorded, the sweep goes on
        record.update(P_o=float("nan"), norm_drift=float("nan"), error=f"{type(exc).__name__}: {exc}")
    else:
        record.update(P_o=float(result.final_populations[-1]), norm_drift=result.norm_drift, error="")
    record["wall_time"] = time.perf_counter() - start
    return record


_CHECKPOINT_FIELDS = ("t_f", "r_min", "P_o", "norm_drift", "wall_time")


def _checkpoint_path(directory, i, j) -> Path:
    return Path(directory) / f"cell_{i:03d}_{j:03d}.csv"


def write_checkpoint(path: Path, record: dict):
    line = ",".join(format(record[k], ".17g") for k in _CHECKPOINT_FIELDS)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(",".join(_CHECKPOINT_FIELDS) + "\n" + line + "\n")
    os.replace(tmp, path)


def read_checkpoint(path: Path) -> dict:
    header, values = path.read_text().strip().splitlines()[:2]
    return dict(zip(header.split(","), (float(v) for v in values.split(","))))


def _run_indexed(args):
    i, j, base, t_f, r_min = args
    return i, j, run_cell(base, t_f, r_min)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate every ``(t_f, r_min)`` cell, in parallel up to ``spec.parallelism``.

    With a ``checkpoint_dir`` each finished cell is stored as a one-row CSV
    and reused on the next call. Failed cells keep ``nan`` and an error entry.
    """
    tfs, rmins = spec.t_f_values, spec.r_min_values
    shape = (len(tfs), len(rmins))
    p_o = np.full(shape, np.nan)
    drift = np.full(shape, np.nan)
    wall = np.full(shape, np.nan)
    errors = {}
    ckpt = Path(spec.checkpoint_dir) if spec.checkpoint_dir else None
    if ckpt:
        ckpt.mkdir(parents=True, exist_ok=True)

    todo = []
    for i, t_f in enumerate(tfs):
        for j, r_min in enumerate(rmins):
            path = _checkpoint_path(ckpt, i, j) if ckpt else None
            if path is not None and path.exists():
                rec = read_checkpoint(path)
                if rec["t_f"] == t_f and rec["r_min"] == r_min:
                    p_o[i, j], drift[i, j], wall[i, j] = rec["P_o"], rec["norm_drift"], rec["wall_time"]
                    continue
            todo.append((i, j, spec.preset, t_f, r_min))

    def store(i, j, rec):
        p_o[i, j], drift[i, j], wall[i, j] = rec["P_o"], rec["norm_drift"], rec["wall_time"]
        if rec["error"]:
            errors[(i, j)] = rec["error"]
        elif ckpt:
            write_checkpoint(_checkpoint_path(ckpt, i, j), rec)

    if spec.parallelism == 1 or len(todo) <= 1:
        for args in todo:
            store(*_run_indexed(args))
    else:
        with ProcessPoolExecutor(max_workers=int(spec.parallelism)) as pool:
            for i, j, rec in pool.map(_run_indexed, todo):
                store(i, j, rec)
    return SweepResult(np.array(tfs), np.array(rmins), p_o, drift, wall, errors)


def extract_contour(result: SweepResult, level: float = 0.99) -> list:
    """Marching-squares iso-lines of the ``P_o`` grid at ``level``.

    Each contour is an ``(m, 2)`` array of ``(t_f, r_min)`` points, linearly
    interpolated along cell edges. A level outside the data range gives ``[]``.
    """
    from skimage.measure import find_contours

    grid = np.asarray(result.P_o, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ConfigurationError("sweep grid is not fully populated", key="P_o")
    if grid.shape[0] < 2 or grid.shape[1] < 2 or not grid.min() < level < grid.max():
        return []
    out = []
    ti = np.arange(grid.shape[0])
    rj = np.arange(grid.shape[1])
    for c in find_contours(grid, level):
        out.append(np.column_stack([np.interp(c[:, 0], ti, result.t_f_values),
                                    np.interp(c[:, 1], rj, result.r_min_values)]))
    return out
