"""
Command-line interface: ``ringsap {ground-state,model,evolve,sweep}``.

Each subcommand resolves its parameters from an optional JSON config file
plus flag overrides (flags win), validates them before any computation,
writes the resolved configuration next to its outputs and emits CSV files
with full-precision floats.

Exit codes: 0 success, 1 numerical or partial failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError, RingSAPError
from .potentials import TrapKind, TrapSpec

__all__ = ["main", "build_parser", "resolve_config", "write_csv", "read_csv"]

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2
FLOAT_FMT = ".17g"
SWEEP_COMPLETION = 0.95

log = logging.getLogger("ringsap")

# Defaults per subcommand; ``None`` marks a required key.
_GRID_DEFAULTS = {"r_max": 20.0, "n": 2048}
DEFAULTS = {
    "ground-state": {
        "trap": None,
        "method": "both",
        "ell": 0,
        "dtau": 1e-3,
        "grid": _GRID_DEFAULTS,
    },
    "model": {
        "preset": None,
        "t_f": 400.0,
        "r_min": None,
        "dt": 1e-2,
        "n_lattice": 200,
        "stride": 100,
        "grid": _GRID_DEFAULTS,
    },
    "evolve": {
        "preset": None,
        "t_f": 400.0,
        "r_min": None,
        "ell": 0,
        "dt": 5e-3,
        "dtau": 1e-3,
        "stride": 100,
        "initial_mode": "isolated",
        "snapshot_times": [],
        "n_angular": 128,
        "grid": _GRID_DEFAULTS,
    },
    "sweep": {
        "preset": "RAP_HARMONIC_RING",
        "t_f_values": list(np.linspace(50.0, 500.0, 16)),
        "r_min_values": list(np.linspace(2.5, 4.4, 16)),
        "parallelism": 1,
        "level": 0.99,
        "dt": 5e-3,
        "grid": _GRID_DEFAULTS,
    },
}
# keys that may stay ``None`` after resolution
_OPTIONAL = {"r_min"}


# ---------------------------------------------------------------- CSV helpers
def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), FLOAT_FMT)


def write_csv(path, columns: dict):
    """Write equal-length columns with a header row and 17-significant-digit floats."""
    names = list(columns)
    data = [np.atleast_1d(np.asarray(columns[k])) for k in names]
    rows = {len(d) for d in data}
    if len(rows) > 1:
        raise ValueError(f"columns have different lengths: {sorted(rows)}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> dict:
    """Inverse of ``write_csv``: a dict of float arrays keyed by header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    arr = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return {k: arr[:, j] for j, k in enumerate(names)}


# ------------------------------------------------------------- configuration
def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        name = prefix + key
        if key not in base:
            raise ConfigurationError(f"unknown config key {name!r}", key=name)
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {name!r} must be an object", key=name)
            out[key] = _merge(base[key], value, name + ".")
        else:
            out[key] = value
    return out


def resolve_config(command: str, file_values: dict = None, flags: dict = None) -> dict:
    """Defaults, then the config file, then flags; checks required keys."""
    cfg = _merge(DEFAULTS[command], {} if file_values is None else file_values)
    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key.startswith("grid."):
            cfg["grid"] = dict(cfg["grid"], **{key[5:]: value})
        elif key in cfg:
            cfg[key] = value
    for key, value in cfg.items():
        if value is None and key not in _OPTIONAL:
            raise ConfigurationError(f"missing required config key {key!r}", key=key)
    return cfg


def _number(cfg, key, kind=float, positive=False, minimum=None):
    try:
        value = kind(cfg[key])
        if kind is int and float(cfg[key]) != value:
            raise ValueError
    except (TypeError, ValueError):
        raise ConfigurationError(f"config key {key!r} must be {kind.__name__}", key=key) from None
    if kind is float and not math.isfinite(value):
        raise ConfigurationError(f"config key {key!r} must be finite", key=key)
    if positive and not value > 0:
        raise ConfigurationError(f"config key {key!r} must be > 0", key=key)
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"config key {key!r} must be >= {minimum}", key=key)
    return value


def _grid(cfg):
    from .radial.grid import RadialGrid

    g = cfg["grid"]
    r_max = _number(g, "r_max", positive=True)
    n = _number(g, "n", int, minimum=16)
    return RadialGrid(r_max, n)


def _trap(cfg) -> TrapSpec:
    t = cfg["trap"]
    if not isinstance(t, dict):
        raise ConfigurationError("config key 'trap' must be an object", key="trap")
    for key in ("kind", "omega"):
        if key not in t:
            raise ConfigurationError(f"missing required config key 'trap.{key}'", key=f"trap.{key}")
    unknown = set(t) - {"kind", "omega", "radius"}
    if unknown:
        raise ConfigurationError(f"unknown config key 'trap.{sorted(unknown)[0]}'", key="trap")
    try:
        kind = TrapKind(t["kind"])
    except ValueError:
        raise ConfigurationError(f"unknown trap kind {t['kind']!r}", key="trap.kind") from None
    if kind is TrapKind.RING and "radius" not in t:
        raise ConfigurationError("missing required config key 'trap.radius'", key="trap.radius")
    return TrapSpec(kind, _number(t, "omega", positive=True), _number(t, "radius", minimum=0.0) if "radius" in t else 0.0)


def _protocol(cfg, solver_changes: dict):
    from . import protocols

    t_f = _number(cfg, "t_f", positive=True)
    solver = protocols.SolverSettings(grid=_grid(cfg), **solver_changes)
    proto = protocols.preset(cfg["preset"], t_f=t_f, ell=int(cfg.get("ell", 0)), solver=solver)
    if cfg.get("r_min") is not None:
        proto = proto.with_min_radius(_number(cfg, "r_min", positive=True))
    return proto


def _prepare_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(out: Path, command: str, cfg: dict):
    payload = {"command": command, **cfg}
    (out / "config.resolved.json").write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")


def _summary(out: Path, values: dict):
    (out / "summary.json").write_text(json.dumps(values, indent=2, sort_keys=True, default=float) + "\n")


# ---------------------------------------------------------------- subcommands
def cmd_ground_state(cfg: dict, out: Path) -> int:
    from .localized import variational_ground_state
    from .radial.dynamics import energy, imaginary_time_ground_state

    trap = _trap(cfg)
    grid = _grid(cfg)
    ell = _number(cfg, "ell", int)
    dtau = _number(cfg, "dtau", positive=True)
    method = cfg["method"]
    if method not in ("imaginary_time", "variational", "both"):
        raise ConfigurationError(f"unknown method {method!r}", key="method")
    if method != "imaginary_time" and ell != 0:
        raise ConfigurationError("the variational ansatz is defined for ell = 0 only", key="ell")
    _echo_config(out, "ground-state", cfg)

    cols = {"r": grid.r}
    summary = {}
    if method in ("imaginary_time", "both"):
        gs = imaginary_time_ground_state(trap, grid, ell, dtau)
        e = energy(gs, trap)
        cols["psi_imaginary_time"] = gs.psi.real
        summary["energy_imaginary_time"] = e
        print(f"imaginary-time energy: {e:.12f}")
    if method in ("variational", "both"):
        st = variational_ground_state(trap, grid)
        cols["psi_variational"] = st.profile
        summary.update(energy_variational=st.energy, alpha=st.alpha, beta=st.beta)
        print(f"variational energy:    {st.energy:.12f}  (alpha={st.alpha:.10g}, beta={st.beta:.10g})")
    write_csv(out / "profile.csv", cols)
    _summary(out, summary)
    return EXIT_OK


def cmd_model(cfg: dict, out: Path) -> int:
    from .fewstate import propagate_model

    dt = _number(cfg, "dt", positive=True)
    n_lattice = _number(cfg, "n_lattice", int, minimum=4)
    stride = _number(cfg, "stride", int, minimum=1)
    proto = _protocol(cfg, {"model_dt": dt, "n_lattice": n_lattice})
    _echo_config(out, "model", cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        run = propagate_model(proto, proto.solver.grid, dt, n_lattice, stride=stride)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    cols = run.columns()
    write_csv(out / "model.csv", cols)
    final = run.final_populations
    labels = "io" if run.n_states == 2 else "imo"
    summary = {f"P_{lab}": float(p) for lab, p in zip(labels, final)}
    gap = np.diff(run.eigenvalues, axis=1).min()
    summary.update(min_gap=float(gap), angle_initial=float(run.angle[0]), angle_final=float(run.angle[-1]),
                   norm_drift=run.norm_drift, max_next_nearest_ratio=run.max_next_nearest_ratio)
    _summary(out, summary)
    print("final populations: " + ", ".join(f"P_{lab}={p:.6f}" for lab, p in zip(labels, final)))
    return EXIT_OK


def cmd_evolve(cfg: dict, out: Path) -> int:
    from .errors import UndefinedWindingError
    from .radial.dynamics import evolve
    from .radial.twod import export_snapshot, reconstruct_2d, winding_number

    dt = _number(cfg, "dt", positive=True)
    dtau = _number(cfg, "dtau", positive=True)
    stride = _number(cfg, "stride", int, minimum=0)
    n_ang = _number(cfg, "n_angular", int, minimum=4)
    _number(cfg, "ell", int)
    proto = _protocol(cfg, {"dt": dt, "dtau": dtau, "stride": stride, "initial_mode": cfg["initial_mode"]})
    snaps = cfg["snapshot_times"]
    if not isinstance(snaps, list):
        raise ConfigurationError("config key 'snapshot_times' must be a list", key="snapshot_times")
    snaps = [float(s) for s in snaps]
    for s in snaps:
        if not 0.0 <= s <= proto.t_f:
            raise ConfigurationError(f"snapshot_times: {s} outside [0, {proto.t_f}]", key="snapshot_times")
    _echo_config(out, "evolve", cfg)

    res = evolve(proto, snapshot_times=sorted(set(snaps) | {0.0}))
    write_csv(out / "populations.csv", res.columns())
    grid = proto.solver.grid
    psi = res.final_state.psi
    write_csv(out / "final_state.csv", {"r": grid.r, "psi_re": psi.real, "psi_im": psi.imag})
    for k, ts in enumerate(snaps):
        field = reconstruct_2d(res.snapshots[ts], n_ang)
        export_snapshot(field, out / f"snapshot_{k:03d}_density.txt", "density")
        export_snapshot(field, out / f"snapshot_{k:03d}_phase.txt", "phase")

    def winding(state):
        try:
            return winding_number(reconstruct_2d(state, n_ang))
        except UndefinedWindingError:
            return None

    w0 = winding(res.snapshots[0.0])
    w1 = winding(res.final_state)
    summary = {
        "fidelity": res.fidelity,
        "fidelity_candidates": res.fidelity_candidates,
        "final_populations": [float(p) for p in res.final_populations],
        "max_populations": [float(p) for p in res.populations.max(axis=0)],
        "norm_drift": res.norm_drift,
        "winding_initial": w0,
        "winding_final": w1,
    }
    _summary(out, summary)
    print(f"fidelity {res.fidelity:.6f}  final populations {np.round(res.final_populations, 6).tolist()}"
          f"  winding {w0} -> {w1}  norm drift {res.norm_drift:.2e}")
    return EXIT_OK


def cmd_sweep(cfg: dict, out: Path) -> int:
    from . import protocols

    level = _number(cfg, "level")
    dt = _number(cfg, "dt", positive=True)
    par = _number(cfg, "parallelism", int, minimum=1)
    for key in ("t_f_values", "r_min_values"):
        if not isinstance(cfg[key], list):
            raise ConfigurationError(f"config key {key!r} must be a list", key=key)
    base = protocols.preset(cfg["preset"], solver=protocols.SolverSettings(grid=_grid(cfg), dt=dt))
    spec = protocols.SweepSpec(cfg["t_f_values"], cfg["r_min_values"], base, par, str(out / "checkpoints"))
    _echo_config(out, "sweep", cfg)

    handler = logging.FileHandler(out / "sweep.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        log.info("sweep %d x %d cells, parallelism %d", len(spec.t_f_values), len(spec.r_min_values), par)
        result = protocols.run_sweep(spec)
        for (i, j), msg in sorted(result.errors.items()):
            log.warning("cell t_f=%r r_min=%r failed: %s", spec.t_f_values[i], spec.r_min_values[j], msg)
        frac = result.completed_fraction
        log.info("completed %.1f%% of cells", 100 * frac)
    finally:
        log.removeHandler(handler)
        handler.close()

    tt, rr = np.meshgrid(result.t_f_values, result.r_min_values, indexing="ij")
    write_csv(out / "grid.csv", {"t_f": tt.ravel(), "r_min": rr.ravel(), "P_o": result.P_o.ravel(),
                                 "norm_drift": result.norm_drift.ravel(), "wall_time": result.wall_time.ravel()})
    if frac == 1.0:
        contours = protocols.extract_contour(result, level)
        seg = np.concatenate([np.full(len(c), k) for k, c in enumerate(contours)]) if contours else []
        pts = np.concatenate(contours) if contours else np.empty((0, 2))
        write_csv(out / "contour.csv", {"segment": np.asarray(seg, dtype=int), "t_f": pts[:, 0], "r_min": pts[:, 1]})
    print(f"sweep: {100 * frac:.1f}% of cells completed")
    return EXIT_OK if frac >= SWEEP_COMPLETION else EXIT_FAILURE


COMMANDS = {
    "ground-state": cmd_ground_state,
    "model": cmd_model,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringsap", description="Spatial adiabatic passage in concentric traps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--preset", help="protocol preset name")
        p.add_argument("--ell", type=int, help="winding number")
        p.add_argument("--tf", type=float, dest="t_f", help="total protocol time")
        p.add_argument("--grid-n", type=int, dest="grid.n", help="number of radial grid points")
        p.add_argument("--rmax", type=float, dest="grid.r_max", help="outer grid radius")
        p.add_argument("--parallel", type=int, dest="parallelism", help="sweep worker processes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
    try:
        file_values = {}
        if args.config is not None:
            try:
                file_values = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"cannot read config file {args.config}: {exc}", key="config") from None
            if not isinstance(file_values, dict):
                raise ConfigurationError("config file must hold a JSON object", key="config")
            # resolved-config echoes carry the subcommand they belong to
            if file_values.pop("command", args.command) != args.command:
                raise ConfigurationError("config file belongs to another subcommand", key="command")
        cfg = resolve_config(args.command, file_values, flags)
        out = _prepare_out(args.out)
        return COMMANDS[args.command](cfg, out)
    except (ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, RingSAPError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
