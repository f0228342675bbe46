"""Run manifests (TOML), snapshot CSV files, and JSON reports.

The manifest schema:

    [config]
    grid_size = 256
    tau = 0.01
    horizon = 10.0
    # optional solver knobs: inner_tol, inner_max_iters, armijo_c,
    # backtrack_factor, tol_reparam, tol_ac, seed

    [config.params]
    p = 2.0
    lambda = 0.5

    [initial_shape]
    kind = "ellipse"      # or "circle", "fourier_perturbed_circle"
    a = 1.2
    b = 0.8

    [output]
    dir = "out/run1"
    snapshot_stride = 10

Serialization writes floats with repr (shortest round-tripping form) in a
fixed field order, so parse -> serialize -> parse is the identity, and
snapshot CSVs use 17 significant digits so curves survive a round trip
bitwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

from .curves import ClosedCurve, curvature, speeds
from .energies import EnergyParams, penalty, total_energy
from .flow import FlowConfig, Trajectory

SNAPSHOT_HEADER = "t,j,x,gamma_x,gamma_y,kappa,speed"


@dataclass(frozen=True)
class RunManifest:
    """Everything one reproducible run needs: config, shape, and outputs."""

    config: FlowConfig
    initial_shape: dict
    output_dir: str
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, "
                             f"got {self.snapshot_stride}")
        if "kind" not in self.initial_shape:
            raise ValueError("initial_shape needs a 'kind' entry")


def parse_manifest(path) -> RunManifest:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    c = doc["config"]
    pr = c["params"]
    params = EnergyParams(p=float(pr["p"]), lam=float(pr["lambda"]))
    cfg = FlowConfig(
        params=params,
        grid_size=int(c["grid_size"]),
        tau=float(c["tau"]),
        horizon=float(c["horizon"]),
        inner_tol=float(c["inner_tol"]) if "inner_tol" in c else None,
        inner_max_iters=int(c.get("inner_max_iters", 500)),
        armijo_c=float(c.get("armijo_c", 1e-4)),
        backtrack_factor=float(c.get("backtrack_factor", 0.5)),
        tol_reparam=float(c.get("tol_reparam", 1e-6)),
        tol_ac=float(c.get("tol_ac", 1e-4)),
        seed=int(c.get("seed", 0)),
    )
    out = doc.get("output", {})
    return RunManifest(
        config=cfg,
        initial_shape=dict(doc["initial_shape"]),
        output_dir=str(out.get("dir", "out")),
        snapshot_stride=int(out.get("snapshot_stride", 1)),
    )


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialize {type(v).__name__} to TOML")


def serialize_manifest(manifest: RunManifest) -> str:
    """Deterministic TOML text; parse_manifest inverts it field-exactly."""
    cfg = manifest.config
    lines = ["[config]"]
    lines.append(f"grid_size = {cfg.grid_size}")
    lines.append(f"tau = {_toml_value(cfg.tau)}")
    lines.append(f"horizon = {_toml_value(cfg.horizon)}")
    if cfg.inner_tol is not None:
        lines.append(f"inner_tol = {_toml_value(cfg.inner_tol)}")
    lines.append(f"inner_max_iters = {cfg.inner_max_iters}")
    lines.append(f"armijo_c = {_toml_value(cfg.armijo_c)}")
    lines.append(f"backtrack_factor = {_toml_value(cfg.backtrack_factor)}")
    lines.append(f"tol_reparam = {_toml_value(cfg.tol_reparam)}")
    lines.append(f"tol_ac = {_toml_value(cfg.tol_ac)}")
    lines.append(f"seed = {cfg.seed}")
    lines.append("")
    lines.append("[config.params]")
    lines.append(f"p = {_toml_value(cfg.params.p)}")
    lines.append(f"lambda = {_toml_value(cfg.params.lam)}")
    lines.append("")
    lines.append("[initial_shape]")
    shape = manifest.initial_shape
    lines.append(f"kind = {_toml_value(shape['kind'])}")
    for key in sorted(k for k in shape if k != "kind"):
        lines.append(f"{key} = {_toml_value(shape[key])}")
    lines.append("")
    lines.append("[output]")
    lines.append(f"dir = {_toml_value(manifest.output_dir)}")
    lines.append(f"snapshot_stride = {manifest.snapshot_stride}")
    lines.append("")
    return "\n".join(lines)


def write_snapshot(path, curve: ClosedCurve, t: float) -> None:
    """CSV snapshot of one curve state at time t, 17 significant digits."""
    kap = curvature(curve)
    spd = speeds(curve)
    n = curve.n
    rows = [SNAPSHOT_HEADER]
    for j in range(n):
        rows.append(
            f"{t:.17g},{j},{j / n:.17g},{curve.pts[j, 0]:.17g},"
            f"{curve.pts[j, 1]:.17g},{kap[j]:.17g},{spd[j]:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def read_snapshot(path):
    """Inverse of write_snapshot: returns (t, ClosedCurve)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SNAPSHOT_HEADER:
            raise ValueError(f"{path}: unexpected snapshot header {header!r}")
        t = None
        pts = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if t is None:
                t = float(cells[0])
            pts.append((float(cells[3]), float(cells[4])))
    if t is None:
        raise ValueError(f"{path}: snapshot holds no rows")
    return t, ClosedCurve(np.array(pts))


def write_report(path, reports) -> None:
    """Diff-friendly JSON array of certificate reports (key 'pass')."""
    payload = [
        {
            "name": r.name,
            "pass": r.passed,
            "measured": r.measured,
            "bound": r.bound,
            "tolerance": r.tolerance,
            "context": r.context,
        }
        for r in reports
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def emit_plot_data(path, trajectory: Trajectory) -> None:
    """Per-state JSON rows: time, energy breakdown, and step-record scalars.

    The first row (t = 0) has no step behind it, so its solver fields are
    null.
    """
    cfg = trajectory.config
    rows = []
    for i, c in enumerate(trajectory.curves):
        bd = total_energy(c, cfg.params)
        row = {
            "t": i * cfg.tau,
            "energy": bd.total,
            "bending": bd.bending,
            "length": bd.length,
        }
        if i == 0:
            row.update(penalty=0.0, grad_norm=None, dissipation_slack=None,
                       inner_iters=None)
        else:
            rec = trajectory.records[i - 1]
            row.update(penalty=penalty(c, trajectory.curves[i - 1], cfg.tau),
                       grad_norm=rec.grad_norm_final,
                       dissipation_slack=rec.dissipation_slack,
                       inner_iters=rec.inner_iters)
        rows.append(row)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
