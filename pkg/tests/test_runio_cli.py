"""Manifest/snapshot round trips, report emission, and the CLI surface."""

import json
import math

import numpy as np
import pytest

from pelastica.cli import main
from pelastica.curves import ClosedCurve
from pelastica.energies import EnergyParams
from pelastica.flow import FlowConfig, Trajectory, run_flow
from pelastica.runio import (
    RunManifest,
    SNAPSHOT_HEADER,
    emit_plot_data,
    parse_manifest,
    read_snapshot,
    serialize_manifest,
    write_report,
    write_snapshot,
)
from pelastica.shapes import circle, ellipse

from conftest import P2


def _manifest(**overrides):
    cfg = FlowConfig(
        params=EnergyParams(p=3.0, lam=0.7319),
        grid_size=96,
        tau=0.0125,
        horizon=0.9,
        inner_tol=2.5e-7,
        inner_max_iters=331,
    )
    kw = dict(
        config=cfg,
        initial_shape={"kind": "ellipse", "a": 1.37, "b": 0.81},
        output_dir="results/run7",
        snapshot_stride=4,
    )
    kw.update(overrides)
    return RunManifest(**kw)


# ---------------------------------------------------------------------------
# manifests


def test_manifest_round_trip_is_field_exact(tmp_path):
    """serialize -> parse recovers every field, floats included."""
    man = _manifest()
    path = tmp_path / "manifest.toml"
    path.write_text(serialize_manifest(man))
    back = parse_manifest(path)
    assert back.config == man.config
    assert back.initial_shape == man.initial_shape
    assert back.output_dir == man.output_dir
    assert back.snapshot_stride == man.snapshot_stride


def test_manifest_serialization_is_stable():
    man = _manifest()
    once = serialize_manifest(man)
    assert serialize_manifest(man) == once


def test_manifest_defaults(tmp_path):
    path = tmp_path / "m.toml"
    path.write_text(
        "[config]\ngrid_size = 64\ntau = 0.02\nhorizon = 0.1\n"
        "[config.params]\np = 2.0\nlambda = 0.5\n"
        '[initial_shape]\nkind = "circle"\n'
    )
    man = parse_manifest(path)
    assert man.output_dir == "out"
    assert man.snapshot_stride == 1
    assert man.config.inner_tol is None


def test_manifest_validation():
    with pytest.raises(ValueError):
        _manifest(snapshot_stride=0)
    with pytest.raises(ValueError):
        _manifest(initial_shape={"a": 1.0})  # no kind


# ---------------------------------------------------------------------------
# snapshots


def test_snapshot_round_trip_is_bitwise(tmp_path):
    rng = np.random.default_rng(5)
    pts = ellipse(1.3, 0.7, 64).pts + rng.normal(scale=1e-3, size=(64, 2))
    curve = ClosedCurve(pts)
    path = tmp_path / "snap.csv"
    write_snapshot(path, curve, t=0.1875)
    t, back = read_snapshot(path)
    assert t == 0.1875
    assert np.array_equal(back.pts, curve.pts)


def test_snapshot_header_and_columns(tmp_path):
    path = tmp_path / "snap.csv"
    write_snapshot(path, circle(1.0, 16), t=0.0)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == SNAPSHOT_HEADER
    assert len(lines) == 17
    first = lines[1].split(",")
    assert len(first) == 7
    assert float(first[2]) == 0.0  # x = j/n


def test_read_snapshot_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_snapshot(path)


def test_read_snapshot_rejects_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(SNAPSHOT_HEADER + "\n")
    with pytest.raises(ValueError):
        read_snapshot(path)


# ---------------------------------------------------------------------------
# reports and plot data


def test_write_report_schema(tmp_path):
    from pelastica.diagnostics import check_dissipation

    traj = run_flow(
        ellipse(1.2, 0.8, 64),
        FlowConfig(params=P2, grid_size=64, tau=0.02, horizon=0.06),
    )
    reports = check_dissipation(traj)
    path = tmp_path / "report.json"
    write_report(path, reports)
    rows = json.loads(path.read_text())
    assert len(rows) == len(reports)
    for row in rows:
        assert set(row) == {
            "name", "pass", "measured", "bound", "tolerance", "context",
        }
        assert row["pass"] is True


def test_emit_plot_data_rows(tmp_path):
    # A circle at the discrete critical radius parks immediately, so the
    # energy column should be flat to the last bit.
    r = 1.0 / math.cos(math.pi / 64) ** 2
    traj = run_flow(
        circle(r, 64), FlowConfig(params=P2, grid_size=64, tau=0.01, horizon=0.03)
    )
    path = tmp_path / "plot.json"
    emit_plot_data(path, traj)
    rows = json.loads(path.read_text())
    assert len(rows) == traj.n_steps + 1

    head = rows[0]
    assert head["t"] == 0.0
    assert head["penalty"] == 0.0
    assert head["grad_norm"] is None
    assert head["dissipation_slack"] is None
    assert head["inner_iters"] is None

    energies = [row["energy"] for row in rows]
    assert max(energies) - min(energies) == 0.0
    for row, rec in zip(rows[1:], traj.records):
        assert row["inner_iters"] == rec.inner_iters
        assert row["dissipation_slack"] == rec.dissipation_slack


# ---------------------------------------------------------------------------
# CLI


RUN_MANIFEST = """\
[config]
grid_size = 64
tau = 0.02
horizon = 0.1

[config.params]
p = 2.0
lambda = 0.5

[initial_shape]
kind = "ellipse"
a = 1.2
b = 0.8

[output]
dir = "{out}"
snapshot_stride = 2
"""


@pytest.fixture()
def run_dir(tmp_path):
    """Execute the `run` subcommand once; return its output directory."""
    out = tmp_path / "out"
    man = tmp_path / "manifest.toml"
    man.write_text(RUN_MANIFEST.format(out=out))
    assert main(["run", "--manifest", str(man), "--quiet"]) == 0
    return out


def test_cli_run_outputs(run_dir):
    names = sorted(p.name for p in run_dir.iterdir())
    # 5 steps at stride 2 -> indices 0, 2, 4 plus the final step 5.
    assert names == [
        "manifest.toml",
        "plot_data.json",
        "report.json",
        "snapshot_000000.csv",
        "snapshot_000002.csv",
        "snapshot_000004.csv",
        "snapshot_000005.csv",
    ]
    rows = json.loads((run_dir / "report.json").read_text())
    assert rows and all(row["pass"] for row in rows)
    t, final = read_snapshot(run_dir / "snapshot_000005.csv")
    assert t == pytest.approx(0.1)
    assert final.n == 64


def test_cli_run_is_deterministic(run_dir, tmp_path):
    out2 = tmp_path / "out2"
    man2 = tmp_path / "manifest2.toml"
    man2.write_text(RUN_MANIFEST.format(out=out2))
    assert main(["run", "--manifest", str(man2), "--quiet"]) == 0
    for name in ("plot_data.json", "snapshot_000005.csv"):
        assert (out2 / name).read_bytes() == (run_dir / name).read_bytes()


def test_cli_run_out_flag_overrides_manifest(run_dir, tmp_path):
    man = tmp_path / "manifest.toml"
    elsewhere = tmp_path / "elsewhere"
    assert main(["run", "--manifest", str(man), "--out", str(elsewhere),
                 "--quiet"]) == 0
    assert (elsewhere / "report.json").exists()


def test_cli_diagnose(run_dir, capsys):
    assert main(["diagnose", "--out", str(run_dir)]) == 0
    text = capsys.readouterr().out
    assert "elastica residual" in text
    rows = json.loads((run_dir / "diagnose_report.json").read_text())
    assert rows and all(row["pass"] for row in rows)


def test_cli_check_gradients():
    assert main(["check-gradients", "--grid", "32", "--pairs", "3",
                 "--quiet"]) == 0


def test_cli_check_gradients_p3(capsys):
    assert main(["check-gradients", "--p", "3", "--grid", "32",
                 "--pairs", "2"]) == 0
    assert "max rel err" in capsys.readouterr().out


def test_cli_refine(tmp_path):
    man = tmp_path / "manifest.toml"
    man.write_text(RUN_MANIFEST.format(out=tmp_path / "unused"))
    out = tmp_path / "refine"
    assert main(["refine", "--manifest", str(man), "--levels", "2",
                 "--out", str(out), "--quiet"]) == 0
    rows = json.loads((out / "refine_report.json").read_text())
    assert len(rows) == 1
    assert rows[0]["pass"]


def test_cli_sweep(tmp_path):
    man = tmp_path / "manifest.toml"
    man.write_text(RUN_MANIFEST.format(out=tmp_path / "unused"))
    out = tmp_path / "sweep"
    assert main(["sweep", "--manifest", str(man), "--p-values", "2",
                 "--lambda-values", "0.5,1.0", "--threads", "2",
                 "--out", str(out), "--quiet"]) == 0
    subdirs = sorted(p.name for p in out.iterdir())
    assert subdirs == ["p2_lam0.5", "p2_lam1"]
    for sub in subdirs:
        assert (out / sub / "report.json").exists()


def test_cli_rejects_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
