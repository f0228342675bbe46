"""Command-line interface.

Subcommands:

* ``run``             -- execute a manifest: snapshots, report.json, plot data.
* ``check-gradients`` -- analytic first variations vs finite differences.
* ``diagnose``        -- re-verify certificates from a run's snapshot files.
* ``refine``          -- τ-refinement study from a manifest.
* ``sweep``           -- grid of runs over (p, λ), optionally threaded.

``run``/``diagnose``/``sweep`` exit 0 iff every certified inequality passed
(and the flow completed); ``refine`` additionally requires the terminal
distances to be monotone for p = 2; ``check-gradients`` requires every
relative error below 1e-5.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .diagnostics import (check_dissipation, check_length_bounds,
                          check_monotone_energy, elastica_residual,
                          flat_core_report, gradient_check, refinement_study)
from .energies import EnergyParams
from .runio import (RunManifest, emit_plot_data, parse_manifest,
                    read_snapshot, serialize_manifest, write_report,
                    write_snapshot)
from .shapes import generate_initial
from .flow import Trajectory, run_flow


def _say(quiet: bool, *parts):
    if not quiet:
        print(*parts)


def _summarize(quiet: bool, reports) -> bool:
    ok = sum(r.passed for r in reports)
    _say(quiet, f"certificates: {ok}/{len(reports)} passed")
    for r in reports:
        if not r.passed:
            print(f"FAILED {r.name} [{r.context}]: measured {r.measured:.6g} "
                  f"> bound {r.bound:.6g} + tol {r.tolerance:.1g}",
                  file=sys.stderr)
    return ok == len(reports)


def _execute_run(manifest: RunManifest, quiet: bool) -> bool:
    cfg = manifest.config
    outdir = Path(manifest.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    initial = generate_initial(manifest.initial_shape, cfg.grid_size)
    traj = run_flow(initial, cfg)
    if traj.error is not None:
        print(f"run aborted: {traj.error}", file=sys.stderr)
    stride = manifest.snapshot_stride
    last = traj.n_steps
    indices = sorted(set(range(0, last + 1, stride)) | {last})
    for i in indices:
        write_snapshot(outdir / f"snapshot_{i:06d}.csv", traj.curves[i],
                       i * cfg.tau)
    reports = check_dissipation(traj) + check_length_bounds(traj, cfg.params)
    write_report(outdir / "report.json", reports)
    emit_plot_data(outdir / "plot_data.json", traj)
    (outdir / "manifest.toml").write_text(serialize_manifest(manifest),
                                          encoding="utf-8")
    _say(quiet, f"run: {traj.n_steps} steps on N={cfg.grid_size}, "
                f"output in {outdir}")
    passed = _summarize(quiet, reports)
    return passed and traj.error is None


def _cmd_run(args) -> int:
    manifest = parse_manifest(args.manifest)
    if args.out is not None:
        manifest = replace(manifest, output_dir=args.out)
    return 0 if _execute_run(manifest, args.quiet) else 1


def _cmd_check_gradients(args) -> int:
    params = EnergyParams(p=args.p, lam=args.lam)
    rows = gradient_check(params, grid_size=args.grid, n_pairs=args.pairs,
                          seed=args.seed)
    worst = {}
    for row in rows:
        key = (row["functional"], row["delta"])
        worst[key] = max(worst.get(key, 0.0), row["rel_err"])
    overall = 0.0
    for (name, delta), err in sorted(worst.items()):
        _say(args.quiet, f"{name:8s} delta={delta:g}: max rel err {err:.3e}")
        overall = max(overall, err)
    _say(args.quiet, f"overall max rel err {overall:.3e} "
                     f"({'OK' if overall < 1e-5 else 'TOO LARGE'})")
    return 0 if overall < 1e-5 else 1


def _cmd_diagnose(args) -> int:
    outdir = Path(args.out)
    manifest = parse_manifest(outdir / "manifest.toml")
    cfg = manifest.config
    snaps = sorted(outdir.glob("snapshot_*.csv"))
    if not snaps:
        print(f"no snapshots in {outdir}", file=sys.stderr)
        return 1
    states = [read_snapshot(p) for p in snaps]
    curves = tuple(c for _, c in states)
    # Snapshots may be strided, so only subsequence-valid certificates are
    # checked here: energy monotonicity and the per-curve bounds.  Per-step
    # dissipation needs every step and lives in the run-time report.
    traj = Trajectory(config=cfg, curves=curves, records=())
    reports = (check_monotone_energy(curves, cfg.params)
               + check_length_bounds(traj, cfg.params))
    terminal = curves[-1]
    resid = elastica_residual(terminal, cfg.params)
    core = flat_core_report(terminal, threshold=0.1)
    _say(args.quiet, f"diagnose: {len(curves)} snapshots from {outdir}")
    _say(args.quiet, f"terminal elastica residual: {resid:.6g}")
    _say(args.quiet, f"terminal flat core (|kappa| < 0.1): "
                     f"measure {core.total_measure:.4g}, "
                     f"{len(core.intervals)} interval(s)")
    write_report(outdir / "diagnose_report.json", reports)
    return 0 if _summarize(args.quiet, reports) else 1


def _cmd_refine(args) -> int:
    manifest = parse_manifest(args.manifest)
    cfg = manifest.config
    initial = generate_initial(manifest.initial_shape, cfg.grid_size)
    reports = refinement_study(initial, cfg, levels=args.levels)
    for r in reports:
        _say(args.quiet, f"terminal-distance {r.context}: {r.measured:.6g}")
    if args.out is not None:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        write_report(outdir / "refine_report.json", reports)
    return 0 if _summarize(args.quiet, reports) else 1


def _cmd_sweep(args) -> int:
    manifest = parse_manifest(args.manifest)
    base_out = Path(args.out if args.out is not None else manifest.output_dir)
    p_values = [float(v) for v in args.p_values.split(",") if v]
    lam_values = [float(v) for v in args.lambda_values.split(",") if v]
    jobs = []
    for p in p_values:
        for lam in lam_values:
            sub = replace(
                manifest,
                config=replace(manifest.config,
                               params=EnergyParams(p=p, lam=lam)),
                output_dir=str(base_out / f"p{p:g}_lam{lam:g}"),
            )
            jobs.append(sub)
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(lambda m: _execute_run(m, args.quiet), jobs))
    for sub, ok in zip(jobs, results):
        _say(args.quiet, f"sweep {sub.output_dir}: "
                         f"{'ok' if ok else 'FAILED'}")
    return 0 if all(results) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pelastica",
        description="Minimizing-movements solver for the length-penalized "
                    "p-elastic flow of closed planar curves")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a flow run from a manifest")
    run_p.add_argument("--manifest", required=True, help="TOML manifest path")
    run_p.add_argument("--out", default=None,
                       help="override the manifest output dir")
    run_p.add_argument("--quiet", action="store_true")
    run_p.set_defaults(func=_cmd_run)

    chk_p = sub.add_parser("check-gradients",
                           help="verify first variations against finite "
                                "differences")
    chk_p.add_argument("--p", type=float, default=2.0)
    chk_p.add_argument("--lam", type=float, default=0.5)
    chk_p.add_argument("--grid", type=int, default=64)
    chk_p.add_argument("--pairs", type=int, default=20)
    chk_p.add_argument("--seed", type=int, default=0)
    chk_p.add_argument("--quiet", action="store_true")
    chk_p.set_defaults(func=_cmd_check_gradients)

    diag_p = sub.add_parser("diagnose",
                            help="re-verify certificates from stored "
                                 "snapshots")
    diag_p.add_argument("--out", required=True,
                        help="directory holding manifest.toml + snapshots")
    diag_p.add_argument("--quiet", action="store_true")
    diag_p.set_defaults(func=_cmd_diagnose)

    ref_p = sub.add_parser("refine", help="tau-refinement study")
    ref_p.add_argument("--manifest", required=True)
    ref_p.add_argument("--levels", type=int, default=3)
    ref_p.add_argument("--out", default=None,
                       help="directory for refine_report.json")
    ref_p.add_argument("--quiet", action="store_true")
    ref_p.set_defaults(func=_cmd_refine)

    sweep_p = sub.add_parser("sweep", help="grid of runs over (p, lambda)")
    sweep_p.add_argument("--manifest", required=True)
    sweep_p.add_argument("--p-values", default="2", dest="p_values")
    sweep_p.add_argument("--lambda-values", default="0.5",
                         dest="lambda_values")
    sweep_p.add_argument("--threads", type=int, default=1)
    sweep_p.add_argument("--out", default=None,
                         help="base output dir (default: manifest's)")
    sweep_p.add_argument("--quiet", action="store_true")
    sweep_p.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
