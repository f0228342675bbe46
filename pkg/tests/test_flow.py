"""The minimizing-movements stepper: configs, descent guarantees, kinematics.

The binding per-step contracts are checked directly on real steps: the step
functional never exceeds the previous energy, the result is constant speed,
the stationary circle does not move, and everything is deterministic and
translation equivariant.  The projection/restoration helpers get their own
unit tests since the solver's correctness rests on their exact algebra.
"""

import numpy as np
import pytest

from pelastica.curves import (ClosedCurve, constant_speed_deviation, d1,
                              length, reparametrize_constant_speed, rotate90,
                              speeds)
from pelastica.energies import step_functional, total_energy
from pelastica.errors import (DegenerateCurve, GridMismatch, NotConstantSpeed)
from pelastica.flow import (FlowConfig, Trajectory, _restore_speed_uniformity,
                            _tangent_project, interp_constant, interp_linear,
                            minimize_step, run_flow, velocity)
from pelastica.shapes import circle, ellipse

from conftest import P2, l2_distance, snap_lattice
from test_curves import blob_pts, smooth_field, unit_circle_pts


def small_cfg(**kw):
    base = dict(params=P2, grid_size=128, tau=0.01, horizon=0.05)
    base.update(kw)
    return FlowConfig(**base)


# ---------------------------------------------------------------------------
# FlowConfig validation


def test_flow_config_validation():
    good = dict(params=P2, grid_size=64, tau=0.01, horizon=1.0)
    FlowConfig(**good)
    bad_cases = [
        dict(grid_size=7),
        dict(tau=0.0),
        dict(tau=-1.0),
        dict(horizon=0.005),        # must cover at least one step
        dict(inner_tol=0.0),
        dict(inner_max_iters=0),
        dict(armijo_c=0.0),
        dict(armijo_c=1.0),
        dict(backtrack_factor=0.0),
        dict(backtrack_factor=1.0),
        dict(tol_reparam=0.0),
        dict(tol_ac=-1e-4),
    ]
    for override in bad_cases:
        with pytest.raises(ValueError):
            FlowConfig(**{**good, **override})


# ---------------------------------------------------------------------------
# minimize_step


def test_step_never_increases_the_functional():
    cfg = small_cfg()
    prev = ellipse(1.2, 0.8, 128)
    cur, rec = minimize_step(prev, cfg)
    e_prev = total_energy(prev, P2).total
    assert step_functional(cur, prev, cfg.tau, P2) <= e_prev
    assert rec.dissipation_slack >= 0.0
    assert rec.energy_before == pytest.approx(e_prev, rel=1e-15)
    assert rec.inner_iters > 0


def test_step_output_is_constant_speed():
    cfg = small_cfg()
    cur, _ = minimize_step(ellipse(1.2, 0.8, 128), cfg)
    assert constant_speed_deviation(cur) <= cfg.tol_reparam


def test_step_keeps_stationary_circle_parked():
    """At the critical radius the step must not move the curve measurably."""
    cfg = small_cfg()
    prev = circle(1.0, 128)
    cur, rec = minimize_step(prev, cfg)
    max_move = float(np.max(np.sqrt(np.sum((cur.pts - prev.pts) ** 2,
                                           axis=1))))
    assert max_move < 1e-4          # measured ~6e-6
    assert rec.converged
    assert 0.0 <= rec.dissipation_slack < 1e-6


def test_step_with_loose_tolerance_returns_prev_bitwise():
    # gradient norm is already below a huge tolerance, so no iterate is taken
    cfg = small_cfg(inner_tol=1e6)
    prev = circle(1.0, 128)
    cur, rec = minimize_step(prev, cfg)
    assert np.array_equal(cur.pts, prev.pts)
    assert rec.converged and rec.inner_iters == 0
    assert rec.dissipation_slack == 0.0


def test_step_translation_equivariance():
    """The energy landscape is translation invariant; the solver tracks that
    through a full descent step to solver-noise accuracy (the Fourier solves
    see different bit patterns, so equality is near, not bitwise)."""
    cfg = small_cfg()
    shift = np.array([0.59375, -1.25])
    prev = ClosedCurve(snap_lattice(circle(1.0, 128).pts))
    cur0, _ = minimize_step(prev, cfg)
    cur1, _ = minimize_step(ClosedCurve(prev.pts + shift), cfg)
    assert float(np.max(np.abs(cur1.pts - shift - cur0.pts))) < 1e-10
    prev = ClosedCurve(snap_lattice(ellipse(1.2, 0.8, 128).pts))
    cur0, _ = minimize_step(prev, cfg)
    cur1, _ = minimize_step(ClosedCurve(prev.pts + shift), cfg)
    assert float(np.max(np.abs(cur1.pts - shift - cur0.pts))) < 1e-7


def test_step_determinism_bitwise():
    cfg = small_cfg()
    prev = ellipse(1.2, 0.8, 128)
    a, _ = minimize_step(prev, cfg)
    b, _ = minimize_step(prev, cfg)
    assert np.array_equal(a.pts, b.pts)


def test_step_input_validation():
    cfg = small_cfg()
    with pytest.raises(GridMismatch):
        minimize_step(circle(1.0, 64), cfg)
    with pytest.raises(NotConstantSpeed):
        minimize_step(ClosedCurve(blob_pts(128)), cfg)


# ---------------------------------------------------------------------------
# run_flow


def test_run_flow_step_count_is_ceiling():
    assert run_flow(circle(1.0, 64), small_cfg(grid_size=64, tau=0.01,
                                               horizon=0.05)).n_steps == 5
    assert run_flow(circle(1.0, 64), small_cfg(grid_size=64, tau=0.01,
                                               horizon=0.055)).n_steps == 6


def test_run_flow_reparametrizes_rough_initials_only():
    traj = run_flow(circle(1.0, 64), small_cfg(grid_size=64, horizon=0.01))
    assert not traj.initial_reparametrized
    traj = run_flow(ClosedCurve(blob_pts(128)), small_cfg(horizon=0.01))
    assert traj.initial_reparametrized
    assert constant_speed_deviation(traj.curves[0]) <= 1e-6


def test_run_flow_energies_decrease():
    traj = run_flow(ellipse(1.2, 0.8, 64),
                    small_cfg(grid_size=64, tau=0.02, horizon=0.2))
    assert traj.error is None
    energies = [total_energy(c, P2).total for c in traj.curves]
    assert all(b <= a for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]


def test_run_flow_determinism_bitwise():
    cfg = small_cfg(grid_size=64, tau=0.02, horizon=0.1)
    a = run_flow(ellipse(1.2, 0.8, 64), cfg)
    b = run_flow(ellipse(1.2, 0.8, 64), cfg)
    for ca, cb in zip(a.curves, b.curves):
        assert np.array_equal(ca.pts, cb.pts)


def test_run_flow_grid_mismatch():
    with pytest.raises(GridMismatch):
        run_flow(circle(1.0, 64), small_cfg(grid_size=128))


def test_run_flow_tags_aborts_instead_of_raising(monkeypatch):
    import pelastica.flow as flow_mod

    real_step = flow_mod.minimize_step

    def exploding(prev, cfg, *, inner_tol=None, index=0):
        if index >= 3:
            raise DegenerateCurve("synthetic pinch")
        return real_step(prev, cfg, inner_tol=inner_tol, index=index)

    monkeypatch.setattr(flow_mod, "minimize_step", exploding)
    traj = flow_mod.run_flow(ellipse(1.2, 0.8, 64),
                             small_cfg(grid_size=64, tau=0.01, horizon=0.05))
    assert traj.error == "step 3: DegenerateCurve: synthetic pinch"
    assert len(traj.curves) == 3 and len(traj.records) == 2


# ---------------------------------------------------------------------------
# velocity and time interpolants


@pytest.fixture()
def tiny_traj():
    """Hand-built two-state trajectory on the dyadic lattice, tau = 1/4."""
    cfg = FlowConfig(params=P2, grid_size=64, tau=0.25, horizon=0.25)
    c0 = ClosedCurve(snap_lattice(unit_circle_pts(64)))
    c1 = ClosedCurve(snap_lattice(unit_circle_pts(64) * 1.5 + 0.25))
    return Trajectory(config=cfg, curves=(c0, c1), records=())


def test_velocity_exact_on_dyadic_data(tiny_traj):
    c0, c1 = tiny_traj.curves
    v = velocity(1, tiny_traj)
    assert np.array_equal(v, 4.0 * (c1.pts - c0.pts))


def test_velocity_index_bounds(tiny_traj):
    for bad in (0, 2, -1):
        with pytest.raises(IndexError):
            velocity(bad, tiny_traj)


def test_interp_linear_endpoints_and_midpoint(tiny_traj):
    c0, c1 = tiny_traj.curves
    assert interp_linear(0.0, tiny_traj) is c0
    assert interp_linear(0.25, tiny_traj) is c1
    # times within 1e-9 step units snap to the knot
    assert interp_linear(0.25 * (1.0 + 1e-11), tiny_traj) is c1
    mid = interp_linear(0.125, tiny_traj)
    np.testing.assert_allclose(mid.pts, c0.pts + 0.5 * (c1.pts - c0.pts),
                               rtol=5e-16)
    assert tiny_traj.n_steps == 1
    np.testing.assert_array_equal(tiny_traj.times, [0.0, 0.25])


def test_interp_linear_range_errors(tiny_traj):
    with pytest.raises(ValueError):
        interp_linear(-0.01, tiny_traj)
    with pytest.raises(ValueError):
        interp_linear(0.26, tiny_traj)


def test_interp_constant_conventions(tiny_traj):
    c0, c1 = tiny_traj.curves
    right, left = interp_constant(0.0, tiny_traj)
    assert right is c0 and left is c0
    right, left = interp_constant(0.25, tiny_traj)
    assert right is c1 and left is c0
    right, left = interp_constant(0.1, tiny_traj)   # interior of (0, tau]
    assert right is c1 and left is c0


# ---------------------------------------------------------------------------
# constraint-space helpers


def test_tangent_project_lands_in_the_constraint_tangent_space():
    g = reparametrize_constant_speed(blob_pts(128))
    u = d1(g)
    s = speeds(g)
    rng = np.random.default_rng(23)
    w = rng.standard_normal((128, 2))
    v = _tangent_project(w, u, s)
    # admissibility: the tangential derivative profile T . d1(v) is uniform
    prof = np.sum((u / s[:, None]) * d1(v), axis=1)
    assert np.max(np.abs(prof - prof.mean())) < 1e-9 * max(
        1.0, float(np.max(np.abs(prof))))


def test_tangent_project_is_idempotent_and_orthogonal():
    g = reparametrize_constant_speed(blob_pts(128))
    u = d1(g)
    s = speeds(g)
    rng = np.random.default_rng(29)
    w = rng.standard_normal((128, 2))
    z = rng.standard_normal((128, 2))
    pw = _tangent_project(w, u, s)
    ppw = _tangent_project(pw, u, s)
    assert np.max(np.abs(ppw - pw)) < 1e-9 * np.max(np.abs(pw))
    # the removed part is orthogonal (node-mean pairing) to every projection
    pz = _tangent_project(z, u, s)
    inner = float(np.mean(np.sum((w - pw) * pz, axis=1)))
    assert abs(inner) < 1e-10


def test_restore_speed_uniformity_removes_normal_ripple():
    """The Newton restoration flattens a pure normal-space speed ripple that
    tangential resampling cannot reach, without drifting the centroid."""
    g = unit_circle_pts(128)
    tang = d1(g) / speeds(g)[:, None]
    normal = rotate90(tang)
    ripple = 1e-6 * ((-1.0) ** np.arange(128))[:, None] * normal
    noisy = g + ripple
    s = speeds(noisy)
    assert float(np.max(s) - np.min(s)) / float(s.mean()) > 1e-7
    fixed = _restore_speed_uniformity(noisy)
    s2 = speeds(fixed)
    assert float(np.max(s2) - np.min(s2)) / float(s2.mean()) < 1e-12
    drift = np.abs(fixed.mean(axis=0) - noisy.mean(axis=0))
    assert np.max(drift) < 1e-14
    assert l2_distance(fixed, noisy) < 1e-5
