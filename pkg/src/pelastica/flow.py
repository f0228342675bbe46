"""Minimizing-movements time stepping for the length-penalized p-elastic flow.

Each step minimizes G(γ) = 𝓔_p(γ) + (𝓛(prev)/2τ)∫|γ - prev|² dx over the
constant-speed class, by projected descent.  The search direction is built
in three stages from the unconstrained gradient of the discrete G:

1. orthogonal projection onto the exact tangent space of the discrete
   constraint set {|d1γ_j| all equal} — fields v with γ_x·v_x/|γ_x|
   constant across nodes — computed by a small preconditioned-CG Gram solve;
2. Fourier-diagonal preconditioning by a surrogate of the step Hessian
   (𝓛(prev)/τ + β·Δ_N², with Δ_N the second-difference symbol), which cuts
   the iteration count by orders of magnitude on fine grids where the
   fourth-order term makes the raw gradient flow stiff;
3. re-projection onto the tangent space, so the slope fed to the Armijo
   test is exact: along tangent directions the constant-speed projection is
   first-order inert, hence d/ds G(project(γ - s·d)) = -⟨gradient, d⟩.

Each trial point is reprojected onto the constant-speed set — tangentially
with `reparametrize_constant_speed`, then in the constraint normal space
with a Newton restoration that equalizes |d1γ| (tangential sliding cannot
reach that part, and without it the projections' conjugate-gradient
leakage accumulates as stiff normal-space sediment in the iterates) — and
accepted by an Armijo test on the post-projection value of G.  The tangent
projection matters: the raw gradient carries a large component normal to
the constraint set (the Lagrange-multiplier direction) that the projection
annihilates, and feeding it to the line search would both misreport the
slope and bury the true stationarity measure.  `grad_norm_final` records
the tangent-projected gradient norm — the quantity that genuinely vanishes
at a constrained minimizer.

Guarantees preserved regardless of preconditioning: every accepted iterate
is constant-speed to `tol_reparam`, G never increases, and a step that
cannot find any decrease returns ``prev`` itself (flagged ``stalled``),
which is a valid minimizing-movements step since G(prev; prev) = 𝓔(prev).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend as K
from .curves import (ClosedCurve, constant_speed_deviation, length,
                     reparametrize_constant_speed)
from .energies import (EnergyParams, _unconstrained_step_gradient, penalty,
                       step_functional, total_energy)
from .errors import (CurveFlowError, DegenerateCurve, GridMismatch,
                     NonMonotoneProfile, NotConstantSpeed,
                     ReparametrizationFailed)


@dataclass(frozen=True)
class FlowConfig:
    """Full configuration of one flow run.

    ``inner_tol`` bounds the projected gradient norm of accepted steps (in
    the preconditioner metric, so inner_tol² is roughly the first-order
    decrease a further iteration could still extract); left as None it
    resolves to 1e-6·max(1, 𝓔_p(γ₀)) at run start.  ``seed`` only matters
    to callers that generate randomized initial data; the solver itself is
    deterministic.
    """

    params: EnergyParams
    grid_size: int
    tau: float
    horizon: float
    inner_tol: float | None = None
    inner_max_iters: int = 500
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    tol_reparam: float = 1e-6
    tol_ac: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.grid_size < 8:
            raise ValueError(f"grid_size must be >= 8, got {self.grid_size}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.horizon >= self.tau:
            raise ValueError("horizon must cover at least one step "
                             f"(horizon={self.horizon}, tau={self.tau})")
        if self.inner_tol is not None and not self.inner_tol > 0:
            raise ValueError(f"inner_tol must be positive, got {self.inner_tol}")
        if self.inner_max_iters < 1:
            raise ValueError("inner_max_iters must be >= 1")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError(f"armijo_c must lie in (0, 1), got {self.armijo_c}")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1), "
                             f"got {self.backtrack_factor}")
        if not self.tol_reparam > 0:
            raise ValueError("tol_reparam must be positive")
        if not self.tol_ac > 0:
            raise ValueError("tol_ac must be positive")


@dataclass(frozen=True)
class StepRecord:
    """Per-step ledger.

    ``dissipation_slack`` = 𝓔(prev) - 𝓔(new) - P(new) >= 0 up to rounding;
    ``inner_iters`` counts accepted descent updates; ``converged`` means the
    projected gradient norm reached the inner tolerance, ``stalled`` that
    the line search found no acceptable decrease (the step then returns its
    best iterate, possibly prev itself).  ``grad_norm_final`` is measured in
    the preconditioner metric, sqrt(⟨g, M⁻¹g⟩) over tangent fields — the
    square root of the first-order decrease still available, which is the
    scale on which stopping is meaningful for a preconditioned method.
    """

    index: int
    energy_before: float
    energy_after: float
    penalty_value: float
    inner_iters: int
    grad_norm_final: float
    dissipation_slack: float
    converged: bool
    stalled: bool = False


@dataclass(frozen=True)
class Trajectory:
    """Ordered flow states γ_0..γ_n at times i·τ plus per-step records.

    ``error`` carries an abort tag when the run stopped early (partial
    trajectory); ``initial_reparametrized`` records whether the supplied
    initial curve needed projecting to constant speed.
    """

    config: FlowConfig
    curves: tuple[ClosedCurve, ...]
    records: tuple[StepRecord, ...]
    initial_reparametrized: bool = False
    error: str | None = None

    @property
    def n_steps(self) -> int:
        return len(self.curves) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.curves)) * self.config.tau


def _resolve_inner_tol(cfg: FlowConfig, e0: float) -> float:
    if cfg.inner_tol is not None:
        return cfg.inner_tol
    return 1e-6 * max(1.0, e0)


def _gram_solve(tang: np.ndarray, rhs: np.ndarray, lbar2: float,
                rtol: float = 1e-12, max_iters: int = 400) -> np.ndarray:
    """Solve the Gram system LᵀL μ = rhs for a mean-zero scalar field μ.

    L(μ) = d1(μ·T) parametrizes the normal space of the discrete
    constant-speed set {γ : |d1γ_j| equal for all j} at a point with unit
    tangents T, over mean-zero μ; (Lᵀv)_j = -T_j·(d1 v)_j under the node
    mean.  Preconditioned CG in the mean-zero subspace, with a
    Fourier-diagonal preconditioner built from the constant-coefficient
    symbol of LᵀL (𝓛²·N²sin²(2πk/N), floored by the |d1T|² scale so the
    weakly-coupled Nyquist mode stays well conditioned).
    """
    n = rhs.shape[0]

    def lmap(mu):
        return K.d1(np.ascontiguousarray(mu[:, None] * tang))

    def ltmap(v):
        return -K.rowdot(tang, K.d1(v))

    d1t = K.d1(tang)
    floor = float(np.mean(K.rowdot(d1t, d1t))) + 1e-300
    sym = lbar2 * (n * np.sin(2.0 * np.pi * np.arange(n // 2 + 1) / n)) ** 2
    sym += floor

    def precond(r):
        return np.fft.irfft(np.fft.rfft(r) / sym, n)

    inv_n = 1.0 / n
    rhs_norm2 = float(rhs.dot(rhs)) * inv_n
    mu = np.zeros(n)
    if rhs_norm2 == 0.0:
        return mu
    r = rhs.copy()
    z = precond(r)
    z -= z.mean()
    pvec = z.copy()
    rz = float(r.dot(z)) * inv_n
    tol2 = rtol * rtol * rhs_norm2
    for _ in range(max_iters):
        if rz <= 0.0:   # SPD preconditioner: zero only at exact solution
            break
        ap = ltmap(lmap(pvec))
        ap -= ap.mean()
        denom = float(pvec.dot(ap)) * inv_n
        if denom <= 0.0:
            break
        alpha = rz / denom
        mu += alpha * pvec
        r -= alpha * ap
        if float(r.dot(r)) * inv_n <= tol2:
            break
        z = precond(r)
        z -= z.mean()
        rz_new = float(r.dot(z)) * inv_n
        pvec = z + (rz_new / rz) * pvec
        rz = rz_new
    return mu


def _tangent_project(w: np.ndarray, u: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Orthogonal projection of the field w onto the constraint tangent space.

    The tangent space of the discrete constant-speed set at a point with
    unit tangents T = d1γ/|d1γ| is {v : T_j·(d1 v)_j constant in j}; the
    normal component is removed by solving LᵀL μ = -Lᵀw and returning
    w + L(μ).
    """
    tang = u / s[:, None]
    rhs = K.rowdot(tang, K.d1(w))
    rhs -= rhs.mean()
    mu = _gram_solve(tang, rhs, float(s.mean()) ** 2)
    return w + K.d1(np.ascontiguousarray(mu[:, None] * tang))


def _restore_speed_uniformity(pts: np.ndarray, passes: int = 2) -> np.ndarray:
    """Newton correction in the constraint normal space flattening |d1γ|.

    `reparametrize_constant_speed` slides nodes along the polyline, which
    only reaches the part of the speed non-uniformity visible to tangential
    motion.  Descent iterations additionally deposit a slowly accumulating
    normal-space residue (conjugate-gradient leakage from the projections)
    that tangential sliding cannot remove and that the gradient norm cannot
    see — the preconditioner crushes its stiff wavenumbers — yet the κ_ss
    stencil amplifies it by N²-scale factors, polluting the stationarity
    residual of otherwise-converged states.  Each pass linearizes
    c_j = |d1γ_j|² around γ and solves for the normal-space update L(ν)
    equalizing it: δc_j = 2·d1γ_j·d1(L(ν))_j = -2𝓛̄·(LᵀLν)_j gives
    LᵀL ν = (c - c̄)/(2𝓛̄), applied as γ += L(ν).  Newton quadratic
    convergence: two passes reach rounding level.
    """
    out = np.asarray(pts, dtype=np.float64)
    for _ in range(passes):
        u = K.d1(out)
        s = K.speeds(out)
        lbar = float(s.mean())
        c = s * s
        rhs = (c - c.mean()) / (2.0 * lbar)
        if float(np.sqrt(np.mean(rhs * rhs))) <= 1e-13 * lbar * lbar:
            break
        tang = u / s[:, None]
        # Inexact Newton: a loose linear solve per pass suffices because the
        # outer contraction is quadratic; 1e-6 linear accuracy on a 1e-7
        # violation already lands at rounding level.
        nu = _gram_solve(tang, rhs, lbar * lbar, rtol=1e-6, max_iters=200)
        out = out + K.d1(np.ascontiguousarray(nu[:, None] * tang))
    return out


def _descent_direction(gvec: np.ndarray, cur: ClosedCurve, l_prev: float,
                       tau: float, params: EnergyParams) -> np.ndarray:
    """Preconditioned direction M⁻¹g with Fourier-diagonal SPD metric M.

    M has symbol 𝓛(prev)/τ + β·(4N² sin²(πk/N))² where β scales like the
    leading coefficient of the fourth-order term, (p-1)·mean|γ_xx|^{p-2} /
    𝓛^{2p-1}.  Since M is symmetric positive definite, ⟨g, M⁻¹g⟩ > 0 and
    -M⁻¹g is always a descent direction.
    """
    n = cur.n
    p = params.p
    q = K.d2(cur.pts)
    if p == 2.0:
        mw = 1.0
    else:
        mw = float(np.mean(np.sqrt(K.rowdot(q, q)) ** (p - 2.0)))
    lbar = length(cur)
    beta = (p - 1.0) * mw / lbar ** (2.0 * p - 1.0)
    k = np.arange(n // 2 + 1, dtype=np.float64)
    lap = (2.0 * n * np.sin(np.pi * k / n)) ** 2
    symbol = l_prev / tau + beta * lap * lap
    ghat = np.fft.rfft(gvec, axis=0)
    return np.fft.irfft(ghat / symbol[:, None], n=n, axis=0)


def minimize_step(prev, cfg: FlowConfig, *, inner_tol: float | None = None,
                  index: int = 0):
    """One minimizing-movements step from ``prev``.

    Returns (curve, StepRecord).  The result is constant-speed within
    ``cfg.tol_reparam``, satisfies G(result) <= 𝓔(prev), and either the
    gradient norm fell below the inner tolerance (``converged``) or the
    iteration budget/line search ran out (flagged on the record).
    """
    if not isinstance(prev, ClosedCurve):
        prev = ClosedCurve(prev)
    if prev.n != cfg.grid_size:
        raise GridMismatch(f"curve has {prev.n} nodes, config expects "
                           f"{cfg.grid_size}")
    if constant_speed_deviation(prev) > cfg.tol_ac:
        raise NotConstantSpeed("minimize_step requires a constant-speed prev")
    params = cfg.params
    tau = cfg.tau
    l_prev = length(prev)
    e_prev = total_energy(prev, params).total
    if inner_tol is None:
        inner_tol = _resolve_inner_tol(cfg, e_prev)

    cur = prev
    g_cur = e_prev          # G(prev; prev) = 𝓔(prev): penalty vanishes
    gnorm = math.inf
    converged = False
    stalled = False
    accepted_iters = 0
    for _ in range(cfg.inner_max_iters):
        raw = _unconstrained_step_gradient(cur, prev, tau, params,
                                           tol_ac=cfg.tol_ac)
        u = K.d1(cur.pts)
        s = K.speeds(cur.pts)
        gvec = _tangent_project(raw, u, s)
        mdir = _descent_direction(gvec, cur, l_prev, tau, params)
        # Stationarity in the preconditioner metric: ⟨g, M⁻¹g⟩ is the scale
        # of the first-order decrease still available, so its square root is
        # the gradient norm in which stopping is meaningful (the plain L²
        # norm retains stiff high-k components whose energy content is below
        # double-precision resolution).  M⁻¹ is applied before the second
        # projection so the pairing is an exact SPD quadratic form: the
        # doubly-projected pairing can go negative from conjugate-gradient
        # roundoff once the true slope is ~1e-8, which silently froze the
        # flow at non-critical near-circular states.
        slope_m = float(np.mean(K.rowdot(gvec, mdir)))
        gnorm = math.sqrt(max(slope_m, 0.0))
        if gnorm <= inner_tol:
            converged = True
            break
        dvec = _tangent_project(mdir, u, s)
        slope = float(np.mean(K.rowdot(gvec, dvec)))
        if not slope > 0.0:
            # Degenerate preconditioned direction (projection noise at the
            # scale of the remaining slope).  gvec itself is admissible and
            # always a descent direction, just less well scaled.
            dvec = gvec
            slope = float(np.mean(K.rowdot(gvec, gvec)))
            if not slope > 0.0:
                stalled = True
                break
        step = 1.0
        cand = None
        while step >= 1e-16:
            try:
                moved = reparametrize_constant_speed(cur.pts - step * dvec,
                                                     tol=cfg.tol_reparam)
                trial = ClosedCurve(_restore_speed_uniformity(moved.pts))
            except (DegenerateCurve, NonMonotoneProfile,
                    ReparametrizationFailed):
                step *= cfg.backtrack_factor
                continue
            g_trial = step_functional(trial, prev, tau, params)
            if g_trial <= g_cur - cfg.armijo_c * step * slope:
                cand = trial
                g_cur = g_trial
                break
            step *= cfg.backtrack_factor
        if cand is None:
            stalled = True
            break
        cur = cand
        accepted_iters += 1

    breakdown = total_energy(cur, params)
    pen = penalty(cur, prev, tau)
    record = StepRecord(
        index=index,
        energy_before=e_prev,
        energy_after=breakdown.total,
        penalty_value=pen,
        inner_iters=accepted_iters,
        grad_norm_final=gnorm,
        dissipation_slack=e_prev - breakdown.total - pen,
        converged=converged,
        stalled=stalled,
    )
    return cur, record


def run_flow(initial, cfg: FlowConfig) -> Trajectory:
    """Run ⌈horizon/τ⌉ minimizing-movements steps from ``initial``.

    The initial curve is projected to constant speed first when needed (and
    the trajectory records that).  A step failure aborts the run, returning
    the partial trajectory with an ``error`` tag instead of raising.
    """
    if not isinstance(initial, ClosedCurve):
        initial = ClosedCurve(initial)
    if initial.n != cfg.grid_size:
        raise GridMismatch(f"initial curve has {initial.n} nodes, config "
                           f"expects {cfg.grid_size}")
    reparametrized = False
    g0 = initial
    if constant_speed_deviation(g0) > cfg.tol_reparam:
        g0 = reparametrize_constant_speed(g0, tol=cfg.tol_reparam)
        reparametrized = True
    e0 = total_energy(g0, cfg.params).total
    inner_tol = _resolve_inner_tol(cfg, e0)
    n_steps = int(math.ceil(cfg.horizon / cfg.tau - 1e-12))
    curves = [g0]
    records = []
    error = None
    for i in range(1, n_steps + 1):
        try:
            cur, rec = minimize_step(curves[-1], cfg, inner_tol=inner_tol,
                                     index=i)
        except CurveFlowError as exc:
            error = f"step {i}: {type(exc).__name__}: {exc}"
            break
        curves.append(cur)
        records.append(rec)
    return Trajectory(config=cfg, curves=tuple(curves), records=tuple(records),
                      initial_reparametrized=reparametrized, error=error)


def velocity(i: int, trajectory: Trajectory) -> np.ndarray:
    """Discrete velocity V_i = (γ_i - γ_{i-1})/τ as an (N, 2) field, i >= 1."""
    if not 1 <= i <= trajectory.n_steps:
        raise IndexError(f"velocity index {i} outside 1..{trajectory.n_steps}")
    tau = trajectory.config.tau
    return (trajectory.curves[i].pts - trajectory.curves[i - 1].pts) / tau


def _step_position(t: float, trajectory: Trajectory) -> float:
    """Time in step units, snapped to the nearest integer within 1e-9."""
    n = trajectory.n_steps
    r = t / trajectory.config.tau
    rr = round(r)
    if abs(r - rr) < 1e-9:
        r = float(rr)
    if r < 0.0 or r > n:
        raise ValueError(f"time {t} outside [0, {n * trajectory.config.tau}]")
    return r


def interp_linear(t: float, trajectory: Trajectory) -> ClosedCurve:
    """Piecewise-linear-in-time interpolant; exact at step times."""
    r = _step_position(t, trajectory)
    i = int(math.floor(r))
    if i >= trajectory.n_steps:
        return trajectory.curves[trajectory.n_steps]
    th = r - i
    if th == 0.0:
        return trajectory.curves[i]
    a = trajectory.curves[i].pts
    b = trajectory.curves[i + 1].pts
    return ClosedCurve(a + th * (b - a))


def interp_constant(t: float, trajectory: Trajectory):
    """Right-continuous step interpolants (γ̃, Γ̃) at time t.

    γ̃ is the right curve (γ_i for t ∈ ((i-1)τ, iτ]) and Γ̃ the left one
    (γ_{i-1} on the same window); by convention t = 0 yields (γ₀, γ₀).
    """
    r = _step_position(t, trajectory)
    i = int(math.ceil(r))
    if i == 0:
        return trajectory.curves[0], trajectory.curves[0]
    return trajectory.curves[i], trajectory.curves[i - 1]
