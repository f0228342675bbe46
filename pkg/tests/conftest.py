"""Shared fixtures: the benchmark trajectories and acceptance bookkeeping.

The expensive flow runs are session-scoped so the acceptance criteria and the
module tests measure the same trajectories.  Acceptance tests register their
verdicts through `record_criterion`; the terminal summary prints one PASS/FAIL
line per criterion at the end of the run.
"""

import numpy as np
import pytest

from pelastica.energies import EnergyParams
from pelastica.flow import FlowConfig, run_flow
from pelastica.shapes import circle, ellipse, fourier_perturbed_circle

P2 = EnergyParams(p=2.0, lam=0.5)
P3 = EnergyParams(p=3.0, lam=0.5)

# registered as "[criterion NN] PASS/FAIL - description" in the summary
_CRITERIA: dict[int, tuple[str, bool]] = {}


def record_criterion(num: int, description: str, passed: bool) -> None:
    _CRITERIA[num] = (description, bool(passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_CRITERIA):
        desc, ok = _CRITERIA[num]
        terminalreporter.write_line(
            f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'} - {desc}")


def l2_distance(a, b) -> float:
    """Rectangle-rule L² distance between two sample arrays."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


def snap_lattice(a, bits: int = 24) -> np.ndarray:
    """Round samples to the 2^-bits lattice.

    Sums and differences of lattice values (with dyadic offsets) are exact
    in float64 at these magnitudes, which lets equivariance tests assert
    bitwise equality instead of near-equality.
    """
    s = float(2 ** bits)
    return np.round(np.asarray(a, dtype=np.float64) * s) / s


@pytest.fixture(scope="session")
def ellipse_benchmark():
    """The long reference run: ellipse a=1.2 b=0.8, p=2, lam=0.5, tau=0.01,
    T=10, N=256.  Terminal state should be close to the unit circle."""
    cfg = FlowConfig(params=P2, grid_size=256, tau=0.01, horizon=10.0)
    traj = run_flow(ellipse(1.2, 0.8, 256), cfg)
    assert traj.error is None, traj.error
    return traj


@pytest.fixture(scope="session")
def stationary_run():
    """100 steps from the p=2, lam=0.5 stationary circle r*=1 at N=512."""
    cfg = FlowConfig(params=P2, grid_size=512, tau=0.01, horizon=1.0)
    traj = run_flow(circle(1.0, 512), cfg)
    assert traj.error is None, traj.error
    return traj


@pytest.fixture(scope="session")
def p3_run():
    """p=3 smoke run: perturbed circle, N=128, tau=0.02, to T=2."""
    cfg = FlowConfig(params=P3, grid_size=128, tau=0.02, horizon=2.0)
    traj = run_flow(fourier_perturbed_circle(1.0, 3, 0.1, 7, 128), cfg)
    assert traj.error is None, traj.error
    return traj


@pytest.fixture(scope="session")
def refinement_family(ellipse_benchmark):
    """The benchmark run refined twice under simultaneous (tau, 1/N) halving:
    (0.01, 256) -> (0.005, 512) -> (0.0025, 1024), same horizon T=10."""
    out = [ellipse_benchmark]
    for tau, n in ((0.005, 512), (0.0025, 1024)):
        cfg = FlowConfig(params=P2, grid_size=n, tau=tau, horizon=10.0)
        traj = run_flow(ellipse(1.2, 0.8, n), cfg)
        assert traj.error is None, traj.error
        out.append(traj)
    return tuple(out)


@pytest.fixture(scope="session")
def benchmark_runs(ellipse_benchmark, stationary_run, p3_run,
                   refinement_family):
    """(name, trajectory, params) for every run the acceptance suite covers."""
    runs = [
        ("ellipse-benchmark", ellipse_benchmark, P2),
        ("stationary-circle", stationary_run, P2),
        ("p3-smoke", p3_run, P3),
    ]
    for k, traj in enumerate(refinement_family[1:], start=1):
        runs.append((f"refinement-level-{k}", traj, P2))
    return runs
