"""Reference numpy implementations of the hot inner-loop kernels.

The compiled twin (``pelastica._kernels_c``) mirrors this module
function-for-function.  Both keep the exact same floating-point expression
order so results agree bitwise; see tests/test_backends.py.  Everything here
works on plain C-contiguous float64 arrays -- no curve objects, no checks.

Grid convention: samples live at x_j = j/N on the periodic unit interval,
so the difference stencils carry factors of N (first order) and N^2
(second order).
"""

from __future__ import annotations

import numpy as np


def d1(g: np.ndarray) -> np.ndarray:
    """Central periodic difference (g[j+1] - g[j-1]) * N/2 of an (N, 2) array."""
    n = g.shape[0]
    return (np.roll(g, -1, axis=0) - np.roll(g, 1, axis=0)) * (0.5 * n)


def d2(g: np.ndarray) -> np.ndarray:
    """Second periodic difference (g[j+1] - 2 g[j] + g[j-1]) * N^2."""
    n = g.shape[0]
    return ((np.roll(g, -1, axis=0) - 2.0 * g) + np.roll(g, 1, axis=0)) * float(n * n)


def d1s(f: np.ndarray) -> np.ndarray:
    """d1 for a scalar field (N,)."""
    n = f.shape[0]
    return (np.roll(f, -1) - np.roll(f, 1)) * (0.5 * n)


def d2s(f: np.ndarray) -> np.ndarray:
    """d2 for a scalar field (N,)."""
    n = f.shape[0]
    return ((np.roll(f, -1) - 2.0 * f) + np.roll(f, 1)) * float(n * n)


def rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise dot product of two (N, 2) fields."""
    return a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]


def speeds(g: np.ndarray) -> np.ndarray:
    """Node speeds |d1 g| of an (N, 2) curve sample array."""
    t = d1(g)
    return np.sqrt(t[:, 0] * t[:, 0] + t[:, 1] * t[:, 1])


def curvature(g: np.ndarray) -> np.ndarray:
    """Signed curvature (d2g . rotate90(d1g)) / |d1g|^3, no degeneracy check."""
    t = d1(g)
    q = d2(g)
    s = np.sqrt(t[:, 0] * t[:, 0] + t[:, 1] * t[:, 1])
    num = t[:, 0] * q[:, 1] - t[:, 1] * q[:, 0]
    return num / (s * s * s)


def catmull_rom(g: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Periodic cubic Catmull-Rom resampling of curve samples.

    Evaluates the standard C^1 interpolant through the nodes g[j] at
    parameters ``pos`` (values in [0, 1), wrapping allowed).  At an exact
    node parameter j/N the weights collapse to (0, 1, 0, 0), so nodes are
    reproduced bitwise.
    """
    n = g.shape[0]
    u = pos * n
    base = np.floor(u)
    th = u - base
    i1 = base.astype(np.int64) % n
    i0 = (i1 - 1) % n
    i2 = (i1 + 1) % n
    i3 = (i1 + 2) % n
    th2 = th * th
    th3 = th2 * th
    w0 = 0.5 * (-th3 + 2.0 * th2 - th)
    w1 = 0.5 * (3.0 * th3 - 5.0 * th2 + 2.0)
    w2 = 0.5 * (-3.0 * th3 + 4.0 * th2 + th)
    w3 = 0.5 * (th3 - th2)
    return ((w0[:, None] * g[i0] + w1[:, None] * g[i1])
            + w2[:, None] * g[i2]) + w3[:, None] * g[i3]


def invert_monotone(psi: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Invert a strictly increasing profile psi given at nodes 0..N (N+1 values).

    psi[0] = 0, psi[N] = 1 up to rounding.  Returns positions p in [0, 1)
    with the piecewise-linear interpolant of psi satisfying PL(p) = target.
    """
    n = psi.shape[0] - 1
    j = np.searchsorted(psi, targets, side="right") - 1
    j = np.clip(j, 0, n - 1)
    num = targets - psi[j]
    den = psi[j + 1] - psi[j]
    return (j + num / den) / n
