"""Initial-shape generators.

Every generator returns a constant-speed `ClosedCurve` (projected through
`reparametrize_constant_speed` when the raw samples are not already uniform
in arclength) and is bitwise deterministic for fixed arguments.
"""

from __future__ import annotations

import numpy as np

from .curves import ClosedCurve, reparametrize_constant_speed
from .errors import DegenerateCurve, ImmersionError

TWO_PI = 2.0 * np.pi


def circle(radius: float, grid_size: int) -> ClosedCurve:
    """Counterclockwise circle; uniform samples are already constant-speed."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    x = np.arange(grid_size, dtype=np.float64) / grid_size
    pts = np.stack([radius * np.cos(TWO_PI * x),
                    radius * np.sin(TWO_PI * x)], axis=1)
    return reparametrize_constant_speed(pts)


def ellipse(a: float, b: float, grid_size: int) -> ClosedCurve:
    """Axis-aligned ellipse with semi-axes a, b, resampled to constant speed."""
    if not (a > 0 and b > 0):
        raise ValueError(f"semi-axes must be positive, got a={a}, b={b}")
    x = np.arange(grid_size, dtype=np.float64) / grid_size
    pts = np.stack([a * np.cos(TWO_PI * x), b * np.sin(TWO_PI * x)], axis=1)
    return reparametrize_constant_speed(pts)


def fourier_perturbed_circle(radius: float, modes: int, amplitude: float,
                             seed: int, grid_size: int) -> ClosedCurve:
    """Circle with a random radial Fourier perturbation.

    The radial field is r(x) = radius·(1 + amplitude·f(x)) with f a random
    combination of modes 1..modes (1/k² spectral decay) normalized to
    max|f| = 1, so ``amplitude`` is the exact relative radial excursion.
    Deterministic in ``seed``.  Raises ImmersionError when the amplitude is
    large enough to pinch the curve at grid scale.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if modes < 1:
        raise ValueError(f"need at least one mode, got {modes}")
    if amplitude < 0:
        raise ValueError(f"amplitude must be nonnegative, got {amplitude}")
    rng = np.random.default_rng(seed)
    x = np.arange(grid_size, dtype=np.float64) / grid_size
    f = np.zeros(grid_size)
    for k in range(1, modes + 1):
        ak, bk = rng.standard_normal(2)
        f += (ak * np.cos(TWO_PI * k * x) + bk * np.sin(TWO_PI * k * x)) / k ** 2
    top = np.max(np.abs(f))
    if top > 0:
        f /= top
    r = radius * (1.0 + amplitude * f)
    pts = np.stack([r * np.cos(TWO_PI * x), r * np.sin(TWO_PI * x)], axis=1)
    try:
        return reparametrize_constant_speed(pts)
    except DegenerateCurve as exc:
        raise ImmersionError(
            f"perturbation amplitude {amplitude} pinches the curve: {exc}"
        ) from exc


def generate_initial(shape: dict, grid_size: int) -> ClosedCurve:
    """Build the initial curve described by a tagged shape dict.

    Recognized kinds: ``circle`` (r), ``ellipse`` (a, b), and
    ``fourier_perturbed_circle`` (r, modes, amplitude, seed) -- the same
    schema as the ``[initial_shape]`` manifest table.
    """
    try:
        kind = shape["kind"]
    except (TypeError, KeyError):
        raise ValueError("initial shape must be a dict with a 'kind' key")
    if kind == "circle":
        return circle(float(shape.get("r", 1.0)), grid_size)
    if kind == "ellipse":
        return ellipse(float(shape["a"]), float(shape["b"]), grid_size)
    if kind == "fourier_perturbed_circle":
        return fourier_perturbed_circle(
            float(shape.get("r", 1.0)), int(shape["modes"]),
            float(shape["amplitude"]), int(shape.get("seed", 0)), grid_size)
    raise ValueError(f"unknown initial shape kind: {kind!r}")
