"""Minimizing-movements solver for the length-penalized p-elastic flow.

The package evolves closed planar curves with constant-speed
parametrization under the functional

    E(gamma) = (1/p) \\int |kappa|^p ds  +  lambda * Length(gamma),

one implicit (minimizing-movements) step at a time, and verifies at run
time the quantitative certificates the scheme is supposed to satisfy:
per-step dissipation, windowed energy inequalities, a-priori length and
second-difference bounds, and weak-form residuals for the limit equation.

Hot kernels are compiled (Cython) when the optional extension built; a
pure-Python fallback with bitwise-identical arithmetic is always
available.  ``pelastica.BACKEND`` says which one is active.
"""

from .backend import BACKEND
from .curves import (ClosedCurve, build_testfn_pair, constant_speed_deviation,
                     constrained_perturbation, curvature, d1, d2, length,
                     phi1_field, reparametrize_constant_speed, rotate90,
                     speeds)
from .diagnostics import (CertificateReport, FlatCoreReport, check_dissipation,
                          check_length_bounds, check_monotone_energy,
                          elastica_residual, flat_core_report, gradient_check,
                          refinement_study, tangential_residual, weak_residual)
from .energies import (EnergyBreakdown, EnergyParams, bending_energy,
                       bending_energy_cs, first_variation_bending,
                       first_variation_length, first_variation_penalty,
                       gradient_step_functional, penalty, step_functional,
                       total_energy)
from .errors import (CurveFlowError, DegenerateCurve, GridMismatch,
                     ImmersionError, NonMonotoneProfile, NotConstantSpeed,
                     ReparametrizationFailed)
from .flow import (FlowConfig, StepRecord, Trajectory, interp_constant,
                   interp_linear, minimize_step, run_flow, velocity)
from .runio import (RunManifest, emit_plot_data, parse_manifest,
                    read_snapshot, serialize_manifest, write_report,
                    write_snapshot)
from .shapes import circle, ellipse, fourier_perturbed_circle, generate_initial

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CertificateReport",
    "ClosedCurve",
    "CurveFlowError",
    "DegenerateCurve",
    "EnergyBreakdown",
    "EnergyParams",
    "FlatCoreReport",
    "FlowConfig",
    "GridMismatch",
    "ImmersionError",
    "NonMonotoneProfile",
    "NotConstantSpeed",
    "ReparametrizationFailed",
    "RunManifest",
    "StepRecord",
    "Trajectory",
    "bending_energy",
    "bending_energy_cs",
    "build_testfn_pair",
    "check_dissipation",
    "check_length_bounds",
    "check_monotone_energy",
    "circle",
    "constant_speed_deviation",
    "constrained_perturbation",
    "curvature",
    "d1",
    "d2",
    "elastica_residual",
    "ellipse",
    "emit_plot_data",
    "first_variation_bending",
    "first_variation_length",
    "first_variation_penalty",
    "flat_core_report",
    "fourier_perturbed_circle",
    "generate_initial",
    "gradient_check",
    "gradient_step_functional",
    "interp_constant",
    "interp_linear",
    "length",
    "minimize_step",
    "parse_manifest",
    "penalty",
    "phi1_field",
    "read_snapshot",
    "refinement_study",
    "reparametrize_constant_speed",
    "rotate90",
    "run_flow",
    "serialize_manifest",
    "speeds",
    "step_functional",
    "tangential_residual",
    "total_energy",
    "velocity",
    "weak_residual",
    "write_report",
    "write_snapshot",
]
