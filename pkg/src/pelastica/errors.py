"""Exception types shared across the curve, energy, and flow layers."""


class CurveFlowError(Exception):
    """Base class for all pelastica-specific failures."""


class DegenerateCurve(CurveFlowError):
    """A curve lost immersion: some node speed hit the safety floor."""


class ImmersionError(DegenerateCurve):
    """A generated shape failed its post-construction immersion check."""


class NonMonotoneProfile(CurveFlowError):
    """The cumulative speed profile is not strictly increasing."""


class ReparametrizationFailed(CurveFlowError):
    """Constant-speed projection stagnated above the requested tolerance."""


class NotConstantSpeed(CurveFlowError):
    """Operation requires a constant-speed curve within tolerance."""


class GridMismatch(CurveFlowError):
    """Operands live on different grids."""
