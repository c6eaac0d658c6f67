"""Exception and warning types raised across the package."""


class NablowupError(Exception):
    """Base class for all package errors."""


class NonzeroRemainder(NablowupError, ArithmeticError):
    """A polynomial division by a power of ``u`` was not exact."""


class NonInvariantAxis(NablowupError, ValueError):
    """The exceptional line ``{u = 0}`` is not invariant for the field."""


class NonHyperbolic(NablowupError, ValueError):
    """A matrix has an eigenvalue on (or numerically near) the imaginary axis."""


class UnboundedTail(NablowupError, ValueError):
    """The weighted sup norm of a segment tail is infinite."""


class NegativeTimeOutsideEu(NablowupError, ValueError):
    """``V(t)`` with ``t < 0`` was requested for a segment not in ``E^u``."""


class AxisHit(NablowupError, ValueError):
    """A trajectory sample lies on the exceptional line."""


class NonMonotone(NablowupError, ValueError):
    """Samples that must be strictly increasing are not."""


class OutOfRange(NablowupError, ValueError):
    """A requested time lies outside the covered range."""


class EtaRatioTooSmall(NablowupError, ValueError):
    """Forcing decay rate does not dominate the Lipschitz bound (eta/M <= 1)."""


class OutOfBall(NablowupError, ValueError):
    """Input of the Lyapunov-Perron operator lies outside its ball."""


class NoContraction(NablowupError, RuntimeError):
    """The Lyapunov-Perron map is not (or measurably not) a 1/2-contraction."""


class MaxIter(NablowupError, RuntimeError):
    """Fixed-point iteration hit its iteration cap."""


class AxisApproach(NablowupError, RuntimeError):
    """A trajectory approached the exceptional line and was terminated."""


class SingularChart(NablowupError, ValueError):
    """The blow-down map is singular for the given segment."""


class ScenarioError(NablowupError, ValueError):
    """Scenario configuration is invalid."""


class ZeroKappaWarning(UserWarning):
    """The blown-up field has no common factor of ``u`` to divide out."""


class NonInvariantAxisWarning(UserWarning):
    """After desingularization the line ``{u = 0}`` is not invariant."""
