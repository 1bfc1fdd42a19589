"""Exception hierarchy shared by the solver, diagnostics and CLI."""


class RadialConeError(Exception):
    """Base class for all package errors."""


class ProfileError(RadialConeError):
    """A nonlinearity profile produced a non-finite value or is unknown."""


class QuadratureError(RadialConeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConfigError(RadialConeError):
    """Invalid or unparsable run configuration."""


class CflViolation(RadialConeError):
    """Requested time step exceeds the configured Courant bound."""


class BlowUpSuspected(RadialConeError):
    """Evolution stopped because the solution looks like it is concentrating.

    ``last_good`` holds the final state that passed every check and
    ``history`` the partial run up to that state.
    """

    def __init__(self, message, last_good=None, history=None, reason=""):
        super().__init__(message)
        self.last_good = last_good
        self.history = history
        self.reason = reason


class NonFinite(BlowUpSuspected):
    """NaN or inf detected in the evolved fields."""

    def __init__(self, message, last_good=None, history=None):
        super().__init__(message, last_good=last_good, history=history, reason="non-finite field")


class DiagnosticsError(RadialConeError):
    """A diagnostic was requested outside the recorded window."""
