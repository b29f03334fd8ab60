"""Exception hierarchy shared across the package."""


class HtdpError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HtdpError, ValueError):
    """Argument outside the operation's domain (bad shape, sign, range)."""


class PreconditionError(HtdpError):
    """A stated precondition of an algorithm does not hold."""


class ConfigError(HtdpError, ValueError):
    """A configuration violates a required inequality or schema rule."""


class PrivacyBudgetError(HtdpError):
    """Ledger would exceed its budget, or a cost is infinite."""


class UnsupportedAssumptionError(HtdpError):
    """The problem lacks a structural property the algorithm relies on."""


class OracleError(HtdpError):
    """An oracle returned a non-finite or malformed value."""


class PhaseError(HtdpError):
    """Failure inside a localization phase; carries the phase index."""

    def __init__(self, phase, cause):
        super().__init__(f"phase {phase}: {cause}")
        self.phase = phase
        self.cause = cause
