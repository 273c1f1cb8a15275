"""Exception types raised across the package."""


class NCSError(Exception):
    """Base class for all package errors."""


class LinAlgError(NCSError, ValueError):
    """Bad input to, or numerical breakdown of, a dense linear algebra routine."""


class NotSchurError(LinAlgError):
    pass


class NotPositiveDefiniteError(LinAlgError):
    pass


class ConvergenceError(LinAlgError):
    pass


class ConfigError(NCSError, ValueError):
    pass


class InfeasibleDesignError(NCSError):
    """Design search ended without a certificate; ``kind`` says which stage failed."""

    NO_GRID_POINT = "no-feasible-grid-point"
    NO_T_FACTORS = "no-T-factors"

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class PolicyFormatError(NCSError, ValueError):
    """Malformed or truncated serialized policy or design file."""
