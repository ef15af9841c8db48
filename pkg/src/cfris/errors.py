"""Exception hierarchy for the cfris package."""


class CfrisError(Exception):
    """Base class for all cfris errors."""


class ValidationError(CfrisError):
    """An input failed a structural precondition (shape, symmetry, finiteness)."""


class SingularMatrixError(CfrisError):
    """A matrix expected to be positive definite failed to factorize."""


class ConfigError(CfrisError):
    """A scenario configuration is malformed or inconsistent."""
