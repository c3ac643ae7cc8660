"""Exception hierarchy shared across the package."""


class DesignError(Exception):
    """Base class for all errors raised by growthdesign."""


class InvalidModelError(DesignError, ValueError):
    """Growth-curve family and parameter vector are inconsistent."""


class ParameterError(DesignError, ValueError):
    """A covariance or design parameter lies outside its admissible range."""


class CertificateError(DesignError):
    """The equivalence check cannot be evaluated (information matrix singular)."""


class InfeasibleError(DesignError):
    """No design with the requested properties exists."""


class ResourceError(DesignError):
    """A computation would exceed its size or combinatorial budget."""


class SchemaError(DesignError, ValueError):
    """A scenario configuration failed validation.

    ``path`` names the offending field, e.g. ``"covariance.rho"``.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class UsageError(DesignError, ValueError):
    """Bad command-line or API usage (unknown figure kind, missing inputs)."""
