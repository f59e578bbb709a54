"""Exception hierarchy.

Math failures (non-convergence, vanishing derivatives, elliptic spectra,
violated preconditions) raise subclasses of CertifierError so the pipeline
can record them as failed checks and keep going.  Config and I/O problems
raise ConfigError / OSError and do abort.
"""

from __future__ import annotations


class CertifierError(Exception):
    """Base class for recoverable mathematical failures."""


class ModelError(CertifierError):
    """Model construction or usage is invalid (bad family, bad dimension)."""


class MissingDerivativeError(ModelError):
    """Custom model was asked for a Jacobian but no derivative was supplied."""


class ZeroDerivativeError(CertifierError):
    """Map is not a local diffeomorphism at a computed point."""


class UnsupportedModelError(CertifierError):
    """Operation is not defined for this model kind (wrong dimension etc.)."""


class ConvergenceError(CertifierError):
    """Iteration cap reached or a Newton system was singular."""

    def __init__(self, message: str, residual: float | None = None, iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ContinuationGapError(CertifierError):
    """Parameter continuation lost one or more orbits.

    Carries the orbits that did converge plus an explicit description of
    every lost branch, so callers can degrade gracefully without silently
    dropping periodic points.
    """

    def __init__(self, message: str, found, gaps):
        super().__init__(message)
        self.found = list(found)
        self.gaps = list(gaps)


class PreconditionError(CertifierError):
    """An operation's stated precondition does not hold for these inputs."""


class SplittingError(CertifierError):
    """No well-defined hyperbolic splitting (complex/defective/elliptic spectrum)."""


class ConeInvarianceError(CertifierError):
    """An initial cone is not strictly invariant at some sample point."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class ExtensionError(CertifierError):
    """Splitting extension failed (target isolated from every source sample)."""


class ConjugacyError(CertifierError):
    """Conjugacy construction or validation failed (non-monotone table, ...)."""


class AdaptedMetricError(CertifierError):
    """The finite-horizon metric did not certify expansion factor > 1."""

    def __init__(self, message: str, sigma: float | None = None, point=None):
        super().__init__(message)
        self.sigma = sigma
        self.point = point


class ConfigError(Exception):
    """Bad run configuration: parse error, unknown key, wrong type or range."""
