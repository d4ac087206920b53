"""Exception hierarchy shared by every module of the package."""


class LMAggError(Exception):
    """Base class for all package errors."""


class NonRealCoefficient(LMAggError):
    """Polynomial expansion left an imaginary residue above tolerance."""


class DegeneratePoles(LMAggError):
    """Two root groups sampled numerically coincident roots."""


class DiracDensityQuery(LMAggError):
    """Density requested for a Dirac (beta = 1) angular law."""


class OutOfSupport(LMAggError):
    """Point lies outside the support of a law."""


class InvalidLaw(LMAggError):
    """Law parameters violate their invariants."""


class InvalidMixture(LMAggError):
    """Mixed angular law with zero total mass or negative weights."""


class QuadratureNonConvergent(LMAggError):
    """Adaptive quadrature exhausted its budget without meeting tolerance."""


class Inconclusive(LMAggError):
    """Numeric existence verdict disagrees with the closed-form verdict."""

    def __init__(self, message, numeric=None, closed_form=None):
        super().__init__(message)
        self.numeric = numeric
        self.closed_form = closed_form


class SeriesTooShort(LMAggError):
    """Series too short for a periodogram estimate."""


class StepTooCoarse(LMAggError):
    """OU sampling step too coarse relative to the fastest root."""


class NotPSD(LMAggError):
    """Interaction correlation is not positive semidefinite at the panel size."""


class PreconditionViolated(LMAggError):
    """Parameters fall outside the range where the asymptotic expansion holds."""


class ConfigInvalid(LMAggError):
    """Experiment configuration violates the schema."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.message = message
        self.path = path


class TaskFailed(LMAggError):
    """A CLI task failed; wraps the underlying module error."""


class ExistenceRefused(LMAggError):
    """Model fails the closed-form existence test and no force flag was given."""
