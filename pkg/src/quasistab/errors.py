"""Exception hierarchy shared by all models."""


class QuasistabError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(QuasistabError, ValueError):
    """Invalid input parameters or an ill-defined operator/symbol."""


class ResolutionError(QuasistabError):
    """A discretisation parameter is too coarse for the requested accuracy."""


class NotAnEquilibriumError(QuasistabError):
    """The supplied base point does not satisfy A(u)u + f(u) = 0.

    The offending residual is kept in ``residual``.
    """

    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


class SemiSimplicityError(QuasistabError):
    """The zero eigenvalue carries a nilpotent part."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class SpectralConditionError(QuasistabError):
    """Eigenvalues outside the zero cluster do not lie in Re z < 0."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class ManifoldInputError(QuasistabError):
    """A parametrisation that was promised to map into equilibria does not."""

    def __init__(self, msg, worst_residual):
        super().__init__(msg)
        self.worst_residual = worst_residual


class ChartRadiusError(QuasistabError):
    """Newton iteration for the graph map failed inside the trust radius."""


class ChartExitError(QuasistabError):
    """A trajectory left the ball in which the graph chart is valid."""

    def __init__(self, msg, exit_time):
        super().__init__(msg)
        self.exit_time = exit_time


class BreakdownError(QuasistabError):
    """Time integration could not be continued (blow-up or divergence).

    ``last_time`` and ``last_state`` hold the last valid sample.
    """

    def __init__(self, msg, last_time, last_state):
        super().__init__(msg)
        self.last_time = last_time
        self.last_state = last_state


class InsufficientDecayDataError(QuasistabError):
    """Not enough samples above the noise floor for a decay fit."""


class PrematureLimitError(QuasistabError):
    """The stable component has not decayed enough to identify the limit."""

    def __init__(self, msg, y_norm):
        super().__init__(msg)
        self.y_norm = y_norm


class DiagnosticRefusedError(QuasistabError):
    """Weighted diagnostic requested on a trajectory that has not converged."""


class SchemaError(ConfigurationError):
    """Scenario file does not validate; ``key`` names the offending entry."""

    def __init__(self, msg, key):
        super().__init__(msg)
        self.key = key
