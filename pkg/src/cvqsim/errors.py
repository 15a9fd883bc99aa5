"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """A configuration value violates an invariant (bad truncation, mode count, ...)."""


class ContractError(ValueError):
    """Arguments violate an operation's contract (shape mismatch, wrong gate arity)."""


class ZeroProbabilityError(ArithmeticError):
    """A measurement conditioned on an outcome whose probability is numerically zero."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class GridDomainError(ValueError):
    """The spatial grid does not contain the state's support."""


class TrainingFailure(RuntimeError):
    """Every optimization step was rejected (zero-probability branches throughout)."""


class HermiteRangeWarning(UserWarning):
    """Grid points lie beyond the numerically reliable range of the Hermite recurrence."""


class LeakageWarning(UserWarning):
    """Amplitude mass at the Fock truncation boundary exceeds the trust threshold."""
