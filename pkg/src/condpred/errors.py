class ConfigError(ValueError):
    """Invalid model hyperparameters, engine settings or experiment config.

    ``violations`` holds every problem found, not just the first.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class DomainError(ValueError):
    """A density ratio is undefined because its denominator vanished."""


class DegeneratePosteriorError(DomainError):
    """Every grid node has zero posterior mass."""


class SupportMismatchError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


class FormulaInconsistencyError(ArithmeticError):
    """A transcribed closed form produced an invalid (non-positive) variance."""


class ExperimentError(RuntimeError):
    pass
