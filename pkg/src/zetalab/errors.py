"""Exception types shared across the laboratory."""


class ZetalabError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ZetalabError, ValueError):
    """An argument violates an operation's contract."""


class DomainError(ZetalabError, ValueError):
    """A numeric input lies outside the mathematical domain."""


class ValidationError(ZetalabError, ValueError):
    """Structured input (config, sequence prefix) failed validation.

    `violations` carries every problem found, not just the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SingularFactorError(ZetalabError, ArithmeticError):
    """An Euler factor or denominator is too close to zero to evaluate."""


class ModelIntegrityError(ZetalabError, RuntimeError):
    """Generated model data violates a structural invariant."""
