"""Exception types shared across the package."""


class AroError(Exception):
    """Base class for all package errors."""


class SchemaError(AroError, ValueError):
    """An instance document is malformed; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ValidationError(AroError, ValueError):
    """A well-formed instance violates a domain invariant; ``rule`` names it."""

    def __init__(self, rule, message):
        self.rule = rule
        super().__init__(f"{rule}: {message}")


class LookupFailure(AroError, KeyError):
    pass


class ConstructionError(AroError, ValueError):
    pass


class ResourceLimitError(AroError, RuntimeError):
    pass


class SolverStateError(AroError, RuntimeError):
    pass


class UnsupportedNormError(AroError, ValueError):
    pass


class InfeasibleError(AroError, RuntimeError):
    pass


class ConsistencyError(AroError, AssertionError):
    """A theorem or duality identity failed beyond tolerance."""
