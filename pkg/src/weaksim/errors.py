class DomainError(ValueError):
    """An arithmetic precondition failed (e.g. inverting a non-unit)."""


class OracleCapExceeded(RuntimeError):
    """The requested statevector simulation exceeds the qubit cap."""


class CircuitShapeError(ValueError):
    """A gate list does not belong to the family a sampler accepts."""


class PreconditionError(ValueError):
    """Sampler input violates its contract (e.g. predicate with two marked items)."""


class DegenerateTestError(ValueError):
    """A goodness-of-fit test has fewer than two bins after pooling."""
