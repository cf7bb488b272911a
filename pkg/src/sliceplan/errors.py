"""Exception types shared across the planner."""


class SchemaViolation(ValueError):
    """A profile, model, or report document does not match its schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class EmptySamples(ValueError):
    """Too few profiling samples to fit anything."""


class DegenerateSamples(ValueError):
    """Samples cannot identify a slope (all workload sizes identical)."""


class MixedOpClass(ValueError):
    """Samples from different operation classes were mixed into one fit."""


class ShapeMismatch(ValueError):
    """Matrix operands disagree on a shared dimension."""


class TokenCountOutOfRange(ValueError):
    """A diverted-token count lies outside [0, T]."""


class NonIncreasingStep(ValueError):
    """A memory-assignment step must strictly raise the resident fraction."""
