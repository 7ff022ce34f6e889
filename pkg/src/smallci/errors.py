"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class PartitionError(ValueError):
    """A list of blocks does not form an ordered partition of the sample space."""


class InvariantError(RuntimeError):
    """An internal consistency check failed on a computed result."""


class AccuracyError(RuntimeError):
    """A numerical search could not certify its result (e.g. minimizer stuck on a ceiling)."""
