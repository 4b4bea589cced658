"""Exception types shared across the package."""


class SectorError(ValueError):
    """Charge out of range, or operands living on incompatible sectors."""


class ResourceCapError(RuntimeError):
    """A requested computation exceeds a configured size or enumeration budget."""


class HermiticityError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


class DegenerateSectorError(ValueError):
    """The size representative has zero norm on the requested sector.

    The corresponding eigenvalue is undefined (not zero).
    """


class MissingEigenvalueError(LookupError):
    """No eigenvalue source can provide a requested cumulant order."""
