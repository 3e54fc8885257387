"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, ResourceError -> 3,
NoCrossingError / UnfittableError -> 4.  Everything else is a bug.
"""


class Tc3dError(Exception):
    """Base class for package errors."""


class DegenerateLatticeError(Tc3dError):
    """Periodic axis shorter than 2, or an otherwise unusable lattice."""


class ResourceError(Tc3dError):
    """A configured memory/state budget would be exceeded."""

    def __init__(self, message, required_bits=None):
        super().__init__(message)
        self.required_bits = required_bits


class RankError(Tc3dError):
    """Chain rank outside the valid range for an operation."""


class DimensionMismatchError(Tc3dError):
    """Operands built on incompatible complexes or with wrong shapes."""


class UnsupportedBoundaryError(Tc3dError):
    """Operation requires a fully periodic complex."""


class NoGaugeSymmetryError(Tc3dError):
    """Gauge generators requested for a model without local symmetry."""


class InfeasibleSyndromeError(Tc3dError):
    """Syndrome not in the image of the boundary map."""


class DegenerateStatisticsError(Tc3dError):
    """Fewer samples than an estimator needs."""


class UndefinedCumulantError(Tc3dError):
    """Binder cumulant of an identically-zero magnetization."""


class UnfittableError(Tc3dError):
    """Not enough usable points for a decay-law fit."""

    def __init__(self, message, excluded=()):
        super().__init__(message)
        self.excluded = list(excluded)


class NoCrossingError(Tc3dError):
    """Observable curves do not cross inside the scanned range."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class ConfigError(Tc3dError):
    """Malformed configuration file or CLI arguments."""
