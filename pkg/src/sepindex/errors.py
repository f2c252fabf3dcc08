"""Exception and warning types shared across the package."""


class SepIndexError(Exception):
    """Base class for package-specific failures."""


class InputError(SepIndexError):
    """Malformed input data or invalid configuration."""


class MemoryBudgetError(SepIndexError):
    """An exact computation would allocate more than the configured budget."""


class StaleCacheError(SepIndexError):
    """A cached artifact does not match the current config hash or format version."""


class ConstantColumnWarning(UserWarning):
    """A feature column had zero spread and was mapped to all zeros."""


class DegenerateInputWarning(UserWarning):
    """An indicator hit a degenerate window (zero range, zero volume, zero price)."""
