"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, InfeasibleError -> 3,
ValidationError -> 4. Plain ValueError is reserved for bad arguments to pure
functions.
"""


class PacksimError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PacksimError):
    """Malformed or inconsistent configuration / input file."""


class InfeasibleError(PacksimError):
    """No plan satisfies the stated constraints (e.g. memory budget)."""


class ValidationError(PacksimError):
    """An internal invariant was violated (broken plan or program)."""
