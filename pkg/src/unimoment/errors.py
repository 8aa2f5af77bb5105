"""Exception types raised across the package.

Every error the CLI maps to exit code 2 derives from :class:`InputError`.
"""


class InputError(ValueError):
    """Base class for bad user input (files, parameters, sizes)."""


class InvalidDistributionError(InputError):
    pass


class AlphabetMismatchError(InputError):
    pass


class OrderRangeError(InputError):
    """An order parameter outside rho in (-1, 0) u (0, inf)."""


class PreconditionError(InputError):
    """A theorem hypothesis or operation precondition does not hold."""


class SizeCapError(InputError):
    """Materializing a product space would exceed the desk-scale cap."""


class InfiniteMomentError(ArithmeticError):
    """A weight vanishes on the support so the requested moment diverges."""


class BracketError(RuntimeError):
    """No multiplier bracket exists for a convex objective."""
