"""Exception hierarchy shared by the fitting, projection and testing code."""


class PscoreSpecError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InvalidInput(PscoreSpecError, ValueError):
    exit_code = 3


class NoConvergence(PscoreSpecError, RuntimeError):
    exit_code = 4


class PerfectSeparation(NoConvergence, InvalidInput):
    """The binary outcome is (quasi-)completely separated by the covariates.

    The likelihood has no finite maximiser. A constant treatment vector is the
    extreme case, so this is both an input problem and a fitting failure.
    """

    exit_code = 4


class SingularDesign(PscoreSpecError, ArithmeticError):
    exit_code = 5


class DegenerateVariance(PscoreSpecError, ArithmeticError):
    exit_code = 6


class DegenerateDraw(PscoreSpecError, RuntimeError):
    """A simulated sample produced a constant treatment vector."""

    exit_code = 7
