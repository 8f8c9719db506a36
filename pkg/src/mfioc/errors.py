"""Typed error hierarchy with a stable exit-code taxonomy.

Exit codes: 0 success, 2 usage, 3 insufficient excitation, 4 numerical,
5 acceptance miss, 6 generation failure.
"""


class MfiocError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class UsageError(MfiocError):
    """Invalid arguments, malformed files, or inconsistent dimensions."""

    exit_code = 2


class InsufficientExcitationError(MfiocError):
    """Data too poor to identify the feedback law (rank deficiency)."""

    exit_code = 3


class NumericalBreakdownError(MfiocError):
    """A dense linear-algebra kernel failed or produced non-finite values."""

    exit_code = 4


class InfeasibleModelError(MfiocError):
    """System/cost pair violates the solvability assumptions."""

    exit_code = 4


class RecoveryFailureError(MfiocError):
    """Primal recovery produced a model that cannot be reconstructed."""

    exit_code = 4


class AcceptanceMissError(MfiocError):
    """A reproduction or verification threshold was not met."""

    exit_code = 5


class GenerationFailureError(MfiocError):
    """Random system generation exhausted its resample budget."""

    exit_code = 6
