"""Exception types shared across the package."""


class IntwalkError(Exception):
    """Base class for all library errors."""


class SpecError(IntwalkError):
    """An increment distribution fails one of its structural requirements."""


class NonCentered(SpecError):
    """The increment law does not have mean exactly zero."""


class MassDeficit(SpecError):
    """The probability masses do not sum to one."""


class NegativeProbability(SpecError):
    """A probability mass is negative."""


class NotLattice(SpecError):
    """A lattice-only operation was asked of a continuous law."""


class VarianceUndefined(SpecError):
    """The variance does not exist (tail exponent below 2)."""


class BudgetError(IntwalkError):
    """A computation exceeded its configured resource budget."""


class StateBudgetExceeded(BudgetError):
    """Dynamic-programming state count exceeded the budget."""


class TooLarge(BudgetError):
    """Exhaustive enumeration would visit too many paths."""


class NotInBridgeSet(IntwalkError):
    """P(S_n = 0) = 0, so the bridge probability is undefined at this n."""


class DegenerateGrid(IntwalkError):
    """A fit was requested on a grid with too few or non-increasing points."""


class NoReferenceLaw(IntwalkError):
    """No closed-form limit law is available for this tail index."""


class ExponentMismatch(IntwalkError):
    """The fitted decay exponent excludes the theoretical one."""


class AssertionFailed(IntwalkError):
    """A check enabled by the run configuration did not hold."""


class IntwalkConfigError(IntwalkError):
    """Malformed run configuration (unknown key, bad value, missing field)."""
