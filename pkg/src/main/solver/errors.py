class NcadmmError(Exception):
    """Base class for every error raised by the solver package."""


class InvalidProblemError(NcadmmError):
    """Problem data breaks one or more invariants; ``violations`` lists them."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__('invalid problem: ' + '; '.join(self.violations))


class DimensionError(NcadmmError, ValueError):
    pass


class SingularKktError(NcadmmError):
    pass


class InfeasibleError(NcadmmError):
    pass


class CombinationCapError(NcadmmError):
    pass


class BoundViolationError(NcadmmError, AssertionError):
    """A heuristic objective undercuts a certified global optimum."""


class UnsupportedSetError(NcadmmError):
    pass
