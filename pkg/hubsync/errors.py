from typing import List

from pydantic import BaseModel


class Violation(BaseModel):
    """A single broken invariant of a grid description."""
    kind: str
    field: str
    index: int | None = None
    message: str

    def __str__(self):
        return self.message


class HubSyncError(Exception):
    """Base class of every domain error. The CLI maps it to exit code 1."""


class UsageError(HubSyncError):
    """Bad command line. The CLI maps it to exit code 2."""


class ConfigError(HubSyncError):
    pass


class GridValidationError(HubSyncError):
    def __init__(self, violations: List[Violation]):
        self.violations = list(violations)
        details = "; ".join(str(v) for v in self.violations)
        super().__init__(f"Invalid grid specification ({len(self.violations)} violation(s)): {details}")


class IndexOutOfRange(HubSyncError):
    pass


class DimensionMismatch(HubSyncError):
    pass


class ResidualExceeded(HubSyncError):
    pass


class NoConvergence(HubSyncError):
    pass


class SingularJacobian(NoConvergence):
    pass


class StepUnderflow(HubSyncError):
    pass


class NonFiniteState(HubSyncError):
    pass


class SumIdentityViolated(HubSyncError):
    pass


class InconsistentWithCriterion(HubSyncError):
    pass


class NonPositiveEnergy(HubSyncError):
    pass


class DegenerateSums(HubSyncError):
    pass


class SameOutcomeAtEndpoints(HubSyncError):
    pass


class InsufficientCyclePoints(HubSyncError):
    pass


class NotOnCyclicSide(HubSyncError):
    pass


class CriterionViolated(HubSyncError):
    pass
