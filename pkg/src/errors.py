"""
Error types shared by the planning modules.

Each class maps to one failure category; the CLI turns them into exit codes.
"""

from typing import Optional


class PlanningError(Exception):
    """Base class of every error raised by the planning modules."""


class InvalidQueryError(PlanningError, ValueError):
    """A workspace query violated its precondition (out of bounds, in collision)."""


class InvalidArgumentError(PlanningError, ValueError):
    """An argument was malformed or inconsistent with the others."""


class NumericalDomainError(PlanningError, ArithmeticError):
    """A matrix that must be positive definite was not."""


class InternalConsistencyError(PlanningError, RuntimeError):
    """A tree or plan structure broke one of its own invariants."""


class OracleMismatchError(InternalConsistencyError):
    """Replaying a plan produced a different cost than the planner reported."""


class UnresolvableCandidateError(PlanningError, RuntimeError):
    """Neighbors imposed conflicting node chains on a robot during team-path resolution."""

    def __init__(self, robot: int, message: str):
        super().__init__(message)
        self.robot = robot


class ScenarioError(PlanningError, ValueError):
    """A scenario file could not be parsed or validated."""

    def __init__(self, message: str, details: Optional[list[str]] = None):
        super().__init__(message)
        self.details = details or []

    def __str__(self) -> str:
        if not self.details:
            return self.args[0]
        return self.args[0] + "\n" + "\n".join(f"  - {d}" for d in self.details)
