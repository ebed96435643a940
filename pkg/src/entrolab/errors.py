from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .estimators import AuditReport


class EntrolabError(Exception):
    """Base class of every error raised by entrolab."""


class WrongSpaceError(EntrolabError, ValueError):
    def __init__(self, expected: Any, got: Any) -> None:
        super().__init__(f"wrong space: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class EmptyOrbitError(EntrolabError, ValueError):
    def __init__(self) -> None:
        super().__init__("empty orbit: n must be at least 1")


class OrbitOverflowError(EntrolabError, ArithmeticError):
    def __init__(self, count: int) -> None:
        super().__init__(f"orbit overflow: {count} point(s) left the double range")
        self.count = count


class ReducibleSFTError(EntrolabError, ValueError):
    def __init__(self) -> None:
        super().__init__("reducible SFT: adjacency graph is not strongly connected")


class NotACoverError(EntrolabError, ValueError):
    """Some sample point lies in no element of the cover."""

    def __init__(self, point: Any, index: int | None = None) -> None:
        where = f" (sample index {index})" if index is not None else ""
        super().__init__(f"not a cover of sample: {point!r}{where} is uncovered")
        self.point = point
        self.index = index


class UndecidableRefinementError(EntrolabError, ValueError):
    def __init__(self) -> None:
        super().__init__(
            "undecidable refinement: elements are not symbolic and the sample is empty"
        )


class DegenerateCompactError(EntrolabError, ValueError):
    def __init__(self, lower: Any, upper: Any) -> None:
        super().__init__(f"degenerate compact: lower={lower} upper={upper}")


class PartitionError(EntrolabError, ValueError):
    def __init__(self, point: Any, cells: int) -> None:
        if cells == 0:
            message = f"partition does not cover support: atom {point!r} is in no cell"
        else:
            message = f"not a partition: atom {point!r} is in {cells} cells"
        super().__init__(message)
        self.point = point
        self.cells = cells


class PartitionTooCoarseError(EntrolabError, ValueError):
    def __init__(self, diameter: float, eps: float) -> None:
        super().__init__(
            f"partition too coarse for ε: cell diameter {diameter:.6g} >= {eps:.6g}"
        )
        self.diameter = diameter
        self.eps = eps


class SeriesTooShortError(EntrolabError, ValueError):
    def __init__(self, size: int, minimum: int) -> None:
        super().__init__(f"series too short: {size} entries, need at least {minimum}")


class NonAdmissibleCoverError(EntrolabError, ValueError):
    def __init__(self, index: int) -> None:
        super().__init__(f"cover #{index} of the family is not admissible")
        self.index = index


class ConfigError(EntrolabError, ValueError):
    pass


class InvariantViolation(EntrolabError, AssertionError):
    pass


class AuditFailure(EntrolabError):
    def __init__(self, message: str, report: AuditReport) -> None:
        super().__init__(message)
        self.report = report


class NoEligibleSeriesError(EntrolabError, ValueError):
    """Every series of a report was excluded, or none was produced."""

    def __init__(self, estimator: str, excluded: int) -> None:
        super().__init__(f"{estimator}: no eligible series ({excluded} excluded)")
        self.estimator = estimator
        self.excluded = excluded
