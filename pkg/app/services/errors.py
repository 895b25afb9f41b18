from typing import Any, Optional, Sequence


class ValuationLabError(Exception):
    """Base class for every domain error raised by the services."""

    def __init__(self, message: str, **witness: Any):
        super().__init__(message)
        self.message = message
        self.witness = witness

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message,
                "witness": {k: _plain(v) for k, v in self.witness.items()}}


def _plain(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return str(value)


class MalformedInputError(ValuationLabError):
    pass


class DimensionMismatchError(ValuationLabError):
    pass


class NotInPolytopeError(ValuationLabError):
    pass


class NegativeScaleError(ValuationLabError):
    pass


class FaceNotFoundError(ValuationLabError):
    pass


class RangeError(ValuationLabError):
    pass


class NonTransversalError(ValuationLabError):
    def __init__(self, message: str, cells: Sequence[int], point: Sequence[Any]):
        super().__init__(message, cells=list(cells), point=list(point))
        self.cells = tuple(cells)
        self.point = tuple(point)


class PerturbationBudgetError(ValuationLabError):
    def __init__(self, message: str, budget: int):
        super().__init__(message, budget=budget)
        self.budget = budget


class CoverError(ValuationLabError):
    def __init__(self, message: str, point: Optional[Sequence[Any]] = None):
        super().__init__(message, point=list(point) if point is not None else None)
        self.point = tuple(point) if point is not None else None


class AssumptionViolationError(ValuationLabError):
    def __init__(self, message: str, cells: Sequence[int]):
        super().__init__(message, cells=list(cells))
        self.cells = tuple(cells)


class NotInFamilyError(ValuationLabError):
    pass


class OverlapIncompatibilityError(ValuationLabError):
    def __init__(self, message: str, cell: int, values: Sequence[Any]):
        super().__init__(message, cell=cell, values=list(values))
        self.cell = cell
        self.values = tuple(values)


class DegreeMismatchError(ValuationLabError):
    pass


class SupportError(ValuationLabError):
    pass


class PolynomialityError(ValuationLabError):
    def __init__(self, message: str, residual: float):
        super().__init__(message, residual=residual)
        self.residual = residual


class RepresentationError(ValuationLabError):
    pass
