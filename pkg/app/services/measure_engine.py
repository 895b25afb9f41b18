"""Finitely additive measures on unions of cells, extended from per-cell generators."""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from threading import RLock
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Union

import numpy as np
import sympy
from cachetools import LRUCache

from ..config import settings
from . import rational as rq
from .complexes import (Box, CheckReport, ComplexSet, Subdivision, Violation, face_complex,
                        refine_subordinate, union_covers)
from .errors import AssumptionViolationError, CoverError, NotInFamilyError, OverlapIncompatibilityError
from .geometry_core import Polytope, intersect

logger = logging.getLogger(__name__)

RATIONAL = "rational"
EXACT_COMPLEX = "exact-complex"
FLOAT = "float"


def _value_mode(value: Any) -> str:
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return RATIONAL
    if isinstance(value, sympy.Basic) and value.is_number:
        return RATIONAL if value.is_Rational else EXACT_COMPLEX
    return FLOAT


def _coerce(value: Any, mode: str) -> Any:
    if mode == RATIONAL:
        if isinstance(value, sympy.Basic):
            return Fraction(int(value.p), int(value.q))
        return Fraction(value)
    if mode == EXACT_COMPLEX:
        return sympy.sympify(value)
    return complex(value)


@dataclass
class GeneratorTable:
    """m: cell index -> value, total on the cells of one subdivision."""
    values: Dict[int, Any]

    @property
    def mode(self) -> str:
        modes = {_value_mode(v) for v in self.values.values()}
        if FLOAT in modes:
            return FLOAT
        return EXACT_COMPLEX if EXACT_COMPLEX in modes else RATIONAL

    @classmethod
    def constant(cls, D: Subdivision, value: Any = 1) -> "GeneratorTable":
        return cls({i: value for i in range(len(D.cells))})

    @classmethod
    def from_function(cls, D: Subdivision, f: Callable[[Polytope], Any]) -> "GeneratorTable":
        return cls({i: f(c) for i, c in enumerate(D.cells)})


def check_assumptions(D: Subdivision) -> CheckReport:
    """Pairwise certification that cell intersections are unions of cells,
    equal-dimension cells meet in lower dimension, and no cell is a union of smaller ones."""
    violations: List[Violation] = []
    for i, j in itertools.combinations(range(len(D.cells)), 2):
        a, b = D.cells[i], D.cells[j]
        meet = intersect(a, b)
        if meet is None:
            continue
        pieces = [D.cells[k] for k in D.cells_within(meet)]
        if not union_covers(meet, pieces):
            violations.append(Violation("intersection-union", [i, j], meet.barycenter))
        if a.dim == b.dim and meet.dim == a.dim:
            violations.append(Violation("equal-dimension-overlap", [i, j], meet.barycenter))
    for i, c in enumerate(D.cells):
        if c.dim == 0:
            continue
        smaller = [D.cells[k] for k in D.below[i] if k != i and D.cells[k].dim == c.dim]
        if smaller and union_covers(c, smaller):
            violations.append(Violation("reduced-uniqueness", [i], c.barycenter))
    return CheckReport(not violations, violations)


class Measure:
    """The unique finitely additive extension of a generator table to unions of cells.

    Values are memoized on reduced decompositions; the cache is shared by threads.
    """

    def __init__(self, subdivision: Subdivision, table: GeneratorTable, order: Optional[Sequence[int]] = None):
        missing = [i for i in range(len(subdivision.cells)) if i not in table.values]
        if missing:
            raise NotInFamilyError("Generator table is not total on the cells", missing=missing)
        self.subdivision = subdivision
        self.mode = table.mode
        self.table = {i: _coerce(v, self.mode) for i, v in table.values.items()}
        # peel priority: members earlier in `order` are split off first
        rank = {c: k for k, c in enumerate(order)} if order is not None else {}
        self._priority = lambda i: (rank.get(i, len(rank)), i)
        self._cache = LRUCache(maxsize=1 << 16)
        self._lock = RLock()

    @property
    def zero(self):
        return {RATIONAL: Fraction(0), EXACT_COMPLEX: sympy.Integer(0), FLOAT: 0j}[self.mode]

    def _value(self, reduced: FrozenSet[int]):
        with self._lock:
            if reduced in self._cache:
                return self._cache[reduced]
        if not reduced:
            value = self.zero
        elif len(reduced) == 1:
            value = self.table[next(iter(reduced))]
        else:
            first = min(reduced, key=self._priority)
            head = ComplexSet.of(self.subdivision, [first])
            rest = ComplexSet.of(self.subdivision, reduced - {first})
            overlap = head.intersection(rest)
            value = self._value(head.reduced) + self._value(rest.reduced) - self._value(overlap.reduced)
            if self.mode == EXACT_COMPLEX:
                value = sympy.expand(value)
        with self._lock:
            self._cache[reduced] = value
        return value

    def evaluate(self, X: ComplexSet):
        if X.subdivision is not self.subdivision and X.subdivision != self.subdivision:
            raise NotInFamilyError("Set is not a union of cells of this subdivision")
        return self._value(X.reduced)

    def cells_value(self, members: Sequence[int]):
        return self.evaluate(ComplexSet.of(self.subdivision, members))


def extend(D: Subdivision, table: GeneratorTable, check: bool = True,
           order: Optional[Sequence[int]] = None) -> Measure:
    if check:
        report = check_assumptions(D)
        if not report.passed:
            v = report.violations[0]
            raise AssumptionViolationError(f"Subdivision violates the {v.condition} assumption", v.cells)
    mu = Measure(D, table, order)
    logger.info(f"Extended {len(D.cells)} generators ({mu.mode} mode)")
    return mu


def evaluate(mu: Measure, X: ComplexSet):
    return mu.evaluate(X)


def atom_values(mu: Measure) -> Dict[int, Any]:
    """Value of each relative-interior atom relint(A_l), by Moebius inversion over containment."""
    D = mu.subdivision
    atoms: Dict[int, Any] = {}
    for i in sorted(range(len(D.cells)), key=lambda k: D.cells[k].dim):
        atoms[i] = mu.table[i] - sum((atoms[k] for k in D.below[i] if k != i), mu.zero)
    return atoms


def atom_evaluate(mu: Measure, X: ComplexSet):
    """Independent oracle: the sum of atoms of every cell inside X."""
    atoms = atom_values(mu)
    return sum((atoms[i] for i in X.downset), mu.zero)


def euler_characteristic(X: ComplexSet) -> int:
    mu = extend(X.subdivision, GeneratorTable.constant(X.subdivision, 1), check=False)
    return int(mu.evaluate(X))


# gluing local evaluators


def _plain_box(box: Sequence) -> Box:
    return tuple((rq.to_fraction(lo), rq.to_fraction(hi)) for lo, hi in box)


@dataclass
class LocalValuationCover:
    """Open boxes with one evaluator (Polytope -> value) each."""
    boxes: List[Box]
    evaluators: List[Callable[[Polytope], Any]]
    tol: float = field(default_factory=lambda: settings.tol)

    def __post_init__(self):
        self.boxes = [_plain_box(b) for b in self.boxes]
        if len(self.boxes) != len(self.evaluators):
            raise CoverError("Every box needs exactly one evaluator")

    def containing(self, P: Polytope) -> List[int]:
        return [a for a, box in enumerate(self.boxes)
                if all(lo < v[i] < hi for v in P.vertices for i, (lo, hi) in enumerate(box))]


def _agree(a, b, tol: float) -> bool:
    if _value_mode(a) != FLOAT and _value_mode(b) != FLOAT:
        return sympy.simplify(sympy.sympify(a) - sympy.sympify(b)) == 0
    return bool(np.isclose(complex(a), complex(b), rtol=tol, atol=tol))


def glue(cover: LocalValuationCover, X: Union[Polytope, ComplexSet], seed: int = 0,
         check_overlaps: bool = True):
    """Evaluate X from local evaluators through a subordinate refinement."""
    if isinstance(X, Polytope):
        coarse = face_complex(X)
        coarse_members = [coarse.index_of(X)]
    else:
        coarse = X.subdivision
        coarse_members = sorted(X.reduced)
    fine = refine_subordinate(coarse, cover.boxes, seed=seed)
    values = {}
    for i, cell in enumerate(fine.cells):
        boxes = cover.containing(cell)
        if not boxes:
            raise CoverError("Refined cell lies in no box", [rq.fraction_str(c) for c in cell.barycenter])
        first = cover.evaluators[boxes[0]](cell)
        if check_overlaps:
            for other in boxes[1:]:
                second = cover.evaluators[other](cell)
                if not _agree(first, second, cover.tol):
                    raise OverlapIncompatibilityError("Local evaluators disagree on an overlap cell",
                                                      i, [str(first), str(second)])
        values[i] = first
    mu = extend(fine, GeneratorTable(values), check=False)
    members = [j for j, cell in enumerate(fine.cells)
               if any(coarse.cells[m].contains_polytope(cell) for m in coarse_members)]
    result = mu.evaluate(ComplexSet.of(fine, members))
    logger.info(f"Glued over {len(fine.cells)} cells from {len(cover.boxes)} boxes")
    return result
