import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from . import rational as rq
from .errors import (CoverError, DimensionMismatchError, MalformedInputError, NonTransversalError,
                     NotInFamilyError, PerturbationBudgetError)
from .geometry_core import Polytope, convex_hull, intersect
from .rational import Vector

logger = logging.getLogger(__name__)

Box = Tuple[Tuple[Fraction, Fraction], ...]


def _cell_key(P: Polytope) -> Tuple[int, Tuple[Vector, ...]]:
    return (P.dim, P.vertices)


@dataclass(frozen=True)
class Subdivision:
    """Cells partitioning a convex target in the sense of relative interiors.

    Cells are stored once each, ordered by (dimension, sorted vertices).
    """
    target: Polytope
    cells: Tuple[Polytope, ...]

    @classmethod
    def build(cls, target: Polytope, cells: Iterable[Polytope]) -> "Subdivision":
        unique = {c.vertices: c for c in cells}
        for c in unique.values():
            if c.ambient_dim != target.ambient_dim:
                raise DimensionMismatchError("Cell and target live in different ambient spaces")
        return cls(target, tuple(sorted(unique.values(), key=_cell_key)))

    @property
    def n(self) -> int:
        return self.target.ambient_dim

    def __len__(self) -> int:
        return len(self.cells)

    @cached_property
    def strata(self) -> Dict[int, Tuple[int, ...]]:
        out: Dict[int, List[int]] = {}
        for i, c in enumerate(self.cells):
            out.setdefault(c.dim, []).append(i)
        return {r: tuple(v) for r, v in sorted(out.items())}

    @cached_property
    def _index(self) -> Dict[Tuple[Vector, ...], int]:
        return {c.vertices: i for i, c in enumerate(self.cells)}

    def index_of(self, P: Polytope) -> int:
        try:
            return self._index[P.vertices]
        except KeyError as e:
            raise NotInFamilyError("Polytope is not a cell of the subdivision") from e

    @cached_property
    def below(self) -> Tuple[FrozenSet[int], ...]:
        """below[i]: indices of cells contained in cell i (including i)."""
        out = []
        for big in self.cells:
            out.append(frozenset(j for j, small in enumerate(self.cells)
                                 if small.dim <= big.dim and big.contains_polytope(small)))
        return tuple(out)

    def cells_within(self, P: Polytope) -> List[int]:
        return [i for i, c in enumerate(self.cells) if c.dim <= P.dim and P.contains_polytope(c)]

    def complex_set(self, members: Iterable) -> "ComplexSet":
        """Members given as cell indices or as polytopes equal to cells."""
        indices = [m if isinstance(m, int) else self.index_of(m) for m in members]
        return ComplexSet.of(self, indices)


def union_covers(region: Polytope, pieces: Sequence[Polytope]) -> bool:
    """Pieces of the region's dimension inside it, with disjoint relative interiors, fill it."""
    if region.dim == 0:
        return any(p.vertices == region.vertices for p in pieces)
    total = sum((p.relative_volume() for p in pieces if p.dim == region.dim), Fraction(0))
    return total == region.relative_volume()


# reports


@dataclass
class Violation:
    condition: str
    cells: List[int]
    point: Optional[Vector] = None

    def to_dict(self) -> dict:
        return {"condition": self.condition, "cells": self.cells,
                "point": [rq.fraction_str(c) for c in self.point] if self.point is not None else None}


@dataclass
class CheckReport:
    passed: bool
    violations: List[Violation] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "violations": [v.to_dict() for v in self.violations]}


def _uncovered_point(region: Polytope, pieces: Sequence[Polytope], seed: int = 0,
                     tries: int = 256) -> Vector:
    """A point of the region outside every piece (random rational convex combinations)."""
    candidates = [region.barycenter] + [region.face_barycenter(f) for f in region.faces]
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        weights = [Fraction(int(w)) for w in rng.integers(1, 64, size=len(region.vertices))]
        total = sum(weights)
        candidates.append(tuple(sum(w * v[i] for w, v in zip(weights, region.vertices)) / total
                                for i in range(region.ambient_dim)))
    for p in candidates:
        if not any(q.contains(p) for q in pieces):
            return p
    return region.barycenter


def _coverage_violation(D: Subdivision) -> Optional[Violation]:
    """First point of the target not in the relative interior of a cell, if any."""
    visited = set()
    stack = [D.target]
    while stack:
        region = stack.pop()
        if region.vertices in visited:
            continue
        visited.add(region.vertices)
        if region.dim == 0:
            p = region.vertices[0]
            if not any(c.relint_contains(p) for c in D.cells):
                return Violation("coverage", [], p)
            continue
        inside = [c for c in D.cells if c.dim == region.dim and region.contains_polytope(c)]
        if not union_covers(region, inside):
            return Violation("coverage", [], _uncovered_point(region, inside))
        for c in inside:
            stack.extend(c.face_polytope(f) for f in c.faces if f.dim == c.dim - 1)
    return None


def verify_subdivision(D: Subdivision) -> CheckReport:
    violations: List[Violation] = []
    for i, c in enumerate(D.cells):
        outside = next((v for v in c.vertices if not D.target.contains(v)), None)
        if outside is not None:
            violations.append(Violation("containment", [i], outside))
    # condition (2): relint(Q) meets Q' only if Q is inside Q'
    for i, j in itertools.permutations(range(len(D.cells)), 2):
        q, q2 = D.cells[i], D.cells[j]
        meet = intersect(q, q2)
        if meet is None:
            continue
        b = meet.barycenter
        if q.relint_contains(b) and not q2.contains_polytope(q):
            violations.append(Violation("relint-containment", [i, j], b))
    # condition (1): barycenter probes then exact volume accounting
    for i, c in enumerate(D.cells):
        for f in c.faces:
            b = c.face_barycenter(f)
            if not any(other.relint_contains(b) for other in D.cells):
                violations.append(Violation("coverage", [i], b))
                break
    if not violations:
        gap = _coverage_violation(D)
        if gap is not None:
            violations.append(gap)
    report = CheckReport(not violations, violations)
    logger.info(f"verify_subdivision: {len(D.cells)} cells, passed={report.passed}")
    return report


def is_refinement(fine: Subdivision, coarse: Subdivision) -> CheckReport:
    """Every coarse cell is a union of fine cells."""
    if fine.target != coarse.target:
        return CheckReport(False, [Violation("target", [])])
    violations = []
    for i, c in enumerate(coarse.cells):
        pieces = [fine.cells[j] for j in fine.cells_within(c)]
        if not union_covers(c, pieces):
            violations.append(Violation("refinement", [i], _uncovered_point(c, pieces)))
    return CheckReport(not violations, violations)


# transversality


def _lineality_at(P: Polytope, x: Vector) -> List[Vector]:
    """Maximal linear subspace of the tangent cone T_x P: directions of the face through x."""
    return P.face_directions(P.face_of_point(x))


def _transversal_witness(cells_a: Sequence[Polytope], cells_b: Sequence[Polytope],
                         target: Polytope) -> Optional[Tuple[int, int, Vector]]:
    n = target.ambient_dim
    for i, q in enumerate(cells_a):
        for j, q2 in enumerate(cells_b):
            meet = intersect(q, q2)
            if meet is None:
                continue
            for face in meet.faces:
                b = meet.face_barycenter(face)
                span = _lineality_at(q, b) + _lineality_at(q2, b)
                required = _lineality_at(target, b) if target.contains(b) else \
                    [rq.unit(n, k) for k in range(n)]
                if rq.rank(span + required) != rq.rank(span):
                    return i, j, b
    return None


def check_transversal(D: Subdivision, D2: Subdivision) -> CheckReport:
    """Lineality spaces of tangent cones sum to the lineality of the target at every common point."""
    if D.target != D2.target:
        raise MalformedInputError("Subdivisions of different targets")
    witness = _transversal_witness(D.cells, D2.cells, D.target)
    if witness is None:
        return CheckReport(True)
    i, j, b = witness
    return CheckReport(False, [Violation("transversality", [i, j], b)])


def intersect_subdivisions(D: Subdivision, D2: Subdivision) -> Subdivision:
    report = check_transversal(D, D2)
    if not report.passed:
        v = report.violations[0]
        raise NonTransversalError("Subdivisions are not transversal", v.cells,
                                  [rq.fraction_str(c) for c in v.point])
    cells = []
    for q in D.cells:
        for q2 in D2.cells:
            meet = intersect(q, q2)
            if meet is not None:
                cells.append(meet)
    out = Subdivision.build(D.target, cells)
    logger.info(f"Intersected subdivisions of {len(D)} and {len(D2)} cells into {len(out)} cells")
    return out


# reduced decompositions and complex sets


def _maximal(D: Subdivision, members: Iterable[int]) -> FrozenSet[int]:
    members = set(members)
    return frozenset(i for i in members
                     if not any(j != i and i in D.below[j] for j in members))


@dataclass(frozen=True)
class ComplexSet:
    """Union of cells of a subdivision, stored by its reduced decomposition."""
    subdivision: Subdivision = field(repr=False, compare=False)
    reduced: FrozenSet[int]

    @classmethod
    def of(cls, D: Subdivision, members: Iterable[int]) -> "ComplexSet":
        members = list(members)
        bad = [m for m in members if not isinstance(m, int) or not 0 <= m < len(D.cells)]
        if bad:
            raise NotInFamilyError("Member indices are not cells of the subdivision", members=bad)
        return cls(D, _maximal(D, members))

    @classmethod
    def empty(cls, D: Subdivision) -> "ComplexSet":
        return cls(D, frozenset())

    def is_empty(self) -> bool:
        return not self.reduced

    @property
    def downset(self) -> FrozenSet[int]:
        """All cells contained in the set."""
        out = set()
        for i in self.reduced:
            out |= self.subdivision.below[i]
        return frozenset(out)

    def union(self, other: "ComplexSet") -> "ComplexSet":
        return ComplexSet.of(self.subdivision, self.reduced | other.reduced)

    def intersection(self, other: "ComplexSet") -> "ComplexSet":
        return ComplexSet.of(self.subdivision, self.downset & other.downset)

    def polytopes(self) -> List[Polytope]:
        return [self.subdivision.cells[i] for i in sorted(self.reduced)]


def reduced_decomposition(X: ComplexSet) -> List[int]:
    return sorted(_maximal(X.subdivision, X.reduced))


# standard complexes


def face_complex(P: Polytope) -> Subdivision:
    return Subdivision.build(P, [P.face_polytope(f) for f in P.faces])


def boundary(P: Polytope) -> ComplexSet:
    """Relative boundary of P as a complex set of its face complex."""
    D = face_complex(P)
    return ComplexSet.of(D, [i for i, c in enumerate(D.cells) if c.dim < P.dim])


# grids and perturbations


@dataclass(frozen=True)
class AffinePerturbation:
    """x -> S x + shift with S a rational unit-triangular shear (scaled on the diagonal in 1-D)."""
    matrix: Tuple[Vector, ...]
    shift: Vector

    def apply(self, x: Vector) -> Vector:
        return tuple(rq.dot(row, x) + s for row, s in zip(self.matrix, self.shift))

    def inverse(self, y: Vector) -> Vector:
        return rq.solve([list(row) for row in self.matrix], rq.sub(y, self.shift))

    @classmethod
    def identity(cls, n: int) -> "AffinePerturbation":
        return cls(tuple(rq.unit(n, i) for i in range(n)), rq.zero(n))

    @classmethod
    def random(cls, n: int, h: Fraction, rng: np.random.Generator,
               denominator: int) -> "AffinePerturbation":
        def small() -> Fraction:
            return Fraction(int(rng.integers(1, denominator)), 8 * denominator)

        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                if i == j:
                    row.append(1 + (small() if n == 1 else Fraction(0)))
                elif j > i:
                    row.append(small())
                else:
                    row.append(Fraction(0))
            rows.append(tuple(row))
        shift = tuple(h * small() * 4 for _ in range(n))
        return cls(tuple(rows), shift)


def _grid_faces(lo: Sequence[int], hi: Sequence[int], simplicial: bool) -> List[FrozenSet[Tuple[int, ...]]]:
    """Faces (as lattice point sets) of the unit grid on the integer box lo..hi."""
    n = len(lo)
    faces = set()
    for corner in itertools.product(*(range(a, b) for a, b in zip(lo, hi))):
        if simplicial:
            for perm in itertools.permutations(range(n)):
                path = [tuple(corner)]
                for axis in perm:
                    nxt = list(path[-1])
                    nxt[axis] += 1
                    path.append(tuple(nxt))
                for size in range(1, n + 2):
                    faces.update(frozenset(s) for s in itertools.combinations(path, size))
        else:
            for choice in itertools.product((0, 1, 2), repeat=n):
                # 0/1: fixed at corner or corner+1; 2: the interval
                ranges = [(c + ch,) if ch < 2 else (c, c + 1) for c, ch in zip(corner, choice)]
                faces.add(frozenset(itertools.product(*ranges)))
    return sorted(faces, key=lambda s: (len(s), sorted(s)))


def grid_complex(box: Box, h: Fraction, perturbation: AffinePerturbation,
                 simplicial: bool = False) -> Subdivision:
    """Perturbed grid (or Kuhn triangulation) of spacing h covering the box with margin."""
    preimages = [perturbation.inverse(c) for c in itertools.product(*box)]
    lo = [math.floor(min(p[i] for p in preimages) / h) - 1 for i in range(len(box))]
    hi = [math.ceil(max(p[i] for p in preimages) / h) + 1 for i in range(len(box))]
    cells = []
    for face in _grid_faces(lo, hi, simplicial):
        cells.append(convex_hull([perturbation.apply(tuple(h * c for c in p)) for p in face]))
    frame_pts = [perturbation.apply(tuple(h * c for c in corner))
                 for corner in itertools.product(*zip(lo, hi))]
    return Subdivision.build(convex_hull(frame_pts), cells)


def _box_polytope(box: Box) -> Polytope:
    return convex_hull(list(itertools.product(*box)))


def grid_subdivision(target: Polytope, h, seed: int = 0, simplicial: bool = False,
                     denominator: Optional[int] = None, retries: Optional[int] = None) -> Subdivision:
    """Subdivision of the target by a randomly perturbed grid, retried until transversal to its faces."""
    h = rq.to_fraction(h)
    denominator = denominator or settings.perturbation_denominator
    retries = retries if retries is not None else settings.perturbation_retries
    rng = np.random.default_rng(seed)
    faces = face_complex(target)
    for attempt in range(retries):
        perturbation = AffinePerturbation.random(target.ambient_dim, h, rng, denominator)
        grid = grid_complex(tuple(target.bounding_box), h, perturbation, simplicial)
        useful = [g for g in grid.cells if intersect(g, target) is not None]
        if _transversal_witness(useful, faces.cells, grid.target) is not None:
            logger.warning(f"Grid perturbation {attempt} not transversal to the target; retrying")
            continue
        cells = [m for g in useful for f in faces.cells if (m := intersect(g, f)) is not None]
        return Subdivision.build(target, cells)
    raise PerturbationBudgetError("No transversal grid perturbation found", retries)


def _inside_box(P: Polytope, box: Box) -> bool:
    return all(lo < v[i] < hi for v in P.vertices for i, (lo, hi) in enumerate(box))


def _check_cover(target: Polytope, boxes: Sequence[Box]) -> None:
    """Exact test that the open boxes cover the target, by the arrangement of box bounds."""
    n = target.ambient_dim
    bbox = target.bounding_box
    axes = []
    for i in range(n):
        breaks = sorted({bbox[i][0], bbox[i][1]} | {b[i][0] for b in boxes} | {b[i][1] for b in boxes})
        breaks = [x for x in breaks if bbox[i][0] <= x <= bbox[i][1]]
        pieces = [(x, x) for x in breaks] + [(a, b) for a, b in zip(breaks, breaks[1:])]
        axes.append(pieces)
    for piece in itertools.product(*axes):
        representative = tuple((a + b) / 2 for a, b in piece)
        if any(all(lo < representative[i] < hi for i, (lo, hi) in enumerate(box)) for box in boxes):
            continue
        closure = _box_polytope(piece)
        meet = intersect(closure, target)
        if meet is None:
            continue
        b = meet.barycenter
        if closure.relint_contains(b):
            raise CoverError("Boxes do not cover the target", [rq.fraction_str(c) for c in b])


def refine_subordinate(D: Subdivision, cover: Sequence[Sequence], seed: int = 0,
                       max_halvings: int = 10) -> Subdivision:
    """A refinement of D whose cells each fit inside one open box of the cover."""
    boxes: List[Box] = [tuple((rq.to_fraction(lo), rq.to_fraction(hi)) for lo, hi in box) for box in cover]
    if any(len(b) != D.n for b in boxes):
        raise DimensionMismatchError("Cover boxes have the wrong dimension")
    _check_cover(D.target, boxes)
    if all(any(_inside_box(c, b) for b in boxes) for c in D.cells):
        return D
    h = min(hi - lo for b in boxes for lo, hi in b) / 2
    for halving in range(max_halvings):
        for attempt in range(settings.perturbation_retries):
            G = grid_subdivision(D.target, h, seed=seed + 7919 * halving + attempt)
            if check_transversal(D, G).passed:
                break
        else:
            raise PerturbationBudgetError("No grid transversal to the subdivision", settings.perturbation_retries)
        refined = intersect_subdivisions(D, G)
        if all(any(_inside_box(c, b) for b in boxes) for c in refined.cells):
            logger.info(f"Subordinate refinement with spacing {h}: {len(refined)} cells")
            return refined
        h /= 2
    raise PerturbationBudgetError("Spacing budget exhausted before cells fit the cover", max_halvings)


def common_refinement_scheme(D1: Subdivision, D2: Subdivision, seed: int = 0,
                             h=None) -> Tuple[Subdivision, Subdivision, Subdivision]:
    """(D3, D1 ∩ D3, D2 ∩ D3) with D3 a perturbed grid triangulation transversal to both."""
    if D1.target != D2.target:
        raise MalformedInputError("Subdivisions of different targets")
    target = D1.target
    if h is None:
        h = max(hi - lo for lo, hi in target.bounding_box) / 2 or Fraction(1)
    rng = np.random.default_rng(seed)
    budget = settings.perturbation_retries
    for attempt in range(budget):
        D3 = grid_subdivision(target, h, seed=int(rng.integers(0, 2 ** 31)), simplicial=True)
        if check_transversal(D1, D3).passed and check_transversal(D2, D3).passed:
            Dp = intersect_subdivisions(D1, D3)
            Dpp = intersect_subdivisions(D2, D3)
            return D3, Dp, Dpp
        logger.warning(f"Perturbed triangulation {attempt} not transversal; retrying")
    raise PerturbationBudgetError("Transversality not achieved", budget)


# coning triangulation

# apex: maximal cells are always coned, lower simplices kept
# minimal: every simplex kept
# barycentric: every cell of positive dimension coned
MODES = ("apex", "minimal", "barycentric")


def _simplex_faces(P: Polytope) -> List[Polytope]:
    return [P.face_polytope(f) for f in P.faces]


def cone_triangulate(D: Subdivision, mode: str = "apex") -> Subdivision:
    """Refine every cell into simplices by coning face triangulations from barycenters."""
    if mode not in MODES:
        raise MalformedInputError(f"Unknown triangulation mode {mode!r}", modes=list(MODES))
    memo: Dict[Tuple[Tuple[Vector, ...], bool], List[Polytope]] = {}

    def triangulate(P: Polytope, cone: bool) -> List[Polytope]:
        key = (P.vertices, cone)
        if key in memo:
            return memo[key]
        if P.dim == 0 or (not cone and mode != "barycentric" and P.is_simplex()):
            out = _simplex_faces(P)
        else:
            b = P.barycenter
            boundary_cells: Dict[Tuple[Vector, ...], Polytope] = {}
            for f in P.faces:
                if f.dim == P.dim - 1:
                    for s in triangulate(P.face_polytope(f), False):
                        boundary_cells[s.vertices] = s
            out = list(boundary_cells.values()) + [convex_hull([b])]
            out += [convex_hull(list(s.vertices) + [b]) for s in boundary_cells.values()]
        memo[key] = out
        return out

    maximal = _maximal(D, range(len(D.cells))) if mode == "apex" else frozenset()
    cells = [s for i, c in enumerate(D.cells) for s in triangulate(c, i in maximal)]
    return Subdivision.build(D.target, cells)
