# all of this code works over the rationals
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import List, Optional, Sequence, Tuple, Union

from .errors import DimensionMismatchError, MalformedInputError

Vector = Tuple[Fraction, ...]
Matrix = List[List[Fraction]]
Scalar = Union[int, float, str, Fraction]


def to_fraction(value: Scalar) -> Fraction:
    """Parse ints, "p/q" strings, Fractions and floats (by their decimal repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MalformedInputError(f"Not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise MalformedInputError(f"Not a rational: {value!r}") from e
    raise MalformedInputError(f"Not a rational: {value!r}")


def to_vector(values: Sequence[Scalar]) -> Vector:
    return tuple(to_fraction(v) for v in values)


def fraction_str(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def check_same_length(v1: Sequence, v2: Sequence) -> None:
    if len(v1) != len(v2):
        raise DimensionMismatchError(f"Vectors of different dimensions: {len(v1)} != {len(v2)}")


def add(v1: Vector, v2: Vector) -> Vector:
    check_same_length(v1, v2)
    return tuple(a + b for a, b in zip(v1, v2))


def sub(v1: Vector, v2: Vector) -> Vector:
    check_same_length(v1, v2)
    return tuple(a - b for a, b in zip(v1, v2))


def dot(v1: Sequence[Fraction], v2: Sequence[Fraction]) -> Fraction:
    check_same_length(v1, v2)
    return sum((a * b for a, b in zip(v1, v2)), Fraction(0))


def scale(v: Vector, s: Fraction) -> Vector:
    return tuple(x * s for x in v)


def neg(v: Vector) -> Vector:
    return tuple(-x for x in v)


def zero(n: int) -> Vector:
    return tuple(Fraction(0) for _ in range(n))


def unit(n: int, i: int) -> Vector:
    return tuple(Fraction(1 if j == i else 0) for j in range(n))


def centroid(points: Sequence[Vector]) -> Vector:
    n = len(points[0])
    count = Fraction(len(points))
    return tuple(sum((p[i] for p in points), Fraction(0)) / count for i in range(n))


def rref(rows: Sequence[Sequence[Fraction]], ncols: Optional[int] = None) -> Tuple[Matrix, List[int]]:
    """Reduced row echelon form and the pivot columns."""
    m = [list(r) for r in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots: List[int] = []
    row = 0
    for col in range(ncols):
        pivot = next((r for r in range(row, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        lead = m[row][col]
        m[row] = [x / lead for x in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    return m[:row], pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[Vector]:
    """Basis of {v : row . v = 0 for every row}."""
    if not rows:
        return [unit(ncols, i) for i in range(ncols)]
    reduced, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -reduced[r][f]
        basis.append(tuple(v))
    return basis


def row_basis(rows: Sequence[Sequence[Fraction]]) -> List[Vector]:
    if not rows:
        return []
    reduced, _ = rref(rows)
    return [tuple(r) for r in reduced]


def det(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    m = [list(r) for r in matrix]
    n = len(m)
    result = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            result = -result
        lead = m[col][col]
        result *= lead
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] / lead
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return result


def solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[Vector]:
    """Unique solution of a square system, None when singular."""
    n = len(matrix)
    augmented = [list(row) + [b] for row, b in zip(matrix, rhs)]
    reduced, pivots = rref(augmented, n)
    if len(pivots) < n:
        return None
    return tuple(reduced[i][n] for i in range(n))


def transpose(rows: Sequence[Sequence[Fraction]]) -> Matrix:
    return [list(col) for col in zip(*rows)]


def in_span(basis: Sequence[Vector], v: Vector) -> bool:
    if all(x == 0 for x in v):
        return True
    return rank(list(basis) + [v]) == rank(basis)


def affine_rank(points: Sequence[Vector]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    return rank([sub(p, base) for p in points[1:]])


def primitive(v: Sequence[Fraction]) -> Vector:
    """Positive multiple of v with coprime integer entries (canonical direction)."""
    if all(x == 0 for x in v):
        return tuple(Fraction(0) for _ in v)
    lcm = reduce(lambda a, b: a * b // gcd(a, b), (x.denominator for x in v), 1)
    ints = [int(x * lcm) for x in v]
    g = reduce(gcd, (abs(i) for i in ints if i != 0))
    return tuple(Fraction(i // g) for i in ints)


def project_onto(v: Vector, basis: Sequence[Vector]) -> Vector:
    """Orthogonal projection of v onto span(basis), exact."""
    if not basis:
        return zero(len(v))
    gram = [[dot(a, b) for b in basis] for a in basis]
    coeffs = solve(gram, [dot(a, v) for a in basis])
    if coeffs is None:
        return project_onto(v, row_basis(basis))
    result = zero(len(v))
    for c, b in zip(coeffs, basis):
        result = add(result, scale(b, c))
    return result


def orthogonal_complement(basis: Sequence[Vector], n: int) -> List[Vector]:
    return nullspace(list(basis), n)
