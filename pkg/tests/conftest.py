from fractions import Fraction

import pytest
from hypothesis import strategies as st

from app.services.complexes import Subdivision
from app.services.geometry_core import convex_hull, cube, simplex
from app.services.quadrature import QuadratureRule


@pytest.fixture
def square():
    return cube(2)


@pytest.fixture
def triangle():
    return simplex(2)


@pytest.fixture
def segment():
    return cube(1)


@pytest.fixture
def rule():
    return QuadratureRule(order=16)


def faces_of(*polytopes):
    return [P.face_polytope(f) for P in polytopes for f in P.faces]


@pytest.fixture
def split_square(square):
    """Unit square cut along the (0,0)-(1,1) diagonal, with every face as a cell."""
    lower = convex_hull([(0, 0), (1, 0), (1, 1)])
    upper = convex_hull([(0, 0), (1, 1), (0, 1)])
    return Subdivision.build(square, faces_of(lower, upper))


@pytest.fixture
def anti_split_square(square):
    """Unit square cut along the (1,0)-(0,1) diagonal."""
    left = convex_hull([(0, 0), (1, 0), (0, 1)])
    right = convex_hull([(1, 0), (1, 1), (0, 1)])
    return Subdivision.build(square, faces_of(left, right))


@pytest.fixture
def split_segment(segment):
    """[0,1] cut at 1/2: two segments and three vertices."""
    half = Fraction(1, 2)
    return Subdivision.build(segment, faces_of(convex_hull([(0,), (half,)]), convex_hull([(half,), (1,)])))


def rational_points(n: int, min_size: int = 1, max_size: int = 9, denominator: int = 8):
    coordinate = st.integers(-denominator, denominator).map(lambda k: Fraction(k, denominator))
    return st.lists(st.tuples(*[coordinate] * n), min_size=min_size, max_size=max_size)
