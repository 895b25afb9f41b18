from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from app.services import rational as rq
from app.services.errors import DimensionMismatchError, MalformedInputError


def test_to_fraction_accepts_the_file_formats():
    assert rq.to_fraction("3/4") == Fraction(3, 4)
    assert rq.to_fraction(" -2 ") == Fraction(-2)
    assert rq.to_fraction(5) == Fraction(5)
    assert rq.to_fraction(0.1) == Fraction(1, 10)


@pytest.mark.parametrize("bad", ["1/0", "abc", True, None, [1]])
def test_to_fraction_rejects_garbage(bad):
    with pytest.raises(MalformedInputError):
        rq.to_fraction(bad)


def test_fraction_str():
    assert rq.fraction_str(Fraction(4, 2)) == "2"
    assert rq.fraction_str(Fraction(-1, 3)) == "-1/3"


def test_vector_ops_check_lengths():
    with pytest.raises(DimensionMismatchError):
        rq.add((Fraction(1),), (Fraction(1), Fraction(2)))


def test_rank_nullspace_and_det():
    rows = [rq.to_vector([1, 2, 3]), rq.to_vector([2, 4, 6]), rq.to_vector([0, 1, 1])]
    assert rq.rank(rows) == 2
    kernel = rq.nullspace(rows, 3)
    assert len(kernel) == 1
    assert all(rq.dot(r, kernel[0]) == 0 for r in rows)
    assert rq.det(rows) == 0
    assert rq.det([rq.to_vector([2, 1]), rq.to_vector([1, 1])]) == 1


def test_solve_singular_returns_none():
    assert rq.solve([rq.to_vector([1, 1]), rq.to_vector([2, 2])], rq.to_vector([1, 2])) is None
    solution = rq.solve([rq.to_vector([2, 0]), rq.to_vector([0, 4])], rq.to_vector([1, 1]))
    assert solution == (Fraction(1, 2), Fraction(1, 4))


def test_primitive_direction():
    assert rq.primitive(rq.to_vector(["2/3", "-4/3"])) == (1, -2)


@given(st.lists(st.lists(st.integers(-5, 5), min_size=3, max_size=3), min_size=3, max_size=3))
def test_det_matches_numpy_sign_free_product_rule(rows):
    A = [rq.to_vector(r) for r in rows]
    B = [rq.to_vector(r) for r in rows[1:]] + [rq.to_vector(rows[0])]
    # a cyclic shift of three rows is an even permutation
    assert rq.det(A) == rq.det(B)
    assert (rq.det(A) == 0) == (rq.rank(A) < 3)


@given(st.lists(st.integers(-4, 4), min_size=3, max_size=3), st.lists(st.integers(-4, 4), min_size=3, max_size=3))
def test_projection_is_orthogonal(v, b):
    v, b = rq.to_vector(v), rq.to_vector(b)
    assume(any(x != 0 for x in b))
    p = rq.project_onto(v, [b])
    assert rq.dot(rq.sub(v, p), b) == 0
