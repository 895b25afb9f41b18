import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.services import rational as rq
from app.services.errors import (DimensionMismatchError, FaceNotFoundError, MalformedInputError,
                                 NegativeScaleError, NotInPolytopeError)
from app.services.geometry_core import (Cone, affine_image, convex_hull, cube, dual_cone, external_angle,
                                        external_angle_with_error, intersect, negate, normal_cone,
                                        point_polytope, random_hull, regular_polygon, simplex,
                                        sphere_polytope, tangent_cone)

from .conftest import rational_points


def test_square_hull_with_interior_point():
    P = convex_hull([(0, 0), (1, 0), (0, 1), (1, 1), ("1/2", "1/2")])
    assert P.dim == 2
    assert len(P.vertices) == 4
    assert len(P.faces_of_dim(1)) == 4
    assert len(P.faces) == 4 + 4 + 1
    assert P.relative_volume() == 1


def test_single_point_hull():
    P = point_polytope((3, "1/2"))
    assert P.dim == 0
    assert P.faces == (P.top_face,)
    assert P.volume() == 1.0


def test_cube_with_center():
    P = convex_hull(list(cube(3).vertices) + [(Fraction(1, 2),) * 3])
    assert len(P.vertices) == 8
    assert [len(P.faces_of_dim(k)) for k in range(4)] == [8, 12, 6, 1]


def test_lower_dimensional_hull():
    P = convex_hull([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    assert P.dim == 2 and P.ambient_dim == 3
    assert len(P.equations) == 1
    assert P.contains(rq.to_vector(["1/4", "1/4", "0"]))
    assert not P.contains(rq.to_vector(["1/4", "1/4", "1/8"]))
    assert math.isclose(P.volume(), 0.5)


def test_hull_errors():
    with pytest.raises(MalformedInputError):
        convex_hull([])
    with pytest.raises(DimensionMismatchError):
        convex_hull([(0, 0), (1, 0, 0)])


def test_large_point_clouds_go_through_qhull():
    P = regular_polygon(40)
    assert len(P.vertices) == 40
    assert len(P.faces_of_dim(1)) == 40
    assert all(v[0] ** 2 + v[1] ** 2 == 1 for v in P.vertices)


def test_sphere_polytope_is_inscribed():
    P = sphere_polytope(6)
    assert P.dim == 3
    assert all(sum(c * c for c in v) <= 1 for v in P.vertices)


@settings(max_examples=40, deadline=None)
@given(rational_points(2, min_size=3))
def test_euler_relation_in_the_plane(points):
    P = convex_hull(points)
    counts = [len(P.faces_of_dim(k)) for k in range(P.dim + 1)]
    assert sum((-1) ** k * c for k, c in enumerate(counts)) == 1
    assert all(P.contains(rq.to_vector(p)) for p in points)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_hull_lattice_and_volume(seed):
    P = random_hull(3, 9, seed)
    counts = [len(P.faces_of_dim(k)) for k in range(P.dim + 1)]
    assert sum((-1) ** k * c for k, c in enumerate(counts)) == 1
    if P.dim == 3:
        assert math.isclose(P.volume(), float(P.relative_volume()), rel_tol=1e-9, abs_tol=1e-12)


def test_face_of_point(square):
    face = square.face_of_point(rq.to_vector(["1/2", "0"]))
    assert face.dim == 1
    assert square.face_of_point(rq.to_vector(["1/2", "1/2"])) == square.top_face
    with pytest.raises(NotInPolytopeError):
        square.face_of_point(rq.to_vector([2, 0]))


def test_find_face(square, triangle):
    edge = convex_hull([(0, 0), (1, 0)])
    assert square.find_face(edge).dim == 1
    with pytest.raises(FaceNotFoundError):
        square.find_face(convex_hull([(0, 0), (1, 1)]))
    with pytest.raises(FaceNotFoundError):
        square.find_face(triangle.top_face)


def test_tangent_cone_of_square(square):
    at_vertex = tangent_cone(square, (0, 0))
    assert at_vertex.contains_direction(rq.to_vector([1, 2]))
    assert not at_vertex.contains_direction(rq.to_vector([-1, 0]))
    at_edge = tangent_cone(square, ("1/2", 0))
    assert len(at_edge.lineality) == 1
    assert tangent_cone(square, ("1/2", "1/2")).dim == 2
    with pytest.raises(NotInPolytopeError):
        tangent_cone(square, (2, 2))


def test_dual_cone_of_orthant_is_orthant():
    orthant = Cone.from_generators([rq.unit(2, 0), rq.unit(2, 1)], 2)
    assert dual_cone(orthant).same_set(orthant)
    half = Cone.from_generators([rq.unit(2, 0), rq.unit(2, 1), rq.neg(rq.unit(2, 1))], 2)
    dual = dual_cone(half)
    assert dual.dim == 1
    assert dual.contains_direction(rq.unit(2, 0))


def test_normal_cones_of_square(square):
    origin = square.face_of_point(rq.zero(2))
    cone = normal_cone(square, origin)
    assert cone.contains_direction(rq.to_vector([1, 1]))
    assert normal_cone(square, square.top_face).dim == 0


def test_external_angles(square, triangle):
    origin = square.face_of_point(rq.zero(2))
    assert math.isclose(external_angle(origin, square), 0.25)
    assert math.isclose(external_angle(square.top_face, square), 1.0)
    assert math.isclose(external_angle(triangle.face_of_point(rq.zero(2)), triangle), 0.25)
    C = cube(3)
    assert math.isclose(external_angle(C.face_of_point(rq.zero(3)), C), 0.125)
    edge = C.face_of_point(rq.to_vector(["1/2", 0, 0]))
    assert math.isclose(external_angle(edge, C), 0.25)


@pytest.mark.parametrize("P", [simplex(2), cube(3), simplex(3), regular_polygon(7)])
def test_external_angles_of_vertices_sum_to_one(P):
    assert math.isclose(sum(external_angle(f, P) for f in P.faces_of_dim(0)), 1.0, rel_tol=1e-12)


def test_external_angle_monte_carlo_in_four_dimensions():
    C = cube(4)
    angle, error = external_angle_with_error(C.face_of_point(rq.zero(4)), C, samples=100_000)
    assert abs(angle - 1 / 16) < 5 * error + 1e-3


def test_affine_image(triangle):
    Q = affine_image(triangle, 2, (1, 1))
    assert Q.vertices == ((1, 1), (1, 3), (3, 1))
    assert affine_image(triangle, 0, (5, 5)).dim == 0
    with pytest.raises(NegativeScaleError):
        affine_image(triangle, -1, (0, 0))
    with pytest.raises(DimensionMismatchError):
        affine_image(triangle, 1, (0, 0, 0))


def test_negate(triangle):
    assert set(negate(triangle).vertices) == {(0, 0), (-1, 0), (0, -1)}


def test_intersect(square, triangle):
    assert intersect(square, triangle) == triangle
    shifted = affine_image(square, 1, ("1/2", "1/2"))
    box = intersect(square, shifted)
    assert box.relative_volume() == Fraction(1, 4)
    assert intersect(square, affine_image(square, 1, (3, 0))) is None
    touching = intersect(square, affine_image(square, 1, (1, 0)))
    assert touching.dim == 1


def test_volume_of_a_face(square):
    edge = square.faces_of_dim(1)[0]
    assert math.isclose(square.volume(edge), 1.0)
    assert np.isclose(cube(3, lo=-1, hi=1).volume(), 8.0)
