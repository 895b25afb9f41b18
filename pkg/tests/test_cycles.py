import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.services.cycles import (MAX_PIECE_ANGLE, characteristic_cycle, chain_to_dict, conic_invariance, fiber_pieces,
                                 flip_cell, integrate_chain, negation_bijection, normal_cycle, simplicial_pieces,
                                 stokes_check)
from app.services.errors import DegreeMismatchError, RangeError, SupportError
from app.services.forms import (CC, N, base_symbols, fiber_symbols, gauss_sphere_form, gaussian, make_form,
                                random_form)
from app.services.geometry_core import convex_hull, cube, point_polytope, random_hull, simplex


def test_cell_counts(square, segment):
    assert len(characteristic_cycle(point_polytope((0, 0)))) == 1
    assert len(characteristic_cycle(segment)) == 3
    assert len(normal_cycle(segment)) == 2
    assert len(characteristic_cycle(square)) == 9
    assert len(normal_cycle(square)) == 8


def test_normal_cycle_has_no_zero_section(square):
    assert all(cell.cone_dim > 0 for cell in normal_cycle(square).cells)
    assert normal_cycle(square).dim == 1
    assert characteristic_cycle(square).dim == 2


def test_cc_signs_follow_codimension(square):
    for cell in characteristic_cycle(square).cells:
        assert cell.orientation_sign == (-1) ** (2 - cell.base_face.dim)
        assert cell.cone_dim == 2 - cell.base_face.dim


def test_chain_summary(square):
    data = chain_to_dict(characteristic_cycle(square))
    assert data["ambient"] == CC
    assert len(data["cells"]) == 9
    assert {c["fiber_dim"] for c in data["cells"]} == {0, 1, 2}


def test_flip_cell(square):
    chain = normal_cycle(square)
    flipped = flip_cell(chain, 0)
    assert flipped.cells[0].orientation_sign == -chain.cells[0].orientation_sign
    assert flipped.cells[1:] == chain.cells[1:]
    with pytest.raises(RangeError):
        flip_cell(chain, 8)


@pytest.mark.parametrize("P", [cube(2), simplex(3), convex_hull([(0, 0, 0), (1, 0, 0), (0, 1, 0)])])
def test_conic_invariance_and_negation(P):
    assert conic_invariance(characteristic_cycle(P))
    assert negation_bijection(P)


def test_simplicial_pieces_of_a_line_and_a_half_plane():
    top = normal_cycle(convex_hull([(0, 0), (1, 0)])).cells[-1]
    assert top.cone_dim == 1
    assert len(simplicial_pieces(top.normal_cone)) == 2
    vertex = normal_cycle(convex_hull([(0, 0), (1, 0)])).cells[0]
    assert vertex.cone_dim == 2
    assert len(simplicial_pieces(vertex.normal_cone)) == 2


def _beta_n(expr):
    return make_form(N, 2, [(expr, [])])


def test_stokes_on_normal_cycle(square, rule):
    x1, x2 = base_symbols(2)
    u1, u2 = fiber_symbols(2, N)
    assert stokes_check(normal_cycle(square), _beta_n(x1 * u2 + u1 ** 3 - x2 * x1 * u1), rule) < 1e-8


def test_stokes_on_characteristic_cycle(square, rule):
    x1, x2 = base_symbols(2)
    xi1, xi2 = fiber_symbols(2, CC)
    beta = make_form(CC, 2, [((1 + x1 * xi2) * gaussian((xi1, xi2)), ["dxi1"]),
                             (x2 * xi1 * gaussian((xi1, xi2)), ["dx1"])], fiber_radius=6.0)
    assert stokes_check(characteristic_cycle(square), beta, rule) < 1e-8


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_stokes_on_random_hulls(seed):
    P = random_hull(2, 6, seed)
    beta = random_form(N, 2, 0, seed)
    assert stokes_check(normal_cycle(P), beta) < 1e-8


def test_flipped_cell_breaks_stokes(square, rule):
    x1, _ = base_symbols(2)
    u1, _ = fiber_symbols(2, N)
    broken = flip_cell(normal_cycle(square), 0)
    assert broken.cells[0].base_face.dim == 0
    assert stokes_check(broken, _beta_n(x1 + u1), rule) > 1e-3


def test_zero_beta(square):
    assert stokes_check(normal_cycle(square), make_form(N, 2, [(0, [])])) == 0.0


@pytest.mark.parametrize("P", [cube(2), simplex(2), random_hull(2, 8, 11), cube(3)])
def test_gauss_map_has_degree_one(P, rule):
    assert abs(integrate_chain(normal_cycle(P), gauss_sphere_form(P.ambient_dim), rule) - 1) < 1e-6


def test_zero_section_integral(square, rule):
    x1, x2 = base_symbols(2)
    xi1, xi2 = fiber_symbols(2, CC)
    omega = make_form(CC, 2, [(x1 * x2 * gaussian((xi1, xi2)), ["dx1", "dx2"])])
    assert integrate_chain(characteristic_cycle(square), omega, rule) == pytest.approx(0.25, abs=1e-12)


def test_unbounded_fibers_need_a_support_certificate(square):
    omega = make_form(CC, 2, [(1, ["dx1", "dxi2"])])
    with pytest.raises(SupportError):
        integrate_chain(characteristic_cycle(square), omega)


def test_degree_and_space_mismatch(square):
    with pytest.raises(DegreeMismatchError):
        integrate_chain(characteristic_cycle(square), gauss_sphere_form(2))
    with pytest.raises(DegreeMismatchError):
        integrate_chain(normal_cycle(square), make_form(N, 2, [(1, [])]))
    with pytest.raises(DegreeMismatchError):
        stokes_check(normal_cycle(square), make_form(N, 2, [(1, ["dx1"])]))


SHARP_TRIANGLE = [(0, 0), (1, 0), (0, "1/20")]


def _arc(R):
    return float(np.arccos(np.clip(R[:, 0] @ R[:, 1], -1.0, 1.0)))


def test_fiber_pieces_bisect_wide_arcs():
    P = convex_hull(SHARP_TRIANGLE)
    for cell in normal_cycle(P).cells:
        if cell.cone_dim != 2:
            continue
        pieces = fiber_pieces(cell.normal_cone)
        assert all(np.allclose(np.linalg.norm(R, axis=0), 1.0) for R in pieces)
        assert all(_arc(R) <= MAX_PIECE_ANGLE + 1e-12 for R in pieces)
        whole = sum(_arc(R / np.linalg.norm(R, axis=0)) for R in simplicial_pieces(cell.normal_cone))
        assert sum(_arc(R) for R in pieces) == pytest.approx(whole, abs=1e-12)
    widest = max(sum(_arc(R) for R in fiber_pieces(c.normal_cone)) for c in normal_cycle(P).cells if c.cone_dim == 2)
    assert widest > 0.95 * np.pi


def test_gauss_degree_on_a_sharp_triangle(rule):
    P = convex_hull(SHARP_TRIANGLE)
    assert abs(integrate_chain(normal_cycle(P), gauss_sphere_form(2), rule) - 1) < 1e-6


def test_stokes_on_wide_vertex_arcs(rule):
    # vertex arcs of roughly 123, 126, 45, 45 and 22 degrees
    P = random_hull(2, 6, 63052)
    assert stokes_check(normal_cycle(P), random_form(N, 2, 0, 63052), rule) < 1e-8
    assert abs(integrate_chain(normal_cycle(P), gauss_sphere_form(2), rule) - 1) < 1e-6
    P = convex_hull(SHARP_TRIANGLE)
    assert stokes_check(normal_cycle(P), random_form(N, 2, 0, 5), rule) < 1e-8
