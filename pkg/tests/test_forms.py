import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from app.services.errors import DegreeMismatchError, MalformedInputError
from app.services.forms import (CC, N, base_symbols, cc_intrinsic_volume_form, euler_verdier, evaluate_on_frame,
                                exterior_derivative, fiber_symbols, filtration_level_by_subspaces,
                                form_filtration_level, forms_equal, gaussian, lipschitz_killing_form,
                                make_form, polynomial_bump, random_form, sphere_area, zero_form)

x1, x2 = base_symbols(2)
xi1, xi2 = fiber_symbols(2, CC)
G2 = gaussian((xi1, xi2))


def test_wedges_are_canonicalized_with_sign():
    form = make_form(CC, 2, [(x1, ["dxi1", "dx1"])])
    assert len(form.terms) == 1
    assert form.terms[0].wedge == ("dx1", "dxi1")
    assert form.terms[0].coef == -x1


def test_equal_monomials_merge_and_cancel():
    form = make_form(CC, 2, [(1, ["dx1", "dx2"]), (1, ["dx2", "dx1"])])
    assert form.is_zero()
    assert form.degree == 2


def test_repeated_differential_vanishes():
    form = make_form(CC, 2, [(x1, ["dx1", "dx1"])])
    assert form.is_zero()


def test_mixed_degrees_are_rejected():
    with pytest.raises(DegreeMismatchError):
        make_form(CC, 2, [(1, ["dx1"]), (1, ["dx1", "dxi1"])])


@pytest.mark.parametrize("ambient,token", [(CC, "dy1"), (CC, "du1"), (N, "dxi1"), (CC, "dx3")])
def test_bad_tokens(ambient, token):
    with pytest.raises(MalformedInputError):
        make_form(ambient, 2, [(1, [token])])


def test_unknown_ambient():
    with pytest.raises(MalformedInputError):
        make_form("T*", 2, [(1, ["dx1"])])


def test_filtration_levels():
    assert form_filtration_level(make_form(CC, 2, [(x1 * G2, ["dx1", "dx2"])])) == 2
    assert form_filtration_level(make_form(CC, 2, [(G2, ["dxi1", "dxi2"])])) == 0
    mixed = make_form(CC, 2, [(G2, ["dx1", "dxi2"]), (G2, ["dx1", "dx2"])])
    assert form_filtration_level(mixed) == 1
    assert form_filtration_level(zero_form(CC, 2)) == 2
    with pytest.raises(MalformedInputError):
        form_filtration_level(lipschitz_killing_form(2, 0))


@pytest.mark.parametrize("wedge,level", [(["dx1", "dx2"], 2), (["dx1", "dxi2"], 1), (["dxi1", "dxi2"], 0)])
def test_filtration_by_subspaces_agrees_with_degrees(wedge, level):
    form = make_form(CC, 2, [((1 + x1 * xi2) * G2, wedge)])
    assert filtration_level_by_subspaces(form) == level == form_filtration_level(form)


def test_euler_verdier_on_known_forms():
    top = make_form(CC, 2, [(x1 * G2, ["dx1", "dx2"])])
    assert forms_equal(euler_verdier(top), top)
    (s,) = fiber_symbols(1, CC)
    g = gaussian((s,))
    assert forms_equal(euler_verdier(make_form(CC, 1, [(g, ["dxi1"])])), make_form(CC, 1, [(g, ["dxi1"])]))
    assert forms_equal(euler_verdier(make_form(CC, 1, [(g, ["dx1"])])), make_form(CC, 1, [(-g, ["dx1"])]))
    odd = make_form(CC, 2, [(xi1 * G2, ["dx1", "dx2"])])
    assert forms_equal(euler_verdier(odd), odd.scale(-1))


def test_euler_verdier_needs_cc_space():
    with pytest.raises(MalformedInputError):
        euler_verdier(lipschitz_killing_form(2, 1))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10 ** 6))
def test_euler_verdier_is_an_involution(n, seed):
    omega = random_form(CC, n, n, seed)
    twice = euler_verdier(euler_verdier(omega))
    assert forms_equal(twice, omega)
    assert form_filtration_level(euler_verdier(omega)) == form_filtration_level(omega)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([CC, N]))
def test_d_squared_is_zero(seed, ambient):
    beta = random_form(ambient, 2, 1, seed)
    assert exterior_derivative(exterior_derivative(beta)).is_zero()


def test_exterior_derivative_of_a_function():
    beta = make_form(CC, 2, [(x1 * xi2, [])])
    d = exterior_derivative(beta)
    assert forms_equal(d, make_form(CC, 2, [(xi2, ["dx1"]), (x1, ["dxi2"])]))


def test_translation_invariant_random_forms_ignore_x():
    omega = random_form(CC, 2, 2, seed=5, translation_invariant=True)
    for term in omega.terms:
        assert not term.coef.free_symbols & {x1, x2}


def test_random_forms_respect_min_horizontal():
    omega = random_form(CC, 3, 3, seed=2, min_horizontal=2)
    assert all(t.horizontal_degree >= 2 for t in omega.terms)


def test_polynomial_bump_envelope():
    weight = polynomial_bump((xi1, xi2), 3)
    assert weight.subs({xi1: 0, xi2: 0}) == 1
    assert weight.subs({xi1: 3, xi2: 0}) == 0
    assert weight.subs({xi1: 2, xi2: 3}) == 0
    assert weight.subs({xi1: sympy.Rational(3, 2), xi2: 0}) == sympy.Rational(81, 256)
    omega = random_form(CC, 2, 1, seed=4, envelope="polynomial")
    assert omega.fiber_radius == 3.0
    assert all(t.coef.subs({xi1: 4, xi2: 0}) == 0 for t in omega.terms)


def test_sphere_areas():
    assert sphere_area(1) == 2
    assert sympy.simplify(sphere_area(2) - 2 * sympy.pi) == 0
    assert sympy.simplify(sphere_area(3) - 4 * sympy.pi) == 0


def test_lipschitz_killing_range():
    with pytest.raises(MalformedInputError):
        lipschitz_killing_form(2, 2)
    assert lipschitz_killing_form(3, 1).degree == 2
    assert cc_intrinsic_volume_form(2, 1).fiber_radius is not None


def test_sum_and_difference():
    omega = make_form(CC, 2, [(G2, ["dx1", "dxi1"])])
    assert (omega - omega).is_zero()
    assert forms_equal(omega + omega, omega.scale(2))
    with pytest.raises(DegreeMismatchError):
        omega + make_form(CC, 2, [(G2, ["dx1"])])


def test_evaluate_on_frame():
    form = make_form(CC, 2, [(3, ["dx1", "dx2"])])
    frame = np.vstack([np.eye(2), np.zeros((2, 2))])
    assert np.isclose(evaluate_on_frame(form, np.zeros(2), np.zeros(2), frame), 3.0)
    swapped = frame[:, ::-1]
    assert np.isclose(evaluate_on_frame(form, np.zeros(2), np.zeros(2), swapped), -3.0)
