import math

import numpy as np
import pytest
from cachetools.keys import hashkey

from app.services import quadrature
from app.services.errors import RangeError
from app.services.quadrature import QuadratureRule


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("scheme", ["gauss-legendre", "gauss-jacobi"])
def test_simplex_weights_sum_to_volume(k, scheme):
    _, w = QuadratureRule(order=6, scheme=scheme).simplex(k)
    assert np.isclose(w.sum(), 1 / math.factorial(k))


def test_simplex_nodes_stay_inside():
    t, _ = QuadratureRule(order=5).simplex(3)
    assert np.all(t >= 0)
    assert np.all(t.sum(axis=1) <= 1 + 1e-12)


@pytest.mark.parametrize("scheme", ["gauss-legendre", "gauss-jacobi"])
def test_simplex_polynomial_exactness(scheme):
    t, w = QuadratureRule(order=4, scheme=scheme).simplex(2)
    assert np.isclose(np.sum(w * t[:, 0] ** 2), 1 / 12)
    assert np.isclose(np.sum(w * t[:, 0] * t[:, 1]), 1 / 24)


def test_radial_rule():
    r, w = QuadratureRule(order=4).radial(2.0)
    assert np.isclose(np.sum(w * r ** 2), 8 / 3)
    assert np.all((r > 0) & (r < 2.0))


@pytest.mark.parametrize("kwargs", [{"order": 0}, {"scheme": "simpson"}])
def test_invalid_rules(kwargs):
    with pytest.raises(RangeError):
        QuadratureRule(**kwargs)


def test_rule_caches_hold_one_kind_each():
    for cache in (quadrature._legendre_cache, quadrature._jacobi_cache, quadrature._simplex_cache):
        cache.clear()
    QuadratureRule(order=3, scheme="gauss-jacobi").simplex(3)
    assert set(quadrature._jacobi_cache) == {hashkey(3, 1), hashkey(3, 2)}
    assert set(quadrature._legendre_cache) == {hashkey(3)}
    assert set(quadrature._simplex_cache) == {hashkey(3, 3, "gauss-jacobi")}
    legendre = quadrature._legendre_unit(3)
    jacobi = quadrature._jacobi_unit(3, 1)
    assert not np.allclose(legendre[1], jacobi[1])
