import itertools
import logging
from dataclasses import dataclass, field
from threading import RLock
from typing import Tuple

import numpy as np
from cachetools import LRUCache, cached
from scipy.special import roots_jacobi

from ..config import settings
from .errors import RangeError

logger = logging.getLogger(__name__)

SCHEMES = ("gauss-legendre", "gauss-jacobi")

_legendre_cache = LRUCache(maxsize=64)
_jacobi_cache = LRUCache(maxsize=128)
_simplex_cache = LRUCache(maxsize=256)
_rule_lock = RLock()


@cached(cache=_legendre_cache, lock=_rule_lock)
def _legendre_unit(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights


@cached(cache=_jacobi_cache, lock=_rule_lock)
def _jacobi_unit(order: int, alpha: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0,1] for the weight (1 - s)^alpha."""
    nodes, weights = roots_jacobi(order, alpha, 0)
    return 0.5 * (nodes + 1.0), weights / 2.0 ** (alpha + 1)


@cached(cache=_simplex_cache, lock=_rule_lock)
def _simplex_rule(order: int, k: int, scheme: str) -> Tuple[np.ndarray, np.ndarray]:
    """Collapsed tensor rule on {t >= 0, sum t <= 1} in R^k; weights sum to 1/k!."""
    if k == 0:
        return np.zeros((1, 0)), np.ones(1)
    axes = []
    for i in range(k):
        power = k - 1 - i
        if scheme == "gauss-jacobi" and power > 0:
            s, w = _jacobi_unit(order, power)
            axes.append((s, w, 0))
        else:
            s, w = _legendre_unit(order)
            axes.append((s, w, power))
    nodes, weights = [], []
    for combo in itertools.product(*(range(len(a[0])) for a in axes)):
        s = np.array([axes[i][0][j] for i, j in enumerate(combo)])
        w = 1.0
        remaining = 1.0
        t = np.empty(k)
        for i, j in enumerate(combo):
            t[i] = s[i] * remaining
            w *= axes[i][1][j] * (1.0 - s[i]) ** axes[i][2]
            remaining *= 1.0 - s[i]
        nodes.append(t)
        weights.append(w)
    return np.array(nodes), np.array(weights)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rules on simplices (collapsed tensor products) and radial panels."""
    order: int = field(default_factory=lambda: settings.quad_order)
    scheme: str = "gauss-legendre"
    tolerance: float = field(default_factory=lambda: settings.tol)
    radial_panels: int = 4

    def __post_init__(self):
        if self.order < 1:
            raise RangeError("Quadrature order must be positive", order=self.order)
        if self.scheme not in SCHEMES:
            raise RangeError(f"Unknown quadrature scheme {self.scheme!r}", schemes=list(SCHEMES))

    def interval(self) -> Tuple[np.ndarray, np.ndarray]:
        return _legendre_unit(self.order)

    def simplex(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        return _simplex_rule(self.order, k, self.scheme)

    def radial(self, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        """Composite rule on [0, radius]."""
        s, w = _legendre_unit(self.order)
        width = radius / self.radial_panels
        nodes = np.concatenate([width * (p + s) for p in range(self.radial_panels)])
        weights = np.tile(width * w, self.radial_panels)
        return nodes, weights
