"""Characteristic and normal cycles of polytopes as oriented cell chains.

Orientation convention. A CC cell relint(F) x C° is oriented by a frame (E, W)
where E spans the directions of F, W spans the normal cone and det[E | W] > 0 as
vectors of R^n, times (-1)^(n - dim F). An N cell is oriented as a piece of the
boundary of the tube P + eps*B: a frame (E, U) of the cell is positive when
det[u | E | U] > 0 at the unit normal u. Both conventions make the chains closed;
stokes_check certifies it per polytope.
"""
import itertools
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from threading import RLock
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from cachetools import LRUCache, cached

from . import rational as rq
from .errors import DegreeMismatchError, RangeError, SupportError
from .forms import CC, N, DifferentialForm, FormTerm, evaluate_coefficient, exterior_derivative
from .geometry_core import (Cone, Face, Polytope, cone_facet_normals, convex_hull, negate,
                            normal_cone, outward_normal_cone)
from .quadrature import QuadratureRule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CycleCell:
    base_face: Face
    # inward normal cone for CC cells, outward (antipodal) for N cells
    normal_cone: Cone
    orientation_sign: int
    ambient: str

    @property
    def cone_dim(self) -> int:
        return self.normal_cone.dim

    @property
    def fiber_dim(self) -> int:
        return self.cone_dim if self.ambient == CC else self.cone_dim - 1


@dataclass(frozen=True)
class CycleChain:
    polytope: Polytope
    ambient: str
    cells: Tuple[CycleCell, ...]

    @property
    def n(self) -> int:
        return self.polytope.ambient_dim

    @property
    def dim(self) -> int:
        return self.n if self.ambient == CC else self.n - 1

    def __len__(self) -> int:
        return len(self.cells)


def characteristic_cycle(P: Polytope) -> CycleChain:
    """One cell relint(F) x (T_x P)° per face F, including the zero-section cell of P itself."""
    n = P.ambient_dim
    cells = tuple(CycleCell(face, normal_cone(P, face), (-1) ** (n - face.dim), CC) for face in P.faces)
    logger.debug(f"CC of {P!r}: {len(cells)} cells")
    return CycleChain(P, CC, cells)


def normal_cycle(P: Polytope) -> CycleChain:
    """Antipodal image of CC(P) without the zero section, fibers cut down to the unit sphere."""
    cells = []
    for face in P.faces:
        cone = outward_normal_cone(P, face)
        if cone.dim == 0:
            continue
        cells.append(CycleCell(face, cone, 1, N))
    return CycleChain(P, N, tuple(cells))


def flip_cell(chain: CycleChain, index: int) -> CycleChain:
    if not 0 <= index < len(chain.cells):
        raise RangeError(f"No cell {index} in a chain of {len(chain.cells)} cells")
    cells = list(chain.cells)
    cells[index] = replace(cells[index], orientation_sign=-cells[index].orientation_sign)
    return replace(chain, cells=tuple(cells))


def chain_to_dict(chain: CycleChain) -> Dict[str, Any]:
    return {
        "ambient": chain.ambient,
        "n": chain.n,
        "cells": [
            {
                "face": sorted(cell.base_face.vertices),
                "face_dim": cell.base_face.dim,
                "cone_generators": [[rq.fraction_str(c) for c in g] for g in cell.normal_cone.generators],
                "fiber_dim": cell.fiber_dim,
                "sign": cell.orientation_sign,
            }
            for cell in chain.cells
        ],
    }


# structural checks


def conic_invariance(chain: CycleChain, t: Fraction = Fraction(3, 2)) -> bool:
    return all(cell.normal_cone.dilate(t).same_set(cell.normal_cone) for cell in chain.cells)


def negation_bijection(P: Polytope) -> bool:
    """CC(-P) consists exactly of the cells -F x a(C°) of CC(P)."""
    Q = negate(P)
    cc_q = {cell.base_face.vertices: cell for cell in characteristic_cycle(Q).cells}
    index = {v: i for i, v in enumerate(Q.vertices)}
    for cell in characteristic_cycle(P).cells:
        image = frozenset(index[rq.neg(P.vertices[i])] for i in cell.base_face.vertices)
        target = cc_q.get(image)
        if target is None or not target.normal_cone.same_set(cell.normal_cone.negate()):
            return False
    return len(cc_q) == len(P.faces)


# fiber parametrization

_piece_cache = LRUCache(maxsize=4096)
_piece_lock = RLock()


def _pointed_simplices(rays: List[rq.Vector], n: int) -> List[List[rq.Vector]]:
    """Simplicial cones covering the pointed cone spanned by rays."""
    if not rays:
        return [[]]
    if len(rays) == rq.rank(rays):
        return [list(rays)]
    normals = [a for a in cone_facet_normals(rays, n) if any(rq.dot(a, r) != 0 for r in rays)]
    center = tuple(sum(c) for c in zip(*normals))
    section = {rq.scale(r, 1 / rq.dot(center, r)): r for r in rays}
    hull = convex_hull(list(section))
    return [[section[hull.vertices[i]] for i in simplex] for simplex in hull.triangulate()]


@cached(cache=_piece_cache, lock=_piece_lock)
def simplicial_pieces(cone: Cone) -> Tuple[np.ndarray, ...]:
    """Ray matrices (n x d, rays as columns) of simplicial cones tiling the cone."""
    n = cone.ambient_dim
    lineality = cone.lineality
    pointed = _pointed_simplices(cone.pointed_rays(), n)
    pieces = []
    for signs in itertools.product((1, -1), repeat=len(lineality)):
        signed = [rq.scale(v, Fraction(s)) for v, s in zip(lineality, signs)]
        for simplex in pointed:
            rays = simplex + signed
            pieces.append(np.array([[float(c) for c in r] for r in rays]).T.reshape(n, len(rays)))
    return tuple(pieces)


_fiber_cache = LRUCache(maxsize=4096)
_fiber_lock = RLock()

# widest angle between two rays of a piece before it is bisected
MAX_PIECE_ANGLE = np.pi / 4


def _widest_pair(R: np.ndarray) -> Tuple[float, int, int]:
    cosines = np.clip(R.T @ R, -1.0, 1.0)
    i, j = np.unravel_index(np.argmin(cosines), cosines.shape)
    return float(np.arccos(cosines[i, j])), int(i), int(j)


@cached(cache=_fiber_cache, lock=_fiber_lock)
def fiber_pieces(cone: Cone) -> Tuple[np.ndarray, ...]:
    """Unit-ray simplicial pieces of the cone, bisected along their widest edge until every
    pair of rays is at most MAX_PIECE_ANGLE apart; central projection is near-linear on each."""
    out = []
    stack = [R / np.linalg.norm(R, axis=0) for R in reversed(simplicial_pieces(cone))]
    while stack:
        R = stack.pop()
        if R.shape[1] < 2:
            out.append(R)
            continue
        angle, i, j = _widest_pair(R)
        if angle <= MAX_PIECE_ANGLE:
            out.append(R)
            continue
        middle = R[:, i] + R[:, j]
        middle /= np.linalg.norm(middle)
        first, second = R.copy(), R.copy()
        first[:, j] = middle
        second[:, i] = middle
        stack += [second, first]
    return tuple(out)


def _directions(R: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """u(t) = R lam / |R lam| on the simplex lam = (1 - sum t, t); returns u, |R lam| and du/dt."""
    lam = np.hstack([1.0 - t.sum(axis=1, keepdims=True), t])
    v = lam @ R.T
    norm = np.linalg.norm(v, axis=1)
    u = v / norm[:, None]
    edges = R[:, 1:] - R[:, :1]
    projector = np.eye(R.shape[0])[None, :, :] - u[:, :, None] * u[:, None, :]
    du = projector @ edges / norm[:, None, None]
    return u, norm, du


def _fiber_samples(cell: CycleCell, R: np.ndarray, rule: QuadratureRule,
                   radius: Optional[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Fiber points, weights, Jacobians (N x n x fiber_dim) and the frame at the piece center."""
    d = R.shape[1]
    t, wt = rule.simplex(d - 1)
    u, _, du = _directions(R, t)
    uc, _, duc = _directions(R, np.full((1, d - 1), 1.0 / d))
    if cell.ambient == N:
        center = np.hstack([uc[0][:, None], duc[0]])
        return u, wt, du, center
    rho, wr = rule.radial(radius)
    points = (rho[:, None, None] * u[None, :, :]).reshape(-1, u.shape[1])
    weights = (wr[:, None] * wt[None, :]).ravel()
    jac = np.concatenate([rho[:, None, None, None] * du[None, :, :, :],
                          np.broadcast_to(u[None, :, :, None], (len(rho),) + u.shape + (1,))], axis=3)
    jac = jac.reshape(-1, u.shape[1], d)
    center = np.hstack([duc[0], uc[0][:, None]])
    return points, weights, jac, center


def _relevant_terms(cell: CycleCell, form: DifferentialForm, n: int) -> List[Tuple[FormTerm, Tuple, Tuple]]:
    out = []
    for term in form.terms:
        base, fiber = term.indices(form.ambient, n)
        if len(base) == cell.base_face.dim and len(fiber) == cell.fiber_dim:
            out.append((term, base, fiber))
    return out


def _integrate_cell(P: Polytope, cell: CycleCell, form: DifferentialForm, rule: QuadratureRule) -> complex:
    n = P.ambient_dim
    k = cell.base_face.dim
    terms = _relevant_terms(cell, form, n)
    if not terms:
        return 0.0
    unbounded = cell.ambient == CC and cell.cone_dim > 0
    if unbounded and form.fiber_radius is None:
        raise SupportError("Form has no fiber support certificate; CC fibers are unbounded")

    # fiber samples per piece (shared by every base simplex)
    fibers = []
    if cell.cone_dim == 0:
        fibers.append((np.zeros((1, n)), np.ones(1), np.zeros((1, n, 0)), np.zeros((n, 0))))
    elif cell.ambient == N and cell.cone_dim == 1:
        # a ray gives one unit normal, a line gives two
        for R in fiber_pieces(cell.normal_cone):
            u = R[:, 0] / np.linalg.norm(R[:, 0])
            fibers.append((u[None, :], np.ones(1), np.zeros((1, n, 0)), u[:, None]))
    else:
        for R in fiber_pieces(cell.normal_cone):
            fibers.append(_fiber_samples(cell, R, rule, form.fiber_radius))

    s, wb = rule.simplex(k)
    total = 0.0
    for simplex in P.triangulate(cell.base_face):
        pts = np.array([[float(c) for c in P.vertices[i]] for i in simplex])
        E = (pts[1:] - pts[0]).T.reshape(n, k)
        X = pts[0] + s @ E.T
        for Y, wf, jac, center in fibers:
            frame = np.hstack([E, center]) if cell.ambient == CC else np.hstack([center[:, :1], E, center[:, 1:]])
            orientation = np.sign(np.linalg.det(frame)) * cell.orientation_sign
            grid_x = np.repeat(X, len(Y), axis=0)
            grid_y = np.tile(Y, (len(X), 1))
            weights = np.outer(wb, wf).ravel()
            for term, base, fiber in terms:
                base_minor = np.linalg.det(E[list(base), :]) if k else 1.0
                fiber_minor = np.linalg.det(jac[:, list(fiber), :]) if fiber else np.ones(len(Y))
                values = evaluate_coefficient(term, form.ambient, n, grid_x, grid_y)
                total += orientation * base_minor * np.sum(weights * values * np.tile(fiber_minor, len(X)))
    return total


def _as_number(value) -> complex:
    value = complex(value)
    return value.real if value.imag == 0 else value


def _check_compatible(chain: CycleChain, form: DifferentialForm, degree: int) -> None:
    if form.ambient != chain.ambient or form.n != chain.n:
        raise DegreeMismatchError(f"A form on {form.ambient}-space (n={form.n}) cannot be "
                                  f"integrated over a {chain.ambient} chain in R^{chain.n}")
    if form.degree != degree:
        raise DegreeMismatchError(f"Expected a form of degree {degree}, got {form.degree}")


def integrate_chain(chain: CycleChain, form: DifferentialForm, rule: Optional[QuadratureRule] = None) -> complex:
    """Sum over cells of the oriented pull-back integral, in cell order."""
    rule = rule or QuadratureRule()
    _check_compatible(chain, form, chain.dim)
    total = 0.0
    for cell in chain.cells:
        total += _integrate_cell(chain.polytope, cell, form, rule)
    return _as_number(total)


def stokes_check(chain: CycleChain, beta: DifferentialForm, rule: Optional[QuadratureRule] = None) -> float:
    """|integral of d(beta)| over the chain; vanishes up to quadrature error for closed chains."""
    _check_compatible(chain, beta, chain.dim - 1)
    if beta.is_zero():
        return 0.0
    return abs(integrate_chain(chain, exterior_derivative(beta), rule))
