"""Valuations represented by densities and forms, and the operations built on evaluating them."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import sympy
from scipy.special import gamma

from ..config import settings
from . import rational as rq
from .complexes import ComplexSet, boundary, face_complex
from .cycles import characteristic_cycle, integrate_chain, normal_cycle
from .errors import (DegreeMismatchError, MalformedInputError, PolynomialityError, RangeError,
                     RepresentationError, SupportError)
from .forms import (CC, N, DifferentialForm, base_symbols, cc_intrinsic_volume_form, density_cc_form,
                    euler_verdier, gauss_sphere_form, lipschitz_killing_form)
from .geometry_core import Polytope, affine_image, cube, external_angle, negate, random_hull
from .measure_engine import GeneratorTable, extend
from .quadrature import QuadratureRule

logger = logging.getLogger(__name__)

PAIR = "pair"
CC_FORM = "cc"
ORACLE = "oracle"


@dataclass(frozen=True)
class Density:
    """f(x) times Lebesgue measure on R^n."""
    n: int
    coefficient: Union[sympy.Expr, Callable[[np.ndarray], np.ndarray]]

    def values(self, X: np.ndarray) -> np.ndarray:
        if isinstance(self.coefficient, sympy.Basic):
            f = sympy.lambdify(list(base_symbols(self.n)), self.coefficient, modules="numpy")
            out = f(*X.T)
        else:
            out = self.coefficient(X)
        return np.broadcast_to(np.asarray(out, dtype=complex), (X.shape[0],))

    def integrate(self, P: Polytope, rule: Optional[QuadratureRule] = None) -> complex:
        if P.dim < self.n:
            return 0.0
        rule = rule or QuadratureRule()
        s, w = rule.simplex(self.n)
        total = 0.0
        for simplex in P.triangulate():
            pts = np.array([[float(c) for c in P.vertices[i]] for i in simplex])
            E = (pts[1:] - pts[0]).T
            total += abs(np.linalg.det(E)) * np.sum(w * self.values(pts[0] + s @ E.T))
        return total


@dataclass(frozen=True)
class Valuation:
    """phi(P) = nu(P) + int_{N(P)} eta, or int_{CC(P)} omega, or an opaque callback."""
    n: int
    density: Optional[Density] = None
    normal_form: Optional[DifferentialForm] = None
    cc_form: Optional[DifferentialForm] = None
    oracle: Optional[Callable[[Polytope], complex]] = field(default=None, compare=False)
    claimed_level: Optional[int] = None
    name: str = "valuation"

    def __post_init__(self):
        if not (self.has_pair or self.has_cc or self.oracle):
            raise RepresentationError("A valuation needs a pair, a CC form or an oracle")
        if self.normal_form is not None and (self.normal_form.ambient != N or self.normal_form.n != self.n
                                             or self.normal_form.degree != self.n - 1):
            raise DegreeMismatchError(f"The pair needs an (n-1)-form on N-space with n={self.n}")
        if self.cc_form is not None and (self.cc_form.ambient != CC or self.cc_form.n != self.n
                                         or self.cc_form.degree != self.n):
            raise DegreeMismatchError(f"The CC representation needs an n-form on CC-space with n={self.n}")

    @property
    def has_pair(self) -> bool:
        return self.density is not None or self.normal_form is not None

    @property
    def has_cc(self) -> bool:
        return self.cc_form is not None

    @property
    def representations(self) -> List[str]:
        return [r for r, ok in ((PAIR, self.has_pair), (CC_FORM, self.has_cc), (ORACLE, self.oracle)) if ok]


def _as_number(value) -> complex:
    value = complex(value)
    return value.real if value.imag == 0 else value


def _check_support(form: Optional[DifferentialForm], P: Polytope) -> None:
    if form is None or form.support_box is None:
        return
    for (lo, hi), (plo, phi) in zip(form.support_box, P.bounding_box):
        if plo < lo or phi > hi:
            raise SupportError("Polytope leaves the support box of the form")


def evaluate(phi: Valuation, P: Union[Polytope, ComplexSet], rule: Optional[QuadratureRule] = None,
             via: Optional[str] = None) -> complex:
    """phi on a polytope, or on a union of cells through the measure engine."""
    rule = rule or QuadratureRule()
    if isinstance(P, ComplexSet):
        D = P.subdivision
        mu = extend(D, GeneratorTable.from_function(D, lambda c: evaluate(phi, c, rule, via)), check=False)
        return _as_number(mu.evaluate(P))
    if P.ambient_dim != phi.n:
        raise DegreeMismatchError(f"Valuation on R^{phi.n} evaluated on a polytope in R^{P.ambient_dim}")
    via = via or phi.representations[0]
    if via == PAIR and phi.has_pair:
        _check_support(phi.normal_form, P)
        value = phi.density.integrate(P, rule) if phi.density is not None else 0.0
        if phi.normal_form is not None and not phi.normal_form.is_zero():
            value += integrate_chain(normal_cycle(P), phi.normal_form, rule)
        return _as_number(value)
    if via == CC_FORM and phi.has_cc:
        _check_support(phi.cc_form, P)
        return _as_number(integrate_chain(characteristic_cycle(P), phi.cc_form, rule))
    if via == ORACLE and phi.oracle is not None:
        return _as_number(phi.oracle(P))
    raise RepresentationError(f"Valuation {phi.name!r} has no {via!r} representation",
                              available=phi.representations)


def representation_residual(phi: Valuation, P: Polytope, rule: Optional[QuadratureRule] = None) -> float:
    """|pair value - CC value| when both representations are present."""
    if not (phi.has_pair and phi.has_cc):
        raise RepresentationError("Cross-check needs both the pair and the CC representation")
    return abs(evaluate(phi, P, rule, PAIR) - evaluate(phi, P, rule, CC_FORM))


# standard valuations


def volume_valuation(n: int) -> Valuation:
    return Valuation(n, density=Density(n, sympy.Integer(1)), cc_form=density_cc_form(n, sympy.Integer(1)),
                     claimed_level=n, name="volume")


def euler_valuation(n: int) -> Valuation:
    return Valuation(n, normal_form=gauss_sphere_form(n), cc_form=cc_intrinsic_volume_form(n, 0),
                     claimed_level=0, name="euler")


def intrinsic_volume_valuation(n: int, k: int) -> Valuation:
    if not 0 <= k <= n:
        raise RangeError(f"Intrinsic volume index {k} outside 0..{n}")
    if k == n:
        return volume_valuation(n)
    return Valuation(n, normal_form=lipschitz_killing_form(n, k), cc_form=cc_intrinsic_volume_form(n, k),
                     claimed_level=k, name=f"V{k}")


def oracle_valuation(n: int, callback: Callable[[Polytope], complex], name: str = "oracle",
                     claimed_level: Optional[int] = None) -> Valuation:
    return Valuation(n, oracle=callback, claimed_level=claimed_level, name=name)


def cc_valuation(omega: DifferentialForm, name: str = "cc") -> Valuation:
    return Valuation(omega.n, cc_form=omega, name=name)


# intrinsic volumes and the Steiner formula


def intrinsic_volume(P: Polytope, k: int) -> float:
    """V_k(P) = sum over k-faces of vol_k(F) times the external angle of P at F."""
    if not 0 <= k <= P.ambient_dim:
        raise RangeError(f"Intrinsic volume index {k} outside 0..{P.ambient_dim}")
    return float(sum(P.volume(F) * external_angle(F, P) for F in P.faces_of_dim(k)))


def ball_volume(j: int) -> float:
    """kappa_j, the volume of the unit j-ball."""
    return math.pi ** (j / 2) / gamma(j / 2 + 1)


def steiner(P: Polytope, eps: float) -> float:
    """vol(P + eps B) = sum_j kappa_j eps^j V_{n-j}(P)."""
    if eps < 0:
        raise RangeError("Steiner radius must be nonnegative", eps=eps)
    n = P.ambient_dim
    return float(sum(ball_volume(j) * eps ** j * intrinsic_volume(P, n - j) for j in range(n + 1)))


def _face_projectors(P: Polytope) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    out = []
    for face in P.faces:
        F = P.face_polytope(face)
        base = np.array([float(c) for c in F.vertices[0]])
        if F.dim:
            Q, _ = np.linalg.qr(np.array([[float(c) for c in d] for d in F.directions]).T)
        else:
            Q = np.zeros((P.ambient_dim, 0))
        A = np.array([[float(c) for c in h.normal] for h in F.inequalities]).reshape(-1, P.ambient_dim)
        b = np.array([float(h.offset) for h in F.inequalities])
        out.append((base, Q, A, b))
    return out


def distance_squared(P: Polytope, Y: np.ndarray) -> np.ndarray:
    """Squared distance to P: the nearest point is the projection onto the affine hull of some face."""
    best = np.full(Y.shape[0], np.inf)
    for base, Q, A, b in _face_projectors(P):
        proj = base + ((Y - base) @ Q) @ Q.T
        inside = np.all(proj @ A.T - b >= -1e-12, axis=1) if len(b) else np.ones(Y.shape[0], dtype=bool)
        d2 = np.sum((Y - proj) ** 2, axis=1)
        best = np.where(inside & (d2 < best), d2, best)
    return best


def tube_volume_monte_carlo(P: Polytope, eps: float, samples: Optional[int] = None, seed: int = 0,
                            chunk: int = 1 << 20) -> Tuple[float, float]:
    """Monte-Carlo volume of the eps-neighbourhood of P with its standard error."""
    samples = samples or settings.mc_samples
    box = np.array([[float(lo) - eps, float(hi) + eps] for lo, hi in P.bounding_box])
    box_volume = float(np.prod(box[:, 1] - box[:, 0]))
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    while remaining:
        m = min(chunk, remaining)
        Y = box[:, 0] + rng.random((m, P.ambient_dim)) * (box[:, 1] - box[:, 0])
        hits += int(np.count_nonzero(distance_squared(P, Y) <= eps * eps))
        remaining -= m
    p = hits / samples
    return box_volume * p, box_volume * math.sqrt(p * (1.0 - p) / samples)


# polynomiality and the W-filtration


@dataclass
class McMullenFit:
    coefficients: List[complex]
    residual: float
    ts: List[float]
    values: List[complex]

    @property
    def scale(self) -> float:
        return max((abs(v) for v in self.values), default=0.0)

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.ts, "value": [_as_number(v) for v in self.values]})


def default_ts() -> List[float]:
    return [k / 8 for k in range(1, 9)]


def mcmullen_decompose(phi: Valuation, K: Polytope, x: Optional[Sequence] = None,
                       ts: Optional[Sequence[float]] = None, rule: Optional[QuadratureRule] = None,
                       tol: Optional[float] = None) -> McMullenFit:
    """Least-squares fit of t -> phi(tK + x) by a polynomial of degree <= n."""
    n = phi.n
    ts = list(ts) if ts is not None else default_ts()
    if len(set(ts)) < n + 1 or any(t <= 0 for t in ts):
        raise RangeError(f"Need at least {n + 1} distinct positive samples", ts=ts)
    x = rq.to_vector(x) if x is not None else rq.zero(n)
    tol = tol if tol is not None else settings.poly_tol
    values = np.array([complex(evaluate(phi, affine_image(K, rq.to_fraction(t), x), rule)) for t in ts])
    V = np.vander(np.array(ts, dtype=float), n + 1, increasing=True).astype(complex)
    coefficients, *_ = np.linalg.lstsq(V, values, rcond=None)
    residual = float(np.max(np.abs(V @ coefficients - values)))
    fit = McMullenFit([_as_number(c) for c in coefficients], residual, [float(t) for t in ts], list(values))
    if residual > tol * max(1.0, fit.scale):
        raise PolynomialityError("Values are not polynomial of degree <= n in t", residual)
    logger.debug(f"McMullen fit of {phi.name}: residual {residual:.3e}")
    return fit


@dataclass
class FiltrationReport:
    degree: int
    is_zero: bool
    is_density: bool
    few_probes: bool
    coefficients: List[List[complex]]


def default_probes(n: int, count: int = 10, seed: int = 0) -> List[Tuple[Polytope, Tuple]]:
    rng = np.random.default_rng(seed)
    probes = []
    for i in range(count):
        K = cube(n) if i == 0 else random_hull(n, n + 3, seed=int(rng.integers(0, 2 ** 31)))
        x = tuple(rq.to_fraction(int(v)) / 8 for v in rng.integers(-4, 5, size=n))
        probes.append((K, x))
    return probes


def filtration_degree(phi: Valuation, probes: Optional[Sequence[Tuple[Polytope, Sequence]]] = None,
                      tol: Optional[float] = None, rule: Optional[QuadratureRule] = None) -> FiltrationReport:
    """Largest i such that the fitted c_0..c_{i-1} vanish on every probe; W_{n+1} = 0."""
    n = phi.n
    probes = list(probes) if probes is not None else default_probes(n)
    if not probes:
        raise MalformedInputError("filtration_degree needs at least one probe")
    tol = tol if tol is not None else settings.tol
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        fits = list(pool.map(lambda probe: mcmullen_decompose(phi, probe[0], probe[1], rule=rule), probes))
    scale = max(max(f.scale for f in fits), 1e-300)
    degree = 0
    while degree <= n and all(abs(f.coefficients[degree]) <= tol * scale for f in fits):
        degree += 1
    is_zero = degree == n + 1 or max(f.scale for f in fits) == 0.0
    if is_zero:
        degree = n
    report = FiltrationReport(degree, is_zero, degree == n and not is_zero, len(probes) < n + 1,
                              [f.coefficients for f in fits])
    logger.info(f"Filtration degree of {phi.name}: {degree} (zero={is_zero})")
    return report


# Euler-Verdier involution


def antipodal_pullback(omega: DifferentialForm) -> DifferentialForm:
    """a* omega for the fiberwise antipodal map; sigma = (-1)^n a*."""
    return euler_verdier(omega).scale((-1) ** omega.n)


def boundary_cc_integral(P: Polytope, omega: DifferentialForm, rule: Optional[QuadratureRule] = None) -> complex:
    """int over CC of the relative boundary, by inclusion-exclusion of per-face CC integrals."""
    if P.dim == 0:
        return 0.0
    D = face_complex(P)
    table = GeneratorTable.from_function(
        D, lambda F: integrate_chain(characteristic_cycle(F), omega, rule) if F.dim < P.dim else 0.0)
    mu = extend(D, table, check=False)
    return _as_number(mu.evaluate(boundary(P)))


@dataclass
class VerdierCheck:
    lhs: complex
    rhs: complex
    residual: float


def verdier_identity_check(P: Polytope, omega: DifferentialForm,
                           rule: Optional[QuadratureRule] = None) -> VerdierCheck:
    """int_{CC(P)} a*omega against (-1)^(n - dim P) (int_{CC(P)} omega - int_{CC(dP)} omega)."""
    if omega.ambient != CC or omega.degree != omega.n:
        raise DegreeMismatchError("The identity is stated for n-forms on CC-space")
    if omega.is_zero():
        return VerdierCheck(0.0, 0.0, 0.0)
    rule = rule or QuadratureRule()
    lhs = integrate_chain(characteristic_cycle(P), antipodal_pullback(omega), rule)
    inner = integrate_chain(characteristic_cycle(P), omega, rule) - boundary_cc_integral(P, omega, rule)
    rhs = (-1) ** (P.ambient_dim - P.dim) * inner
    return VerdierCheck(_as_number(lhs), _as_number(rhs), float(abs(lhs - rhs)))


def eigen_split(phi: Valuation) -> Tuple[Valuation, Valuation]:
    """phi = phi_plus + phi_minus with sigma(phi_pm) = +-phi_pm."""
    if not phi.has_cc:
        raise RepresentationError("Only CC-form representations can be split")
    omega = phi.cc_form
    sigma = euler_verdier(omega)
    half = sympy.Rational(1, 2)
    plus = (omega + sigma).scale(half)
    minus = (omega - sigma).scale(half)
    return (Valuation(phi.n, cc_form=plus, claimed_level=phi.claimed_level, name=f"{phi.name}+"),
            Valuation(phi.n, cc_form=minus, claimed_level=phi.claimed_level, name=f"{phi.name}-"))


def graded_sign_residual(phi: Valuation, K: Polytope, k: int, rule: Optional[QuadratureRule] = None) -> float:
    """|c_k(sigma phi, K) - (-1)^k c_k(phi, -K)|."""
    if not phi.has_cc:
        raise RepresentationError("The graded sign law is checked on CC-form representations")
    sigma_phi = Valuation(phi.n, cc_form=euler_verdier(phi.cc_form), name=f"sigma({phi.name})")
    left = mcmullen_decompose(sigma_phi, K, rule=rule).coefficients[k]
    right = mcmullen_decompose(phi, negate(K), rule=rule).coefficients[k]
    return float(abs(complex(left) - (-1) ** k * complex(right)))
