"""Differential forms on CC-space (x, xi) and N-space (x, u) with symbolic or callback coefficients.

Wedge monomials are tuples of tokens: "dx3" is a base differential, "dxi2" a fiber
differential on CC-space and "du1" a fiber differential on N-space. Monomials are
kept in canonical order (base before fiber, increasing index).
"""
import itertools
import logging
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from threading import RLock
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from cachetools import LRUCache, cached

from ..config import settings
from .errors import DegreeMismatchError, MalformedInputError, RepresentationError

logger = logging.getLogger(__name__)

CC = "CC"
N = "N"
AMBIENTS = (CC, N)

Coefficient = Union[sympy.Expr, Callable[[np.ndarray, np.ndarray], np.ndarray]]
Box = Tuple[Tuple[Fraction, Fraction], ...]

_TOKEN = re.compile(r"^d(xi|x|u)(\d+)$")


def base_symbols(n: int) -> Tuple[sympy.Symbol, ...]:
    return sympy.symbols(f"x1:{n + 1}", real=True)


def fiber_symbols(n: int, ambient: str) -> Tuple[sympy.Symbol, ...]:
    return sympy.symbols(f"{'xi' if ambient == CC else 'u'}1:{n + 1}", real=True)


def fiber_token(ambient: str) -> str:
    return "dxi" if ambient == CC else "du"


def parse_token(token: str, ambient: str, n: int) -> Tuple[int, int]:
    """(0 for base / 1 for fiber, zero-based index)."""
    match = _TOKEN.match(token)
    if match is None:
        raise MalformedInputError(f"Bad differential {token!r}")
    kind, index = match.group(1), int(match.group(2)) - 1
    if not 0 <= index < n:
        raise MalformedInputError(f"Differential {token!r} out of range for n={n}")
    if kind == "x":
        return 0, index
    if (kind == "xi") != (ambient == CC):
        raise MalformedInputError(f"Differential {token!r} does not live on {ambient}-space")
    return 1, index


def canonical_wedge(wedge: Sequence[str], ambient: str, n: int) -> Tuple[int, Tuple[str, ...]]:
    """Sort a wedge monomial; returns (permutation sign, sorted tokens), sign 0 on repeats."""
    keys = [parse_token(t, ambient, n) for t in wedge]
    if len(set(keys)) != len(keys):
        return 0, ()
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    inversions = sum(1 for i in range(len(order)) for j in range(i + 1, len(order)) if order[i] > order[j])
    return (-1) ** inversions, tuple(wedge[i] for i in order)


@dataclass(frozen=True)
class FormTerm:
    coef: Coefficient
    wedge: Tuple[str, ...]

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.coef, sympy.Basic)

    def indices(self, ambient: str, n: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        keys = [parse_token(t, ambient, n) for t in self.wedge]
        return tuple(i for k, i in keys if k == 0), tuple(i for k, i in keys if k == 1)

    @property
    def horizontal_degree(self) -> int:
        return sum(1 for t in self.wedge if t.startswith("dx") and not t.startswith("dxi"))


@dataclass(frozen=True)
class DifferentialForm:
    ambient: str
    n: int
    terms: Tuple[FormTerm, ...]
    support_box: Optional[Box] = None
    # coefficients vanish (or are below quadrature resolution) for |fiber| beyond this
    fiber_radius: Optional[float] = None
    degree_hint: Optional[int] = None

    @property
    def degree(self) -> int:
        if self.terms:
            return len(self.terms[0].wedge)
        return self.degree_hint if self.degree_hint is not None else self.valuation_degree

    @property
    def valuation_degree(self) -> int:
        return self.n if self.ambient == CC else self.n - 1

    @property
    def is_symbolic(self) -> bool:
        return all(t.is_symbolic for t in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def symbols(self) -> Tuple[Tuple[sympy.Symbol, ...], Tuple[sympy.Symbol, ...]]:
        return base_symbols(self.n), fiber_symbols(self.n, self.ambient)

    def horizontal_degrees(self) -> List[int]:
        return [t.horizontal_degree for t in self.terms]

    def graded_component(self, h: int) -> "DifferentialForm":
        """Terms of horizontal degree h."""
        return replace(self, terms=tuple(t for t in self.terms if t.horizontal_degree == h))

    def scale(self, c) -> "DifferentialForm":
        terms = []
        for t in self.terms:
            if t.is_symbolic:
                terms.append((sympy.sympify(c) * t.coef, t.wedge))
            else:
                terms.append((lambda X, Y, f=t.coef, c=complex(c): c * f(X, Y), t.wedge))
        return make_form(self.ambient, self.n, terms, self.support_box, self.fiber_radius, self.degree)

    def __add__(self, other: "DifferentialForm") -> "DifferentialForm":
        if (self.ambient, self.n) != (other.ambient, other.n):
            raise MalformedInputError("Cannot add forms on different spaces")
        if self.terms and other.terms and self.degree != other.degree:
            raise DegreeMismatchError(f"Cannot add forms of degree {self.degree} and {other.degree}")
        radius = max((r for r in (self.fiber_radius, other.fiber_radius) if r is not None), default=None)
        return make_form(self.ambient, self.n,
                         [(t.coef, t.wedge) for t in self.terms + other.terms],
                         _merge_boxes(self.support_box, other.support_box), radius, self.degree)

    def __sub__(self, other: "DifferentialForm") -> "DifferentialForm":
        return self + other.scale(-1)


def _merge_boxes(a: Optional[Box], b: Optional[Box]) -> Optional[Box]:
    if a is None or b is None:
        return a or b
    return tuple((min(x[0], y[0]), max(x[1], y[1])) for x, y in zip(a, b))


def make_form(ambient: str, n: int, terms: Sequence[Tuple[Coefficient, Sequence[str]]],
              support_box: Optional[Sequence] = None, fiber_radius: Optional[float] = None,
              degree: Optional[int] = None) -> DifferentialForm:
    """Canonicalize monomials, merge symbolic terms with equal monomials and drop zeros."""
    if ambient not in AMBIENTS:
        raise MalformedInputError(f"Unknown ambient {ambient!r}")
    merged: Dict[Tuple[str, ...], sympy.Expr] = {}
    callbacks: List[FormTerm] = []
    degrees = set()
    for coef, wedge in terms:
        sign, canonical = canonical_wedge(list(wedge), ambient, n)
        degrees.add(len(wedge))
        if sign == 0:
            continue
        if isinstance(coef, (int, Fraction)):
            coef = (sympy.Rational(coef.numerator, coef.denominator) if isinstance(coef, Fraction)
                    else sympy.Integer(coef))
        if isinstance(coef, sympy.Basic):
            merged[canonical] = merged.get(canonical, sympy.Integer(0)) + sign * coef
        elif callable(coef):
            f = coef
            callbacks.append(FormTerm(f if sign == 1 else (lambda X, Y, f=f: -f(X, Y)), canonical))
        else:
            raise MalformedInputError(f"Unsupported coefficient {coef!r}")
    if len(degrees) > 1:
        raise DegreeMismatchError(f"Terms of mixed degrees {sorted(degrees)}")
    symbolic = []
    for wedge in sorted(merged):
        coef = merged[wedge]
        if not coef.has(sympy.Piecewise):
            coef = sympy.expand(coef)
        if coef != 0:
            symbolic.append(FormTerm(coef, wedge))
    box = tuple((Fraction(lo), Fraction(hi)) for lo, hi in support_box) if support_box is not None else None
    if degree is None and degrees:
        degree = degrees.pop()
    return DifferentialForm(ambient, n, tuple(symbolic + callbacks), box, fiber_radius, degree)


def zero_form(ambient: str, n: int, degree: Optional[int] = None) -> DifferentialForm:
    return DifferentialForm(ambient, n, (), degree_hint=degree)


# numeric evaluation

_compile_cache = LRUCache(maxsize=1024)
_compile_lock = RLock()


@cached(cache=_compile_cache, lock=_compile_lock)
def _lambdify(expr: sympy.Expr, ambient: str, n: int) -> Callable:
    return sympy.lambdify(list(base_symbols(n)) + list(fiber_symbols(n, ambient)), expr, modules="numpy")


def evaluate_coefficient(term: FormTerm, ambient: str, n: int, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Coefficient values at base points X and fiber points Y (both shaped (N, n))."""
    count = X.shape[0]
    with np.errstate(all="ignore"):
        if term.is_symbolic:
            f = _lambdify(term.coef, ambient, n)
            values = f(*X.T, *Y.T)
        else:
            values = term.coef(X, Y)
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return np.broadcast_to(values, (count,)).astype(complex)
    return np.broadcast_to(values, (count,)).astype(float)


def evaluate_on_frame(form: DifferentialForm, x: np.ndarray, y: np.ndarray, frame: np.ndarray) -> complex:
    """Value of the form at (x, y) on the columns of a (2n x degree) frame."""
    n = form.n
    total = 0.0
    for term in form.terms:
        base, fiber = term.indices(form.ambient, n)
        rows = list(base) + [n + j for j in fiber]
        minor = np.linalg.det(frame[rows, :]) if rows else 1.0
        coef = evaluate_coefficient(term, form.ambient, n, x[None, :], y[None, :])[0]
        total += coef * minor
    return total


# calculus


def exterior_derivative(form: DifferentialForm) -> DifferentialForm:
    if not form.is_symbolic:
        raise RepresentationError("Exterior derivative needs symbolic coefficients")
    xs, ys = form.symbols()
    ftok = fiber_token(form.ambient)
    terms = []
    for term in form.terms:
        for i, s in enumerate(xs):
            terms.append((sympy.diff(term.coef, s), (f"dx{i + 1}",) + term.wedge))
        for i, s in enumerate(ys):
            terms.append((sympy.diff(term.coef, s), (f"{ftok}{i + 1}",) + term.wedge))
    return make_form(form.ambient, form.n, terms, form.support_box, form.fiber_radius, form.degree + 1)


def euler_verdier(form: DifferentialForm) -> DifferentialForm:
    """(-1)^n times the pullback under the fiberwise antipodal map xi -> -xi."""
    if form.ambient != CC:
        raise MalformedInputError("The Euler-Verdier involution acts on CC-space forms")
    n = form.n
    _, ys = form.symbols()
    flip = {y: -y for y in ys}
    terms = []
    for term in form.terms:
        vertical = len(term.wedge) - term.horizontal_degree
        sign = (-1) ** (n + vertical)
        if term.is_symbolic:
            terms.append((sign * term.coef.xreplace(flip), term.wedge))
        else:
            f = term.coef
            terms.append((lambda X, Y, f=f, sign=sign: sign * f(X, -Y), term.wedge))
    return make_form(CC, n, terms, form.support_box, form.fiber_radius, form.degree)


def forms_equal(a: DifferentialForm, b: DifferentialForm) -> bool:
    """Term-by-term symbolic equality."""
    if (a.ambient, a.n) != (b.ambient, b.n) or not (a.is_symbolic and b.is_symbolic):
        return False
    left = {t.wedge: t.coef for t in a.terms}
    right = {t.wedge: t.coef for t in b.terms}
    if set(left) != set(right):
        return False
    return all(sympy.simplify(left[w] - right[w]) == 0 for w in left)


def form_filtration_level(form: DifferentialForm) -> Optional[int]:
    """Largest i with the form in W_i: the minimal horizontal degree; None for callbacks."""
    if form.ambient != CC:
        raise MalformedInputError("Filtration levels are defined for CC-space forms")
    if not form.is_symbolic:
        return None
    if not form.terms:
        return form.n
    return min(form.horizontal_degrees())


def filtration_level_by_subspaces(form: DifferentialForm, samples: int = 24, seed: int = 0,
                                  tol: float = 1e-9) -> int:
    """Coordinate-free W_i test: the form restricted to n-planes meeting the vertical in
    more than n - i dimensions vanishes identically."""
    if form.ambient != CC:
        raise MalformedInputError("Filtration levels are defined for CC-space forms")
    n = form.n
    rng = np.random.default_rng(seed)
    points = [(rng.uniform(-1.0, 1.0, n), rng.normal(0.0, 0.5, n)) for _ in range(samples)]
    scale = max((abs(evaluate_on_frame(form, x, y, rng.normal(size=(2 * n, n)))) for x, y in points), default=0.0)
    if scale == 0.0:
        return n
    for i in range(n, 0, -1):
        vertical_dim = n - i + 1
        vanishes = True
        for x, y in points:
            vertical = np.vstack([np.zeros((n, vertical_dim)), rng.normal(size=(n, vertical_dim))])
            generic = rng.normal(size=(2 * n, n - vertical_dim))
            frame = np.hstack([vertical, generic])
            if abs(evaluate_on_frame(form, x, y, frame)) > tol * scale:
                vanishes = False
                break
        if vanishes:
            return i
    return 0


# envelopes and standard forms


def gaussian(ys: Sequence[sympy.Symbol], width=1) -> sympy.Expr:
    return sympy.exp(-sum(y ** 2 for y in ys) / sympy.nsimplify(width) ** 2)


def bump(t: sympy.Expr, lo, hi) -> sympy.Expr:
    """C-infinity bump supported in (lo, hi)."""
    lo, hi = sympy.nsimplify(lo), sympy.nsimplify(hi)
    tau = (2 * t - lo - hi) / (hi - lo)
    return sympy.Piecewise((sympy.exp(1 - 1 / (1 - tau ** 2)), tau ** 2 < 1), (0, True))


def box_bump(xs: Sequence[sympy.Symbol], box: Sequence[Tuple]) -> sympy.Expr:
    return sympy.Mul(*[bump(x, lo, hi) for x, (lo, hi) in zip(xs, box)])


def radial_bump(ys: Sequence[sympy.Symbol], radius) -> sympy.Expr:
    r2 = sum(y ** 2 for y in ys) / sympy.nsimplify(radius) ** 2
    return sympy.Piecewise((sympy.exp(1 - 1 / (1 - r2)), r2 < 1), (0, True))


def polynomial_bump(ys: Sequence[sympy.Symbol], radius, power: int = 4) -> sympy.Expr:
    """(1 - |y|^2 / radius^2)^power on the ball, C^(power-1) across its boundary."""
    r2 = sum(y ** 2 for y in ys) / sympy.nsimplify(radius) ** 2
    return sympy.Piecewise(((1 - r2) ** power, r2 < 1), (0, True))


def sphere_area(n: int) -> sympy.Expr:
    """|S^{n-1}|, with |S^0| = 2."""
    return 2 * sympy.pi ** sympy.Rational(n, 2) / sympy.gamma(sympy.Rational(n, 2))


def _permutation_sign(perm: Sequence[int]) -> int:
    return (-1) ** sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])


def lipschitz_killing_form(n: int, k: int) -> DifferentialForm:
    """N-space form whose integral over N(P) is the k-th intrinsic volume (0 <= k < n)."""
    if not 0 <= k < n:
        raise MalformedInputError(f"Lipschitz-Killing forms exist for 0 <= k < n, got k={k}")
    _, us = base_symbols(n), fiber_symbols(n, N)
    c = 1 / (sympy.factorial(k) * sympy.factorial(n - 1 - k) * sphere_area(n - k))
    terms = []
    for perm in itertools.permutations(range(n)):
        wedge = [f"dx{perm[i] + 1}" for i in range(1, k + 1)] + [f"du{perm[i] + 1}" for i in range(k + 1, n)]
        terms.append((_permutation_sign(perm) * c * us[perm[0]], wedge))
    return make_form(N, n, terms, degree=n - 1)


def gauss_sphere_form(n: int) -> DifferentialForm:
    """Normalized pullback of the volume form of S^{n-1}."""
    return lipschitz_killing_form(n, 0)


def cc_intrinsic_volume_form(n: int, k: int, radius: Optional[float] = None) -> DifferentialForm:
    """Gaussian-weighted CC-space form whose integral over CC(P) is the k-th intrinsic volume."""
    if not 0 <= k <= n:
        raise MalformedInputError(f"Intrinsic volume index out of range: k={k}")
    _, ys = base_symbols(n), fiber_symbols(n, CC)
    weight = gaussian(ys)
    c = (-1) ** (n - k) / (sympy.factorial(k) * sympy.factorial(n - k) * sympy.pi ** sympy.Rational(n - k, 2))
    terms = []
    for perm in itertools.permutations(range(n)):
        wedge = [f"dx{perm[i] + 1}" for i in range(k)] + [f"dxi{perm[i] + 1}" for i in range(k, n)]
        terms.append((_permutation_sign(perm) * c * weight, wedge))
    return make_form(CC, n, terms, fiber_radius=radius or settings.fiber_radius, degree=n)


def density_cc_form(n: int, density: sympy.Expr) -> DifferentialForm:
    """f(x) dx1 ^ ... ^ dxn, supported on the zero section by a Gaussian in the fiber."""
    _, ys = base_symbols(n), fiber_symbols(n, CC)
    return make_form(CC, n, [(density * gaussian(ys), [f"dx{i + 1}" for i in range(n)])],
                     fiber_radius=settings.fiber_radius, degree=n)


# random forms for property checks


def _random_polynomial(rng: np.random.Generator, symbols: Sequence[sympy.Symbol], degree: int) -> sympy.Expr:
    expr = sympy.Integer(int(rng.integers(-3, 4)))
    for _ in range(3):
        powers = rng.integers(0, degree + 1, size=len(symbols))
        if powers.sum() > degree:
            continue
        monomial = sympy.Mul(*[s ** int(p) for s, p in zip(symbols, powers)])
        expr += sympy.Rational(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) * monomial
    return expr


def random_wedges(ambient: str, n: int, degree: int, min_horizontal: int = 0) -> List[Tuple[str, ...]]:
    ftok = fiber_token(ambient)
    tokens = [f"dx{i + 1}" for i in range(n)] + [f"{ftok}{i + 1}" for i in range(n)]
    return [w for w in itertools.combinations(tokens, degree)
            if sum(1 for t in w if t.startswith("dx") and not t.startswith("dxi")) >= min_horizontal]


def random_form(ambient: str, n: int, degree: int, seed: int, min_horizontal: int = 0,
                max_terms: int = 3, poly_degree: int = 2, translation_invariant: bool = False,
                envelope: str = "gaussian") -> DifferentialForm:
    """Random polynomial form times a fiber envelope for CC-space: gaussian, a C-infinity bump
    or a polynomial bump, the last integrated exactly by the radial rule."""
    rng = np.random.default_rng(seed)
    xs, ys = base_symbols(n), fiber_symbols(n, ambient)
    wedges = random_wedges(ambient, n, degree, min_horizontal)
    if not wedges:
        return zero_form(ambient, n, degree)
    picks = rng.choice(len(wedges), size=min(max_terms, len(wedges)), replace=False)
    radius = None
    weight = sympy.Integer(1)
    if ambient == CC:
        if envelope == "bump":
            radius = 3.0
            weight = radial_bump(ys, 3)
        elif envelope == "polynomial":
            radius = 3.0
            weight = polynomial_bump(ys, 3)
        else:
            radius = settings.fiber_radius
            weight = gaussian(ys)
    variables = list(ys) if translation_invariant else list(xs) + list(ys)
    terms = [(_random_polynomial(rng, variables, poly_degree) * weight, wedges[int(i)]) for i in picks]
    return make_form(ambient, n, terms, fiber_radius=radius, degree=degree)

