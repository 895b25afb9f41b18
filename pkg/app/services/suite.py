"""Property suite: invariant families checked over a polytope corpus, reported as JSON."""
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from threading import Lock
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import sympy

from . import complexes as cx
from . import measure_engine as me
from .cycles import characteristic_cycle, flip_cell, integrate_chain, normal_cycle, stokes_check
from .errors import ValuationLabError
from .experiments import convergence_experiment, min_order
from .forms import CC, N, euler_verdier, form_filtration_level, forms_equal, gauss_sphere_form, random_form
from .geometry_core import Polytope, affine_image, convex_hull, cube, external_angle, random_hull
from .quadrature import QuadratureRule
from .serialization import SuiteConfig
from .valuations import (CC_FORM, PAIR, cc_valuation, default_probes, euler_valuation, evaluate, filtration_degree,
                         graded_sign_residual, intrinsic_volume, intrinsic_volume_valuation, mcmullen_decompose,
                         steiner, tube_volume_monte_carlo, verdier_identity_check, volume_valuation)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES: Dict[str, float] = {
    "angle-sum": 1e-4,
    "gauss-degree": 1e-6,
    "intrinsic-volumes": 1e-9,
    "steiner": 5e-3,
    "mcmullen": 1e-7,
    "filtration": 1e-8,
    "verdier-identity": 1e-8,
    "graded-sign": 1e-6,
    "stokes": 1e-8,
    "convergence": 1e-9,
    "representation": 1e-7,
}


@dataclass
class CheckResult:
    item: str
    passed: bool
    residual: Optional[float] = 0.0
    detail: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"item": self.item, "passed": self.passed, "residual": self.residual}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class FamilyResult:
    name: str
    exact: bool
    checks: List[CheckResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {"family": self.name, "exact": self.exact, "passed": self.passed,
               "checks": [c.to_dict() for c in self.checks]}
        if include_timings:
            out["seconds"] = round(self.seconds, 3)
        return out


Corpus = List[Tuple[str, Polytope]]


@dataclass
class SuiteContext:
    config: SuiteConfig
    corpus: Corpus
    rule: QuadratureRule

    def tol(self, family: str) -> float:
        if self.config.tol is not None:
            return self.config.tol
        return self.config.tolerances.get(family, DEFAULT_TOLERANCES[family])

    def approx(self, family: str, item: str, residual: float) -> CheckResult:
        # strict: a zero tolerance fails every approximate check
        return CheckResult(item, bool(residual < self.tol(family)), float(residual))

    def planar(self) -> Corpus:
        return [(name, P) for name, P in self.corpus if P.ambient_dim == 2 and P.dim == 2]

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, salt])


def _exact(item: str, ok: bool, detail: Optional[str] = None) -> CheckResult:
    return CheckResult(item, bool(ok), 0.0 if ok else 1.0, None if ok else detail)


def _exact_volume(P: Polytope) -> Fraction:
    return P.relative_volume() if P.dim == P.ambient_dim else Fraction(0)


# exact families


def face_lattice(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.corpus:
        euler = sum((-1) ** k * len(P.faces_of_dim(k)) for k in range(P.dim + 1))
        out.append(_exact(name, euler == 1, f"alternating face count {euler}"))
    return out


def subdivision(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.planar():
        coarse = cx.face_complex(P)
        fine = cx.cone_triangulate(coarse)
        out.append(_exact(f"{name}/verify", cx.verify_subdivision(fine).passed))
        out.append(_exact(f"{name}/refines", cx.is_refinement(fine, coarse).passed))
    return out


def _random_sets(D: cx.Subdivision, rng: np.random.Generator, count: int) -> List[cx.ComplexSet]:
    sets = []
    for _ in range(count):
        size = int(rng.integers(0, min(4, len(D.cells)) + 1))
        members = rng.choice(len(D.cells), size=size, replace=False).tolist()
        sets.append(cx.ComplexSet.of(D, [int(m) for m in members]))
    return sets


def _random_complex(rng: np.random.Generator) -> sympy.Expr:
    return sympy.Integer(int(rng.integers(-5, 6))) + sympy.I * int(rng.integers(-5, 6))


def _same(a, b) -> bool:
    return sympy.expand(sympy.sympify(a) - sympy.sympify(b)) == 0


def _uniqueness(D: cx.Subdivision, rng: np.random.Generator) -> Tuple[bool, bool]:
    """Agreement across five presentation orders, and across one coning refinement."""
    a, b = _random_complex(rng), _random_complex(rng)

    def generator(c: Polytope) -> sympy.Expr:
        volume = _exact_volume(c)
        return a + b * sympy.Rational(volume.numerator, volume.denominator)

    mu = me.extend(D, me.GeneratorTable.from_function(D, generator))
    others = [me.extend(D, me.GeneratorTable.from_function(D, generator), check=False,
                        order=rng.permutation(len(D.cells)).tolist()) for _ in range(5)]
    sets = _random_sets(D, rng, 20) + [cx.ComplexSet.of(D, range(len(D.cells)))]
    orders = all(_same(o.evaluate(X), mu.evaluate(X)) for o in others for X in sets)
    fine = cx.cone_triangulate(D)
    mu_fine = me.extend(fine, me.GeneratorTable.from_function(fine, generator), check=False)
    refinement = True
    for X in sets:
        members = [j for j, c in enumerate(fine.cells) if any(D.cells[i].contains_polytope(c) for i in X.reduced)]
        refinement &= _same(mu_fine.evaluate(cx.ComplexSet.of(fine, members)), mu.evaluate(X))
    return orders, refinement


def random_triangulation(n: int, seed: int, points: int = 5) -> cx.Subdivision:
    """Pulling triangulation of a random hull with all its faces as cells."""
    P = random_hull(n, points, seed)
    return cx.Subdivision.build(P, [F for s in P.triangulate() for F in _simplex_cells(P, s)])


def measure_uniqueness(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.planar():
        orders, refinement = _uniqueness(cx.cone_triangulate(cx.face_complex(P)), ctx.rng(1))
        out.append(_exact(f"{name}/orders", orders))
        out.append(_exact(f"{name}/refinement", refinement))
    rng = ctx.rng(11)
    failed: Dict[str, List[int]] = {"orders": [], "refinement": []}
    for t in range(ctx.config.triangulations):
        D = random_triangulation(2 + t % 2, int(rng.integers(0, 2 ** 31)))
        for key, ok in zip(("orders", "refinement"), _uniqueness(D, rng)):
            if not ok:
                failed[key].append(t)
    for key, bad in failed.items():
        out.append(_exact(f"random-triangulations/{key}", not bad, f"failing triangulations {bad}"))
    return out


def additivity(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.planar():
        rng = ctx.rng(2)
        D = cx.Subdivision.build(P, [F for s in P.triangulate() for F in _simplex_cells(P, s)])
        if len(D.cells) > 12:
            continue
        table = me.GeneratorTable({i: Fraction(int(rng.integers(-9, 10))) for i in range(len(D.cells))})
        mu = me.extend(D, table)
        sets = _random_sets(D, rng, 12)
        ok = all(mu.evaluate(A.union(B)) + mu.evaluate(A.intersection(B)) == mu.evaluate(A) + mu.evaluate(B)
                 for A in sets for B in sets)
        ok &= all(mu.evaluate(X) == me.atom_evaluate(mu, X) for X in sets)
        out.append(_exact(name, ok))
    return out


def _simplex_cells(P: Polytope, simplex: Tuple[int, ...]) -> List[Polytope]:
    S = convex_hull([P.vertices[i] for i in simplex])
    return [S.face_polytope(f) for f in S.faces]


def euler_characteristic(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.planar():
        rng = ctx.rng(3)
        D = cx.cone_triangulate(cx.face_complex(P))
        ok = True
        for X in _random_sets(D, rng, 20):
            simplicial = sum((-1) ** D.cells[i].dim for i in X.downset)
            ok &= me.euler_characteristic(X) == simplicial
        out.append(_exact(name, ok))
        # cells whose relative interior lies in a proper face form the boundary circle, chi = 0
        circle = cx.ComplexSet.of(D, [i for i, c in enumerate(D.cells)
                                      if c.dim < P.dim and P.face_of_point(c.barycenter).dim < P.dim])
        chi = me.euler_characteristic(circle)
        out.append(_exact(f"{name}/boundary", chi == 0, f"chi = {chi}"))
    return out


def verdier_involution(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for n in (1, 2, 3):
        for seed in range(3):
            omega = random_form(CC, n, n, seed=ctx.config.seed + seed)
            twice = euler_verdier(euler_verdier(omega))
            same_level = form_filtration_level(euler_verdier(omega)) == form_filtration_level(omega)
            ok = forms_equal(twice, omega) and same_level
            out.append(_exact(f"n{n}/seed{seed}", ok))
    return out


# approximate families


def angle_sum(ctx: SuiteContext) -> List[CheckResult]:
    return [ctx.approx("angle-sum", name, abs(sum(external_angle(v, P) for v in P.faces_of_dim(0)) - 1.0))
            for name, P in ctx.corpus]


def gauss_degree(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.corpus:
        value = integrate_chain(normal_cycle(P), gauss_sphere_form(P.ambient_dim), ctx.rule)
        out.append(ctx.approx("gauss-degree", name, abs(value - 1.0)))
    return out


def intrinsic_volumes(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.corpus:
        n = P.ambient_dim
        residual = abs(intrinsic_volume(P, 0) - 1.0) + abs(intrinsic_volume(P, n) - P.volume())
        doubled = affine_image(P, 2, [0] * n)
        for k in range(n + 1):
            vk = intrinsic_volume(P, k)
            residual = max(residual, abs(intrinsic_volume(doubled, k) - 2 ** k * vk) / max(1.0, abs(vk)))
        out.append(ctx.approx("intrinsic-volumes", name, residual))
    return out


def steiner_family(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.corpus:
        for eps in (0.1, 0.5):
            closed = steiner(P, eps)
            estimate, _ = tube_volume_monte_carlo(P, eps, ctx.config.mc_samples, ctx.config.seed)
            out.append(ctx.approx("steiner", f"{name}/eps={eps}", abs(closed - estimate) / closed))
    return out


def _translation_invariant_valuations(ctx: SuiteContext, n: int):
    valuations = [volume_valuation(n), euler_valuation(n)]
    for seed in range(3):
        valuations.append(cc_valuation(random_form(CC, n, n, seed=ctx.config.seed + seed,
                                                   translation_invariant=True), name=f"random{seed}"))
    return valuations


def mcmullen(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.planar():
        for phi in _translation_invariant_valuations(ctx, 2):
            try:
                fit = mcmullen_decompose(phi, P, rule=ctx.rule)
                doubled = mcmullen_decompose(phi, affine_image(P, 2, [0, 0]), rule=ctx.rule)
            except ValuationLabError as e:
                out.append(CheckResult(f"{name}/{phi.name}", False, None, e.message))
                continue
            residual = fit.residual / max(1.0, fit.scale)
            for k, (c, c2) in enumerate(zip(fit.coefficients, doubled.coefficients)):
                residual = max(residual, abs(c2 - 2 ** k * c) / max(1.0, 2 ** k * abs(c)))
            out.append(ctx.approx("mcmullen", f"{name}/{phi.name}", residual))
    return out


def filtration(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    # phi(tK + x) is exactly polynomial in t for translation-invariant forms, at any quadrature order
    rule = QuadratureRule(order=min(ctx.rule.order, 4))
    for n in (2, 3):
        probes = default_probes(n, ctx.config.filtration_probes, ctx.config.seed)
        if not probes:
            continue
        for level in range(n + 1):
            omega = random_form(CC, n, n, seed=ctx.config.seed + level, min_horizontal=level,
                                translation_invariant=True)
            phi = cc_valuation(omega, name=f"level{level}")
            fits = [mcmullen_decompose(phi, K, x, rule=rule) for K, x in probes]
            scale = max(max(f.scale for f in fits), 1.0)
            residual = max((abs(f.coefficients[j]) for f in fits for j in range(level)), default=0.0) / scale
            out.append(ctx.approx("filtration", f"n{n}/level{level}", residual))
        for phi, expected in ((volume_valuation(n), n), (euler_valuation(n), 0)):
            report = filtration_degree(phi, probes, rule=rule)
            ok = report.degree == expected and report.is_density == (expected == n)
            out.append(ctx.approx("filtration", f"n{n}/{phi.name}-degree", 0.0 if ok else float("inf")))
    return out


def _verdier_bodies(ctx: SuiteContext) -> Corpus:
    bodies = [(name, P) for name, P in ctx.corpus if P.ambient_dim <= 2]
    return bodies + [("segment1", cube(1)), ("segment2", convex_hull([(0, 0), (1, Fraction(1, 2))]))]


def verdier_identity(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in _verdier_bodies(ctx):
        n = P.ambient_dim
        residual = 0.0
        for seed in range(ctx.config.forms_per_body):
            omega = random_form(CC, n, n, seed=ctx.config.seed + seed, envelope="polynomial")
            check = verdier_identity_check(P, omega, ctx.rule)
            residual = max(residual, check.residual / max(1.0, abs(check.lhs)))
        out.append(ctx.approx("verdier-identity", name, residual))
    return out


def graded_sign(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.planar()[:1]:
        for phi in _translation_invariant_valuations(ctx, 2)[2:]:
            fit = mcmullen_decompose(phi, P, rule=ctx.rule)
            for k in range(3):
                residual = graded_sign_residual(phi, P, k, ctx.rule) / max(1.0, fit.scale)
                out.append(ctx.approx("graded-sign", f"{name}/{phi.name}/c{k}", residual))
    return out


def stokes(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    seeds = [ctx.config.seed + s for s in range(ctx.config.forms_per_body)]
    for name, P in ctx.corpus:
        n = P.ambient_dim
        if n >= 2:
            chain = normal_cycle(P)
            residual = max((stokes_check(chain, random_form(N, n, n - 2, seed=s), ctx.rule) for s in seeds),
                           default=0.0)
            out.append(ctx.approx("stokes", f"{name}/N", residual))
        if n > 2:
            continue
        chain = characteristic_cycle(P)
        for envelope in ("gaussian", "polynomial"):
            residual = max((stokes_check(chain, random_form(CC, n, n - 1, seed=s, envelope=envelope), ctx.rule)
                            for s in seeds), default=0.0)
            out.append(ctx.approx("stokes", f"{name}/CC/{envelope}", residual))
        # flipping the zero-section cell opens the cycle
        top = next(i for i, cell in enumerate(chain.cells) if cell.base_face.dim == P.dim)
        control = max(stokes_check(flip_cell(chain, top),
                                   random_form(CC, n, n - 1, seed=ctx.config.seed + s, min_horizontal=n - 1),
                                   ctx.rule) for s in range(3))
        out.append(CheckResult(f"{name}/flipped-control", control > 1e-3, float(control)))
    return out


def convergence(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for k in (1, 2):
        frame = convergence_experiment("disk", [8, 16, 32, 64], k)
        out.append(ctx.approx("convergence", f"disk/k={k}", max(0.0, 1.9 - min_order(frame))))
    return out


def representation(ctx: SuiteContext) -> List[CheckResult]:
    out = []
    for name, P in ctx.planar():
        for k in range(3):
            phi = intrinsic_volume_valuation(2, k)
            pair = evaluate(phi, P, ctx.rule, PAIR)
            cc = evaluate(phi, P, ctx.rule, CC_FORM)
            residual = max(abs(pair - cc), abs(pair - intrinsic_volume(P, k)))
            out.append(ctx.approx("representation", f"{name}/V{k}", residual))
    return out


FAMILIES: Dict[str, Tuple[bool, Callable[[SuiteContext], List[CheckResult]]]] = {
    "face-lattice": (True, face_lattice),
    "subdivision": (True, subdivision),
    "measure-uniqueness": (True, measure_uniqueness),
    "additivity": (True, additivity),
    "euler-characteristic": (True, euler_characteristic),
    "verdier-involution": (True, verdier_involution),
    "angle-sum": (False, angle_sum),
    "gauss-degree": (False, gauss_degree),
    "intrinsic-volumes": (False, intrinsic_volumes),
    "steiner": (False, steiner_family),
    "mcmullen": (False, mcmullen),
    "filtration": (False, filtration),
    "verdier-identity": (False, verdier_identity),
    "graded-sign": (False, graded_sign),
    "stokes": (False, stokes),
    "convergence": (False, convergence),
    "representation": (False, representation),
}


def _load_corpus(config: SuiteConfig) -> Tuple[Corpus, List[dict]]:
    corpus, diagnostics = [], []
    for item in config.corpus:
        try:
            corpus.append((item.label(), item.to_polytope()))
        except ValuationLabError as e:
            logger.warning(f"Corpus item {item.label()} rejected: {e.message}")
            diagnostics.append({"item": item.label(), **e.to_dict()})
    return corpus, diagnostics


def _run_family(name: str, ctx: SuiteContext) -> FamilyResult:
    exact, runner = FAMILIES[name]
    start = time.perf_counter()
    try:
        checks = runner(ctx)
    except ValuationLabError as e:
        logger.warning(f"Family {name} raised {type(e).__name__}: {e.message}", exc_info=True)
        checks = [CheckResult("family", False, None, e.message)]
    result = FamilyResult(name, exact, checks, time.perf_counter() - start)
    logger.info(f"Family {name}: {'pass' if result.passed else 'FAIL'} ({len(checks)} checks)")
    return result


def run_suite(config: SuiteConfig, log_path: Optional[Path] = None) -> dict:
    """Run every selected family; the report is ordered by family and free of timings by default."""
    corpus, diagnostics = _load_corpus(config)
    if not config.corpus:
        return {"seed": config.seed, "families": [], "diagnostics": [], "passed": True}
    names = config.families or list(FAMILIES)
    unknown = [n for n in names if n not in FAMILIES]
    if unknown:
        diagnostics.append({"item": "families", "error": "UnknownFamily", "message": ", ".join(unknown)})
        names = [n for n in names if n in FAMILIES]
    ctx = SuiteContext(config, corpus, QuadratureRule(order=config.quad_order))
    lock = Lock()
    results: Dict[str, FamilyResult] = {}
    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        futures = {pool.submit(_run_family, name, ctx): name for name in names}
        for future in as_completed(futures):
            result = future.result()
            results[result.name] = result
            if log_path is not None:
                with lock, open(log_path, "a") as log:
                    log.write(json.dumps(result.to_dict(include_timings=True), sort_keys=True) + "\n")
    families = [results[name].to_dict(config.include_timings) for name in names]
    passed = all(f["passed"] for f in families) and not diagnostics
    return {"seed": config.seed, "families": families, "diagnostics": diagnostics, "passed": passed}


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
