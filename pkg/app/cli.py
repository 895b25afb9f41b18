"""Batch front end: `python -m app.cli <verb> ...`.

Exit codes: 0 success, 1 a check or suite family failed, 2 domain or input error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

import pandas as pd

from .config import settings
from .services import complexes as cx
from .services import measure_engine as me
from .services import valuations as val
from .services.cycles import characteristic_cycle, normal_cycle, stokes_check
from .services.errors import ValuationLabError
from .services.experiments import convergence_experiment, steiner_experiment
from .services.quadrature import QuadratureRule
from .services.serialization import (ComplexSetModel, CoverModel, FormModel, GeneratorTableModel, PolytopeModel,
                                     SubdivisionModel, SuiteConfig, ValuationModel, chain_summary, complex_pair,
                                     form_to_dict, load_json, load_model, parse_model, polytope_summary)
from .services.suite import dump_report, run_suite

logger = logging.getLogger(__name__)


def _emit(data: Any, out: Optional[str]) -> None:
    text = json.dumps(data, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _emit_frame(frame: pd.DataFrame, out: Optional[str]) -> None:
    frame.to_csv(out if out else sys.stdout, index=False)


def _tol(args) -> float:
    return args.tol if args.tol is not None else settings.tol


def _seed(args) -> int:
    return args.seed if args.seed is not None else settings.seed


def _rule(args) -> QuadratureRule:
    return QuadratureRule(order=args.quad_order or settings.quad_order, tolerance=_tol(args))


def _polytope(path: str):
    return load_model(path, PolytopeModel).to_polytope()


# hull and subdivisions


def cmd_hull(args) -> int:
    data = load_json(args.file)
    if isinstance(data, dict) and "points" in data:
        data = {"dim": data.get("dim", len(data["points"][0]) if data["points"] else 0), "vertices": data["points"]}
    P = parse_model(data, PolytopeModel, source=args.file).to_polytope()
    _emit(polytope_summary(P), args.out)
    return 0


def cmd_subdiv_verify(args) -> int:
    report = cx.verify_subdivision(load_model(args.file, SubdivisionModel).to_subdivision())
    _emit(report.to_dict(), args.out)
    return 0 if report.passed else 1


def cmd_subdiv_intersect(args) -> int:
    D = load_model(args.first, SubdivisionModel).to_subdivision()
    D2 = load_model(args.second, SubdivisionModel).to_subdivision()
    _emit(SubdivisionModel.from_subdivision(cx.intersect_subdivisions(D, D2)).model_dump(), args.out)
    return 0


def cmd_subdiv_triangulate(args) -> int:
    D = load_model(args.file, SubdivisionModel).to_subdivision()
    _emit(SubdivisionModel.from_subdivision(cx.cone_triangulate(D, args.mode)).model_dump(), args.out)
    return 0


def cmd_subdiv_reduce(args) -> int:
    X = load_model(args.file, ComplexSetModel).to_complex_set()
    reduced = cx.reduced_decomposition(X)
    _emit({"reduced": reduced,
           "cells": [PolytopeModel.from_polytope(X.subdivision.cells[i]).model_dump() for i in reduced]}, args.out)
    return 0


# measures


def cmd_measure_extend(args) -> int:
    model = load_model(args.subdivision, SubdivisionModel)
    D = model.to_subdivision()
    table = load_model(args.table, GeneratorTableModel).to_table(D, [c.to_polytope() for c in model.cells])
    mu = me.extend(D, table, check=not args.no_check)
    total = mu.evaluate(cx.ComplexSet.of(D, range(len(D.cells))))
    _emit({"mode": mu.mode, "total": complex_pair(total),
           "atoms": {str(i): complex_pair(v) for i, v in me.atom_values(mu).items()}}, args.out)
    return 0


def cmd_measure_eval(args) -> int:
    model = load_model(args.set, ComplexSetModel)
    X = model.to_complex_set()
    file_cells = [c.to_polytope() for c in model.subdivision.cells]
    table = load_model(args.table, GeneratorTableModel).to_table(X.subdivision, file_cells)
    mu = me.extend(X.subdivision, table, check=not args.no_check)
    _emit({"mode": mu.mode, "value": complex_pair(me.evaluate(mu, X))}, args.out)
    return 0


def cmd_measure_glue(args) -> int:
    cover_model = load_model(args.cover, CoverModel)
    cover = me.LocalValuationCover(cover_model.boxes, [e.to_callable() for e in cover_model.evaluators],
                                   tol=_tol(args))
    value = me.glue(cover, _polytope(args.polytope), seed=_seed(args))
    _emit({"value": complex_pair(value)}, args.out)
    return 0


# cycles


def cmd_cycle_cc(args) -> int:
    _emit(chain_summary(characteristic_cycle(_polytope(args.file))), args.out)
    return 0


def cmd_cycle_nc(args) -> int:
    _emit(chain_summary(normal_cycle(_polytope(args.file))), args.out)
    return 0


def cmd_cycle_stokes(args) -> int:
    P = _polytope(args.polytope)
    chain = characteristic_cycle(P) if args.cycle == "cc" else normal_cycle(P)
    beta = load_model(args.form, FormModel).to_form()
    residual = stokes_check(chain, beta, _rule(args))
    _emit({"residual": residual, "passed": residual < _tol(args)}, args.out)
    return 0 if residual < _tol(args) else 1


# valuations


def _valuation(path: str) -> val.Valuation:
    return load_model(path, ValuationModel).to_valuation()


def cmd_val_eval(args) -> int:
    value = val.evaluate(_valuation(args.valuation), _polytope(args.polytope), _rule(args), args.via)
    _emit({"value": complex_pair(value)}, args.out)
    return 0


def cmd_val_decompose(args) -> int:
    phi = _valuation(args.valuation)
    fit = val.mcmullen_decompose(phi, _polytope(args.polytope), args.x, rule=_rule(args))
    if args.samples:
        fit.table().to_csv(args.samples, index=False)
    _emit({"coefficients": [complex_pair(c) for c in fit.coefficients], "residual": fit.residual}, args.out)
    return 0


def cmd_val_filtration(args) -> int:
    phi = _valuation(args.valuation)
    report = val.filtration_degree(phi, val.default_probes(phi.n, args.probes, _seed(args)), tol=_tol(args),
                                   rule=_rule(args))
    _emit({"degree": report.degree, "is_zero": report.is_zero, "is_density": report.is_density,
           "few_probes": report.few_probes,
           "coefficients": [[complex_pair(c) for c in row] for row in report.coefficients]}, args.out)
    return 0


def cmd_val_verdier_check(args) -> int:
    check = val.verdier_identity_check(_polytope(args.polytope), load_model(args.form, FormModel).to_form(),
                                       _rule(args))
    _emit({"lhs": complex_pair(check.lhs), "rhs": complex_pair(check.rhs), "residual": check.residual},
          args.out)
    return 0 if check.residual < _tol(args) else 1


def cmd_val_split(args) -> int:
    plus, minus = val.eigen_split(_valuation(args.valuation))
    _emit({"plus": form_to_dict(plus.cc_form), "minus": form_to_dict(minus.cc_form)}, args.out)
    return 0


def cmd_val_steiner(args) -> int:
    P = _polytope(args.polytope)
    frame = steiner_experiment([(Path(args.polytope).stem, P)], args.eps, args.samples, _seed(args))
    _emit_frame(frame, args.out)
    return 0


# experiments


def cmd_suite(args) -> int:
    config = load_model(args.config, SuiteConfig) if args.config else SuiteConfig()
    overrides = {key: value for key, value in (("seed", args.seed), ("quad_order", args.quad_order))
                 if value is not None}
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.timings:
        overrides["include_timings"] = True
    config = config.model_copy(update=overrides)
    log_path = Path(args.log) if args.log else (Path(args.out).with_suffix(".jsonl") if args.out else None)
    report = run_suite(config, log_path)
    text = dump_report(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if report["passed"] else 1


def cmd_converge(args) -> int:
    _emit_frame(convergence_experiment(args.body, args.m, args.k), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vallab", description="Polyhedral valuation laboratory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None,
                        help="defaults to VALLAB_TOL; replaces every suite tolerance")
    parser.add_argument("--quad-order", type=int, default=None)
    parser.add_argument("--out", help="output file (stdout when omitted)")
    verbs = parser.add_subparsers(dest="verb", required=True)

    hull = verbs.add_parser("hull", help="convex hull, facets and f-vector of a point file")
    hull.add_argument("file")
    hull.set_defaults(handler=cmd_hull)

    subdiv = verbs.add_parser("subdiv").add_subparsers(dest="action", required=True)
    p = subdiv.add_parser("verify")
    p.add_argument("file")
    p.set_defaults(handler=cmd_subdiv_verify)
    p = subdiv.add_parser("intersect")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(handler=cmd_subdiv_intersect)
    p = subdiv.add_parser("triangulate")
    p.add_argument("file")
    p.add_argument("--mode", choices=cx.MODES, default="apex")
    p.set_defaults(handler=cmd_subdiv_triangulate)
    p = subdiv.add_parser("reduce")
    p.add_argument("file", help="complex set file")
    p.set_defaults(handler=cmd_subdiv_reduce)

    measure = verbs.add_parser("measure").add_subparsers(dest="action", required=True)
    p = measure.add_parser("extend")
    p.add_argument("subdivision")
    p.add_argument("table")
    p.add_argument("--no-check", action="store_true")
    p.set_defaults(handler=cmd_measure_extend)
    p = measure.add_parser("eval")
    p.add_argument("set")
    p.add_argument("table")
    p.add_argument("--no-check", action="store_true")
    p.set_defaults(handler=cmd_measure_eval)
    p = measure.add_parser("glue")
    p.add_argument("cover")
    p.add_argument("polytope")
    p.set_defaults(handler=cmd_measure_glue)

    cycle = verbs.add_parser("cycle").add_subparsers(dest="action", required=True)
    p = cycle.add_parser("cc")
    p.add_argument("file")
    p.set_defaults(handler=cmd_cycle_cc)
    p = cycle.add_parser("nc")
    p.add_argument("file")
    p.set_defaults(handler=cmd_cycle_nc)
    p = cycle.add_parser("stokes")
    p.add_argument("polytope")
    p.add_argument("form")
    p.add_argument("--cycle", choices=("cc", "nc"), default="cc")
    p.set_defaults(handler=cmd_cycle_stokes)

    valuation = verbs.add_parser("val").add_subparsers(dest="action", required=True)
    p = valuation.add_parser("eval")
    p.add_argument("valuation")
    p.add_argument("polytope")
    p.add_argument("--via", choices=(val.PAIR, val.CC_FORM, val.ORACLE))
    p.set_defaults(handler=cmd_val_eval)
    p = valuation.add_parser("decompose")
    p.add_argument("valuation")
    p.add_argument("polytope")
    p.add_argument("--x", nargs="+", help="translation vector")
    p.add_argument("--samples", help="CSV file for the t -> phi(tK + x) samples")
    p.set_defaults(handler=cmd_val_decompose)
    p = valuation.add_parser("filtration")
    p.add_argument("valuation")
    p.add_argument("--probes", type=int, default=10)
    p.set_defaults(handler=cmd_val_filtration)
    p = valuation.add_parser("verdier-check")
    p.add_argument("polytope")
    p.add_argument("form")
    p.set_defaults(handler=cmd_val_verdier_check)
    p = valuation.add_parser("split")
    p.add_argument("valuation")
    p.set_defaults(handler=cmd_val_split)
    p = valuation.add_parser("steiner")
    p.add_argument("polytope")
    p.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.5])
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(handler=cmd_val_steiner)

    suite = verbs.add_parser("suite", help="run the invariant families and write a JSON report")
    suite.add_argument("config", nargs="?")
    suite.add_argument("--log", help="JSON-lines progress log")
    suite.add_argument("--timings", action="store_true")
    suite.set_defaults(handler=cmd_suite)

    converge = verbs.add_parser("converge", help="intrinsic volumes of polytope approximants of a round body")
    converge.add_argument("--body", choices=("disk", "ball"), default="disk")
    converge.add_argument("--k", type=int, default=1)
    converge.add_argument("--m", type=int, nargs="+", default=[8, 16, 32, 64])
    converge.set_defaults(handler=cmd_converge)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ValuationLabError as e:
        logger.debug(f"{type(e).__name__}: {e.message}", exc_info=True)
        print(json.dumps(e.to_dict(), sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
