"""File formats and request bodies.

Rationals travel as "p/q" strings, complex values as ["re", "im"] string pairs.
"""
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import sympy
from pydantic import BaseModel, Field, ValidationError

from ..config import settings
from . import rational as rq
from .complexes import ComplexSet, Subdivision
from .cycles import CycleChain, chain_to_dict
from .errors import DimensionMismatchError, MalformedInputError
from .forms import CC, DifferentialForm, base_symbols, fiber_symbols, gaussian, make_form
from .geometry_core import Polytope, convex_hull, cube, random_hull, simplex
from .measure_engine import GeneratorTable
from .valuations import (Valuation, cc_valuation, euler_valuation, intrinsic_volume, intrinsic_volume_valuation,
                         volume_valuation)

logger = logging.getLogger(__name__)

Rational = Union[str, int]


# scalars


def complex_pair(value: Any) -> List[str]:
    if isinstance(value, Fraction):
        return [rq.fraction_str(value), "0"]
    if isinstance(value, int):
        return [str(value), "0"]
    if isinstance(value, sympy.Basic):
        re, im = value.as_real_imag()
        return [str(re), str(im)]
    value = complex(value)
    return [repr(value.real), repr(value.imag)]


def parse_complex_pair(pair: List[str]) -> Any:
    """Exact when both parts parse as rationals, float complex otherwise."""
    if len(pair) != 2:
        raise MalformedInputError("Complex values are [re, im] pairs", value=pair)
    try:
        re, im = rq.to_fraction(pair[0]), rq.to_fraction(pair[1])
    except MalformedInputError:
        try:
            return complex(float(pair[0]), float(pair[1]))
        except ValueError as e:
            raise MalformedInputError("Not a number pair", value=pair) from e
    if im == 0:
        return re
    return sympy.Rational(re.numerator, re.denominator) + sympy.I * sympy.Rational(im.numerator, im.denominator)


# geometry


class PolytopeModel(BaseModel):
    dim: int
    vertices: List[List[Rational]]

    def to_polytope(self) -> Polytope:
        if not self.vertices:
            raise MalformedInputError("A polytope needs at least one vertex")
        if any(len(v) != self.dim for v in self.vertices):
            raise DimensionMismatchError(f"Vertices must have {self.dim} coordinates")
        return convex_hull([rq.to_vector(v) for v in self.vertices])

    @classmethod
    def from_polytope(cls, P: Polytope) -> "PolytopeModel":
        return cls(dim=P.ambient_dim, vertices=[[rq.fraction_str(c) for c in v] for v in P.vertices])


def polytope_summary(P: Polytope) -> Dict[str, Any]:
    """Hull output: vertices, facets and f-vector."""
    f_vector = [len(P.faces_of_dim(k)) for k in range(P.dim + 1)]
    return {
        "dim": P.ambient_dim,
        "intrinsic_dim": P.dim,
        "vertices": [[rq.fraction_str(c) for c in v] for v in P.vertices],
        "equations": [{"normal": [rq.fraction_str(c) for c in h.normal], "offset": rq.fraction_str(h.offset)}
                      for h in P.equations],
        "facets": [{"normal": [rq.fraction_str(c) for c in h.normal], "offset": rq.fraction_str(h.offset)}
                   for h in P.inequalities],
        "f_vector": f_vector,
    }


class SubdivisionModel(BaseModel):
    target: PolytopeModel
    cells: List[PolytopeModel]

    def to_subdivision(self) -> Subdivision:
        return Subdivision.build(self.target.to_polytope(), [c.to_polytope() for c in self.cells])

    @classmethod
    def from_subdivision(cls, D: Subdivision) -> "SubdivisionModel":
        return cls(target=PolytopeModel.from_polytope(D.target),
                   cells=[PolytopeModel.from_polytope(c) for c in D.cells])


class ComplexSetModel(BaseModel):
    """Members index the cells in the order they appear in the subdivision file."""
    subdivision: SubdivisionModel
    members: List[int]

    def to_complex_set(self) -> ComplexSet:
        D = self.subdivision.to_subdivision()
        polytopes = [c.to_polytope() for c in self.subdivision.cells]
        bad = [m for m in self.members if not 0 <= m < len(polytopes)]
        if bad:
            raise MalformedInputError("Member indices out of range", members=bad)
        return D.complex_set([polytopes[m] for m in self.members])


class GeneratorTableModel(BaseModel):
    """Keys are cell indices in file order."""
    values: Dict[str, List[str]]

    def to_table(self, D: Subdivision, file_cells: Optional[List[Polytope]] = None) -> GeneratorTable:
        cells = file_cells if file_cells is not None else list(D.cells)
        values = {}
        for key, pair in self.values.items():
            try:
                index = int(key)
            except ValueError as e:
                raise MalformedInputError(f"Cell key {key!r} is not an integer") from e
            if not 0 <= index < len(cells):
                raise MalformedInputError(f"Cell key {key!r} out of range")
            values[D.index_of(cells[index])] = parse_complex_pair(pair)
        return GeneratorTable(values)

    @classmethod
    def from_table(cls, table: GeneratorTable) -> "GeneratorTableModel":
        return cls(values={str(k): complex_pair(v) for k, v in sorted(table.values.items())})


# forms


class MonomialModel(BaseModel):
    c: Rational
    exp: Dict[str, int] = Field(default_factory=dict)


class CoefficientModel(BaseModel):
    poly: List[MonomialModel]
    # multiplies the polynomial by exp(-|xi|^2) on CC-space
    envelope: Literal["none", "gaussian"] = "none"


class TermModel(BaseModel):
    coef: CoefficientModel
    wedge: List[str]


class FormModel(BaseModel):
    ambient: Literal["CC", "N"]
    n: int
    terms: List[TermModel]
    support_box: Optional[List[List[Rational]]] = None
    fiber_radius: Optional[float] = None
    degree: Optional[int] = None

    def to_form(self) -> DifferentialForm:
        names = {str(s): s for s in base_symbols(self.n) + fiber_symbols(self.n, self.ambient)}
        terms = []
        uses_envelope = False
        for term in self.terms:
            expr = sympy.Integer(0)
            for mono in term.coef.poly:
                unknown = sorted(set(mono.exp) - set(names))
                if unknown:
                    raise MalformedInputError(f"Unknown variables {unknown}", known=sorted(names))
                c = rq.to_fraction(mono.c)
                expr += sympy.Rational(c.numerator, c.denominator) * sympy.Mul(
                    *[names[v] ** p for v, p in mono.exp.items()])
            if term.coef.envelope == "gaussian":
                if self.ambient != CC:
                    raise MalformedInputError("Gaussian envelopes are for CC-space forms")
                expr *= gaussian(fiber_symbols(self.n, self.ambient))
                uses_envelope = True
            terms.append((expr, term.wedge))
        radius = self.fiber_radius
        if radius is None and uses_envelope:
            radius = settings.fiber_radius
        box = [(rq.to_fraction(lo), rq.to_fraction(hi)) for lo, hi in self.support_box] if self.support_box else None
        degree = self.degree if self.degree is not None else (len(self.terms[0].wedge) if self.terms else None)
        return make_form(self.ambient, self.n, terms, box, radius, degree)


def form_to_dict(form: DifferentialForm) -> Dict[str, Any]:
    return {
        "ambient": form.ambient,
        "n": form.n,
        "degree": form.degree,
        "terms": [{"wedge": list(t.wedge), "coef": str(t.coef) if t.is_symbolic else "<callback>"}
                  for t in form.terms],
        "fiber_radius": form.fiber_radius,
    }


# valuations and evaluators


class ValuationModel(BaseModel):
    kind: Literal["volume", "euler", "intrinsic", "cc"]
    n: int
    k: Optional[int] = None
    form: Optional[FormModel] = None

    def to_valuation(self) -> Valuation:
        if self.kind == "volume":
            return volume_valuation(self.n)
        if self.kind == "euler":
            return euler_valuation(self.n)
        if self.kind == "intrinsic":
            if self.k is None:
                raise MalformedInputError("Intrinsic volume valuations need k")
            return intrinsic_volume_valuation(self.n, self.k)
        if self.form is None:
            raise MalformedInputError("CC valuations need a form")
        return cc_valuation(self.form.to_form())


class EvaluatorModel(BaseModel):
    """Exact local evaluators for gluing: volume (n-dim cells), euler (1 per cell), intrinsic V_k."""
    kind: Literal["volume", "euler", "intrinsic"]
    k: Optional[int] = None
    scale: Rational = 1

    def to_callable(self):
        factor = rq.to_fraction(self.scale)
        if self.kind == "volume":
            return lambda P: factor * P.relative_volume() if P.dim == P.ambient_dim else Fraction(0)
        if self.kind == "euler":
            return lambda P: factor
        k = self.k if self.k is not None else 0
        return lambda P: float(factor) * intrinsic_volume(P, k)


class CoverModel(BaseModel):
    boxes: List[List[List[Rational]]]
    evaluators: List[EvaluatorModel]


# suite


class CorpusItem(BaseModel):
    name: Optional[str] = None
    generator: Optional[Literal["cube", "simplex", "random_hull"]] = None
    n: int = 2
    count: int = 6
    seed: int = 0
    file: Optional[str] = None
    polytope: Optional[PolytopeModel] = None

    def label(self) -> str:
        if self.name:
            return self.name
        if self.generator:
            return f"{self.generator}{self.n}" + (f"-{self.seed}" if self.generator == "random_hull" else "")
        return self.file or "inline"

    def to_polytope(self) -> Polytope:
        if self.polytope is not None:
            return self.polytope.to_polytope()
        if self.file is not None:
            return load_model(self.file, PolytopeModel).to_polytope()
        if self.generator == "cube":
            return cube(self.n)
        if self.generator == "simplex":
            return simplex(self.n)
        if self.generator == "random_hull":
            return random_hull(self.n, self.count, self.seed)
        raise MalformedInputError("Corpus item needs a generator, a file or an inline polytope")


def default_corpus() -> List[CorpusItem]:
    return [CorpusItem(generator="cube", n=2), CorpusItem(generator="simplex", n=2),
            CorpusItem(generator="cube", n=3), CorpusItem(generator="random_hull", n=2, count=7, seed=3)]


class SuiteConfig(BaseModel):
    corpus: List[CorpusItem] = Field(default_factory=default_corpus)
    # overrides every approximate tolerance when set
    tol: Optional[float] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)
    quad_order: int = Field(default_factory=lambda: settings.quad_order)
    seed: int = Field(default_factory=lambda: settings.seed)
    mc_samples: int = 200_000
    # random triangulations for measure uniqueness, probes for filtration, forms per body for Stokes and Verdier
    triangulations: int = 200
    filtration_probes: int = 50
    forms_per_body: int = 20
    families: Optional[List[str]] = None
    include_timings: bool = False
    workers: int = Field(default_factory=lambda: settings.workers)


# files


def load_json(path: Union[str, Path]) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise MalformedInputError(f"Cannot read {path}: {e}") from e


def load_model(path: Union[str, Path], model: type) -> BaseModel:
    return parse_model(load_json(path), model, source=str(path))


def parse_model(data: Any, model: type, source: str = "input") -> BaseModel:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise MalformedInputError(f"Malformed {model.__name__} in {source}", errors=str(e)) from e


def chain_summary(chain: CycleChain) -> Dict[str, Any]:
    return chain_to_dict(chain)
