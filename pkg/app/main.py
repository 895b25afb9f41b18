import logging
import traceback
from typing import Callable, List, Optional

import uvicorn
from fastapi import FastAPI, HTTPException
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

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
                                     form_to_dict, polytope_summary)
from .services.suite import run_suite

logger = logging.getLogger(__name__)

app = FastAPI(title="Polyhedral Valuation Lab API")

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.allowed_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class QuadratureOptions(BaseModel):
    quad_order: int = Field(default_factory=lambda: settings.quad_order)

    def rule(self) -> QuadratureRule:
        return QuadratureRule(order=self.quad_order)


class IntersectRequest(BaseModel):
    first: SubdivisionModel
    second: SubdivisionModel


class TriangulateRequest(BaseModel):
    subdivision: SubdivisionModel
    mode: str = "apex"


class ExtendRequest(BaseModel):
    subdivision: SubdivisionModel
    table: GeneratorTableModel
    check: bool = True


class MeasureRequest(BaseModel):
    set: ComplexSetModel
    table: GeneratorTableModel
    check: bool = True


class GlueRequest(BaseModel):
    cover: CoverModel
    polytope: PolytopeModel
    seed: int = Field(default_factory=lambda: settings.seed)


class CycleRequest(BaseModel):
    polytope: PolytopeModel
    cycle: str = "cc"


class StokesRequest(QuadratureOptions):
    polytope: PolytopeModel
    form: FormModel
    cycle: str = "cc"


class ValuationRequest(QuadratureOptions):
    valuation: ValuationModel
    polytope: PolytopeModel
    via: Optional[str] = None


class DecomposeRequest(ValuationRequest):
    x: Optional[List[str]] = None


class FiltrationRequest(QuadratureOptions):
    valuation: ValuationModel
    probes: int = 10
    seed: int = Field(default_factory=lambda: settings.seed)


class VerdierRequest(QuadratureOptions):
    polytope: PolytopeModel
    form: FormModel


class SteinerRequest(BaseModel):
    polytope: PolytopeModel
    eps: List[float] = Field(default_factory=lambda: [0.1, 0.5])
    samples: Optional[int] = None
    seed: int = Field(default_factory=lambda: settings.seed)


class ConvergeRequest(BaseModel):
    body: str = "disk"
    k: int = 1
    m: List[int] = Field(default_factory=lambda: [8, 16, 32, 64])


async def _run(work: Callable, *args):
    """Run CPU-bound work off the event loop and map domain errors to 400."""
    try:
        return await run_in_threadpool(work, *args)
    except ValuationLabError as e:
        logger.warning(f"{type(e).__name__}: {e.message}", exc_info=True)
        raise HTTPException(status_code=400, detail=e.to_dict())
    except HTTPException as he:
        raise he
    except Exception as e:
        error_detail = f"Error processing request: {str(e)}\n{traceback.format_exc()}"
        logger.error(error_detail)
        raise HTTPException(status_code=500, detail=error_detail)


@app.post("/api/hull")
async def hull(request: PolytopeModel):
    return await _run(lambda: polytope_summary(request.to_polytope()))


@app.post("/api/subdiv/verify")
async def subdiv_verify(request: SubdivisionModel):
    return await _run(lambda: cx.verify_subdivision(request.to_subdivision()).to_dict())


@app.post("/api/subdiv/intersect")
async def subdiv_intersect(request: IntersectRequest):
    def work():
        D = cx.intersect_subdivisions(request.first.to_subdivision(), request.second.to_subdivision())
        return SubdivisionModel.from_subdivision(D).model_dump()
    return await _run(work)


@app.post("/api/subdiv/triangulate")
async def subdiv_triangulate(request: TriangulateRequest):
    def work():
        D = cx.cone_triangulate(request.subdivision.to_subdivision(), request.mode)
        return SubdivisionModel.from_subdivision(D).model_dump()
    return await _run(work)


@app.post("/api/subdiv/reduce")
async def subdiv_reduce(request: ComplexSetModel):
    return await _run(lambda: {"reduced": cx.reduced_decomposition(request.to_complex_set())})


@app.post("/api/measure/extend")
async def measure_extend(request: ExtendRequest):
    def work():
        D = request.subdivision.to_subdivision()
        file_cells = [c.to_polytope() for c in request.subdivision.cells]
        mu = me.extend(D, request.table.to_table(D, file_cells), check=request.check)
        total = mu.evaluate(cx.ComplexSet.of(D, range(len(D.cells))))
        return {"mode": mu.mode, "total": complex_pair(total),
                "atoms": {str(i): complex_pair(v) for i, v in me.atom_values(mu).items()}}
    return await _run(work)


@app.post("/api/measure/eval")
async def measure_eval(request: MeasureRequest):
    def work():
        X = request.set.to_complex_set()
        file_cells = [c.to_polytope() for c in request.set.subdivision.cells]
        mu = me.extend(X.subdivision, request.table.to_table(X.subdivision, file_cells), check=request.check)
        return {"mode": mu.mode, "value": complex_pair(me.evaluate(mu, X))}
    return await _run(work)


@app.post("/api/measure/glue")
async def measure_glue(request: GlueRequest):
    def work():
        cover = me.LocalValuationCover(request.cover.boxes, [e.to_callable() for e in request.cover.evaluators])
        return {"value": complex_pair(me.glue(cover, request.polytope.to_polytope(), seed=request.seed))}
    return await _run(work)


@app.post("/api/cycle")
async def cycle(request: CycleRequest):
    def work():
        P = request.polytope.to_polytope()
        return chain_summary(characteristic_cycle(P) if request.cycle == "cc" else normal_cycle(P))
    return await _run(work)


@app.post("/api/cycle/stokes")
async def cycle_stokes(request: StokesRequest):
    def work():
        P = request.polytope.to_polytope()
        chain = characteristic_cycle(P) if request.cycle == "cc" else normal_cycle(P)
        return {"residual": stokes_check(chain, request.form.to_form(), request.rule())}
    return await _run(work)


@app.post("/api/val/eval")
async def val_eval(request: ValuationRequest):
    def work():
        value = val.evaluate(request.valuation.to_valuation(), request.polytope.to_polytope(), request.rule(),
                             request.via)
        return {"value": complex_pair(value)}
    return await _run(work)


@app.post("/api/val/decompose")
async def val_decompose(request: DecomposeRequest):
    def work():
        fit = val.mcmullen_decompose(request.valuation.to_valuation(), request.polytope.to_polytope(), request.x,
                                     rule=request.rule())
        return {"coefficients": [complex_pair(c) for c in fit.coefficients], "residual": fit.residual}
    return await _run(work)


@app.post("/api/val/filtration")
async def val_filtration(request: FiltrationRequest):
    def work():
        phi = request.valuation.to_valuation()
        report = val.filtration_degree(phi, val.default_probes(phi.n, request.probes, request.seed),
                                       rule=request.rule())
        return {"degree": report.degree, "is_zero": report.is_zero, "is_density": report.is_density,
                "few_probes": report.few_probes}
    return await _run(work)


@app.post("/api/val/split")
async def val_split(request: ValuationModel):
    def work():
        plus, minus = val.eigen_split(request.to_valuation())
        return {"plus": form_to_dict(plus.cc_form), "minus": form_to_dict(minus.cc_form)}
    return await _run(work)


@app.post("/api/val/steiner")
async def val_steiner(request: SteinerRequest):
    def work():
        frame = steiner_experiment([("polytope", request.polytope.to_polytope())], request.eps, request.samples,
                                   request.seed)
        return frame.to_dict(orient="records")
    return await _run(work)


@app.post("/api/val/verdier-check")
async def val_verdier_check(request: VerdierRequest):
    def work():
        check = val.verdier_identity_check(request.polytope.to_polytope(), request.form.to_form(), request.rule())
        return {"lhs": complex_pair(check.lhs), "rhs": complex_pair(check.rhs), "residual": check.residual}
    return await _run(work)


@app.post("/api/converge")
async def converge(request: ConvergeRequest):
    def work():
        frame = convergence_experiment(request.body, request.m, request.k)
        # the first row has no order; JSON has no NaN
        return frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
    return await _run(work)


@app.post("/api/suite")
async def suite(request: SuiteConfig):
    return await _run(run_suite, request)


@app.get("/")
async def root():
    return {"message": "Polyhedral Valuation Lab API is running"}


if __name__ == "__main__":
    uvicorn.run("app.main:app", host="0.0.0.0", port=settings.port, reload=True)
