"""FastAPI service exposing the fit, aggregation, oracle, and plot pipelines."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import runner
from ..domain import DomainError
from ..fit import FitError
from ..prototype import PrototypeError, prototype_from_json
from . import schemas


def _homothet_model(h) -> schemas.HomothetModel:
    j = h.to_json()
    return schemas.HomothetModel(
        alpha=j["alpha"], beta=j["beta"], prototype=schemas.PrototypeModel(**j["prototype"])
    )


def _der_result(o: runner.DerOutcome) -> schemas.DerResultModel:
    return schemas.DerResultModel(
        index=o.index,
        outer=_homothet_model(o.outer) if o.outer else None,
        inner=schemas.FitReportModel(**o.inner.to_json()) if o.inner else None,
        inner_skipped=o.inner_skipped,
        error=o.error,
    )


def _parse_inputs(config: schemas.FleetConfigModel):
    try:
        domains = runner.build_domains([d.model_dump() for d in config.ders])
        proto = prototype_from_json(config.prototype.to_json())
    except (DomainError, PrototypeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    settings = runner.FitSettings(**config.fit.model_dump())
    return domains, proto, settings


def create_app() -> FastAPI:
    app = FastAPI(title="flexhull", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/fleet/run", response_model=schemas.FleetRunResponse)
    def fleet_run(req: schemas.FleetRunRequest):
        domains, proto, settings = _parse_inputs(req.config)
        result = runner.run_fleet(domains, proto, settings, jobs=max(1, req.jobs))
        fleet_model = None
        if result.fleet is not None:
            j = result.fleet.to_json()
            fleet_model = schemas.FleetApproxModel(
                per_der=j["per_der"],
                aggregate_outer=_homothet_model(result.fleet.aggregate_outer),
                aggregate_inner=(
                    _homothet_model(result.fleet.aggregate_inner)
                    if result.fleet.aggregate_inner
                    else None
                ),
                pi_d=j.get("pi_d"),
                pi_a=j.get("pi_a"),
            )
        return schemas.FleetRunResponse(
            ders=[_der_result(o) for o in result.ders],
            fleet=fleet_model,
            audit=schemas.AuditModel(records=result.audit_records, ok=result.audit_ok),
            failures=result.failures,
        )

    @app.post("/fit/one", response_model=schemas.DerResultModel)
    def fit_one(req: schemas.FitOneRequest):
        cfg = schemas.FleetConfigModel(ders=[req.der], prototype=req.prototype, fit=req.fit)
        domains, proto, settings = _parse_inputs(cfg)
        out = runner.fit_der(domains[0], proto, settings, index=req.index)
        if out.error:
            raise HTTPException(status_code=502, detail=f"DER {req.index}: {out.error}")
        return _der_result(out)

    @app.post("/oracle/run", response_model=schemas.OracleResponse)
    def oracle_run(req: schemas.FleetRunRequest):
        domains, proto, settings = _parse_inputs(req.config)
        try:
            rows = runner.oracle_compare(domains, proto, settings)
        except FitError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return schemas.OracleResponse(rows=[schemas.OracleRowModel(**r) for r in rows])

    @app.post("/plots", response_model=schemas.PlotsResponse)
    def plots(req: schemas.FleetRunRequest):
        domains, proto, settings = _parse_inputs(req.config)
        result = runner.run_fleet(domains, proto, settings, jobs=max(1, req.jobs))
        if result.failures:
            idx, msg = result.failures[0]
            raise HTTPException(status_code=502, detail=f"DER {idx}: {msg}")
        data = runner.plot_data(domains, result, seed=settings.seed)
        return schemas.PlotsResponse(**data)

    return app


app = create_app()
