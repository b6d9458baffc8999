"""Fleet orchestration: per-DER fits, aggregation, metrics, oracle comparisons,
and plot data.  Shared by the HTTP service and (through it) the CLI."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import domain as dom
from . import oracle
from .aggregate import FleetApprox
from .domain import CONTINUOUS, FlexDomain
from .fit import (
    DiscreteDomainError,
    FitConfig,
    FitError,
    FitReport,
    InnerFitParams,
    fit_inner,
    fit_outer,
)
from .prototype import Homothet, PrototypePolygon
from .soscompile import CertificateAudit

INNER_SKIP_DISCRETE = "inner approximations do not exist for discrete flexibility domains"


@dataclass
class FitSettings:
    degree: int | None = None
    bisection_tol: float = 1e-3
    epsilon_step: float = 0.1
    max_outer_iters: int = 40
    seed: int = 0

    def inner_params(self, der_index: int) -> InnerFitParams:
        return InnerFitParams(
            bisection_tol=self.bisection_tol,
            epsilon_step=self.epsilon_step,
            max_outer_iters=self.max_outer_iters,
            seed=self.seed + der_index,
        )

    def fit_config(self, audit: CertificateAudit | None = None) -> FitConfig:
        return FitConfig(degree=self.degree, audit=audit)


@dataclass
class DerOutcome:
    index: int
    outer: Homothet | None = None
    inner: FitReport | None = None
    inner_skipped: str | None = None
    error: str | None = None


@dataclass
class FleetRunResult:
    ders: list[DerOutcome]
    fleet: FleetApprox | None
    audit_records: int
    audit_ok: bool
    failures: list[tuple[int, str]] = field(default_factory=list)


def fit_der(
    d: FlexDomain,
    proto: PrototypePolygon,
    settings: FitSettings,
    index: int = 0,
    audit: CertificateAudit | None = None,
) -> DerOutcome:
    out = DerOutcome(index=index)
    cfg = settings.fit_config(audit)
    try:
        out.outer = fit_outer(d, proto, cfg)
    except FitError as exc:
        out.error = str(exc)
        return out
    if d.kind != CONTINUOUS:
        out.inner_skipped = INNER_SKIP_DISCRETE
        return out
    try:
        params = settings.inner_params(index)
        params.alpha_hi = out.outer.alpha
        out.inner = fit_inner(d, proto, params, cfg)
    except DiscreteDomainError as exc:  # defensive; kind check above
        out.inner_skipped = str(exc)
    except FitError as exc:
        out.error = str(exc)
    return out


def run_fleet(
    domains: list[FlexDomain],
    proto: PrototypePolygon,
    settings: FitSettings | None = None,
    jobs: int = 1,
    audit: CertificateAudit | None = None,
) -> FleetRunResult:
    settings = settings or FitSettings()
    audit = audit if audit is not None else CertificateAudit()

    def work(i: int) -> DerOutcome:
        return fit_der(domains[i], proto, settings, index=i, audit=audit)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            ders = list(pool.map(work, range(len(domains))))
    else:
        ders = [work(i) for i in range(len(domains))]
    ders.sort(key=lambda o: o.index)

    failures = [(o.index, o.error) for o in ders if o.error]
    fleet = None
    if not failures:
        fleet = FleetApprox.build(
            [(o.outer, o.inner.homothet if o.inner else None) for o in ders]
        )
    return FleetRunResult(
        ders=ders,
        fleet=fleet,
        audit_records=len(audit.records),
        audit_ok=audit.ok,
        failures=failures,
    )


def oracle_compare(
    domains: list[FlexDomain],
    proto: PrototypePolygon,
    settings: FitSettings | None = None,
) -> list[dict]:
    """Per-DER comparison of the certificate fits against the geometric oracle."""
    settings = settings or FitSettings()
    cfg = settings.fit_config()
    rows = []
    for i, d in enumerate(domains):
        sos = fit_outer(d, proto, cfg)
        lp = oracle.outer_fit_lp(d, proto)
        row = {
            "index": i,
            "outer_alpha_sos": sos.alpha,
            "outer_alpha_lp": lp.alpha,
            "outer_alpha_rel_gap": abs(sos.alpha - lp.alpha) / max(lp.alpha, 1e-12),
            "outer_beta_gap": float(
                np.linalg.norm(np.asarray(sos.beta) - np.asarray(lp.beta))
            ),
            "bbox_half_width": d.half_width,
        }
        if d.kind == CONTINUOUS:
            grid = oracle.inner_fit_grid(d, proto, grid_n=41, tol=settings.bisection_tol)
            row["inner_alpha_grid"] = grid.alpha
        rows.append(row)
    return rows


def _loop(h: Homothet) -> list[list[float]]:
    v = h.vertices()
    closed = np.vstack([v, v[:1]])
    return [[float(x), float(y)] for x, y in closed]


def plot_data(
    domains: list[FlexDomain],
    result: FleetRunResult,
    seed: int = 0,
    boundary_points: int = 512,
    cloud_points: int = 2000,
) -> dict:
    """Point sets sufficient to redraw per-DER and aggregate panels."""
    ders = []
    for i, d in enumerate(domains):
        o = result.ders[i]
        if d.kind == CONTINUOUS:
            boundary = d.sample_boundary(boundary_points, seed=seed + i).tolist()
        else:
            boundary = d.discrete_points().tolist()
        ders.append(
            {
                "index": i,
                "boundary": boundary,
                "outer_loop": _loop(o.outer) if o.outer else None,
                "inner_loop": _loop(o.inner.homothet) if o.inner else None,
            }
        )
    agg = None
    if result.fleet is not None:
        cloud = oracle.minkowski_sample(domains, n=cloud_points, seed=seed + 10_000)
        agg = {
            "cloud": cloud.tolist(),
            "outer_loop": _loop(result.fleet.aggregate_outer),
            "inner_loop": (
                _loop(result.fleet.aggregate_inner) if result.fleet.aggregate_inner else None
            ),
        }
    return {"ders": ders, "aggregate": agg}


def build_domains(der_entries: list[dict]) -> list[FlexDomain]:
    out = []
    for i, entry in enumerate(der_entries):
        try:
            out.append(dom.from_json(entry))
        except dom.DomainError as exc:
            raise dom.DomainError(f"ders[{i}]: {exc}") from exc
    return out
