"""Pydantic request/response models for the HTTP service.

The JSON shapes here are the package's external interface: DER entries are
{"type": ..., "params": {...}}, prototypes are {"kind": "regular"|"custom",
...}, and fit reports carry alpha/beta/iterations/alpha_trace/binding_edges
/monotonic.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator


class DerModel(BaseModel):
    type: Literal["battery", "pv", "wind", "ac", "custom"]
    params: dict[str, Any]


class PrototypeModel(BaseModel):
    kind: Literal["regular", "custom"]
    n: Optional[int] = None
    rotation: float = 0.0
    A: Optional[list[list[float]]] = None
    b: Optional[list[float]] = None

    def to_json(self) -> dict:
        if self.kind == "regular":
            return {"kind": "regular", "n": self.n, "rotation": self.rotation}
        return {"kind": "custom", "A": self.A, "b": self.b}


class FitSettingsModel(BaseModel):
    degree: Optional[int] = None
    bisection_tol: float = 1e-3
    epsilon_step: float = 0.1
    max_outer_iters: int = 40
    seed: int = 0

    @field_validator("bisection_tol", "epsilon_step")
    @classmethod
    def _positive(cls, v: float, info):
        if v <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator("max_outer_iters")
    @classmethod
    def _positive_iters(cls, v: int):
        if v <= 0:
            raise ValueError("max_outer_iters must be positive")
        return v


class FleetConfigModel(BaseModel):
    ders: list[DerModel] = Field(min_length=1)
    prototype: PrototypeModel
    fit: FitSettingsModel = Field(default_factory=FitSettingsModel)
    outputs: Optional[str] = None


class HomothetModel(BaseModel):
    alpha: float
    beta: list[float]
    prototype: PrototypeModel


class FitReportModel(BaseModel):
    alpha: float
    beta: list[float]
    iterations: int
    alpha_trace: list[float]
    binding_edges: list[int]
    monotonic: bool


class DerResultModel(BaseModel):
    index: int
    outer: Optional[HomothetModel] = None
    inner: Optional[FitReportModel] = None
    inner_skipped: Optional[str] = None
    error: Optional[str] = None


class MetricsModel(BaseModel):
    pi_d: float
    pi_a: float


class FleetApproxModel(BaseModel):
    per_der: list[dict]
    aggregate_outer: HomothetModel
    aggregate_inner: Optional[HomothetModel] = None
    pi_d: Optional[float] = None
    pi_a: Optional[float] = None


class AuditModel(BaseModel):
    records: int
    ok: bool


class FleetRunRequest(BaseModel):
    config: FleetConfigModel
    jobs: int = 1


class FleetRunResponse(BaseModel):
    ders: list[DerResultModel]
    fleet: Optional[FleetApproxModel] = None
    audit: AuditModel
    failures: list[tuple[int, str]] = Field(default_factory=list)


class FitOneRequest(BaseModel):
    der: DerModel
    prototype: PrototypeModel
    fit: FitSettingsModel = Field(default_factory=FitSettingsModel)
    index: int = 0


class OracleRowModel(BaseModel):
    index: int
    outer_alpha_sos: float
    outer_alpha_lp: float
    outer_alpha_rel_gap: float
    outer_beta_gap: float
    bbox_half_width: float
    inner_alpha_grid: Optional[float] = None


class OracleResponse(BaseModel):
    rows: list[OracleRowModel]


class PlotDerModel(BaseModel):
    index: int
    boundary: list[list[float]]
    outer_loop: Optional[list[list[float]]] = None
    inner_loop: Optional[list[list[float]]] = None


class PlotAggregateModel(BaseModel):
    cloud: list[list[float]]
    outer_loop: list[list[float]]
    inner_loop: Optional[list[list[float]]] = None


class PlotsResponse(BaseModel):
    ders: list[PlotDerModel]
    aggregate: Optional[PlotAggregateModel] = None
