"""Minkowski aggregation of homothets and the two approximation-quality metrics.

Homothets of a common prototype add by parameter addition: scales sum and
translations sum.  Quality of an (outer, inner) pair is scored by the
worst-case vertex gap and by the squared scale ratio (the area ratio, equal
to the chance a uniformly dispatched outer point is feasible for the inner
set).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .prototype import Homothet


class AggregationError(ValueError):
    pass


def _require_shared_prototype(homothets: Sequence[Homothet]) -> None:
    first = homothets[0].proto
    for h in homothets[1:]:
        if not first.same_shape(h.proto):
            raise AggregationError("homothets reference different prototypes")


def aggregate(homothets: Sequence[Homothet]) -> Homothet:
    """Parameter-sum of homothets over a shared prototype, in index order."""
    if not homothets:
        raise AggregationError("nothing to aggregate")
    _require_shared_prototype(homothets)
    alpha = 0.0
    bp = 0.0
    bq = 0.0
    for h in homothets:
        alpha += h.alpha
        bp += h.beta[0]
        bq += h.beta[1]
    return Homothet(proto=homothets[0].proto, alpha=alpha, beta=(bp, bq))


def distance_metric(outer: Homothet, inner: Homothet) -> float:
    """Worst-case distance from an outer point to the inner set: the maximal
    vertex gap max_i ||(a_out - a_in) v_i + (b_out - b_in)||."""
    _require_shared_prototype([outer, inner])
    if outer.alpha < inner.alpha:
        raise AggregationError("outer scale must dominate inner scale")
    d_alpha = outer.alpha - inner.alpha
    d_beta = np.asarray(outer.beta) - np.asarray(inner.beta)
    gaps = np.linalg.norm(d_alpha * outer.proto.vertices + d_beta, axis=1)
    return float(gaps.max())


def area_metric(outer: Homothet, inner: Homothet) -> float:
    """Squared scale ratio (inner area over outer area), in (0, 1]."""
    _require_shared_prototype([outer, inner])
    if not 0 < inner.alpha <= outer.alpha:
        raise AggregationError("need 0 < inner scale <= outer scale")
    return (inner.alpha / outer.alpha) ** 2


@dataclass
class FleetApprox:
    """Per-DER homothet pairs and their aggregate.

    The aggregate inner homothet is absent when any member lacks one
    (discrete members); ``allow_partial_inner`` aggregates the continuous
    subset instead of dropping the inner aggregate entirely.
    """

    per_der: list[tuple[Homothet, Homothet | None]]
    aggregate_outer: Homothet
    aggregate_inner: Homothet | None

    @classmethod
    def build(
        cls,
        per_der: Sequence[tuple[Homothet, Homothet | None]],
        allow_partial_inner: bool = False,
    ) -> FleetApprox:
        if not per_der:
            raise AggregationError("empty fleet")
        outers = [o for o, _ in per_der]
        inners = [i for _, i in per_der if i is not None]
        _require_shared_prototype(outers + inners)
        agg_outer = aggregate(outers)
        agg_inner = None
        if len(inners) == len(per_der):
            agg_inner = aggregate(inners)
        elif inners and allow_partial_inner:
            agg_inner = aggregate(inners)
        return cls(per_der=list(per_der), aggregate_outer=agg_outer, aggregate_inner=agg_inner)

    def metrics(self) -> dict[str, float] | None:
        if self.aggregate_inner is None:
            return None
        return {
            "pi_d": distance_metric(self.aggregate_outer, self.aggregate_inner),
            "pi_a": area_metric(self.aggregate_outer, self.aggregate_inner),
        }

    def to_json(self) -> dict:
        obj = {
            "per_der": [
                {"outer": o.to_json(), "inner": i.to_json() if i else None}
                for o, i in self.per_der
            ],
            "aggregate_outer": self.aggregate_outer.to_json(),
            "aggregate_inner": (
                self.aggregate_inner.to_json() if self.aggregate_inner else None
            ),
        }
        m = self.metrics()
        if m is not None:
            obj.update(m)
        return obj
