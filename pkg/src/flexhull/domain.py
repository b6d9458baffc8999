"""DER flexibility domains as unions of basic semialgebraic sets.

A domain is a union of pieces, each piece a conjunction of polynomial
inequalities g >= 0.  Built-in constructors cover the four device families
(battery, PV inverter, wind inverter, two-state air-conditioner); arbitrary
domains can be supplied piece-by-piece.  Constructors run a sampling probe
that rejects unbounded descriptions and verifies the declared bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .polynomial import Polynomial2

CONTINUOUS = "continuous"
DISCRETE = "discrete"

_PROBE_SAMPLES = 100_000
_PROBE_SEED = 20240601


class DomainError(ValueError):
    """Invalid domain parameters or an unbounded/inconsistent description."""


@dataclass(frozen=True)
class BasicSet:
    """One basic semialgebraic piece {x | g(x) >= 0 for all g in constraints}.

    ``points`` carries the exact coordinates of single-point pieces so that
    discrete domains never rely on solving -(x - c)^2 >= 0 numerically.
    ``region`` optionally lists linear polynomials r(x) >= 0 describing a
    cell of a plane partition with (union domain) & cell <= this piece; the
    inner certifier uses it to clip homothets on multi-piece domains.
    """

    constraints: tuple[Polynomial2, ...]
    label: str = ""
    points: tuple[tuple[float, float], ...] | None = None
    region: tuple[Polynomial2, ...] | None = None

    def __post_init__(self):
        if not self.constraints:
            raise DomainError(f"piece {self.label!r} has no constraints")

    def member_mask(self, pts: np.ndarray, tol: float) -> np.ndarray:
        mask = np.ones(len(pts), dtype=bool)
        for g in self.constraints:
            mask &= g.evaluate_many(pts) >= -tol
        return mask

    def member(self, point: tuple[float, float], tol: float) -> bool:
        return all(g.evaluate(point) >= -tol for g in self.constraints)


@dataclass(frozen=True)
class FlexDomain:
    """Union of pieces with a verified bounding box (p_min, p_max, q_min, q_max)."""

    pieces: tuple[BasicSet, ...]
    kind: str
    bounding_box: tuple[float, float, float, float]
    family: str | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.pieces:
            raise DomainError("domain needs at least one piece")
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        p_min, p_max, q_min, q_max = self.bounding_box
        if not (p_min <= p_max and q_min <= q_max):
            raise DomainError("malformed bounding box")
        if self.kind == DISCRETE and any(ps.points is None for ps in self.pieces):
            raise DomainError("discrete domains must carry explicit piece points")

    @property
    def half_width(self) -> float:
        """Half-width of the larger bounding-box side; the scaling unit for fits."""
        p_min, p_max, q_min, q_max = self.bounding_box
        return max(p_max - p_min, q_max - q_min, 1e-12) / 2.0

    def contains(self, point: tuple[float, float], tol: float = 0.0) -> bool:
        return any(piece.member(point, tol) for piece in self.pieces)

    def contains_many(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        mask = np.zeros(len(pts), dtype=bool)
        for piece in self.pieces:
            mask |= piece.member_mask(pts, tol)
        return mask

    def discrete_points(self) -> np.ndarray:
        if self.kind != DISCRETE:
            raise DomainError("not a discrete domain")
        pts: list[tuple[float, float]] = []
        for piece in self.pieces:
            pts.extend(piece.points or ())
        return np.array(pts)

    def sample_boundary(self, n: int, seed: int = 0) -> np.ndarray:
        return sample_boundary(self, n, seed=seed)

    def to_json(self) -> dict:
        if self.family in ("battery", "pv", "wind", "ac"):
            return {"type": self.family, "params": dict(self.params)}
        return {
            "type": "custom",
            "params": {
                "pieces": [[g.to_json() for g in piece.constraints] for piece in self.pieces],
                "bounding_box": list(self.bounding_box),
                "kind": self.kind,
            },
        }


def contains(d: FlexDomain, point: tuple[float, float], tol: float = 0.0) -> bool:
    return d.contains(point, tol)


def _probe_box(box: tuple[float, float, float, float], factor: float = 4.0):
    p_min, p_max, q_min, q_max = box
    cp, cq = (p_min + p_max) / 2.0, (q_min + q_max) / 2.0
    hp = max((p_max - p_min) / 2.0, 1e-9) * factor
    hq = max((q_max - q_min) / 2.0, 1e-9) * factor
    return cp - hp, cp + hp, cq - hq, cq + hq


def _run_probe(domain: FlexDomain) -> None:
    """Reject domains whose accepted samples escape the declared bounding box.

    Samples a box 4x the declared one; since the probe box strictly contains
    the bounding box, an unbounded piece shows up as accepted mass outside
    the declared box.
    """
    if domain.kind == DISCRETE:
        p_min, p_max, q_min, q_max = domain.bounding_box
        for x, y in domain.discrete_points():
            if not (p_min - 1e-9 <= x <= p_max + 1e-9 and q_min - 1e-9 <= y <= q_max + 1e-9):
                raise DomainError(f"discrete point ({x}, {y}) outside bounding box")
        return
    rng = np.random.default_rng(_PROBE_SEED)
    bp_min, bp_max, bq_min, bq_max = _probe_box(domain.bounding_box)
    pts = np.column_stack(
        [
            rng.uniform(bp_min, bp_max, _PROBE_SAMPLES),
            rng.uniform(bq_min, bq_max, _PROBE_SAMPLES),
        ]
    )
    accepted = pts[domain.contains_many(pts, tol=0.0)]
    if len(accepted) == 0:
        raise DomainError("probe found no interior points; domain looks empty")
    p_min, p_max, q_min, q_max = domain.bounding_box
    ok = (
        (accepted[:, 0] >= p_min - 1e-9)
        & (accepted[:, 0] <= p_max + 1e-9)
        & (accepted[:, 1] >= q_min - 1e-9)
        & (accepted[:, 1] <= q_max + 1e-9)
    )
    if not np.all(ok):
        bad = accepted[~ok][0]
        raise DomainError(
            f"domain escapes its bounding box (found member ({bad[0]:.6g}, {bad[1]:.6g})); "
            "unbounded or mis-declared"
        )


def _build(pieces, kind, box, family=None, params=None) -> FlexDomain:
    dom = FlexDomain(
        pieces=tuple(pieces),
        kind=kind,
        bounding_box=tuple(float(v) for v in box),
        family=family,
        params=dict(params or {}),
    )
    _run_probe(dom)
    return dom


def make_battery(p_max: float, s: float) -> FlexDomain:
    """Four-quadrant battery: |p| <= p_max and p^2 + q^2 <= s^2, with s > p_max."""
    if p_max <= 0:
        raise DomainError("battery requires p_max > 0")
    if s <= p_max:
        raise DomainError("battery requires apparent power rating s > p_max")
    g1 = Polynomial2({(0, 0): s * s, (2, 0): -1.0, (0, 2): -1.0})
    g2 = Polynomial2({(0, 0): p_max * p_max, (2, 0): -1.0})
    piece = BasicSet(constraints=(g1, g2), label="battery")
    return _build(
        [piece], CONTINUOUS, (-p_max, p_max, -s, s),
        family="battery", params={"p_max": p_max, "s": s},
    )


def make_pv(p_max: float, s: float) -> FlexDomain:
    """PV inverter: generation-only half-disk, p in [-p_max, 0], p^2 + q^2 <= s^2."""
    if p_max <= 0:
        raise DomainError("pv requires p_max > 0")
    if s <= p_max:
        raise DomainError("pv requires apparent power rating s > p_max")
    g1 = Polynomial2({(0, 0): s * s, (2, 0): -1.0, (0, 2): -1.0})
    g2 = Polynomial2({(1, 0): -p_max, (2, 0): -1.0})  # -p_max*p - p^2 >= 0
    piece = BasicSet(constraints=(g1, g2), label="pv")
    return _build(
        [piece], CONTINUOUS, (-p_max, 0.0, -s, s),
        family="pv", params={"p_max": p_max, "s": s},
    )


def make_wind(
    p_max: float,
    p0: float,
    q0: float,
    s1: float,
    s2: float,
    rotor_coupling: float,
) -> FlexDomain:
    """Wind inverter as a three-piece union.

    A small box near the origin plus an upper strip limited by the stator
    rating s2 and a lower strip limited by the rotor rating s1, both over
    p in [-p_max, -p0].  ``rotor_coupling`` is the current-coupling factor
    multiplying p^2 inside the apparent-power circles.
    """
    a = rotor_coupling
    if a <= 0:
        raise DomainError("wind requires rotor_coupling > 0")
    if not 0 < p0 < p_max:
        raise DomainError("wind requires 0 < p0 < p_max")
    if q0 <= 0:
        raise DomainError("wind requires q0 > 0")
    root = np.sqrt(a) * p_max
    if s1 <= root:
        raise DomainError(f"wind requires s1 > sqrt(rotor_coupling)*p_max = {root:.6g}")
    if s2 <= root:
        raise DomainError(f"wind requires s2 > sqrt(rotor_coupling)*p_max = {root:.6g}")

    # piece 1: p in [-p0, 0], |q| <= q0
    g11 = Polynomial2({(2, 0): -1.0, (1, 0): -p0})  # -p^2 - p*p0
    g21 = Polynomial2({(0, 0): q0 * q0, (0, 2): -1.0})
    # pieces 2/3 share the p-interval constraint -(p + p0)(p + p_max) >= 0
    g1_strip = Polynomial2({(2, 0): -1.0, (1, 0): -(p0 + p_max), (0, 0): -p0 * p_max})
    q_pos = Polynomial2({(0, 1): 1.0})
    g32 = Polynomial2({(0, 0): s2 * s2, (2, 0): -a, (0, 2): -1.0})
    g33 = Polynomial2({(0, 0): s1 * s1, (2, 0): -a, (0, 2): -1.0})

    # plane partition used to certify homothets against the union:
    # {p >= -p0} | {p <= -p0, q >= 0} | {p <= -p0, q <= 0}
    right = Polynomial2({(1, 0): 1.0, (0, 0): p0})  # p + p0 >= 0
    left = Polynomial2({(1, 0): -1.0, (0, 0): -p0})  # -p - p0 >= 0

    pieces = [
        BasicSet(constraints=(g11, g21), label="wind.box", region=(right,)),
        BasicSet(constraints=(g1_strip, q_pos, g32), label="wind.upper", region=(left, q_pos)),
        BasicSet(constraints=(g1_strip, -q_pos, g33), label="wind.lower", region=(left, -q_pos)),
    ]
    q_hi = max(q0, float(np.sqrt(s2 * s2 - a * p0 * p0)))
    q_lo = -max(q0, float(np.sqrt(s1 * s1 - a * p0 * p0)))
    return _build(
        pieces, CONTINUOUS, (-p_max, 0.0, q_lo, q_hi),
        family="wind",
        params={
            "p_max": p_max, "p0": p0, "q0": q0,
            "s1": s1, "s2": s2, "rotor_coupling": rotor_coupling,
        },
    )


def make_ac(p_max: float, gamma: float) -> FlexDomain:
    """Two-state air-conditioner: the discrete set {(0, 0), (p_max, gamma*p_max)}."""
    if p_max <= 0:
        raise DomainError("ac requires p_max > 0")
    if gamma <= 0:
        raise DomainError("ac requires gamma > 0")
    q_on = gamma * p_max
    off = BasicSet(
        constraints=(Polynomial2({(2, 0): -1.0}), Polynomial2({(0, 2): -1.0})),
        label="ac.off",
        points=((0.0, 0.0),),
    )
    on = BasicSet(
        constraints=(
            Polynomial2({(2, 0): -1.0, (1, 0): 2.0 * p_max, (0, 0): -p_max * p_max}),
            Polynomial2({(0, 2): -1.0, (0, 1): 2.0 * q_on, (0, 0): -q_on * q_on}),
        ),
        label="ac.on",
        points=((p_max, q_on),),
    )
    return _build(
        [off, on], DISCRETE, (0.0, p_max, 0.0, q_on),
        family="ac", params={"p_max": p_max, "gamma": gamma},
    )


def custom_domain(
    pieces: Sequence[Sequence[Polynomial2]],
    bounding_box: Sequence[float],
    kind: str = CONTINUOUS,
    points: Sequence[Sequence[tuple[float, float]]] | None = None,
) -> FlexDomain:
    built = []
    for idx, constraints in enumerate(pieces):
        piece_points = tuple(points[idx]) if points is not None else None
        built.append(
            BasicSet(constraints=tuple(constraints), label=f"piece{idx}", points=piece_points)
        )
    return _build(built, kind, tuple(bounding_box), family="custom")


def single_piece(d: FlexDomain, index: int) -> FlexDomain:
    """A new domain holding just one piece of ``d`` (region data dropped)."""
    piece = d.pieces[index]
    stripped = BasicSet(constraints=piece.constraints, label=piece.label, points=piece.points)
    kind = DISCRETE if piece.points is not None else CONTINUOUS
    return _build([stripped], kind, d.bounding_box, family="custom")


def _piece_anchor(domain: FlexDomain, piece: BasicSet, rng: np.random.Generator) -> np.ndarray:
    p_min, p_max, q_min, q_max = domain.bounding_box
    accepted = np.empty((0, 2))
    for _ in range(40):
        pts = np.column_stack(
            [rng.uniform(p_min, p_max, 4096), rng.uniform(q_min, q_max, 4096)]
        )
        accepted = np.vstack([accepted, pts[piece.member_mask(pts, tol=0.0)]])
        if len(accepted) >= 256:
            break
    if len(accepted) == 0:
        raise DomainError(f"could not sample interior of piece {piece.label!r}")
    centroid = accepted.mean(axis=0)
    if piece.member(tuple(centroid), tol=0.0):
        return centroid
    # non-convex piece: fall back to the accepted sample nearest the centroid
    idx = np.argmin(np.sum((accepted - centroid) ** 2, axis=1))
    return accepted[idx]


def sample_boundary(d: FlexDomain, n: int, seed: int = 0) -> np.ndarray:
    """At least n points on piece boundaries, found by bisecting rays outward.

    Each returned point is a member of the domain (tol 1e-6) with at least
    one active constraint |g| <= 1e-6 on a piece containing it.
    """
    if d.kind != CONTINUOUS:
        raise DomainError("boundary sampling requires a continuous domain")
    if n < 8:
        raise ValueError("need n >= 8 boundary samples")
    rng = np.random.default_rng(seed)
    p_min, p_max, q_min, q_max = d.bounding_box
    reach = 2.0 * float(np.hypot(p_max - p_min, q_max - q_min)) + 1e-9

    per_piece = int(np.ceil(n / len(d.pieces)))
    chunks: list[np.ndarray] = []
    for piece in d.pieces:
        anchor = _piece_anchor(d, piece, rng)
        angles = 2.0 * np.pi * (np.arange(per_piece) + 0.5) / per_piece
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        lo = np.zeros(per_piece)
        hi = np.full(per_piece, reach)
        # anchor is inside the piece; anchor + reach*dir is outside the box
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            inside = piece.member_mask(anchor + mid[:, None] * dirs, tol=0.0)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        pts = anchor + lo[:, None] * dirs
        residual = np.min(
            np.abs(np.column_stack([g.evaluate_many(pts) for g in piece.constraints])), axis=1
        )
        keep = (residual <= 1e-6) & d.contains_many(pts, tol=1e-6)
        chunks.append(pts[keep])
    out = np.vstack(chunks)
    if len(out) < n:
        raise DomainError("boundary sampling failed to reach the requested count")
    return out


_MAKERS = {
    "battery": (make_battery, ("p_max", "s")),
    "pv": (make_pv, ("p_max", "s")),
    "wind": (make_wind, ("p_max", "p0", "q0", "s1", "s2", "rotor_coupling")),
    "ac": (make_ac, ("p_max", "gamma")),
}


def from_json(obj: Mapping) -> FlexDomain:
    """Build a domain from {"type": ..., "params": {...}}."""
    if "type" not in obj:
        raise DomainError("DER entry missing required field 'type'")
    kind = obj["type"]
    params = obj.get("params")
    if params is None:
        raise DomainError("DER entry missing required field 'params'")
    if kind in _MAKERS:
        maker, names = _MAKERS[kind]
        missing = [k for k in names if k not in params]
        if missing:
            raise DomainError(f"DER type {kind!r} missing required param(s): {', '.join(missing)}")
        return maker(**{k: float(params[k]) for k in names})
    if kind == "custom":
        if "pieces" not in params:
            raise DomainError("custom DER missing required param 'pieces'")
        if "bounding_box" not in params:
            raise DomainError("custom DER missing required param 'bounding_box'")
        pieces = [[Polynomial2.from_json(g) for g in piece] for piece in params["pieces"]]
        return custom_domain(
            pieces,
            [float(v) for v in params["bounding_box"]],
            kind=params.get("kind", CONTINUOUS),
        )
    raise DomainError(f"unknown DER type {kind!r}")
