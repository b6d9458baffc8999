"""Tightest outer homothet and largest inner homothet of a flexibility domain.

The outer fit minimizes the scaling factor subject to one Putinar block per
(prototype edge, domain piece); it works for continuous and discrete
domains alike.  The inner fit is the two-stage heuristic: bisection on the
scaling factor at fixed translation, then translation along the inward sum
of binding-edge normals, repeated until the scaling factor stops improving.

All certificate problems are compiled and solved in coordinates normalized
by the domain's bounding-box half-width; results are scaled back on exit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import soscompile as sc
from .domain import DISCRETE, FlexDomain
from .polynomial import Polynomial2
from .prototype import Homothet, PrototypePolygon
from .soscompile import AffinePoly, CertificateAudit, ConicProgramBuilder

EPSILON_POSITIVITY = 1e-7  # strict-inequality margin subtracted from targets
_TIE_TOL = 1e-7


class FitError(RuntimeError):
    """Solver failure or unusable fit inputs."""


class DiscreteDomainError(FitError):
    """Inner approximations do not exist for discrete flexibility domains."""


@dataclass
class FitConfig:
    """Certificate-degree policy plus optional audit collection."""

    degree: int | None = None          # certificate degree override (even)
    max_basis_degree: int = sc.DEFAULT_MAX_BASIS_DEGREE
    escalate: bool = True              # one +2 retry when sampling contradicts
    audit: CertificateAudit | None = None
    audit_points: int = 1000
    audit_seed: int = 7


@dataclass
class InnerFitParams:
    bisection_tol: float = 1e-3
    max_outer_iters: int = 40
    epsilon_step: float = 0.1          # translation step as a fraction of alpha
    binding_slack: float = 1e-3        # edge push, relative to alpha
    beta_init: tuple[float, float] | None = None
    alpha_hi: float | None = None      # bisection upper bracket; outer fit if absent
    seed: int = 0

    def __post_init__(self):
        if min(self.bisection_tol, self.epsilon_step, self.binding_slack) <= 0:
            raise ValueError("inner fit tolerances must be positive")
        if self.max_outer_iters <= 0:
            raise ValueError("max_outer_iters must be positive")
        if self.epsilon_step >= 1:
            raise ValueError("epsilon_step is a fraction of alpha and must be < 1")


@dataclass
class FitReport:
    homothet: Homothet
    iterations: int
    alpha_trace: list[float]
    binding_edges_final: list[int]
    monotonic: bool

    def to_json(self) -> dict:
        return {
            "alpha": self.homothet.alpha,
            "beta": [self.homothet.beta[0], self.homothet.beta[1]],
            "iterations": self.iterations,
            "alpha_trace": list(self.alpha_trace),
            "binding_edges": list(self.binding_edges_final),
            "monotonic": self.monotonic,
        }


def _normalized(g: Polynomial2) -> Polynomial2:
    m = g.max_abs_coeff()
    return g.scale(1.0 / m) if m > 0 else g


def _scaled_piece_constraints(d: FlexDomain) -> list[tuple[list[Polynomial2], list[Polynomial2]]]:
    """Per piece: (constraints, region separators), rescaled to unit half-width."""
    h = d.half_width
    out = []
    for piece in d.pieces:
        gs = [_normalized(g.substitute_scaled(h)) for g in piece.constraints]
        regions = [_normalized(r.substitute_scaled(h)) for r in (piece.region or ())]
        out.append((gs, regions))
    return out


def _sample_piece_scaled(
    gs: list[Polynomial2], box: tuple[float, float, float, float],
    n: int, rng: np.random.Generator,
    points: np.ndarray | None = None,
) -> np.ndarray:
    if points is not None:
        return points
    p_min, p_max, q_min, q_max = box
    hits: list[np.ndarray] = []
    total = 0
    for _ in range(60):
        pts = np.column_stack(
            [rng.uniform(p_min, p_max, 4 * n), rng.uniform(q_min, q_max, 4 * n)]
        )
        mask = np.ones(len(pts), dtype=bool)
        for g in gs:
            mask &= g.evaluate_many(pts) >= 0.0
        hits.append(pts[mask])
        total += int(mask.sum())
        if total >= n:
            break
    if not hits:
        return np.empty((0, 2))
    return np.vstack(hits)[:n]


def _scaled_box(d: FlexDomain) -> tuple[float, float, float, float]:
    h = d.half_width
    p_min, p_max, q_min, q_max = d.bounding_box
    return (p_min / h, p_max / h, q_min / h, q_max / h)


def fit_outer(d: FlexDomain, proto: PrototypePolygon, config: FitConfig | None = None) -> Homothet:
    """Minimal-scale homothet certified to contain the whole domain.

    Ties in the translation at the optimal scale are broken by a second
    solve minimizing the translation's 1-norm, matching the LP oracle.
    """
    cfg = config or FitConfig()
    h = d.half_width
    pieces = _scaled_piece_constraints(d)

    def build(tie_alpha: float | None):
        builder = ConicProgramBuilder(cfg.max_basis_degree)
        a_id = builder.scalar("alpha", nonneg=True)
        bp_id = builder.scalar("beta_p")
        bq_id = builder.scalar("beta_q")
        for k, (gs, _regions) in enumerate(pieces):
            deg = cfg.degree if cfg.degree is not None else sc.certificate_degree(gs)
            for i in range(proto.n_edges):
                target = AffinePoly()
                target.add_constant((0, 0), -EPSILON_POSITIVITY)
                target.add_var((0, 0), a_id, float(proto.b[i]))
                target.add_var((0, 0), bp_id, float(proto.A[i, 0]))
                target.add_var((0, 0), bq_id, float(proto.A[i, 1]))
                target.add_constant((1, 0), -float(proto.A[i, 0]))
                target.add_constant((0, 1), -float(proto.A[i, 1]))
                builder.sos_constraint(
                    target,
                    [(g, sc.even_floor(deg - g.degree())) for g in gs],
                    residual_degree=deg,
                    label=f"outer:piece{k}:edge{i}",
                )
        if tie_alpha is None:
            builder.minimize({a_id: 1.0})
        else:
            # fix alpha (up to tolerance) and minimize |beta_p| + |beta_q|
            cap = builder.scalar("alpha_cap_slack", nonneg=True)
            builder.add_equality([(a_id, None, 1.0), (cap, None, 1.0)], tie_alpha + _TIE_TOL)
            t_ids = []
            for b_id, nm in ((bp_id, "p"), (bq_id, "q")):
                t_id = builder.scalar(f"abs_{nm}")
                for sign in (1.0, -1.0):
                    s_id = builder.scalar(f"abs_{nm}_slack", nonneg=True)
                    builder.add_equality(
                        [(t_id, None, 1.0), (b_id, None, sign), (s_id, None, -1.0)], 0.0
                    )
                t_ids.append(t_id)
            builder.minimize({t: 1.0 for t in t_ids})
        return builder.build(), (a_id, bp_id, bq_id)

    prog, ids = build(None)
    outcome = sc.solve(prog)
    if outcome.status != sc.OPTIMAL:
        raise FitError(f"outer fit solver failure (status={outcome.status})")
    alpha_star = float(outcome.values[ids[0]])

    prog2, ids2 = build(alpha_star)
    outcome2 = sc.solve(prog2)
    if outcome2.status == sc.OPTIMAL:
        prog, ids, outcome = prog2, ids2, outcome2

    if cfg.audit is not None:
        _audit_outer(cfg, d, pieces, prog, outcome)

    a_id, bp_id, bq_id = ids
    alpha = float(outcome.values[a_id]) * h
    beta = (float(outcome.values[bp_id]) * h, float(outcome.values[bq_id]) * h)
    return Homothet(proto=proto, alpha=alpha, beta=beta)


def _audit_outer(cfg: FitConfig, d: FlexDomain, pieces, prog, outcome) -> None:
    rng = np.random.default_rng(cfg.audit_seed)
    box = _scaled_box(d)
    h = d.half_width
    samples = []
    for k, (gs, _r) in enumerate(pieces):
        pts = None
        if d.pieces[k].points is not None:
            pts = np.asarray(d.pieces[k].points, dtype=float) / h
        samples.append(_sample_piece_scaled(gs, box, cfg.audit_points, rng, points=pts))
    for block in prog.blocks:
        k = int(block.label.split("piece")[1].split(":")[0])
        if len(samples[k]):
            cfg.audit.check_block(prog, block, outcome, samples[k])


def _sampling_contained(d: FlexDomain, hom: Homothet) -> bool:
    """Certificate-free geometric containment check (edges plus interior)."""
    pts = hom.edge_points(per_edge=64)
    if not np.all(d.contains_many(pts, tol=1e-9)):
        return False
    rng = np.random.default_rng(3)
    v = hom.vertices()
    lo, hi = v.min(axis=0), v.max(axis=0)
    raw = rng.uniform(lo, hi, size=(512, 2))
    inner = raw[hom.contains_many(raw, tol=0.0)]
    return bool(np.all(d.contains_many(inner, tol=1e-9)))


def check_inner(
    d: FlexDomain,
    proto: PrototypePolygon,
    alpha: float,
    beta: tuple[float, float],
    config: FitConfig | None = None,
) -> bool:
    """True iff the homothet is certified to sit inside the domain.

    One-sided: a False may be a relaxation artifact of the certificate
    degree.  With ``escalate`` on, a False that the geometric sampling check
    contradicts is retried once with the certificate degree raised by 2.

    Multi-piece domains are certified piece-by-piece over the homothet
    clipped to each piece's plane-partition cell; without separator data
    the check falls back to sampling with a warning (no certificate).
    """
    cfg = config or FitConfig()
    if d.kind == DISCRETE:
        raise DiscreteDomainError(
            "inner approximations do not exist for discrete flexibility domains"
        )
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    hom = Homothet(proto=proto, alpha=alpha, beta=beta)
    if len(d.pieces) > 1 and any(p.region is None for p in d.pieces):
        warnings.warn(
            "multi-piece domain without separator cells: falling back to "
            "sampling containment (no certificate)",
            RuntimeWarning,
            stacklevel=2,
        )
        return _sampling_contained(d, hom)

    ok = _check_inner_certified(d, proto, alpha, beta, cfg, bump=0)
    if ok:
        return True
    if cfg.escalate and _sampling_contained(d, hom):
        return _check_inner_certified(d, proto, alpha, beta, cfg, bump=2)
    return False


def _check_inner_certified(
    d: FlexDomain,
    proto: PrototypePolygon,
    alpha: float,
    beta: tuple[float, float],
    cfg: FitConfig,
    bump: int,
) -> bool:
    h = d.half_width
    at = alpha / h
    bt = (beta[0] / h, beta[1] / h)
    pieces = _scaled_piece_constraints(d)

    # homothet edge functions, nonnegative on the homothet (scaled coords)
    ells = []
    for j in range(proto.n_edges):
        ajp, ajq = float(proto.A[j, 0]), float(proto.A[j, 1])
        ells.append(
            Polynomial2(
                {(0, 0): at * float(proto.b[j]) + ajp * bt[0] + ajq * bt[1],
                 (1, 0): -ajp, (0, 1): -ajq}
            )
        )

    builder = ConicProgramBuilder(cfg.max_basis_degree)
    for k, (gs, regions) in enumerate(pieces):
        mults = ells + regions
        deg = cfg.degree if cfg.degree is not None else sc.certificate_degree(mults)
        deg += bump
        for i, g in enumerate(gs):
            # no positivity margin here: clipped blocks are legitimately
            # boundary-tight (e.g. certifying q >= 0 on the q >= 0 cell)
            target = AffinePoly.from_poly(g)
            builder.sos_constraint(
                target,
                [(m, sc.even_floor(deg - m.degree())) for m in mults],
                residual_degree=max(deg, sc.even_ceil(g.degree())),
                label=f"inner:piece{k}:g{i}",
            )
    prog = builder.build()
    outcome = sc.solve(prog)
    if outcome.status != sc.OPTIMAL:
        return False

    if cfg.audit is not None:
        rng = np.random.default_rng(cfg.audit_seed)
        hom_scaled = Homothet(proto=proto, alpha=at, beta=bt)
        v = hom_scaled.vertices()
        lo, hi = v.min(axis=0), v.max(axis=0)
        raw = rng.uniform(lo, hi, size=(8 * cfg.audit_points, 2))
        inside = raw[hom_scaled.contains_many(raw, tol=0.0)]
        for block in prog.blocks:
            k = int(block.label.split("piece")[1].split(":")[0])
            pts = inside
            for r in pieces[k][1]:
                if len(pts):
                    pts = pts[r.evaluate_many(pts) >= 0.0]
            if len(pts):
                cfg.audit.check_block(prog, block, outcome, pts[: cfg.audit_points])
    return True


def _bbox_alpha_bound(d: FlexDomain, proto: PrototypePolygon, beta) -> float:
    """Largest scale keeping the homothet inside the bounding box."""
    p_min, p_max, q_min, q_max = d.bounding_box
    beta = np.asarray(beta, dtype=float)
    bound = np.inf
    for i in range(proto.n_edges):
        a = proto.A[i]
        support = (p_max if a[0] >= 0 else p_min) * a[0] + (q_max if a[1] >= 0 else q_min) * a[1]
        bound = min(bound, (support - float(a @ beta)) / float(proto.b[i]))
    return float(bound)


def max_alpha_bisection(
    d: FlexDomain,
    proto: PrototypePolygon,
    beta: tuple[float, float],
    params: InnerFitParams | None = None,
    config: FitConfig | None = None,
) -> float:
    """Largest certified-feasible scale at fixed translation, via bisection."""
    params = params or InnerFitParams()
    cfg = config or FitConfig()
    alpha_lo = 1e-3 * d.half_width
    if not check_inner(d, proto, alpha_lo, beta, cfg):
        raise FitError("beta outside domain")
    alpha_hi = params.alpha_hi if params.alpha_hi is not None else _bbox_alpha_bound(d, proto, beta)
    if alpha_hi <= alpha_lo:
        return alpha_lo
    if check_inner(d, proto, alpha_hi, beta, cfg):
        return alpha_hi
    lo, hi = alpha_lo, alpha_hi
    while hi - lo > params.bisection_tol:
        mid = 0.5 * (lo + hi)
        if check_inner(d, proto, mid, beta, cfg):
            lo = mid
        else:
            hi = mid
    return lo


def detect_binding_edges(
    d: FlexDomain,
    proto: PrototypePolygon,
    alpha: float,
    beta: tuple[float, float],
    slack: float = 1e-3,
) -> list[int]:
    """Edges whose outward push by slack*alpha breaks containment.

    The displaced edge segment is sampled densely against domain membership;
    no certificate solves are involved.
    """
    A, rhs = Homothet(proto=proto, alpha=alpha, beta=beta).halfspaces()
    n = proto.n_edges
    push = slack * alpha
    binding = []
    for i in range(n):
        rhs2 = rhs.copy()
        rhs2[i] += push
        ends = []
        for j in ((i - 1) % n, (i + 1) % n):
            M = np.array([A[i], A[j]])
            ends.append(np.linalg.solve(M, np.array([rhs2[i], rhs2[j]])))
        t = np.linspace(0.0, 1.0, 128)[:, None]
        seg = ends[0] + t * (ends[1] - ends[0])
        if not np.all(d.contains_many(seg, tol=1e-9)):
            binding.append(i)
    return binding


def _interior_seed(d: FlexDomain, rng: np.random.Generator) -> tuple[float, float]:
    p_min, p_max, q_min, q_max = d.bounding_box
    accepted = np.empty((0, 2))
    for _ in range(40):
        pts = np.column_stack(
            [rng.uniform(p_min, p_max, 4096), rng.uniform(q_min, q_max, 4096)]
        )
        accepted = np.vstack([accepted, pts[d.contains_many(pts, tol=0.0)]])
        if len(accepted) >= 2048:
            break
    if len(accepted) == 0:
        raise FitError("could not find an interior point for the inner fit seed")
    centroid = accepted.mean(axis=0)
    if d.contains(tuple(centroid), tol=0.0):
        return (float(centroid[0]), float(centroid[1]))
    idx = np.argmin(np.sum((accepted - centroid) ** 2, axis=1))
    return (float(accepted[idx, 0]), float(accepted[idx, 1]))


def fit_inner(
    d: FlexDomain,
    proto: PrototypePolygon,
    params: InnerFitParams | None = None,
    config: FitConfig | None = None,
) -> FitReport:
    """Two-stage inner fit: bisection on the scale, then binding-edge translation.

    The translation step is a fraction of the current scale and halves
    whenever a move fails to improve; failed probes are rolled back (the
    best homothet is kept) and are not recorded in the trace.  The
    ``monotonic`` flag reports whether the accepted trace ever decreased.
    """
    if d.kind == DISCRETE:
        raise DiscreteDomainError(
            "inner approximations do not exist for discrete flexibility domains"
        )
    params = params or InnerFitParams()
    cfg = config or FitConfig()
    rng = np.random.default_rng(params.seed)
    beta = params.beta_init if params.beta_init is not None else _interior_seed(d, rng)
    beta = (float(beta[0]), float(beta[1]))

    alpha_hi = params.alpha_hi
    if alpha_hi is None:
        alpha_hi = fit_outer(d, proto, cfg).alpha
    runner = replace(params, alpha_hi=alpha_hi, beta_init=beta)

    alpha = max_alpha_bisection(d, proto, beta, runner, cfg)
    trace = [alpha]
    iterations = 1
    eps = params.epsilon_step
    best_alpha, best_beta = alpha, beta

    def binding_slack(a: float) -> float:
        # the edge push must dominate the slack bisection leaves behind
        # (up to bisection_tol in alpha, amplified at vertex contacts)
        return max(params.binding_slack, 8.0 * params.bisection_tol / a)

    binding = detect_binding_edges(d, proto, best_alpha, best_beta, binding_slack(best_alpha))

    while iterations < params.max_outer_iters and eps * best_alpha >= params.bisection_tol:
        direction = -np.sum(proto.A[binding], axis=0) if binding else np.zeros(2)
        norm = float(np.linalg.norm(direction))
        if norm < 1e-9:
            break
        direction /= norm
        step = eps * best_alpha
        beta_try = (best_beta[0] + step * direction[0], best_beta[1] + step * direction[1])
        iterations += 1
        try:
            alpha_try = max_alpha_bisection(d, proto, beta_try, runner, cfg)
        except FitError:
            eps *= 0.5
            continue
        if alpha_try > best_alpha + params.bisection_tol:
            best_alpha, best_beta = alpha_try, beta_try
            trace.append(alpha_try)
            binding = detect_binding_edges(
                d, proto, best_alpha, best_beta, binding_slack(best_alpha)
            )
        else:
            eps *= 0.5

    monotonic = all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
    return FitReport(
        homothet=Homothet(proto=proto, alpha=best_alpha, beta=best_beta),
        iterations=iterations,
        alpha_trace=trace,
        binding_edges_final=detect_binding_edges(
            d, proto, best_alpha, best_beta, binding_slack(best_alpha)
        ),
        monotonic=monotonic,
    )
