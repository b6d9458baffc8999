"""Brute-force geometric layer used to cross-check every certificate-based fit.

Nothing here touches the conic machinery: supports come from closed forms
(for the built-in device families) or boundary sampling, the outer fit is a
small LP over support values, the inner fit is a grid-plus-bisection search
using dense membership tests, and Minkowski sums are sampled directly from
their definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .domain import CONTINUOUS, DISCRETE, FlexDomain
from .prototype import Homothet, PrototypePolygon


@dataclass(frozen=True)
class SupportEstimate:
    direction: tuple[float, float]
    value: float
    argmax: tuple[float, float]


def _support_battery(p_max: float, s: float, a: np.ndarray,
                     p_lo: float, p_hi: float) -> tuple[float, tuple[float, float]]:
    """Support of {p in [p_lo, p_hi], p^2 + q^2 <= s^2} (truncated disk)."""
    ap, aq = float(a[0]), float(a[1])
    arc = s * a
    if p_lo <= arc[0] <= p_hi:
        return s, (float(arc[0]), float(arc[1]))
    p_star = p_hi if ap > 0 else p_lo
    q_star = float(np.sign(aq) * np.sqrt(max(s * s - p_star * p_star, 0.0)))
    return ap * p_star + aq * q_star, (p_star, q_star)


def _support_wind_strip(a: np.ndarray, p_lo: float, p_hi: float, s: float,
                        coupling: float, upper: bool) -> tuple[float, tuple[float, float]]:
    """Support of {p in [p_lo, p_hi], 0 <= q <= Q(p)} (or its mirror below zero)
    with Q(p) = sqrt(s^2 - coupling * p^2)."""
    ap, aq = float(a[0]), float(a[1])
    sign = 1.0 if upper else -1.0
    weight = max(sign * aq, 0.0)  # optimal q is sign*Q(p) if useful, else 0

    def q_of(p):
        return sign * np.sqrt(max(s * s - coupling * p * p, 0.0))

    candidates = [p_lo, p_hi]
    if weight > 0 and abs(ap) > 0:
        mag = abs(ap) * s / np.sqrt(coupling * (ap * ap + coupling * aq * aq))
        candidates.append(float(np.clip(np.sign(ap) * mag, p_lo, p_hi)))
    best_val, best_pt = -np.inf, (p_lo, 0.0)
    for p in candidates:
        for q in ((q_of(p),) if weight > 0 else (0.0,)):
            val = ap * p + aq * q
            if val > best_val:
                best_val, best_pt = val, (float(p), float(q))
        # bottom edge (q = 0) is always admissible
        val = ap * p
        if val > best_val:
            best_val, best_pt = val, (float(p), 0.0)
    return best_val, best_pt


def closed_form_support(d: FlexDomain, a: np.ndarray) -> tuple[float, tuple[float, float]] | None:
    """Exact support for the built-in device families; None when unavailable."""
    a = np.asarray(a, dtype=float)
    prm = d.params
    if d.kind == DISCRETE:
        pts = d.discrete_points()
        vals = pts @ a
        k = int(np.argmax(vals))
        return float(vals[k]), (float(pts[k, 0]), float(pts[k, 1]))
    if d.family == "battery":
        return _support_battery(prm["p_max"], prm["s"], a, -prm["p_max"], prm["p_max"])
    if d.family == "pv":
        return _support_battery(prm["p_max"], prm["s"], a, -prm["p_max"], 0.0)
    if d.family == "wind":
        c = prm["rotor_coupling"]
        box_p = max(-a[0] * prm["p0"], 0.0)
        box_pt = (-prm["p0"] if a[0] < 0 else 0.0, prm["q0"] * np.sign(a[1]))
        box_val = box_p + abs(a[1]) * prm["q0"]
        up_val, up_pt = _support_wind_strip(a, -prm["p_max"], -prm["p0"], prm["s2"], c, True)
        lo_val, lo_pt = _support_wind_strip(a, -prm["p_max"], -prm["p0"], prm["s1"], c, False)
        best = max(
            (box_val, (float(box_pt[0]), float(box_pt[1]))), (up_val, up_pt), (lo_val, lo_pt),
            key=lambda t: t[0],
        )
        return best
    return None


def _piece_anchor(d: FlexDomain, piece_idx: int, rng: np.random.Generator) -> np.ndarray:
    piece = d.pieces[piece_idx]
    p_min, p_max, q_min, q_max = d.bounding_box
    acc = np.empty((0, 2))
    for _ in range(40):
        pts = np.column_stack(
            [rng.uniform(p_min, p_max, 4096), rng.uniform(q_min, q_max, 4096)]
        )
        acc = np.vstack([acc, pts[piece.member_mask(pts, tol=0.0)]])
        if len(acc) >= 256:
            break
    if len(acc) == 0:
        raise ValueError(f"cannot sample piece {piece_idx} interior")
    centroid = acc.mean(axis=0)
    if piece.member(tuple(centroid), tol=0.0):
        return centroid
    return acc[np.argmin(np.sum((acc - centroid) ** 2, axis=1))]


def _boundary_point(d: FlexDomain, piece_idx: int, anchor: np.ndarray, theta: float,
                    reach: float) -> np.ndarray:
    piece = d.pieces[piece_idx]
    direction = np.array([np.cos(theta), np.sin(theta)])
    lo, hi = 0.0, reach
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if piece.member(tuple(anchor + mid * direction), tol=0.0):
            lo = mid
        else:
            hi = mid
    return anchor + lo * direction


def support_estimate(
    d: FlexDomain, a: tuple[float, float], n: int = 1000,
    seed: int = 0, use_closed_form: bool = True,
) -> SupportEstimate:
    """Estimated support value of the domain in unit direction a.

    Built on a nested angle grid of boundary points per piece plus a local
    golden-section refinement, so the value is monotone nondecreasing in n.
    Closed forms are preferred for the built-in families.
    """
    a_vec = np.asarray(a, dtype=float)
    a_vec = a_vec / np.linalg.norm(a_vec)
    if use_closed_form:
        cf = closed_form_support(d, a_vec)
        if cf is not None:
            return SupportEstimate(direction=(a_vec[0], a_vec[1]), value=cf[0], argmax=cf[1])
    if d.kind == DISCRETE:
        cf = closed_form_support(d, a_vec)
        return SupportEstimate(direction=(a_vec[0], a_vec[1]), value=cf[0], argmax=cf[1])

    if n < 8:
        raise ValueError("support estimation needs n >= 8 samples")
    rng = np.random.default_rng(seed)
    p_min, p_max, q_min, q_max = d.bounding_box
    reach = 2.0 * float(np.hypot(p_max - p_min, q_max - q_min)) + 1e-9
    gold = (np.sqrt(5.0) - 1.0) / 2.0
    best_val, best_pt = -np.inf, None
    for k in range(len(d.pieces)):
        anchor = _piece_anchor(d, k, rng)

        def value(theta, k=k, anchor=anchor):
            x = _boundary_point(d, k, anchor, theta, reach)
            return float(a_vec @ x), x

        m = max(int(n), 8)
        thetas = 2.0 * np.pi * np.arange(m) / m
        vals = []
        for th in thetas:
            v, x = value(th)
            vals.append(v)
            if v > best_val:
                best_val, best_pt = v, x
        j = int(np.argmax(vals))
        lo = thetas[j] - 2.0 * np.pi / m
        hi = thetas[j] + 2.0 * np.pi / m
        c = hi - gold * (hi - lo)
        e = lo + gold * (hi - lo)
        fc, xc = value(c)
        fe, xe = value(e)
        for _ in range(64):
            if fc >= fe:
                hi, e, fe = e, c, fc
                c = hi - gold * (hi - lo)
                fc, xc = value(c)
            else:
                lo, c, fc = c, e, fe
                e = lo + gold * (hi - lo)
                fe, xe = value(e)
        for v, x in ((fc, xc), (fe, xe)):
            if v > best_val:
                best_val, best_pt = v, x
    return SupportEstimate(
        direction=(float(a_vec[0]), float(a_vec[1])),
        value=float(best_val),
        argmax=(float(best_pt[0]), float(best_pt[1])),
    )


def outer_fit_lp(d: FlexDomain, proto: PrototypePolygon, n_support: int = 4096) -> Homothet:
    """Exact finite reformulation of the outer fit over support values:
    minimize the scale subject to scale*b_i + a_i . beta >= h(a_i), with the
    same minimal-1-norm tie-break on beta as the certificate path."""
    h = np.array(
        [support_estimate(d, tuple(proto.A[i]), n=n_support).value for i in range(proto.n_edges)]
    )
    # stage 1: minimize alpha
    A_ub = np.column_stack([-proto.b, -proto.A])
    res = linprog(
        c=[1.0, 0.0, 0.0], A_ub=A_ub, b_ub=-h,
        bounds=[(1e-12, None), (None, None), (None, None)], method="highs",
    )
    if not res.success:
        raise RuntimeError(f"support LP failed: {res.message}")
    alpha = float(res.x[0])
    # stage 2: minimize |beta|_1 at (nearly) fixed alpha
    n = proto.n_edges
    A2 = np.zeros((n + 5, 5))
    b2 = np.zeros(n + 5)
    A2[:n, 0] = -proto.b
    A2[:n, 1:3] = -proto.A
    b2[:n] = -h
    A2[n] = [1.0, 0.0, 0.0, 0.0, 0.0]
    b2[n] = alpha + 1e-9
    A2[n + 1] = [0.0, 1.0, 0.0, -1.0, 0.0]   # beta_p - t_p <= 0
    A2[n + 2] = [0.0, -1.0, 0.0, -1.0, 0.0]  # -beta_p - t_p <= 0
    A2[n + 3] = [0.0, 0.0, 1.0, 0.0, -1.0]
    A2[n + 4] = [0.0, 0.0, -1.0, 0.0, -1.0]
    res2 = linprog(
        c=[0.0, 0.0, 0.0, 1.0, 1.0], A_ub=A2, b_ub=b2,
        bounds=[(1e-12, None)] + [(None, None)] * 2 + [(0, None)] * 2, method="highs",
    )
    if not res2.success:
        raise RuntimeError(f"support tie-break LP failed: {res2.message}")
    alpha, bp, bq = float(res2.x[0]), float(res2.x[1]), float(res2.x[2])
    return Homothet(proto=proto, alpha=alpha, beta=(bp, bq))


def _geometric_alpha_bound(d: FlexDomain, proto: PrototypePolygon, beta: np.ndarray) -> float:
    p_min, p_max, q_min, q_max = d.bounding_box
    bound = np.inf
    for i in range(proto.n_edges):
        a = proto.A[i]
        support = (p_max if a[0] >= 0 else p_min) * a[0] + (q_max if a[1] >= 0 else q_min) * a[1]
        bound = min(bound, (support - float(a @ beta)) / float(proto.b[i]))
    return float(max(bound, 0.0))


def _contained(d: FlexDomain, proto: PrototypePolygon, alpha: float, beta: np.ndarray) -> bool:
    hom = Homothet(proto=proto, alpha=alpha, beta=(float(beta[0]), float(beta[1])))
    return bool(np.all(d.contains_many(hom.edge_points(per_edge=48), tol=1e-9)))


def _max_alpha_geometric(d, proto, beta, tol) -> float:
    hi = _geometric_alpha_bound(d, proto, beta)
    if hi <= 0:
        return 0.0
    lo = 0.0
    if _contained(d, proto, hi, beta):
        return hi
    probe = min(tol, hi / 2.0)
    if not _contained(d, proto, probe, beta):
        return 0.0
    lo = probe
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _contained(d, proto, mid, beta):
            lo = mid
        else:
            hi = mid
    return lo


def inner_fit_grid(
    d: FlexDomain, proto: PrototypePolygon, grid_n: int = 41, tol: float = 1e-3,
) -> Homothet:
    """Grid search over the translation with a per-point geometric bisection
    on the scale (dense vertex-and-edge sampling containment), then two
    local grid refinements around the best cell."""
    if d.kind != CONTINUOUS:
        raise ValueError("inner oracle requires a continuous domain")
    p_min, p_max, q_min, q_max = d.bounding_box

    def search(center, half_p, half_q, m):
        best = (0.0, np.asarray(center))
        ps = np.linspace(center[0] - half_p, center[0] + half_p, m)
        qs = np.linspace(center[1] - half_q, center[1] + half_q, m)
        for bp in ps:
            for bq in qs:
                beta = np.array([bp, bq])
                if not d.contains(tuple(beta), tol=0.0):
                    continue
                a = _max_alpha_geometric(d, proto, beta, tol)
                if a > best[0]:
                    best = (a, beta)
        return best

    center = ((p_min + p_max) / 2.0, (q_min + q_max) / 2.0)
    half_p, half_q = (p_max - p_min) / 2.0, (q_max - q_min) / 2.0
    best_a, best_b = search(center, half_p, half_q, grid_n)
    step_p = 2 * half_p / (grid_n - 1)
    step_q = 2 * half_q / (grid_n - 1)
    for _ in range(2):
        a, b = search(tuple(best_b), step_p, step_q, 9)
        if a > best_a:
            best_a, best_b = a, b
        step_p /= 4.0
        step_q /= 4.0
    if best_a <= 0:
        raise RuntimeError("inner grid oracle found no feasible homothet")
    return Homothet(proto=proto, alpha=best_a, beta=(float(best_b[0]), float(best_b[1])))


def sample_in_domain(d: FlexDomain, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniformly distributed over the domain (uniform over the point
    set for discrete domains), by rejection from the bounding box."""
    if d.kind == DISCRETE:
        pts = d.discrete_points()
        return pts[rng.integers(0, len(pts), size=n)]
    p_min, p_max, q_min, q_max = d.bounding_box
    out = np.empty((0, 2))
    for _ in range(200):
        cand = np.column_stack(
            [rng.uniform(p_min, p_max, 4 * n), rng.uniform(q_min, q_max, 4 * n)]
        )
        out = np.vstack([out, cand[d.contains_many(cand, tol=0.0)]])
        if len(out) >= n:
            return out[:n]
    raise RuntimeError("rejection sampling failed; domain has tiny volume")


def minkowski_sample(domains: list[FlexDomain], n: int = 1000, seed: int = 0) -> np.ndarray:
    """n points of the aggregate domain, each the sum of independent members."""
    if n < 1:
        raise ValueError("need n >= 1 samples")
    rng = np.random.default_rng(seed)
    total = np.zeros((n, 2))
    for d in domains:
        total += sample_in_domain(d, n, rng)
    return total
