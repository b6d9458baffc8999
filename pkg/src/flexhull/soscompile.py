"""Compile Putinar-certificate constraints into a conic program and solve it.

A program holds scalar variables (some sign-constrained), Gram-matrix
variables tied to a monomial basis, a linear objective over the scalars,
and linear equality rows over all variable entries.  ``sos_constraint``
turns "target - sum sigma_i * g_i is a sum of squares" into coefficient
-matching equalities with one fresh Gram variable per sigma plus one for
the residual.

Solving goes through a single adapter entry point; any conic solver that
handles equality + nonnegative + PSD cones qualifies.  The default adapter
drives Clarabel directly in its (A x + s = b, s in K) form with the PSD
blocks in scaled upper-triangle (svec) layout.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .polynomial import (
    Exponent,
    MonomialBasis,
    Polynomial2,
    basis,
    gram_expand,
    gram_polynomial,
    sorted_monomials,
)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
INACCURATE = "inaccurate"
FAILED = "failed"

DEFAULT_MAX_BASIS_DEGREE = 6
EQUALITY_TOL = 1e-6
PSD_EIG_TOL = 1e-7


class CompileError(ValueError):
    pass


class AffinePoly:
    """Polynomial whose coefficients are affine in scalar decision variables.

    Each monomial maps to (constant, {var_id: weight}).  Used as the target
    of an SOS constraint; plain polynomials embed with empty weight maps.
    """

    def __init__(self):
        self.terms: dict[Exponent, tuple[float, dict[int, float]]] = {}

    @classmethod
    def from_poly(cls, p: Polynomial2) -> AffinePoly:
        out = cls()
        for m, c in p.terms.items():
            out.add_constant(m, c)
        return out

    def add_constant(self, m: Exponent, c: float) -> AffinePoly:
        const, lin = self.terms.get(m, (0.0, {}))
        self.terms[m] = (const + c, lin)
        return self

    def add_var(self, m: Exponent, var_id: int, weight: float) -> AffinePoly:
        const, lin = self.terms.get(m, (0.0, {}))
        lin = dict(lin)
        lin[var_id] = lin.get(var_id, 0.0) + weight
        self.terms[m] = (const, lin)
        return self

    def degree(self) -> int:
        live = [m for m, (c, lin) in self.terms.items() if c != 0.0 or lin]
        return max((i + j for i, j in live), default=-1)

    def value(self, scalars: Mapping[int, float]) -> Polynomial2:
        out: dict[Exponent, float] = {}
        for m, (const, lin) in self.terms.items():
            v = const + sum(w * scalars[i] for i, w in lin.items())
            if v != 0.0:
                out[m] = v
        return Polynomial2(out)


@dataclass(frozen=True)
class ScalarVar:
    id: int
    nonneg: bool
    name: str


@dataclass(frozen=True)
class GramVar:
    id: int
    basis: MonomialBasis


@dataclass(frozen=True)
class EqRow:
    """sum of coeff * entry == rhs; entry is a scalar var (entry=None) or a
    Gram position (row, col) with row <= col."""

    terms: tuple[tuple[int, tuple[int, int] | None, float], ...]
    rhs: float


@dataclass(frozen=True)
class SosBlock:
    """Bookkeeping for one compiled SOS constraint, kept for certificate audits."""

    label: str
    target: AffinePoly
    multipliers: tuple[tuple[Polynomial2, int], ...]  # (g, gram var id)
    residual_gram: int


@dataclass
class ConicProgram:
    scalars: list[ScalarVar] = field(default_factory=list)
    grams: list[GramVar] = field(default_factory=list)
    equalities: list[EqRow] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    blocks: list[SosBlock] = field(default_factory=list)

    def var_count(self) -> int:
        return len(self.scalars) + len(self.grams)

    def check_solution(self, values: Mapping[int, float | np.ndarray]) -> bool:
        """Equalities within 1e-6 and PSD blocks with eigmin >= -1e-7."""

        def entry(var_id: int, pos: tuple[int, int] | None) -> float:
            v = values[var_id]
            if pos is None:
                return float(v)
            return float(np.asarray(v)[pos])

        for row in self.equalities:
            resid = sum(c * entry(i, pos) for i, pos, c in row.terms) - row.rhs
            if abs(resid) > EQUALITY_TOL:
                return False
        for g in self.grams:
            mat = np.asarray(values[g.id])
            if np.linalg.eigvalsh(mat).min() < -PSD_EIG_TOL:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "scalars": [{"id": v.id, "nonneg": v.nonneg, "name": v.name} for v in self.scalars],
            "grams": [{"id": g.id, "basis_degree": g.basis.max_degree} for g in self.grams],
            "equalities": [
                {
                    "terms": [[i, list(pos) if pos else None, c] for i, pos, c in row.terms],
                    "rhs": row.rhs,
                }
                for row in self.equalities
            ],
            "objective": {str(k): v for k, v in sorted(self.objective.items())},
        }


@dataclass
class SolveOutcome:
    status: str
    values: dict[int, float | np.ndarray] = field(default_factory=dict)
    objective_value: float | None = None

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, INACCURATE)


def even_ceil(d: int) -> int:
    return d if d % 2 == 0 else d + 1


def even_floor(d: int) -> int:
    d = max(d, 0)
    return d if d % 2 == 0 else d - 1


def certificate_degree(constraints: Iterable[Polynomial2]) -> int:
    """Default certificate degree: one even bump above the constraint data."""
    dmax = max((g.degree() for g in constraints), default=0)
    return even_ceil(max(dmax, 0)) + 2


class ConicProgramBuilder:
    """Deterministic builder: ids and row order depend only on call order."""

    def __init__(self, max_basis_degree: int = DEFAULT_MAX_BASIS_DEGREE):
        self._prog = ConicProgram()
        self._next_id = 0
        self.max_basis_degree = max_basis_degree

    def scalar(self, name: str = "", nonneg: bool = False) -> int:
        vid = self._next_id
        self._next_id += 1
        self._prog.scalars.append(ScalarVar(id=vid, nonneg=nonneg, name=name or f"x{vid}"))
        return vid

    def gram(self, basis_degree: int) -> int:
        if basis_degree > self.max_basis_degree:
            raise CompileError(
                f"Gram basis degree {basis_degree} exceeds the configured cap "
                f"{self.max_basis_degree}"
            )
        vid = self._next_id
        self._next_id += 1
        self._prog.grams.append(GramVar(id=vid, basis=basis(basis_degree)))
        return vid

    def add_equality(
        self, terms: Sequence[tuple[int, tuple[int, int] | None, float]], rhs: float
    ) -> None:
        self._prog.equalities.append(EqRow(terms=tuple(terms), rhs=float(rhs)))

    def minimize(self, objective: Mapping[int, float]) -> None:
        self._prog.objective = dict(objective)

    def sos_constraint(
        self,
        target: AffinePoly | Polynomial2,
        multipliers: Sequence[tuple[Polynomial2, int]] = (),
        residual_degree: int | None = None,
        label: str = "",
    ) -> SosBlock:
        """Emit equalities forcing target - sum sigma_i * g_i into the SOS cone.

        ``multipliers`` pairs each region polynomial g with the (even) degree
        of its sigma.  Raises if a product or target monomial exceeds what
        the residual basis can reach, naming the offending monomial.
        """
        if isinstance(target, Polynomial2):
            target = AffinePoly.from_poly(target)
        for g, sdeg in multipliers:
            if sdeg % 2 != 0 or sdeg < 0:
                raise CompileError(f"sigma degree must be even nonnegative, got {sdeg}")
        needed = max(
            [target.degree()] + [g.degree() + sdeg for g, sdeg in multipliers] + [0]
        )
        if residual_degree is None:
            residual_degree = even_ceil(needed)

        # rows[m]: list of (var_id, (r, c), coeff) contributions to monomial m
        rows: dict[Exponent, list[tuple[int, tuple[int, int], float]]] = {}

        def push(m: Exponent, var_id: int, pos: tuple[int, int], coeff: float) -> None:
            rows.setdefault(m, []).append((var_id, pos, coeff))

        res_id = self.gram(residual_degree // 2)
        res_basis = self._prog.grams[-1].basis
        for m, positions in gram_expand(res_basis).items():
            for r, c in positions:
                push(m, res_id, (r, c), 1.0 if r == c else 2.0)

        mult_ids: list[tuple[Polynomial2, int]] = []
        for g, sdeg in multipliers:
            sig_id = self.gram(sdeg // 2)
            mult_ids.append((g, sig_id))
            sig_basis = self._prog.grams[-1].basis
            for m, positions in gram_expand(sig_basis).items():
                for r, c in positions:
                    w = 1.0 if r == c else 2.0
                    for gm, gc in g.terms.items():
                        push((m[0] + gm[0], m[1] + gm[1]), sig_id, (r, c), w * gc)

        all_monomials = sorted_monomials(list(rows) + list(target.terms))
        for m in all_monomials:
            const, lin = target.terms.get(m, (0.0, {}))
            gram_terms = rows.get(m, [])
            if not gram_terms and (const != 0.0 or lin):
                raise CompileError(
                    f"target monomial p^{m[0]} q^{m[1]} exceeds the residual degree "
                    f"cap {residual_degree} and no multiplier reaches it"
                )
            # sum(gram contributions) - sum(target scalar terms) == target const
            terms: list[tuple[int, tuple[int, int] | None, float]] = list(gram_terms)
            for var_id, w in sorted(lin.items()):
                terms.append((var_id, None, -w))
            self.add_equality(terms, const)

        blk = SosBlock(
            label=label,
            target=target,
            multipliers=tuple(mult_ids),
            residual_gram=res_id,
        )
        self._prog.blocks.append(blk)
        return blk

    def build(self) -> ConicProgram:
        return self._prog


def _tri_index(r: int, c: int) -> int:
    # column-major upper triangle: (0,0),(0,1),(1,1),(0,2),...
    return c * (c + 1) // 2 + r


def solve(prog: ConicProgram, verbose: bool | None = None) -> SolveOutcome:
    """Solve through Clarabel; statuses map to optimal/infeasible/inaccurate/failed.

    A solver-optimal outcome is downgraded to ``inaccurate`` when the
    program's own feasibility checker rejects the returned values.
    """
    import clarabel

    if verbose is None:
        verbose = os.environ.get("FLEXHULL_SOLVER_VERBOSE", "") == "1"

    scalar_index = {v.id: k for k, v in enumerate(prog.scalars)}
    gram_offset: dict[int, int] = {}
    off = len(prog.scalars)
    for g in prog.grams:
        gram_offset[g.id] = off
        n = len(g.basis)
        off += n * (n + 1) // 2
    nvar = off

    def col_of(var_id: int, pos: tuple[int, int] | None) -> int:
        if pos is None:
            return scalar_index[var_id]
        r, c = pos
        return gram_offset[var_id] + _tri_index(r, c)

    rows_i: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs: list[float] = []
    cones = []
    nrow = 0

    for row in prog.equalities:
        acc: dict[int, float] = {}
        for var_id, pos, c in row.terms:
            j = col_of(var_id, pos)
            acc[j] = acc.get(j, 0.0) + c
        for j, c in acc.items():
            rows_i.append(nrow)
            cols.append(j)
            vals.append(c)
        rhs.append(row.rhs)
        nrow += 1
    if prog.equalities:
        cones.append(clarabel.ZeroConeT(len(prog.equalities)))

    nonneg = [v for v in prog.scalars if v.nonneg]
    for v in nonneg:
        rows_i.append(nrow)
        cols.append(scalar_index[v.id])
        vals.append(-1.0)
        rhs.append(0.0)
        nrow += 1
    if nonneg:
        cones.append(clarabel.NonnegativeConeT(len(nonneg)))

    sqrt2 = float(np.sqrt(2.0))
    for g in prog.grams:
        n = len(g.basis)
        for c in range(n):
            for r in range(c + 1):
                rows_i.append(nrow)
                cols.append(gram_offset[g.id] + _tri_index(r, c))
                vals.append(-1.0 if r == c else -sqrt2)
                rhs.append(0.0)
                nrow += 1
        cones.append(clarabel.PSDTriangleConeT(n))

    A = sparse.csc_matrix(
        (vals, (rows_i, cols)), shape=(nrow, nvar)
    )
    b = np.array(rhs)
    q = np.zeros(nvar)
    for var_id, c in prog.objective.items():
        q[col_of(var_id, None)] = c
    P = sparse.csc_matrix((nvar, nvar))

    settings = clarabel.DefaultSettings()
    settings.verbose = bool(verbose)
    solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)

    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return SolveOutcome(status=INFEASIBLE)
    if status not in ("Solved", "AlmostSolved"):
        return SolveOutcome(status=FAILED)

    x = np.asarray(sol.x)
    values: dict[int, float | np.ndarray] = {}
    for v in prog.scalars:
        values[v.id] = float(x[scalar_index[v.id]])
    for g in prog.grams:
        n = len(g.basis)
        mat = np.empty((n, n))
        base = gram_offset[g.id]
        for c in range(n):
            for r in range(c + 1):
                mat[r, c] = mat[c, r] = x[base + _tri_index(r, c)]
        values[g.id] = mat

    objective_value = float(np.dot(q, x))
    out_status = OPTIMAL if status == "Solved" else INACCURATE
    if out_status == OPTIMAL and not prog.check_solution(values):
        out_status = INACCURATE
    return SolveOutcome(status=out_status, values=values, objective_value=objective_value)


@dataclass
class AuditRecord:
    label: str
    min_residual: float
    min_eigenvalue: float

    @property
    def ok(self) -> bool:
        return self.min_residual >= -EQUALITY_TOL and self.min_eigenvalue >= -PSD_EIG_TOL


class CertificateAudit:
    """Collects reconstruction checks of solved SOS blocks across a run."""

    def __init__(self):
        self.records: list[AuditRecord] = []

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)

    def check_block(
        self,
        prog: ConicProgram,
        block: SosBlock,
        outcome: SolveOutcome,
        region_points: np.ndarray,
    ) -> AuditRecord:
        """Re-evaluate target - sum sigma_i*g_i from the Gram values on samples."""
        bases = {g.id: g.basis for g in prog.grams}
        scalars = {k: v for k, v in outcome.values.items() if isinstance(v, float)}
        f = block.target.value(scalars)
        vals = f.evaluate_many(region_points)
        min_eig = np.inf
        for g, gram_id in block.multipliers:
            xi = np.asarray(outcome.values[gram_id])
            min_eig = min(min_eig, float(np.linalg.eigvalsh(xi).min()))
            sigma = gram_polynomial(bases[gram_id], xi)
            vals = vals - sigma.evaluate_many(region_points) * g.evaluate_many(region_points)
        res_xi = np.asarray(outcome.values[block.residual_gram])
        min_eig = min(min_eig, float(np.linalg.eigvalsh(res_xi).min()))
        rec = AuditRecord(
            label=block.label,
            min_residual=float(vals.min()) if len(vals) else 0.0,
            min_eigenvalue=float(min_eig) if np.isfinite(min_eig) else 0.0,
        )
        self.records.append(rec)
        return rec
