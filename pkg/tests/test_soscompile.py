import math

import numpy as np
import pytest

from flexhull.polynomial import Polynomial2, gram_polynomial
from flexhull.soscompile import (
    INFEASIBLE,
    OPTIMAL,
    AffinePoly,
    CertificateAudit,
    CompileError,
    ConicProgramBuilder,
    certificate_degree,
    even_ceil,
    even_floor,
    solve,
)


def test_degree_helpers():
    assert even_ceil(3) == 4 and even_ceil(4) == 4
    assert even_floor(3) == 2 and even_floor(0) == 0 and even_floor(-1) == 0
    gs = [Polynomial2({(2, 0): 1.0}), Polynomial2({(0, 1): 1.0})]
    assert certificate_degree(gs) == 4


def test_constant_sos():
    b = ConicProgramBuilder()
    blk = b.sos_constraint(Polynomial2.constant(1.0), residual_degree=0)
    prog = b.build()
    out = solve(prog)
    assert out.status == OPTIMAL
    xi = out.values[blk.residual_gram]
    assert np.allclose(xi, [[1.0]], atol=1e-7)


def test_sum_of_squares_quadratic():
    b = ConicProgramBuilder()
    target = Polynomial2({(2, 0): 1.0, (0, 2): 1.0})
    blk = b.sos_constraint(target, residual_degree=2)
    prog = b.build()
    out = solve(prog)
    assert out.status == OPTIMAL
    xi = np.asarray(out.values[blk.residual_gram])
    assert np.linalg.eigvalsh(xi).min() >= -1e-7
    rebuilt = gram_polynomial(prog.grams[0].basis, xi)
    for m in ((2, 0), (0, 2)):
        assert math.isclose(rebuilt.coefficient(m), 1.0, abs_tol=1e-6)


def test_negative_poly_infeasible():
    b = ConicProgramBuilder()
    b.sos_constraint(Polynomial2({(0, 0): -1.0, (2, 0): -1.0}), residual_degree=2)
    assert solve(b.build()).status == INFEASIBLE


def test_linear_program_with_slack():
    # min alpha s.t. alpha >= 3
    b = ConicProgramBuilder()
    a = b.scalar("alpha")
    s = b.scalar("slack", nonneg=True)
    b.add_equality([(a, None, 1.0), (s, None, -1.0)], 3.0)
    b.minimize({a: 1.0})
    out = solve(b.build())
    assert out.status == OPTIMAL
    assert math.isclose(out.values[a], 3.0, abs_tol=1e-6)
    assert math.isclose(out.objective_value, 3.0, abs_tol=1e-6)


def test_affine_target_drives_scalar():
    # minimize c subject to (p^2 + q^2 emitted) ... c - p^2 - q^2 + residual: choose
    # target c - (p^2+q^2); SOS residual forces c >= max of p^2+q^2? No: it forces
    # c - p^2 - q^2 to be SOS, impossible; instead check c + p^2 + q^2 SOS for c >= 0.
    b = ConicProgramBuilder()
    c = b.scalar("c")
    target = AffinePoly.from_poly(Polynomial2({(2, 0): 1.0, (0, 2): 1.0}))
    target.add_var((0, 0), c, 1.0)
    b.sos_constraint(target, residual_degree=2)
    b.minimize({c: 1.0})
    out = solve(b.build())
    assert out.status == OPTIMAL
    assert out.values[c] <= 1e-6  # optimum at c = 0


def test_multiplier_certificate():
    # certify 1 - p^2 - q^2 >= 0 on the square of half-width a via edge multipliers
    disk = Polynomial2({(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
    for a, expect in ((0.70, OPTIMAL), (0.72, INFEASIBLE)):
        b = ConicProgramBuilder()
        ells = [
            Polynomial2({(0, 0): a, (1, 0): -1.0}),
            Polynomial2({(0, 0): a, (1, 0): 1.0}),
            Polynomial2({(0, 0): a, (0, 1): -1.0}),
            Polynomial2({(0, 0): a, (0, 1): 1.0}),
        ]
        b.sos_constraint(disk, [(e, 2) for e in ells], residual_degree=4)
        assert solve(b.build()).status == expect


def test_compiler_determinism():
    def build():
        b = ConicProgramBuilder()
        t = AffinePoly.from_poly(Polynomial2({(2, 0): 1.0}))
        v = b.scalar("v")
        t.add_var((0, 0), v, 2.0)
        b.sos_constraint(t, [(Polynomial2({(1, 0): 1.0}), 2)])
        b.minimize({v: 1.0})
        return b.build().to_json()

    assert build() == build()


def test_degree_mismatch_names_monomial():
    b = ConicProgramBuilder()
    sextic = Polynomial2({(6, 0): 1.0})
    with pytest.raises(CompileError, match=r"p\^6"):
        b.sos_constraint(sextic, residual_degree=4)


def test_basis_degree_cap():
    b = ConicProgramBuilder(max_basis_degree=6)
    with pytest.raises(CompileError, match="cap"):
        b.gram(7)


def test_sigma_degree_must_be_even():
    b = ConicProgramBuilder()
    with pytest.raises(CompileError, match="even"):
        b.sos_constraint(Polynomial2.constant(1.0), [(Polynomial2({(1, 0): 1.0}), 3)])


def test_check_solution():
    b = ConicProgramBuilder()
    blk = b.sos_constraint(Polynomial2({(2, 0): 1.0, (0, 2): 1.0}), residual_degree=2)
    prog = b.build()
    good = {blk.residual_gram: np.diag([0.0, 1.0, 1.0])}
    assert prog.check_solution(good)
    bad_eq = {blk.residual_gram: np.diag([0.5, 1.0, 1.0])}
    assert not prog.check_solution(bad_eq)
    bad_psd = {blk.residual_gram: np.array([[0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])}
    assert not prog.check_solution(bad_psd)


def test_infeasible_has_no_values():
    b = ConicProgramBuilder()
    b.sos_constraint(Polynomial2({(0, 0): -2.0}), residual_degree=0)
    out = solve(b.build())
    assert out.status == INFEASIBLE
    assert out.values == {}


def test_audit_records_block():
    b = ConicProgramBuilder()
    disk = Polynomial2({(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
    ells = [
        Polynomial2({(0, 0): 0.6, (1, 0): -1.0}),
        Polynomial2({(0, 0): 0.6, (1, 0): 1.0}),
        Polynomial2({(0, 0): 0.6, (0, 1): -1.0}),
        Polynomial2({(0, 0): 0.6, (0, 1): 1.0}),
    ]
    blk = b.sos_constraint(disk, [(e, 2) for e in ells], residual_degree=4, label="demo")
    prog = b.build()
    out = solve(prog)
    assert out.status == OPTIMAL
    audit = CertificateAudit()
    pts = np.random.default_rng(0).uniform(-0.6, 0.6, size=(500, 2))
    rec = audit.check_block(prog, blk, out, pts)
    assert rec.ok and audit.ok
    assert rec.min_residual >= -1e-6
    assert rec.min_eigenvalue >= -1e-7


def test_program_json_dump():
    b = ConicProgramBuilder()
    v = b.scalar("v", nonneg=True)
    b.sos_constraint(Polynomial2.constant(1.0), residual_degree=0)
    b.minimize({v: 1.0})
    dump = b.build().to_json()
    assert dump["scalars"][0]["nonneg"] is True
    assert dump["grams"][0]["basis_degree"] == 0
    assert "equalities" in dump and "objective" in dump


def cvxpy_solve(prog):
    """Independent re-solve of a compiled program through cvxpy."""
    import cvxpy as cp

    vars_ = {}
    constraints = []
    for s in prog.scalars:
        vars_[s.id] = cp.Variable(nonneg=s.nonneg)
    for g in prog.grams:
        n = len(g.basis)
        X = cp.Variable((n, n), symmetric=True)
        constraints.append(X >> 0)
        vars_[g.id] = X

    def entry(var_id, pos):
        return vars_[var_id] if pos is None else vars_[var_id][pos]

    for row in prog.equalities:
        expr = sum(c * entry(i, pos) for i, pos, c in row.terms)
        constraints.append(expr == row.rhs)
    objective = sum(c * vars_[i] for i, c in prog.objective.items())
    problem = cp.Problem(cp.Minimize(objective if prog.objective else 0), constraints)
    problem.solve(solver=cp.SCS, eps=1e-8)
    return problem.status, problem.value


def test_cross_solver_agreement():
    # LP program
    b = ConicProgramBuilder()
    a = b.scalar("alpha")
    s = b.scalar("s", nonneg=True)
    b.add_equality([(a, None, 1.0), (s, None, -1.0)], 3.0)
    b.minimize({a: 1.0})
    prog = b.build()
    ours = solve(prog)
    status, value = cvxpy_solve(prog)
    assert ours.status == OPTIMAL and status == "optimal"
    assert math.isclose(ours.objective_value, value, abs_tol=1e-5)

    # SOS feasibility program with a multiplier
    b2 = ConicProgramBuilder()
    disk = Polynomial2({(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
    ells = [
        Polynomial2({(0, 0): 0.5, (1, 0): -1.0}),
        Polynomial2({(0, 0): 0.5, (1, 0): 1.0}),
        Polynomial2({(0, 0): 0.5, (0, 1): -1.0}),
        Polynomial2({(0, 0): 0.5, (0, 1): 1.0}),
    ]
    b2.sos_constraint(disk, [(e, 2) for e in ells], residual_degree=4)
    prog2 = b2.build()
    assert solve(prog2).status == OPTIMAL
    status2, _ = cvxpy_solve(prog2)
    assert status2 == "optimal"
