import math

import numpy as np
import pytest

from flexhull.domain import custom_domain, make_ac, make_battery, make_pv, make_wind
from flexhull.fit import (
    DiscreteDomainError,
    FitConfig,
    FitError,
    InnerFitParams,
    check_inner,
    detect_binding_edges,
    fit_inner,
    fit_outer,
    max_alpha_bisection,
)
from flexhull.polynomial import Polynomial2
from flexhull.soscompile import CertificateAudit

WIND_PARAMS = dict(p_max=1.0, p0=0.1, q0=0.1, s1=1.2, s2=1.1, rotor_coupling=1.0)


class TestOuter:
    def test_disk_square(self, disk, square):
        h = fit_outer(disk, square)
        assert math.isclose(h.alpha, 1.0, abs_tol=2e-3)
        assert np.linalg.norm(h.beta) <= 1e-2

    def test_ac_square(self, square):
        h = fit_outer(make_ac(1.0, 0.5), square)
        assert math.isclose(h.alpha, 0.5, abs_tol=1e-3)
        assert np.allclose(h.beta, (0.5, 0.25), atol=1e-3)

    def test_pv_tie_break(self, square):
        # q-extent drives alpha = 1; beta_p tie resolved to the 1-norm minimum 0
        h = fit_outer(make_pv(0.999, 1.0), square)
        assert math.isclose(h.alpha, 1.0, abs_tol=2e-3)
        assert np.linalg.norm(h.beta, 1) <= 2e-3

    def test_outer_covers_boundary(self, square):
        d = make_wind(**WIND_PARAMS)
        h = fit_outer(d, square)
        pts = d.sample_boundary(512, seed=0)
        assert np.all(h.contains_many(pts, tol=1e-6))

    def test_outer_hexagon_disk(self, disk, hexagon):
        h = fit_outer(disk, hexagon)
        assert math.isclose(h.alpha, 1.0, abs_tol=2e-3)


class TestCheckInner:
    def test_disk_cases(self, disk, square):
        assert check_inner(disk, square, 0.5, (0.0, 0.0))
        assert not check_inner(disk, square, 0.8, (0.0, 0.0))
        assert not check_inner(disk, square, 0.1, (0.95, 0.0))

    def test_discrete_rejected(self, square):
        with pytest.raises(DiscreteDomainError):
            check_inner(make_ac(1.0, 0.5), square, 0.1, (0.0, 0.0))

    def test_escalation_certifies_hexagon(self, disk, hexagon):
        # degree 4 cannot certify the near-maximal inscribed hexagon; the
        # +2 escalation (backed by the sampling check) must kick in
        alpha = math.sqrt(3) / 2 - 1e-3
        assert check_inner(disk, hexagon, alpha, (0.0, 0.0), FitConfig(escalate=True))
        assert not check_inner(
            disk, hexagon, alpha, (0.0, 0.0), FitConfig(escalate=False, degree=4)
        )

    def test_union_certified_straddling(self, square):
        # homothet straddling the q=0 separator of the wind union
        d = make_wind(**WIND_PARAMS)
        assert check_inner(d, square, 0.3, (-0.5, 0.0))
        assert not check_inner(d, square, 0.3, (-0.5, 0.9))

    def test_union_fallback_warns_without_regions(self, square):
        circle = Polynomial2({(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
        left = Polynomial2({(1, 0): -1.0})  # p <= 0 half of the disk
        right = Polynomial2({(1, 0): 1.0})
        d = custom_domain([[circle, left], [circle, right]], (-1, 1, -1, 1))
        with pytest.warns(RuntimeWarning, match="sampling"):
            assert check_inner(d, square, 0.5, (0.0, 0.0))


class TestBisection:
    def test_disk_square(self, disk, square):
        a = max_alpha_bisection(disk, square, (0.0, 0.0))
        assert 1 / math.sqrt(2) - 2e-3 <= a <= 1 / math.sqrt(2) + 1e-6

    def test_disk_hexagon(self, disk, hexagon):
        a = max_alpha_bisection(disk, hexagon, (0.0, 0.0))
        assert abs(a - math.sqrt(3) / 2) <= 3e-3

    def test_offset_beta(self, disk, square):
        # (0.2 + a)^2 + a^2 = 1 has root a = 0.6
        a = max_alpha_bisection(disk, square, (0.2, 0.0))
        assert abs(a - 0.6) <= 3e-3

    def test_seed_failure(self, disk, square):
        with pytest.raises(FitError, match="beta outside domain"):
            max_alpha_bisection(disk, square, (5.0, 5.0))

    def test_tolerance_contract(self, disk, square):
        p1 = InnerFitParams(bisection_tol=2e-3)
        p2 = InnerFitParams(bisection_tol=1e-3)
        a1 = max_alpha_bisection(disk, square, (0.0, 0.0), p1)
        a2 = max_alpha_bisection(disk, square, (0.0, 0.0), p2)
        assert abs(a1 - a2) <= 2e-3

    def test_exact_homothety_hits_upper_bracket(self, square):
        gs = [
            Polynomial2({(0, 0): 2.0, (1, 0): -1.0}),
            Polynomial2({(0, 0): 2.0, (1, 0): 1.0}),
            Polynomial2({(0, 0): 2.0, (0, 1): -1.0}),
            Polynomial2({(0, 0): 2.0, (0, 1): 1.0}),
        ]
        d = custom_domain([gs], (-2, 2, -2, 2))  # the 2x square itself
        a = max_alpha_bisection(d, square, (0.0, 0.0))
        assert abs(a - 2.0) <= 2e-3


class TestBindingEdges:
    def test_centered_disk_all_bind(self, disk, square):
        binding = detect_binding_edges(disk, square, 1 / math.sqrt(2), (0.0, 0.0))
        assert binding == [0, 1, 2, 3]

    def test_offset_disk_left_edge_free(self, disk, square):
        binding = detect_binding_edges(disk, square, 0.6, (0.2, 0.0))
        assert 2 not in binding  # left edge has 0.6 of clearance
        assert 0 in binding

    def test_exact_homothety_all_bind(self, square):
        gs = [
            Polynomial2({(0, 0): 2.0, (1, 0): -1.0}),
            Polynomial2({(0, 0): 2.0, (1, 0): 1.0}),
            Polynomial2({(0, 0): 2.0, (0, 1): -1.0}),
            Polynomial2({(0, 0): 2.0, (0, 1): 1.0}),
        ]
        d = custom_domain([gs], (-2, 2, -2, 2))
        assert detect_binding_edges(d, square, 1.9995, (0.0, 0.0)) == [0, 1, 2, 3]


class TestFitInner:
    def test_disk_from_offset(self, disk, square):
        rep = fit_inner(disk, square, InnerFitParams(beta_init=(0.3, 0.3)))
        assert abs(rep.homothet.alpha - 1 / math.sqrt(2)) <= 1e-2
        assert np.linalg.norm(rep.homothet.beta) <= 5e-2
        assert rep.monotonic
        assert all(b >= a for a, b in zip(rep.alpha_trace, rep.alpha_trace[1:]))

    def test_disk_centered_terminates_immediately(self, disk, square):
        rep = fit_inner(disk, square, InnerFitParams(beta_init=(0.0, 0.0)))
        assert rep.iterations == 1
        assert abs(rep.homothet.alpha - 1 / math.sqrt(2)) <= 2e-3
        assert rep.binding_edges_final == [0, 1, 2, 3]

    def test_pv_half_disk(self, square):
        d = make_pv(0.999, 1.0)
        rep = fit_inner(d, square)
        assert abs(rep.homothet.alpha - 1 / math.sqrt(5)) <= 1e-2
        assert abs(rep.homothet.beta[0] + 1 / math.sqrt(5)) <= 5e-2
        assert abs(rep.homothet.beta[1]) <= 5e-2

    def test_discrete_refused(self, square):
        with pytest.raises(DiscreteDomainError, match="discrete"):
            fit_inner(make_ac(1.0, 0.5), square)

    def test_wind_against_grid_oracle(self, square):
        from flexhull.oracle import inner_fit_grid

        d = make_wind(**WIND_PARAMS)
        rep = fit_inner(d, square)
        grid = inner_fit_grid(d, square, grid_n=41)
        assert rep.homothet.alpha <= grid.alpha + 1e-2
        assert rep.homothet.alpha >= grid.alpha - 1e-2

    def test_inner_vertices_inside(self, square):
        for d in (make_battery(1.0, 2.0), make_pv(0.999, 1.0), make_wind(**WIND_PARAMS)):
            rep = fit_inner(d, square)
            hom = rep.homothet
            assert np.all(d.contains_many(hom.vertices(), tol=1e-6))
            assert np.all(d.contains_many(hom.edge_points(32), tol=1e-6))

    def test_report_json_shape(self, disk, square):
        rep = fit_inner(disk, square, InnerFitParams(beta_init=(0.0, 0.0)))
        obj = rep.to_json()
        assert set(obj) == {
            "alpha", "beta", "iterations", "alpha_trace", "binding_edges", "monotonic",
        }

    def test_params_validation(self):
        with pytest.raises(ValueError):
            InnerFitParams(bisection_tol=0.0)
        with pytest.raises(ValueError):
            InnerFitParams(epsilon_step=1.0)
        with pytest.raises(ValueError):
            InnerFitParams(max_outer_iters=0)


class TestSandwichAndAudit:
    def test_sandwich(self, square):
        from flexhull.oracle import outer_fit_lp

        for d in (make_battery(1.0, 2.0), make_pv(0.999, 1.0)):
            outer = fit_outer(d, square)
            inner = fit_inner(d, square).homothet
            lp = outer_fit_lp(d, square)
            assert inner.alpha <= outer.alpha + 1e-6
            assert abs(outer.alpha - lp.alpha) / lp.alpha <= 0.01
            pts = d.sample_boundary(1024, seed=1)
            assert np.all(outer.contains_many(pts, tol=1e-6))

    def test_audit_collected_and_clean(self, disk, square):
        audit = CertificateAudit()
        cfg = FitConfig(audit=audit)
        fit_outer(disk, square, cfg)
        check_inner(disk, square, 0.5, (0.0, 0.0), cfg)
        assert len(audit.records) >= 6
        assert audit.ok
