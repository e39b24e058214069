import io
import json

import numpy as np
import pytest

from anisolayer import (
    Grid2D,
    InsufficientPoints,
    NonPositiveNorm,
    builtin_problem,
    build_antiderivatives,
    decompose,
    fd_self_convergence_estimate,
    fit_order,
    matching_identity_check,
    max_principle_check,
    remainder_norms,
    solve_fd,
)


class TestFitOrder:
    def test_exact_quadratic_power(self):
        eps2 = np.array([0.001, 0.01, 0.1])
        points = list(zip(eps2, 3.0 * eps2**2))
        fit = fit_order(points)
        assert fit.slope == pytest.approx(2.0, abs=1e-12)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)

    def test_exact_linear_power(self):
        eps2 = np.array([0.002, 0.02, 0.2, 0.5])
        fit = fit_order(list(zip(eps2, 7.0 * eps2)))
        assert fit.slope == pytest.approx(1.0, abs=1e-12)
        assert fit.intercept == pytest.approx(np.log10(7.0), abs=1e-12)

    def test_paper_table_r0_slope_near_one(self):
        # r0 column of the published remainder table
        points = [(0.001, 1.0533e-4), (0.005, 5.2222e-4), (0.01, 1.0335e-3),
                  (0.05, 4.7441e-3), (0.1, 8.6241e-3)]
        fit = fit_order(points)
        assert fit.slope == pytest.approx(1.0, abs=0.1)

    def test_too_few_points(self):
        with pytest.raises(InsufficientPoints):
            fit_order([(0.01, 1.0), (0.1, 2.0)])

    def test_nonpositive_norm(self):
        with pytest.raises(NonPositiveNorm):
            fit_order([(0.01, 1.0), (0.1, 0.0), (0.5, 2.0)])


class TestMaxPrinciple:
    def test_zero_problem(self):
        p = builtin_problem("zero", eps=0.3)
        field, _ = solve_fd(p, Grid2D(16, 16))
        res = max_principle_check(field, p)
        assert res.bound == 0.0
        assert res.max_abs == 0.0
        assert res.passed

    def test_constant_force_at_eps_one(self):
        # exact solution y(1-y)/2 peaks at 1/8, bound is 0 + 1/2
        p = builtin_problem("constant-force", eps=1.0)
        field, _ = solve_fd(p, Grid2D(16, 64))
        res = max_principle_check(field, p)
        assert res.bound == pytest.approx(0.5)
        assert res.max_abs == pytest.approx(0.125, abs=1e-3)
        assert res.passed

    def test_paper_problem_bound(self):
        eps2 = 0.05
        p = builtin_problem("paper", eps=float(np.sqrt(eps2)))
        field, _ = solve_fd(p, Grid2D(128, 128))
        res = max_principle_check(field, p)
        assert res.bound == pytest.approx(1.025, abs=1e-3)
        assert res.passed


class TestMatchingIdentity:
    def test_zero_force(self):
        d = decompose(builtin_problem("zero"), quad_points=64)
        stack = build_antiderivatives(d, quad_points=64)
        assert matching_identity_check(d, stack, n_modes=4) == pytest.approx(0.0, abs=1e-14)

    def test_single_mode_closed_form(self):
        d0 = decompose(builtin_problem("zero"), quad_points=1024)
        d = type(d0)(fbar=d0.fbar,
                     ftilde=lambda x, y: np.cos(np.pi * x) * (1.0 + 0.5 * y),
                     phibar0=0.0, phibar1=0.0, phitilde0=d0.phitilde0,
                     phitilde1=d0.phitilde1, quad_points=1024)
        stack = build_antiderivatives(d, quad_points=1024)
        assert matching_identity_check(d, stack, n_modes=8) < 1e-9

    def test_paper_problem_high_resolution(self):
        d = decompose(builtin_problem("paper"), quad_points=4096)
        stack = build_antiderivatives(d, quad_points=4096)
        assert matching_identity_check(d, stack, n_modes=8) <= 1e-7


class TestSelfConvergenceEstimate:
    def test_matches_true_error_on_smooth_problem(self):
        # no-layer: the expansion mean is exact, so the FD error is measurable
        from anisolayer import composite

        p = builtin_problem("no-layer", eps=0.2)
        grid = Grid2D(16, 64)
        field, _ = solve_fd(p, grid)
        approx = composite(p, order=0, n_modes=8, quad_points=256)
        true_err = float(np.max(np.abs(
            field.values - approx.evaluate_grid(grid.x_nodes(), grid.y_nodes()))))
        est = fd_self_convergence_estimate(p, field)
        assert est == pytest.approx(true_err, rel=0.25)

    def test_requires_even_cells(self):
        p = builtin_problem("zero")
        field, _ = solve_fd(p, Grid2D(9, 8))
        with pytest.raises(ValueError):
            fd_self_convergence_estimate(p, field)


class TestRemainderNorms:
    def test_no_layer_norms_bounded_by_fd_error(self):
        p = builtin_problem("no-layer")
        report = remainder_norms(p, [0.001, 0.01, 0.1], [0], Grid2D(16, 64),
                                 n_modes=8, quad_points=256)
        for i, norm in enumerate(report.norms[0]):
            # expansion is exact here, the whole remainder is FD error
            assert norm <= 1.5 * report.fd_error_estimates[i]
            assert report.flagged[0][i]
        # and that error does not depend on eps
        assert max(report.norms[0]) / min(report.norms[0]) < 1.01

    def test_paper_problem_dominance_and_monotonicity(self):
        p = builtin_problem("paper")
        report = remainder_norms(p, [0.01, 0.05, 0.1], [0, 1], Grid2D(128, 512),
                                 quad_points=1024)
        r0, r2 = report.norms[0], report.norms[1]
        assert all(a <= b for a, b in zip(r0, r0[1:]))
        assert all(a <= b for a, b in zip(r2, r2[1:]))
        assert all(r2[i] < r0[i] for i in range(3))
        assert all(res.passed for res in report.max_principle)

    def test_insufficient_eps_values(self):
        p = builtin_problem("paper")
        with pytest.raises(InsufficientPoints):
            remainder_norms(p, [0.01, 0.1], [0], Grid2D(8, 8))

    def test_eps_values_must_increase(self):
        p = builtin_problem("paper")
        with pytest.raises(ValueError):
            remainder_norms(p, [0.1, 0.01, 0.05], [0], Grid2D(8, 8))

    def test_csv_and_sidecar_round_trip(self):
        p = builtin_problem("no-layer")
        report = remainder_norms(p, [0.001, 0.01, 0.1], [0, 1], Grid2D(8, 16),
                                 n_modes=8, quad_points=64)
        buf = io.StringIO()
        report.write_csv(buf, metadata={"tool": "anisolayer test"})
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == "eps2,r0,r2"
        row = lines[2].split(",")
        assert float(row[0]) == 0.001
        assert float(row[1]) == report.norms[0][0]
        sidecar = report.sidecar_dict()
        json.dumps(sidecar)  # must be JSON-serializable
        assert set(sidecar["slopes"]) == {"r0", "r2"}
        assert sidecar["grid"] == {"n_x": 8, "n_y": 16}
        assert len(sidecar["max_principle"]) == 3
