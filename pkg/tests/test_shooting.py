import numpy as np
import pytest

from lppvar import (
    DiscretizedPathSpace,
    LipschitzPath,
    RectangleDomain,
    ValidationError,
    constant_field,
    el_rhs,
    exp_y_field,
    functional_eval,
    gaussian_peaks_field,
    quadratic_y_field,
    shoot,
    solve_bvp,
    variational_dp,
)


def first_variation(y0: LipschitzPath, field, k: int, eps: float = 1e-4) -> float:
    """Centered difference of the functional along a sinusoidal bump that
    vanishes at the endpoints; an independent stationarity probe."""
    h = np.sin(k * np.pi * y0.x_grid / y0.l)
    h[0] = h[-1] = 0.0
    up = LipschitzPath(y0.x_grid, y0.y_values + eps * h)
    dn = LipschitzPath(y0.x_grid, y0.y_values - eps * h)
    return (functional_eval(up, field) - functional_eval(dn, field)) / (2.0 * eps)


class TestRhs:
    def test_constant_field_is_stationary_everywhere(self):
        d = RectangleDomain(1.0, 0.0)
        f = constant_field(d, 2.5)
        for w in (-0.9, -0.3, 0.0, 0.4, 1.0):
            assert el_rhs(0.5, 0.1, w, f) == 0.0

    def test_exponential_profile_hand_value(self):
        d = RectangleDomain(1.0, 0.0)
        f = exp_y_field(d, -1.0)
        # alpha_x = 0, alpha_y = -alpha: the alphas cancel, rhs = 2 at w = 0
        assert el_rhs(0.3, 0.0, 0.0, f) == pytest.approx(2.0, abs=1e-14)

    def test_zero_at_extreme_slopes(self):
        d = RectangleDomain(1.0, 0.0)
        f = gaussian_peaks_field(d, 1.0, [(2.0, 0.1, 15.0)])
        assert el_rhs(0.4, 0.1, 1.0, f) == 0.0
        assert el_rhs(0.4, 0.1, -1.0, f) == 0.0

    def test_requires_positive_field(self):
        d = RectangleDomain(1.0, 0.0)
        f = constant_field(d, 0.0)
        with pytest.raises(ValidationError):
            el_rhs(0.5, 0.0, 0.0, f)


class TestShoot:
    def test_constant_field_linear_solution(self):
        d = RectangleDomain(1.0, 0.4)
        f = constant_field(d, 1.0)
        sol = shoot(f, d, 0.3)
        assert sol.ys[-1] == pytest.approx(0.3, abs=1e-12)
        assert np.allclose(sol.ws, 0.3)

    def test_extreme_slopes_ride_the_cone(self):
        d = RectangleDomain(1.0, 0.0)
        f = quadratic_y_field(d, 2.0, -1.0)
        up = shoot(f, d, 1.0)
        dn = shoot(f, d, -1.0)
        assert up.ys[-1] == pytest.approx(1.0, abs=1e-12)
        assert dn.ys[-1] == pytest.approx(-1.0, abs=1e-12)
        assert np.all(up.ws == 1.0)

    def test_slope_bound_is_hard(self):
        d = RectangleDomain(1.0, 0.0)
        f = gaussian_peaks_field(d, 1.0, [(4.0, 0.2, 50.0)])
        sol = shoot(f, d, 0.95)
        assert np.max(np.abs(sol.ws)) <= 1.0

    def test_y_integrates_w(self):
        d = RectangleDomain(1.0, 0.0)
        f = quadratic_y_field(d, 2.0, -0.5)
        sol = shoot(f, d, 0.5, h=1e-3)
        mid_w = 0.5 * (sol.ws[:-1] + sol.ws[1:])
        recon = np.concatenate([[0.0], np.cumsum(mid_w) * 1e-3])
        assert np.max(np.abs(recon - sol.ys)) < 1e-6

    def test_fourth_order_convergence(self):
        # measure at x = 1/2: an off-root trajectory must leave Q shortly
        # before x = l, and the projected rate query kinks the dynamics there
        d = RectangleDomain(1.0, 0.0)
        f = gaussian_peaks_field(d, 2.0, [(1.5, 0.15, 8.0)])

        def y_mid(n):
            sol = shoot(f, d, 0.46, h=1.0 / n)
            return sol.ys[n // 2]

        ref = y_mid(25600)
        errs = [abs(y_mid(n) - ref) for n in (100, 200, 400)]
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        for r in ratios:
            assert 16 * 0.7 <= r <= 16 * 1.3

    def test_rejects_bad_inputs(self):
        d = RectangleDomain(1.0, 0.0)
        f = constant_field(d, 1.0)
        with pytest.raises(ValidationError):
            shoot(f, d, 1.5)
        with pytest.raises(ValidationError):
            shoot(f, d, 0.0, h=0.5)


class TestSolveBvp:
    def test_constant_field_single_root(self):
        d = RectangleDomain(1.0, 0.4)
        f = constant_field(d, 1.0)
        sols = solve_bvp(f, d)
        assert len(sols) == 1
        assert sols[0].w0 == pytest.approx(0.4, abs=1e-9)
        assert abs(sols[0].endpoint_error) <= 1e-9

    def test_symmetric_concave_root_is_flat(self):
        d = RectangleDomain(1.0, 0.0)
        f = quadratic_y_field(d, 2.0, -1.0)
        sols = solve_bvp(f, d)
        assert len(sols) == 1
        assert sols[0].w0 == 0.0
        assert np.all(sols[0].ys == 0.0)

    def test_double_well_multiplicity(self):
        d = RectangleDomain(1.0, 0.0)
        f = gaussian_peaks_field(d, 1.0, [(2.0, 0.3, 20.0), (2.0, -0.3, 20.0)])
        sols = solve_bvp(f, d)
        assert len(sols) >= 2
        w0s = [s.w0 for s in sols]
        assert w0s == sorted(w0s)
        for s in sols:
            assert abs(s.endpoint_error) <= 1e-9

    def test_stationarity_of_roots(self):
        d = RectangleDomain(1.0, 0.25)
        f = quadratic_y_field(d, 2.0, -1.0)
        sols = solve_bvp(f, d)
        assert len(sols) == 1
        y0 = sols[0].to_path()
        for k in (1, 2, 3, 4):
            assert abs(first_variation(y0, f, k)) <= 1e-3

    def test_negative_endpoint(self):
        d = RectangleDomain(1.0, -0.4)
        f = quadratic_y_field(d, 2.0, -1.0)
        sols = solve_bvp(f, d)
        assert len(sols) == 1
        assert -1.0 < sols[0].w0 < 0.0
        assert abs(sols[0].endpoint_error) <= 1e-9

    def test_interior_root_stays_interior(self):
        d = RectangleDomain(1.0, 0.25)
        f = quadratic_y_field(d, 2.0, -1.0)
        (sol,) = solve_bvp(f, d)
        assert np.max(np.abs(sol.ws)) < 1.0

    def test_matches_dp_value_under_concavity(self):
        d = RectangleDomain(1.0, 0.0)
        f = quadratic_y_field(d, 2.0, -1.0)
        (sol,) = solve_bvp(f, d)
        g_ode = functional_eval(sol.to_path(), f)
        g_dp, _ = variational_dp(f, DiscretizedPathSpace(d, 400, 400))
        assert abs(g_ode - g_dp) <= 1e-3

    def test_warns_when_roots_crowd_the_scan(self):
        d = RectangleDomain(1.0, 0.0)
        f = gaussian_peaks_field(d, 1.0, [(2.0, 0.3, 20.0), (2.0, -0.3, 20.0)])
        # at 16 scan cells the outer root pairs sit closer than one cell
        with pytest.warns(UserWarning, match="scan resolution"):
            solve_bvp(f, d, scan_points=16)

    def test_gridded_field_fd_derivatives_drive_the_ode(self, tmp_path):
        from lppvar import gridded_field
        from lppvar.fields import sample_to_grid

        d = RectangleDomain(1.0, 0.0)
        exact = quadratic_y_field(d, 2.0, -1.0)
        grid = gridded_field(d, sample_to_grid(exact, 201, 201))
        sols = solve_bvp(grid, d, tol=1e-6, scan_points=64)
        assert len(sols) == 1
        assert abs(sols[0].w0) <= 1e-3
        g_grid = functional_eval(sols[0].to_path(), grid)
        assert g_grid == pytest.approx(4.0, abs=1e-2)

    def test_export_and_summary(self, tmp_path):
        d = RectangleDomain(1.0, 0.0)
        f = quadratic_y_field(d, 2.0, -1.0)
        (sol,) = solve_bvp(f, d)
        p = tmp_path / "traj.txt"
        sol.save_text(p)
        data = np.loadtxt(p)
        assert data.shape[1] == 3
        assert sol.summary()["w0"] == 0.0
