import math

import numpy as np
import pytest

from nsmaxstab import mathkit
from nsmaxstab.mathkit import (NotPositiveDefiniteError, RngStream, cholesky,
                               finite_diff_gradient, finite_diff_hessian,
                               nelder_mead, spd_solve, student_t_cdf,
                               student_t_pdf, student_t_quantile)


class TestStudentT:
    def test_cdf_center_symmetry(self):
        assert student_t_cdf(0.0, 7.0) == 0.5

    def test_cdf_cauchy_closed_form(self):
        # df=1 is Cauchy: T(x) = 1/2 + arctan(x)/pi
        assert student_t_cdf(1.0, 1.0) == pytest.approx(
            0.5 + math.atan(1.0) / math.pi, abs=1e-12)

    def test_cdf_df2_closed_form(self):
        # T_2(x) = 1/2 + x / (2 sqrt(2 + x^2))
        x = math.sqrt(2.0)
        expected = 0.5 + x / (2.0 * math.sqrt(2.0 + x * x))
        assert student_t_cdf(x, 2.0) == pytest.approx(expected, abs=1e-12)

    def test_cdf_limits(self):
        assert student_t_cdf(math.inf, 3.0) == 1.0
        assert student_t_cdf(-math.inf, 3.0) == 0.0

    def test_cdf_monotone(self):
        xs = np.linspace(-8, 8, 81)
        for df in (0.5, 1.0, 2.0, 5.0, 30.0):
            vals = [student_t_cdf(x, df) for x in xs]
            assert np.all(np.diff(vals) >= 0.0)

    def test_cdf_domain_error(self):
        with pytest.raises(ValueError):
            student_t_cdf(1.0, 0.0)
        with pytest.raises(ValueError):
            student_t_cdf(1.0, -2.0)

    def test_pdf_cauchy_closed_form(self):
        assert student_t_pdf(0.0, 1.0) == pytest.approx(1.0 / math.pi,
                                                        abs=1e-12)

    def test_pdf_matches_cdf_derivative(self):
        h = 1e-6
        x, df = 3.0, 5.0
        fd = (student_t_cdf(x + h, df) - student_t_cdf(x - h, df)) / (2 * h)
        assert student_t_pdf(x, df) == pytest.approx(fd, abs=1e-8)

    def test_pdf_symmetry(self):
        assert student_t_pdf(-2.7, 4.0) == pytest.approx(
            student_t_pdf(2.7, 4.0), abs=1e-15)

    def test_pdf_domain_error(self):
        with pytest.raises(ValueError):
            student_t_pdf(0.0, -1.0)

    def test_pdf_integrates_to_one(self):
        # midpoint quadrature after x = t/(1-t^2) transform of (-1, 1)
        t = np.linspace(-1 + 1e-6, 1 - 1e-6, 40001)
        x = t / (1 - t * t)
        jac = (1 + t * t) / (1 - t * t) ** 2
        for df in (1.0, 4.0):
            pdf = np.array([student_t_pdf(v, df) for v in x])
            total = np.trapezoid(pdf * jac, t)
            # endpoint truncation leaves ~1.3e-6 of Cauchy tail mass
            assert total == pytest.approx(1.0, abs=1e-5)

    def test_quantile_roundtrip(self):
        for df in (1.0, 2.0, 5.0, 10.0):
            for p in np.arange(0.01, 1.0, 0.01):
                q = student_t_quantile(p, df)
                assert student_t_cdf(q, df) == pytest.approx(p, abs=1e-9)

    def test_large_df_matches_normal(self):
        for x in np.linspace(-5, 5, 41):
            normal = 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
            assert student_t_cdf(x, 1e6) == pytest.approx(normal, abs=1e-5)


class TestCholesky:
    def test_identity(self):
        np.testing.assert_allclose(cholesky(np.eye(3)), np.eye(3))

    def test_hand_factorization(self):
        a = np.array([[4.0, 2.0], [2.0, 3.0]])
        expected = np.array([[2.0, 0.0], [1.0, math.sqrt(2.0)]])
        np.testing.assert_allclose(cholesky(a), expected, rtol=1e-14)

    def test_failing_pivot_reported(self):
        a = np.diag([1.0, -1.0, 2.0])
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(a)
        assert err.value.pivot == 1

    def test_roundtrip_random_spd(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = rng.integers(2, 8)
            b = rng.standard_normal((n, n))
            a = b.T @ b + np.eye(n)
            L = cholesky(a)
            err = np.linalg.norm(L @ L.T - a) / np.linalg.norm(a)
            assert err < 1e-10

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            cholesky(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_spd_solve(self):
        rng = np.random.default_rng(3)
        b = rng.standard_normal((5, 5))
        a = b.T @ b + np.eye(5)
        x = rng.standard_normal(5)
        np.testing.assert_allclose(spd_solve(a, a @ x), x, atol=1e-10)


class TestNelderMead:
    def test_quadratic_bowl(self):
        res = nelder_mead(lambda x: float(x @ x), np.array([1.0, 1.0]))
        assert res.converged
        assert np.all(np.abs(res.x) < 1e-5)
        assert res.fun <= 2.0

    def test_rosenbrock(self):
        def rosen(x):
            return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)

        res = nelder_mead(rosen, np.array([-1.2, 1.0]))
        assert res.converged
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-3)

    def test_constant_objective_collapses(self):
        res = nelder_mead(lambda x: 3.25, np.array([0.5, -0.5, 2.0]))
        assert res.converged
        assert res.fun == 3.25

    def test_nan_at_start_raises(self):
        with pytest.raises(ValueError):
            nelder_mead(lambda x: math.nan, np.array([1.0]))

    def test_iteration_cap_flags_nonconvergence(self):
        def rosen(x):
            return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)

        res = nelder_mead(rosen, np.array([-1.2, 1.0]), max_iter=5)
        assert not res.converged
        assert res.iterations == 5

    def test_deterministic(self):
        def f(x):
            return float(np.sum((x - 0.3) ** 4) + x[0] * x[1])

        r1 = nelder_mead(f, np.array([1.0, -1.0]))
        r2 = nelder_mead(f, np.array([1.0, -1.0]))
        assert np.array_equal(r1.x, r2.x) and r1.fun == r2.fun

    def test_descent_property(self):
        def f(x):
            return float((x[0] - 2) ** 2 + abs(x[1]))

        x0 = np.array([5.0, 3.0])
        res = nelder_mead(f, x0)
        assert res.fun <= f(x0)


class TestFiniteDifferences:
    def test_gradient_quadratic(self):
        g = finite_diff_gradient(lambda x: float(x @ x), np.array([1.0, 2.0]))
        np.testing.assert_allclose(g, [2.0, 4.0], atol=1e-6)

    def test_hessian_bilinear(self):
        h = finite_diff_hessian(lambda x: float(x[0] * x[1]),
                                np.array([0.3, -0.7]))
        np.testing.assert_allclose(h, [[0.0, 1.0], [1.0, 0.0]], atol=1e-5)

    def test_hessian_symmetric(self):
        def f(x):
            return float(x[0] ** 3 + x[0] * x[1] ** 2 + x[1])

        h = finite_diff_hessian(f, np.array([0.9, 0.4]))
        np.testing.assert_allclose(h, h.T, atol=0)

    def test_nonfinite_evaluation_names_point(self):
        def f(x):
            return math.inf if x[0] > 1.0 else float(x[0])

        with pytest.raises(ValueError, match=r"evaluation point"):
            finite_diff_gradient(f, np.array([1.0]), step=0.5)


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(42, 3).normal(10)
        b = RngStream(42, 3).normal(10)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(42, 0).normal(10)
        b = RngStream(42, 1).normal(10)
        assert not np.array_equal(a, b)

    def test_seed_matters(self):
        a = RngStream(1, 0).normal(10)
        b = RngStream(2, 0).normal(10)
        assert not np.array_equal(a, b)

    def test_stream_independence_of_order(self):
        # drawing stream 5 before stream 2 must not change either
        first = RngStream(9, 5).exponential(4)
        _ = RngStream(9, 2).exponential(4)
        again = RngStream(9, 5).exponential(4)
        assert np.array_equal(first, again)


def test_pure_and_compiled_backends_agree():
    from nsmaxstab import _purecore
    from nsmaxstab import core
    if core.BACKEND != "compiled":
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(11)
    for _ in range(200):
        x = float(rng.uniform(-30, 30))
        df = float(rng.uniform(0.3, 50))
        assert core.student_t_cdf(x, df) == pytest.approx(
            _purecore.student_t_cdf(x, df), rel=1e-13, abs=1e-15)
        assert core.student_t_pdf(x, df) == pytest.approx(
            _purecore.student_t_pdf(x, df), rel=1e-13, abs=1e-300)
    for _ in range(200):
        z1 = float(rng.uniform(0.05, 5))
        z2 = float(rng.uniform(0.05, 5))
        rho = float(rng.uniform(-0.95, 0.999))
        df = float(rng.uniform(0.5, 15))
        fast = core.exponent_parts(z1, z2, rho, df)
        pure = _purecore.exponent_parts(z1, z2, rho, df)
        np.testing.assert_allclose(fast, pure, rtol=1e-12, atol=1e-15)
        assert core.pair_logdensity(z1, z2, rho, df) == pytest.approx(
            _purecore.pair_logdensity(z1, z2, rho, df), rel=1e-11)
